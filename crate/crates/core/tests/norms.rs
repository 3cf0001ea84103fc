use std::f64::consts::PI;

use bvdisp::grid::{Grid1d, GridFunction, SpaceTimeField};
use bvdisp::norms::*;
use bvdisp::Complex64;
use proptest::prelude::*;

fn gaussian(grid: Grid1d, c: f64, w: f64) -> GridFunction {
    GridFunction::from_real(grid, false, |x| (-((x - c) / w).powi(2)).exp())
}

#[test]
fn bands_sit_in_their_annuli() {
    let bank = LittlewoodPaleyBank::default();
    for j in -3..4 {
        let lo = 2f64.powi(j);
        assert_eq!(bank.band(j, 0.99 * lo), 0.0);
        assert_eq!(bank.band(j, 3.01 * lo), 0.0);
        assert_eq!(bank.band(j, 1.6 * lo), 1.0);
    }
}

#[test]
fn band_projections_rebuild_a_gaussian() {
    let grid = Grid1d::periodic(-40.0, 40.0, 2048).unwrap();
    let f = GridFunction::from_real(grid, true, |x| (-x * x).exp());
    let bank = LittlewoodPaleyBank::new(-10, 5).unwrap();
    let mut sum = GridFunction::zeros(grid, true);
    for j in bank.bands() {
        sum = sum.add(&lp_project(&f, j, &bank).unwrap());
    }
    // On this box S_{-10} keeps only the zero mode, the mean √π / 80.
    let mean = PI.sqrt() / 80.0;
    let err = sum.map(|z| z + mean).sub(&f).norm_inf();
    assert!(err < 1e-10, "{err}");
}

#[test]
fn projection_beyond_nyquist_is_refused() {
    let grid = Grid1d::spanning(-1.0, 1.0, 33).unwrap();
    let f = gaussian(grid, 0.0, 0.3);
    let bank = LittlewoodPaleyBank::default();
    assert!(lp_project(&f, 6, &bank).is_err());
    assert!(LittlewoodPaleyBank::new(2, 1).is_err());
}

#[test]
fn fractional_derivative_of_a_plane_wave() {
    let grid = Grid1d::periodic(0.0, 2.0 * PI, 128).unwrap();
    let k = 5.0;
    let f = GridFunction::from_fn(grid, true, |x| Complex64::new(0.0, k * x).exp());
    let d = fractional_derivative(&f, 0.5);
    let expected = f.scaled(k.sqrt());
    assert!(d.sub(&expected).norm_inf() < 1e-10);
}

#[test]
fn mixed_norm_of_a_separable_field() {
    let x = Grid1d::spanning(-10.0, 10.0, 401).unwrap();
    let t = Grid1d::spanning(0.0, 2.0, 21).unwrap();
    let u = SpaceTimeField::from_fn(x, t, false, |x, _| Complex64::new((-x * x).exp(), 0.0));
    // ‖e^{-x²}‖_q = (π/q)^{1/(2q)}; constant in time over length 2.
    let q = 4.0;
    let expected = 2f64.powf(1.0 / 8.0) * (PI / q).powf(1.0 / (2.0 * q));
    let n = mixed_norm(&u, &MixedNormSpec::lebesgue(Variable::T, 8.0, q)).unwrap();
    assert!((n - expected).abs() < 1e-8, "{n} vs {expected}");
    let sup = mixed_norm(&u, &MixedNormSpec::lebesgue(Variable::X, 2.0, f64::INFINITY)).unwrap();
    assert!((sup - (PI / 2.0).powf(0.25)).abs() < 1e-8);
}

#[test]
fn exponents_below_one_are_rejected() {
    let x = Grid1d::spanning(-1.0, 1.0, 11).unwrap();
    let u = SpaceTimeField::zeros(x, x, false);
    assert!(mixed_norm(&u, &MixedNormSpec::lebesgue(Variable::T, 0.5, 2.0)).is_err());
    let spec = MixedNormSpec::lebesgue(Variable::T, 2.0, 2.0).with_besov(0.0, 0.5, LittlewoodPaleyBank::default());
    assert!(mixed_norm(&u, &spec).is_err());
}

#[test]
fn besov_l2_is_comparable_to_l2() {
    let grid = Grid1d::periodic(-30.0, 30.0, 1024).unwrap();
    let f = GridFunction::from_real(grid, true, |x| (-x * x).exp() * (3.0 * x).cos());
    let bank = LittlewoodPaleyBank::new(-8, 5).unwrap();
    let b = besov_norm(&f, 0.0, 2.0, 2.0, &bank);
    let l2 = f.norm_l2();
    // Square functions of a two-sided partition: Σ ψ_j² lies in [1/2, 1].
    assert!(b <= l2 * (1.0 + 1e-9) && b >= l2 / 2f64.sqrt() * (1.0 - 1e-3), "{b} vs {l2}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dyadic_partition_of_unity(xi in 0.01f64..100.0) {
        let bank = LittlewoodPaleyBank::new(-10, 10).unwrap();
        let total: f64 = bank.low_pass(-10, xi) + bank.bands().map(|j| bank.band(j, xi)).sum::<f64>();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&mother_symbol(xi)));
    }

    #[test]
    fn besov_norm_is_a_norm(c in -3.0f64..3.0, s in -0.5f64..1.0, p in 1.0f64..6.0, shift in -3.0f64..3.0) {
        let grid = Grid1d::periodic(-20.0, 20.0, 256).unwrap();
        let bank = LittlewoodPaleyBank::new(-4, 2).unwrap();
        let f = gaussian(grid, 0.0, 1.0);
        let g = gaussian(grid, shift, 0.7);
        let nf = besov_norm(&f, s, p, 2.0, &bank);
        let ng = besov_norm(&g, s, p, 2.0, &bank);
        prop_assert!((besov_norm(&f.scaled(c), s, p, 2.0, &bank) - c.abs() * nf).abs() < 1e-9 * nf.max(1.0));
        prop_assert!(besov_norm(&f.add(&g), s, p, 2.0, &bank) <= (nf + ng) * (1.0 + 1e-9));
    }

    #[test]
    fn mixed_norm_orders_in_time(p in 1.0f64..10.0) {
        let x = Grid1d::spanning(-6.0, 6.0, 121).unwrap();
        let t = Grid1d::spanning(0.0, 1.0, 11).unwrap();
        let u = SpaceTimeField::from_fn(x, t, false, |x, t| Complex64::new((-(x - t) * (x - t)).exp(), t));
        // On a unit time interval L^p_t grows with p.
        let a = mixed_norm(&u, &MixedNormSpec::lebesgue(Variable::T, p, 2.0)).unwrap();
        let b = mixed_norm(&u, &MixedNormSpec::lebesgue(Variable::T, p + 1.0, 2.0)).unwrap();
        let sup = mixed_norm(&u, &MixedNormSpec::lebesgue(Variable::T, f64::INFINITY, 2.0)).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-12) && b <= sup * (1.0 + 1e-12));
    }
}
