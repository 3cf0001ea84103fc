use std::f64::consts::PI;

use bvdisp::coefficients::{Coefficient, StepCoefficient};
use bvdisp::evolution::*;
use bvdisp::grid::{Grid1d, GridFunction};
use bvdisp::quadrature::linear_fit;
use bvdisp::Complex64;

fn flat() -> Coefficient {
    Coefficient::Step(StepCoefficient::constant(1.0).unwrap())
}

fn two_step() -> Coefficient {
    Coefficient::Step(StepCoefficient::new(vec![0.0], vec![1.0, 4.0]).unwrap())
}

fn l2_diff(a: &[Complex64], b: &[Complex64], h: f64) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * h).sqrt()
}

#[test]
fn flat_periodic_spectrum_is_classical() {
    let n = 64;
    let g = Grid1d::periodic(0.0, 2.0 * PI, n).unwrap();
    let op = build_divergence_operator(&flat(), g, Boundary::Periodic).unwrap();
    let eig = OperatorEigen::new(&op, DENSE_LIMIT).unwrap();
    let mut want: Vec<f64> = (0..n).map(|k| 4.0 * (PI * k as f64 / n as f64).sin().powi(2) / (g.dx * g.dx)).collect();
    want.sort_by(f64::total_cmp);
    for (a, b) in eig.eigen.values.iter().zip(&want) {
        assert!((a - b).abs() < 1e-9 * want[n - 1]);
    }
}

#[test]
fn operator_is_symmetric() {
    let g = Grid1d::spanning(-4.0, 4.0, 200).unwrap();
    let a = Coefficient::Step(StepCoefficient::new(vec![-1.0, 0.5, 2.0], vec![1.0, 3.0, 0.5, 2.0]).unwrap());
    for b in [Boundary::Dirichlet, Boundary::Periodic] {
        let op = build_divergence_operator(&a, g, b).unwrap();
        let u: Vec<Complex64> = (0..200).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let w: Vec<Complex64> = (0..200).map(|i| Complex64::new((i as f64 * 1.3).cos(), (i as f64).sqrt())).collect();
        let au = op.apply(&u);
        let aw = op.apply(&w);
        let lhs: Complex64 = au.iter().zip(&w).map(|(x, y)| x * y.conj()).sum();
        let rhs: Complex64 = u.iter().zip(&aw).map(|(x, y)| x * y.conj()).sum();
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm());
    }
}

#[test]
fn steady_flux_is_exact_across_jump() {
    let g = Grid1d::spanning(-2.03, 2.0, 300).unwrap();
    let a = StepCoefficient::new(vec![0.0], vec![1.0, 4.0]).unwrap();
    let op = build_divergence_operator(&Coefficient::Step(a.clone()), g, Boundary::Dirichlet).unwrap();
    // u(x) = ∫ 1/a, so that a u' ≡ 1.
    let u: Vec<f64> = g.points().iter().map(|&x| if x < 0.0 { x } else { x / 4.0 }).collect();
    let lu = op.apply_real(&u);
    for i in 1..g.n - 1 {
        assert!(lu[i].abs() < 1e-10, "row {i}: {}", lu[i]);
    }
}

#[test]
fn under_resolved_steps_are_rejected() {
    let g = Grid1d::spanning(-1.0, 1.0, 101).unwrap();
    let a = Coefficient::Step(StepCoefficient::new(vec![0.0, 0.05], vec![1.0, 2.0, 1.0]).unwrap());
    assert!(matches!(build_divergence_operator(&a, g, Boundary::Dirichlet), Err(bvdisp::Error::UnderResolved(_))));
}

#[test]
fn crank_nicolson_mode_phase() {
    let n = 128;
    let g = Grid1d::periodic(0.0, 2.0 * PI, n).unwrap();
    let op = build_divergence_operator(&flat(), g, Boundary::Periodic).unwrap();
    let k = 5.0;
    let u0 = GridFunction::from_fn(g, true, |x| Complex64::new(0.0, k * x).exp());
    let lambda = 4.0 * (k * g.dx / 2.0).sin().powi(2) / (g.dx * g.dx);
    let t_grid = Grid1d::new(0.0, 0.1, 11).unwrap();
    let run = evolve_crank_nicolson(&op, &u0, t_grid, Some(10)).unwrap();
    let dt = run.dt;
    let per_step = -2.0 * (lambda * dt / 2.0).atan();
    for it in 0..t_grid.n {
        let steps = (it * 10) as f64;
        let phase = Complex64::new(0.0, per_step * steps).exp();
        for i in 0..n {
            assert!((run.field.at(i, it) - u0.values[i] * phase).norm() < 1e-10);
        }
    }
}

#[test]
fn crank_nicolson_is_unitary_over_many_steps() {
    let g = Grid1d::spanning(-10.0, 10.0, 400).unwrap();
    let op = build_divergence_operator(&two_step(), g, Boundary::Dirichlet).unwrap();
    let u0 = profiles::wave_packet(g, false, -2.0, 3.0, 1.0);
    let t_grid = Grid1d::new(0.0, 0.5, 3).unwrap();
    let run = evolve_crank_nicolson(&op, &u0, t_grid, Some(5000)).unwrap();
    assert!(run.mass_drift < 1e-12, "{}", run.mass_drift);
}

#[test]
fn crank_nicolson_matches_eigen_oracle_on_step_coefficient() {
    let g = Grid1d::new(-16.0, 32.0 / 512.0, 512).unwrap();
    let op = build_divergence_operator(&two_step(), g, Boundary::Dirichlet).unwrap();
    let u0 = profiles::wave_packet(g, false, -5.0, 3.0, 0.8);
    let t_grid = Grid1d::new(0.0, 1.0, 2).unwrap();
    let exact = eigen_oracle(&op, &u0, t_grid).unwrap();
    let run = evolve_crank_nicolson(&op, &u0, t_grid, Some(50000)).unwrap();
    let err = l2_diff(run.field.slice(1), exact.slice(1), g.dx) / u0.norm_l2();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn crank_nicolson_converges_at_second_order() {
    let g = Grid1d::new(-16.0, 32.0 / 256.0, 256).unwrap();
    let op = build_divergence_operator(&two_step(), g, Boundary::Dirichlet).unwrap();
    let u0 = profiles::wave_packet(g, false, -5.0, 3.0, 0.8);
    let t_grid = Grid1d::new(0.0, 1.0, 2).unwrap();
    let exact = eigen_oracle(&op, &u0, t_grid).unwrap();
    let (mut x, mut y) = (vec![], vec![]);
    for steps in [1000, 2000, 4000] {
        let run = evolve_crank_nicolson(&op, &u0, t_grid, Some(steps)).unwrap();
        x.push((1.0 / steps as f64).ln());
        y.push(l2_diff(run.field.slice(1), exact.slice(1), g.dx).ln());
    }
    let (slope, _) = linear_fit(&x, &y);
    assert!((slope - 2.0).abs() < 0.2, "{slope}");
}

#[test]
fn flat_group_gaussian_closed_form() {
    let g = Grid1d::new(-40.0, 80.0 / 2048.0, 2048).unwrap();
    let u0 = profiles::gaussian(g, false, 0.0, 1.0);
    let t_grid = Grid1d::new(0.0, 0.5, 5).unwrap();
    let u = flat_group(&u0, t_grid);
    for it in 0..t_grid.n {
        let t = t_grid.x(it);
        let s = 1.0 + 4.0 * t * t;
        for i in (0..g.n).step_by(13) {
            let x = g.x(i);
            let want = s.powf(-0.5) * (-x * x / s).exp();
            assert!((u.at(i, it).norm_sqr() - want).abs() < 1e-8);
        }
    }
    assert!(u.slice(0).iter().zip(&u0.values).all(|(a, b)| (a - b).norm() < 1e-13));
}

#[test]
fn flat_group_conserves_mass() {
    let g = Grid1d::periodic(-20.0, 20.0, 1024).unwrap();
    let u0 = profiles::wave_packet(g, true, 0.0, 2.0, 1.5);
    let u = flat_group(&u0, Grid1d::new(0.0, 1.0, 4).unwrap());
    for it in 0..4 {
        assert!((u.slice_function(it).norm_l2() / u0.norm_l2() - 1.0).abs() < 1e-13);
    }
}

#[test]
fn eigen_oracle_matches_flat_group_to_second_order() {
    let mut errs = vec![];
    for n in [256, 512] {
        let g = Grid1d::periodic(-16.0, 16.0, n).unwrap();
        let op = build_divergence_operator(&flat(), g, Boundary::Periodic).unwrap();
        let u0 = profiles::wave_packet(g, true, 0.0, 1.0, 1.0);
        let t_grid = Grid1d::new(0.0, 0.5, 2).unwrap();
        let a = eigen_oracle(&op, &u0, t_grid).unwrap();
        let b = flat_group(&u0, t_grid);
        errs.push(l2_diff(a.slice(1), b.slice(1), g.dx));
    }
    let ratio = errs[0] / errs[1];
    assert!(errs[1] < 1e-2 && ratio > 3.5 && ratio < 4.5, "{errs:?}");
}

#[test]
fn eigen_oracle_is_unitary_and_preserves_spectral_bands() {
    let g = Grid1d::new(-8.0, 16.0 / 256.0, 256).unwrap();
    let op = build_divergence_operator(&two_step(), g, Boundary::Dirichlet).unwrap();
    let eig = OperatorEigen::new(&op, DENSE_LIMIT).unwrap();
    let raw = profiles::wave_packet(g, false, -1.0, 2.0, 0.8);
    // Keep only eigenmodes with 2 ≤ λ ≤ 8.
    let band = eig.apply_function(&raw.values, |l| Complex64::new(if (2.0..=8.0).contains(&l) { 1.0 } else { 0.0 }, 0.0));
    let u0 = raw.with_values(band);
    let t_grid = Grid1d::new(0.0, 0.7, 4).unwrap();
    let u = eigen_oracle(&op, &u0, t_grid).unwrap();
    let norm0: f64 = u0.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for it in 0..t_grid.n {
        let s = u.slice(it);
        let norm = s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm / norm0 - 1.0).abs() < 1e-12);
        let c = eig.coefficients(s);
        for (ck, &l) in c.iter().zip(&eig.eigen.values) {
            if !(2.0..=8.0).contains(&l) {
                assert!(ck.norm() < 1e-10);
            }
        }
    }
}

#[test]
fn dense_guard() {
    let g = Grid1d::spanning(0.0, 1.0, 5000).unwrap();
    let op = build_divergence_operator(&flat(), g, Boundary::Dirichlet).unwrap();
    let u0 = GridFunction::zeros(g, false);
    assert!(matches!(eigen_oracle(&op, &u0, Grid1d::new(0.0, 1.0, 2).unwrap()), Err(bvdisp::Error::TooLarge { .. })));
}

mod invariants {
    use super::*;
    use bvdisp::coefficients::step_family_on;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn crank_nicolson_conserves_mass(n in 1usize..6, tv in 0.2f64..3.0, seed in any::<u64>(), xi0 in -3.0f64..3.0) {
            let a = Coefficient::Step(step_family_on(n, tv, 1.0, seed, -3.0, 3.0).unwrap());
            let g = Grid1d::spanning(-12.0, 12.0, 384).unwrap();
            let op = build_divergence_operator(&a, g, Boundary::Dirichlet).unwrap();
            let u0 = profiles::wave_packet(g, false, 0.0, xi0, 1.0);
            let run = evolve_crank_nicolson(&op, &u0, Grid1d::new(0.0, 0.25, 3).unwrap(), None).unwrap();
            prop_assert!(run.mass_drift < 1e-11, "{}", run.mass_drift);
        }
    }
}
