use bvdisp::coefficients::*;
use bvdisp::grid::Grid1d;
use bvdisp::quadrature::gauss_legendre;
use proptest::prelude::*;

/// Independent composite Gauss-Legendre integral of a smooth function.
fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, pieces: usize) -> f64 {
    let (z, w) = gauss_legendre(12);
    let h = (hi - lo) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let mid = lo + (k as f64 + 0.5) * h;
            z.iter().zip(&w).map(|(z, w)| 0.5 * h * w * f(mid + 0.5 * h * z)).sum::<f64>()
        })
        .sum()
}

#[test]
fn mollifier_has_unit_mass() {
    let mass = integrate(mollifier, -1.0, 1.0, 400);
    assert!((mass - 1.0).abs() < 1e-10, "{mass}");
    assert_eq!(mollifier(1.0), 0.0);
    assert_eq!(mollifier(-1.2), 0.0);
}

#[test]
fn mollifier_cdf_matches_quadrature() {
    for &u in &[-0.9, -0.5, -0.1, 0.2, 0.6, 0.95] {
        let direct = integrate(mollifier, -1.0, u, 200);
        assert!((mollifier_cdf(u) - direct).abs() < 1e-9, "u = {u}");
    }
}

#[test]
fn mollified_step_matches_convolution() {
    let a = StepCoefficient::new(vec![-0.3, 0.4], vec![1.0, 3.0, 2.0]).unwrap();
    let eps = 0.5;
    let grid = Grid1d::spanning(-2.0, 2.0, 401).unwrap();
    let s = mollify_on(&a, eps, grid).unwrap();
    for &x in &[-0.7, -0.3, 0.0, 0.1, 0.4, 0.75] {
        let direct = integrate(|y| mollifier(y) * a.value_at(x - eps * y), -1.0, 1.0, 2000);
        assert!((s.value_at(x) - direct).abs() < 1e-5, "x = {x}: {} vs {direct}", s.value_at(x));
    }
}

#[test]
fn mollify_rejects_width_below_grid() {
    let a = StepCoefficient::new(vec![0.0], vec![1.0, 2.0]).unwrap();
    let grid = Grid1d::spanning(-1.0, 1.0, 11).unwrap();
    assert!(mollify_on(&a, 0.05, grid).is_err());
    assert!(mollify(&a, 0.0).is_err());
}

#[test]
fn coefficient_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.json");
    let file = CoefficientFile {
        coefficient: Coefficient::Step(StepCoefficient::new(vec![-1.0, 2.0], vec![1.5, 1.0, 3.0]).unwrap()),
        m: 1.0,
    };
    file.save(&path).unwrap();
    assert_eq!(CoefficientFile::load(&path).unwrap(), file);
    std::fs::write(&path, r#"{"type": "step", "breakpoints": [0.0], "values": [1.0, -1.0], "m": 1.0}"#).unwrap();
    assert!(CoefficientFile::load(&path).is_err());
}

#[test]
fn shipped_configs_load() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    for name in ["flat.json", "two_step.json"] {
        let f = CoefficientFile::load(&std::path::Path::new(root).join(name)).unwrap();
        assert!(check_admissible(&f.coefficient, f.m).admissible, "{name}");
    }
}

#[test]
fn admissibility_report() {
    let a = Coefficient::Step(StepCoefficient::new(vec![0.0, 1.0], vec![2.0, 0.5, 1.0]).unwrap());
    let r = check_admissible(&a, 1.0);
    assert!(!r.admissible);
    assert_eq!((r.m, r.sup, r.tv, r.bv_norm), (0.5, 2.0, 2.0, 4.0));
    assert!(check_admissible(&a, 0.5).admissible);
}

#[test]
fn diffeomorphism_of_constant_is_dilation() {
    let omega = SampledCoefficient::new(Grid1d::spanning(-3.0, 3.0, 301).unwrap(), vec![2.0; 301]).unwrap();
    let d = build_diffeomorphism(&omega).unwrap();
    assert!((d.phi_inv(1.0) - 2.0).abs() < 1e-12);
    assert!((d.phi(-4.0) + 2.0).abs() < 1e-12);
    assert_eq!(d.jacobian_bounds, [0.5, 0.5]);
}

fn step_strategy() -> impl Strategy<Value = StepCoefficient> {
    (1usize..8, 0.1f64..5.0, 0.2f64..3.0, any::<u64>())
        .prop_map(|(n, tv, m, seed)| step_family_on(n, tv, m, seed, -4.0, 4.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn family_hits_targets(n in 1usize..24, tv in 0.1f64..8.0, m in 0.1f64..4.0, seed in any::<u64>()) {
        let a = step_family_on(n, tv, m, seed, -5.0, 5.0).unwrap();
        prop_assert_eq!(a.n_jumps(), n);
        prop_assert!((a.total_variation() - tv).abs() < 1e-10 * tv.max(1.0));
        prop_assert!((a.min() - m).abs() < 1e-12 * m.max(1.0));
        prop_assert!(a.breakpoints.iter().all(|&x| (-5.0..=5.0).contains(&x)));
        prop_assert_eq!(&a, &step_family_on(n, tv, m, seed, -5.0, 5.0).unwrap());
    }

    #[test]
    fn harmonic_average_is_bracketed(a in step_strategy(), lo in -6.0f64..0.0, len in 0.01f64..8.0) {
        let h = a.harmonic_average(lo, lo + len);
        prop_assert!(h >= a.min() * (1.0 - 1e-12) && h <= a.max() * (1.0 + 1e-12));
    }

    #[test]
    fn rescaling_keeps_values(a in step_strategy(), s in 0.1f64..10.0, x in -20.0f64..20.0) {
        let b = a.rescaled(s);
        prop_assert_eq!(b.total_variation(), a.total_variation());
        prop_assert_eq!(b.value_at(x * s), a.value_at(x));
    }

    #[test]
    fn mollification_is_monotone_in_bounds(a in step_strategy(), eps in 0.1f64..1.0) {
        let grid = Grid1d::spanning(-6.0, 6.0, 1201).unwrap();
        let s = mollify_on(&a, eps, grid).unwrap();
        prop_assert!(s.min() >= a.min() * (1.0 - 1e-9));
        prop_assert!(s.max() <= a.max() * (1.0 + 1e-9));
        prop_assert!(s.total_variation() <= a.total_variation() * (1.0 + 1e-9));
    }

    #[test]
    fn diffeomorphism_inverts(a in step_strategy(), x in -5.0f64..5.0) {
        let omega = mollify_on(&a, 0.3, Grid1d::spanning(-6.0, 6.0, 1201).unwrap()).unwrap();
        let d = build_diffeomorphism(&omega).unwrap();
        let y = d.phi_inv(x);
        prop_assert!((d.phi(y) - x).abs() < 1e-9);
        prop_assert!(d.phi_inv(0.0).abs() < 1e-12);
    }
}
