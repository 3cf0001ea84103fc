use std::f64::consts::PI;
use std::sync::OnceLock;

use bvdisp::counterexample::hill::{integrate, FOUR_PI_SQ, STEPS_PER_PERIOD};
use bvdisp::counterexample::metric::{center, piece_support, ChangeOfVariables, BACKGROUND, MAX_SCALES};
use bvdisp::counterexample::quasimode::{cell_averaged_operator, residual_decay_rate, sobolev_norm};
use bvdisp::counterexample::*;
use bvdisp::quadrature::linear_fit;
use bvdisp::{Complex64, Error};

fn mode() -> &'static FloquetSolution {
    static MODE: OnceLock<FloquetSolution> = OnceLock::new();
    MODE.get_or_init(|| floquet_mode(&default_profile().unwrap()).unwrap())
}

fn metric() -> &'static SingularMetric {
    static METRIC: OnceLock<SingularMetric> = OnceLock::new();
    METRIC.get_or_init(|| build_metric(mode().clone(), 10).unwrap())
}

#[test]
fn constant_profile_has_identity_monodromy() {
    let m = monodromy(&HillCoefficient::new(0.0, 0.0).unwrap());
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((m.matrix[i][j] - want).abs() < 1e-9, "{:?}", m.matrix);
        }
    }
    assert!((m.trace - 2.0).abs() < 1e-9);
    assert!(matches!(floquet_mode(&HillCoefficient::new(0.0, 0.0).unwrap()), Err(Error::StableMonodromy(_))));
}

#[test]
fn wronskian_is_conserved() {
    for (d, th) in [(0.9, 0.3), (0.5, 2.0), (1.0, 4.0), (0.9, default_profile().unwrap().theta)] {
        let m = monodromy(&HillCoefficient::new(d, th).unwrap());
        assert!((m.det - 1.0).abs() < 1e-10, "det {}", m.det);
    }
}

#[test]
fn profile_is_admissible() {
    assert!(matches!(HillCoefficient::new(1.5, 0.0), Err(Error::InvalidParameter(_))));
    let a = default_profile().unwrap();
    assert!(a.deviation() <= 1.0);
    for x in [0.0, 0.01, -0.03, 0.97, 1.02, 5.04] {
        assert_eq!(a.value(x), FOUR_PI_SQ);
    }
    let h = 1e-6;
    for x in [0.1, 0.33, 0.7, -0.4] {
        let fd = (a.value(x + h) - a.value(x - h)) / (2.0 * h);
        assert!((fd - a.derivative(x)).abs() < 1e-5, "{fd} vs {}", a.derivative(x));
    }
}

#[test]
fn tuned_profile_is_unstable_with_even_mode() {
    let f = mode();
    assert!(f.trace.abs() > 2.0);
    assert!(f.multiplier.abs() < 1.0);
    assert!(f.gluing_defect < 1e-8);
    let rho = 0.5 * (f.trace.abs() + (f.trace * f.trace - 4.0).sqrt());
    assert!((f.exponent - rho.ln()).abs() < 1e-10);
    assert!(f.exponent > 0.0);
}

#[test]
fn floquet_mode_matches_direct_integration() {
    let f = mode();
    let (w0, dw0) = f.period[0];
    let direct = integrate(&f.alpha, 0.0, (w0, dw0), 5, STEPS_PER_PERIOD);
    let h = 1.0 / STEPS_PER_PERIOD as f64;
    let mut worst: f64 = 0.0;
    for (i, (w, _)) in direct.iter().enumerate().step_by(7) {
        worst = worst.max((f.eval(i as f64 * h).0 - w).abs());
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn periodic_part_is_periodic() {
    let f = mode();
    let p = |x: f64| f.eval(x).0 * (f.exponent * x.abs()).exp() * f.multiplier.signum().powi(x.abs().floor() as i32);
    let peak = f.periodic_part.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let x = i as f64 / 500.0;
        worst = worst.max((p(x + 1.0) - p(x)).abs()).max((p(-x - 1.0) - p(-x)).abs());
    }
    assert!(worst <= 1e-6 * peak, "{worst}");
}

#[test]
fn floquet_mode_solves_the_equation() {
    let f = mode();
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for i in 1..400 {
        let x = -3.0 + 6.0 * i as f64 / 400.0;
        let d2 = (f.eval(x + h).1 - f.eval(x - h).1) / (2.0 * h);
        worst = worst.max((d2 + f.alpha.value(x) * f.eval(x).0).abs());
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn floquet_mode_is_normalized() {
    let f = mode();
    let periods = (25.0 / f.exponent).ceil() as usize;
    let h = 1.0 / 512.0;
    let n = periods * 512;
    let s: f64 = (0..=n)
        .map(|i| {
            let w = f.eval(i as f64 * h).0;
            let c = if i == 0 || i == n { 0.5 } else { 1.0 };
            c * w * w
        })
        .sum::<f64>()
        * h;
    assert!((2.0 * s - 1.0).abs() < 1e-6, "{}", 2.0 * s);
}

#[test]
fn change_of_variables_roundtrip() {
    let c = ChangeOfVariables::new(mode().alpha);
    assert!((c.period_y - FOUR_PI_SQ).abs() < 1.0);
    for x in [0.0, 0.013, 0.4, 1.7, -2.35, 9.99] {
        let y = c.y_of_x(x);
        assert!((c.x_of_y(y) - x).abs() < 1e-12);
        assert!((c.y_of_x(-x) + y).abs() < 1e-12);
    }
    assert!((c.y_of_x(3.0) - 3.0 * c.period_y).abs() < 1e-9);
}

#[test]
fn metric_bounds_and_supports() {
    let m = metric();
    assert!(m.min_value() >= 2.0 * PI - 1e-9);
    for n in 1..m.n_max {
        let (lo, _) = piece_support(n, &m.psi1);
        let (_, hi) = piece_support(n + 1, &m.psi1);
        assert!(hi < lo);
    }
    assert_eq!(m.value(2.0).0, BACKGROUND);
    assert_eq!(m.value(center(m.n_max) / 4.0).0, BACKGROUND);
    assert_eq!(m.scale_at(center(5)), Some(5));
    assert!(matches!(build_metric(mode().clone(), MAX_SCALES + 1), Err(Error::UnderResolved(_))));
    let h = 1e-9;
    let y = center(4) * 1.1;
    let fd = (m.value(y + h).0 - m.value(y - h).0) / (2.0 * h);
    assert!((fd - m.value(y).1).abs() < 1e-4 * fd.abs().max(1.0));
}

#[test]
fn metric_norm_report() {
    let r = metric().report(4);
    assert_eq!(r.scales.len(), 7);
    assert!(r.l1_spread < 3.0, "L1 spread {}", r.l1_spread);
    assert!(r.w11_spread < 3.0, "W11 spread {}", r.w11_spread);
    assert!(r.scales.windows(2).all(|w| w[1].besov < w[0].besov));
    assert!(r.besov_sum.is_finite());
    assert!(r.min_beta >= 2.0 * PI - 1e-9);
}

#[test]
fn quasimodes_are_normalized_and_supported() {
    let m = metric();
    for k in 3..=8 {
        let q = build_quasimode(m, k).unwrap();
        assert!((q.phi.norm_l2() - 1.0).abs() < 1e-8, "k={k}: {}", q.phi.norm_l2());
        assert!(q.support.0 > q.interval.0 && q.support.1 < q.interval.1);
        for (i, z) in q.phi.values.iter().enumerate() {
            let y = q.phi.grid.x(i);
            if y <= q.support.0 || y >= q.support.1 {
                assert_eq!(*z, Complex64::new(0.0, 0.0));
            }
        }
    }
    assert!(matches!(build_quasimode(m, 11), Err(Error::UnderResolved(_))));
}

#[test]
fn closed_form_residual_matches_flux_operator() {
    let m = metric();
    let q = build_quasimode(m, 4).unwrap();
    let op = cell_averaged_operator(m, q.phi.grid, 16).unwrap();
    let lphi = op.apply(&q.phi.values);
    let l2 = q.lambda * q.lambda;
    let n = q.phi.len();
    let (mut err, mut norm) = (0.0, 0.0);
    for i in 1..n - 1 {
        let fd = -lphi[i] + q.phi.values[i] * l2;
        err += (fd - q.residual.values[i]).norm_sqr();
        norm += q.residual.values[i].norm_sqr();
    }
    assert!((err / norm).sqrt() < 1e-2, "{}", (err / norm).sqrt());
}

#[test]
fn sobolev_norm_grows_like_the_rate_power() {
    let m = metric();
    let r = 0.2;
    let (mut x, mut y) = (vec![], vec![]);
    for k in 3..=8 {
        let q = build_quasimode(m, k).unwrap();
        assert!((sobolev_norm(&q.phi, 0.0) - 1.0).abs() < 1e-8);
        x.push(q.lambda.ln());
        y.push(sobolev_norm(&q.phi, r).ln());
    }
    let slope = linear_fit(&x, &y).0;
    assert!(slope <= r + 0.1, "exponent {slope}");
}

#[test]
fn residual_rate_is_fitted_on_the_sequence() {
    let m = metric();
    let s: Vec<QuasimodeSummary> = (3..=8).map(|k| build_quasimode(m, k).unwrap().summary()).collect();
    let c = residual_decay_rate(&s);
    let synthetic: Vec<QuasimodeSummary> =
        s.iter().map(|q| QuasimodeSummary { residual_h1: q.lambda * (-0.7 * q.k as f64).exp(), ..*q }).collect();
    assert!((residual_decay_rate(&synthetic) - 0.7).abs() < 1e-12);
    assert!(c.is_finite());
}

#[test]
fn blowup_parameters_are_validated() {
    assert!(BlowupConfig::default().validate().is_ok());
    let bad = BlowupConfig { r: 0.34, ..BlowupConfig::default() };
    match bad.validate() {
        Err(Error::InvalidParameter(msg)) => assert!(msg.contains("Sobolev")),
        other => panic!("{other:?}"),
    }
    assert!(BlowupConfig { q: 2.0, ..BlowupConfig::default() }.validate().is_err());
    assert!(BlowupConfig { k_min: 5, k_max: 4, ..BlowupConfig::default() }.validate().is_err());
    let e = BlowupConfig::default();
    assert!((e.envelope(4) - 2f64.powf(4.0 * 4.0 / 6.0) / 64f64.powf(0.2)).abs() < 1e-12);
}

#[test]
fn blowup_rows_at_small_scales() {
    let cfg = BlowupConfig { k_min: 3, k_max: 4, ..BlowupConfig::default() };
    let t = blowup_experiment(metric(), &cfg).unwrap();
    assert_eq!(t.rows.len(), 2);
    for r in &t.rows {
        assert!(r.quotient.is_finite() && r.quotient > 0.0);
        assert!(r.localization > 0.0 && r.localization <= 1.0);
        assert!((r.epsilon * r.lambda - 1.0).abs() < 1e-12);
    }
    assert!(t.to_csv().starts_with("k,lambda,residual,Q_k,envelope"));
}
