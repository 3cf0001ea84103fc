use bvdisp::coefficients::{Coefficient, StepCoefficient};
use bvdisp::estimates::calibration::{maximal_key, smoothing_key, FlatCalibration, INHOMOGENEOUS_KEY, STRICHARTZ_KEY};
use bvdisp::estimates::canonical::{GaussianProblem, PacketProblem, SourceProblem};
use bvdisp::estimates::commutator::{commutator_norm, kernel_moment, standard_pair};
use bvdisp::estimates::sweep::{alternating_steps, FamilySpec, SweepRow, SweepTable};
use bvdisp::estimates::*;
use bvdisp::fourier::spectrum;
use bvdisp::grid::{Grid1d, SpaceTimeField};
use bvdisp::norms::LittlewoodPaleyBank;
use bvdisp::quadrature::linear_fit;
use bvdisp::{Complex64, Error};

fn step(values: &[f64], breaks: &[f64]) -> Coefficient {
    Coefficient::Step(StepCoefficient::new(breaks.to_vec(), values.to_vec()).unwrap())
}

fn flat() -> Coefficient {
    Coefficient::Step(StepCoefficient::constant(1.0).unwrap())
}

fn small_packet() -> PacketProblem {
    PacketProblem { lo: -40.0, hi: 60.0, n: 2001, t_max: 2.0, n_t: 201, ..PacketProblem::default() }
}

/// For a one-sided spectrum `∫_ℝ |u(x,t)|² dt = (1/2π) ∫ |û|²/(2ξ) dξ` at every x.
fn smoothing_oracle(p: &PacketProblem, s: f64, bank: &LittlewoodPaleyBank) -> f64 {
    let u0 = p.datum(bank).unwrap();
    let (freqs, hat) = spectrum(&u0);
    let h = u0.grid.dx;
    let dxi = 2.0 * std::f64::consts::PI / (freqs.len() as f64 * h);
    let num: f64 = bank
        .resolved_bands(u0.grid.nyquist())
        .into_iter()
        .map(|j| {
            let e: f64 = freqs
                .iter()
                .zip(&hat)
                .filter(|(xi, _)| **xi > 0.0)
                .map(|(xi, z)| (bank.band(j, *xi) * h * z.norm()).powi(2) / (2.0 * xi))
                .sum::<f64>()
                * dxi
                / (2.0 * std::f64::consts::PI);
            4f64.powf(j as f64 * (s + 0.5)) * e
        })
        .sum();
    num.sqrt() / Estimate::Smoothing { s }.denominator(&u0, bank)
}

#[test]
fn flat_smoothing_matches_time_integral_identity() {
    let bank = LittlewoodPaleyBank::default();
    let p = PacketProblem::default();
    let u0 = p.datum(&bank).unwrap();
    for s in [0.0, 0.25] {
        let got = flat_quotient(&u0, &p.window().unwrap(), &Estimate::Smoothing { s }, &bank).unwrap().quotient;
        let want = smoothing_oracle(&p, s, &bank);
        assert!((got / want - 1.0).abs() < 1e-2, "s={s}: {got} vs {want}");
    }
}

#[test]
fn embedded_calibration_reproduces() {
    let cal = FlatCalibration::embedded().unwrap();
    let bank = LittlewoodPaleyBank::default();
    let p = PacketProblem::default();
    let u0 = p.datum(&bank).unwrap();
    let w = p.window().unwrap();
    let q = flat_quotient(&u0, &w, &Estimate::Smoothing { s: 0.0 }, &bank).unwrap().quotient;
    assert!((q - cal.get(&smoothing_key(0.0)).unwrap()).abs() < 1e-9);
    let q = flat_quotient(&u0, &w, &Estimate::Maximal { s: 0.25 }, &bank).unwrap().quotient;
    assert!((q - cal.get(&maximal_key(0.25)).unwrap()).abs() < 1e-9);
    assert!((cal.get(STRICHARTZ_KEY).unwrap() - GaussianProblem::default().flat_strichartz_84()).abs() < 1e-12);
    assert!(cal.get(INHOMOGENEOUS_KEY).unwrap() > 0.0);
    assert!(matches!(cal.get("nope"), Err(Error::Config(_))));
}

#[test]
fn calibration_roundtrip_and_version_guard() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cal.json");
    let cal = FlatCalibration::embedded().unwrap();
    cal.save(&path).unwrap();
    assert_eq!(FlatCalibration::load(&path).unwrap(), cal);
    std::fs::write(&path, r#"{"version": 99, "entries": []}"#).unwrap();
    assert!(matches!(FlatCalibration::load(&path), Err(Error::Config(_))));
}

#[test]
fn crank_nicolson_flat_run_matches_calibration() {
    let cal = FlatCalibration::embedded().unwrap();
    let bank = LittlewoodPaleyBank::default();
    let p = PacketProblem::default();
    let r = smoothing_quotient(&flat(), &p.datum(&bank).unwrap(), &p.window().unwrap(), 0.0, &bank).unwrap();
    let want = cal.get(&smoothing_key(0.0)).unwrap();
    assert!((r.quotient / want - 1.0).abs() < 1e-2, "{} vs {want}", r.quotient);
    assert!(r.run.boundary_leak < LEAK_TOL);
    assert_eq!(r.run.propagator, "crank-nicolson");
}

#[test]
fn quotients_are_homogeneous() {
    let bank = LittlewoodPaleyBank::default();
    let p = small_packet();
    let a = step(&[1.0, 2.0, 1.5], &[0.0, 3.0]);
    let u0 = p.datum(&bank).unwrap();
    let w = p.window().unwrap();
    let est = Estimate::Smoothing { s: 0.0 };
    let one = estimate_quotient(&a, &u0, &w, &est, &bank).unwrap();
    let two = estimate_quotient(&a, &u0.scaled(2.0), &w, &est, &bank).unwrap();
    assert!((one.quotient - two.quotient).abs() < 1e-10 * one.quotient);
    assert!((two.numerator / one.numerator - 2.0).abs() < 1e-10);
}

#[test]
fn smoothing_numerator_grows_with_the_window() {
    let bank = LittlewoodPaleyBank::default();
    let p = small_packet();
    let a = step(&[1.0, 2.0], &[2.0]);
    let u0 = p.datum(&bank).unwrap();
    let ev = evolve_for_estimate(&a, &u0, &p.window().unwrap()).unwrap();
    let est = Estimate::Smoothing { s: 0.0 };
    let mut last = 0.0;
    for n_t in [21, 51, 101, 151, 201] {
        let (num, _) = quotient_parts(&est, &ev.field.prefix(n_t).unwrap(), &u0, &bank).unwrap();
        assert!(num >= last - 1e-12, "window {n_t}: {num} < {last}");
        last = num;
    }
}

#[test]
fn parabolic_rescaling_leaves_flat_quotients_unchanged() {
    let bank = LittlewoodPaleyBank::default();
    let p = small_packet();
    for est in [Estimate::Smoothing { s: 0.25 }, Estimate::Maximal { s: 0.0 }] {
        let base = flat_quotient(&p.datum(&bank).unwrap(), &p.window().unwrap(), &est, &bank).unwrap().quotient;
        let d = p.dilated(1);
        let up = flat_quotient(&d.datum(&bank).unwrap(), &d.window().unwrap(), &est, &bank).unwrap().quotient;
        assert!((up / base - 1.0).abs() < 0.05, "{est:?}: {base} vs {up}");
    }
}

#[test]
fn regularity_ranges_are_enforced() {
    assert!(matches!(Estimate::Smoothing { s: 0.5 }.validate(), Err(Error::RegularityOutOfRange { .. })));
    assert!(matches!(Estimate::Smoothing { s: -1.0 }.validate(), Err(Error::RegularityOutOfRange { .. })));
    assert!(Estimate::Smoothing { s: -0.5 }.validate().is_ok());
    assert!(matches!(Estimate::Maximal { s: 1.0 }.validate(), Err(Error::RegularityOutOfRange { .. })));
    assert!(matches!(Estimate::Maximal { s: -0.8 }.validate(), Err(Error::RegularityOutOfRange { .. })));
    assert!(Estimate::Maximal { s: 0.9 }.validate().is_ok());
}

#[test]
fn strichartz_pairs_are_checked() {
    assert!(check_strichartz_pair(8.0, 4.0, false).is_ok());
    assert!(check_strichartz_pair(4.0, f64::INFINITY, true).is_ok());
    match check_strichartz_pair(4.0, f64::INFINITY, false) {
        Err(Error::InadmissiblePair { reason, .. }) => assert!(reason.contains("end-point")),
        other => panic!("{other:?}"),
    }
    assert!(matches!(check_strichartz_pair(6.0, 4.0, false), Err(Error::InadmissiblePair { .. })));
    assert!(matches!(check_strichartz_pair(2.0, f64::INFINITY, true), Err(Error::InadmissiblePair { .. })));
}

#[test]
fn flat_gaussian_strichartz_matches_closed_form() {
    let g = GaussianProblem::default();
    let bank = LittlewoodPaleyBank::default();
    let est = Estimate::Strichartz { p: 8.0, q: 4.0, besov: false };
    let r = flat_quotient(&g.datum().unwrap(), &g.window().unwrap(), &est, &bank).unwrap();
    let want = g.flat_strichartz_84();
    assert!((r.quotient / want - 1.0).abs() < 2e-3, "{} vs {want}", r.quotient);
    assert!((want - 0.77049).abs() < 1e-4);
}

#[test]
fn estimate_serde_is_tagged() {
    let e = Estimate::Strichartz { p: 8.0, q: 4.0, besov: false };
    let s = serde_json::to_string(&e).unwrap();
    assert!(s.contains(r#""kind":"strichartz""#));
    assert_eq!(serde_json::from_str::<Estimate>(&s).unwrap(), e);
    let m: Estimate = serde_json::from_str(r#"{"kind":"maximal","s":0.25}"#).unwrap();
    assert_eq!(m, Estimate::Maximal { s: 0.25 });
    assert_eq!(QuotientKind::Inhomogeneous.to_string(), "inhomogeneous");
}

#[test]
fn leaking_box_is_rejected() {
    let bank = LittlewoodPaleyBank::default();
    let p = PacketProblem { lo: -12.0, hi: 8.0, n: 801, ..small_packet() };
    let r = smoothing_quotient(&flat(), &p.datum(&bank).unwrap(), &p.window().unwrap(), 0.0, &bank);
    assert!(matches!(r, Err(Error::BoxTooSmall(_))));
}

fn short_source() -> SourceProblem {
    SourceProblem { lo: -32.0, hi: 32.0, n: 2048, t_max: 2.0, n_t: 201, ..SourceProblem::default() }
}

#[test]
fn inhomogeneous_zero_source_gives_zero() {
    let p = short_source();
    let z = SpaceTimeField::zeros(p.field().unwrap().x_grid, p.field().unwrap().t_grid, false);
    let r = inhomogeneous_smoothing_check(&flat(), &z, Some(4)).unwrap();
    assert_eq!(r.quotient, 0.0);
    assert_eq!(r.numerator, 0.0);
}

#[test]
fn inhomogeneous_is_time_translation_invariant() {
    let a = step(&[1.0, 2.0], &[0.5]);
    let p = short_source();
    let one = inhomogeneous_smoothing_check(&a, &p.field().unwrap(), None).unwrap();
    let two = inhomogeneous_smoothing_check(&a, &p.shifted(3.7).field().unwrap(), None).unwrap();
    assert!((one.quotient - two.quotient).abs() < 1e-6 * one.quotient, "{} vs {}", one.quotient, two.quotient);
}

#[test]
fn inhomogeneous_flat_run_matches_exact_duhamel() {
    let p = short_source();
    let f = p.field().unwrap();
    let exact = flat_inhomogeneous(&f).unwrap().quotient;
    let cn = inhomogeneous_smoothing_check(&flat(), &f, None).unwrap().quotient;
    assert!((cn / exact - 1.0).abs() < 1e-3, "{cn} vs {exact}");
    let rough = inhomogeneous_smoothing_check(&step(&[1.0, 4.0], &[0.0]), &f, None).unwrap().quotient;
    assert!(rough / exact < 4.0 && exact / rough < 4.0, "{rough} vs {exact}");
}

#[test]
fn inhomogeneous_rejects_source_touching_the_edge() {
    let p = SourceProblem { lo: -3.0, hi: 3.0, n: 256, ..short_source() };
    assert!(matches!(inhomogeneous_smoothing_check(&flat(), &p.field().unwrap(), Some(2)), Err(Error::BoxTooSmall(_))));
}

fn commutator_grids() -> (Grid1d, Grid1d) {
    (Grid1d::spanning(-20.0, 20.0, 2048).unwrap(), Grid1d::spanning(0.0, 2.0 * std::f64::consts::PI, 33).unwrap())
}

#[test]
fn commutator_with_constant_vanishes() {
    let (xg, tg) = commutator_grids();
    let (_, f) = standard_pair(xg, tg, 3);
    let g = SpaceTimeField::from_fn(xg, tg, false, |_, _| Complex64::new(2.5, 0.0));
    let bank = LittlewoodPaleyBank::default();
    let r = commutator_norm(&g, &f, 4, 1.0, f64::INFINITY, 2.0, &bank).unwrap();
    assert!(r.h_norm < 1e-10 * r.f_norm, "{}", r.h_norm);
}

#[test]
fn commutator_bound_holds_and_decays_like_inverse_frequency() {
    let (xg, tg) = commutator_grids();
    let bank = LittlewoodPaleyBank::default();
    let m = kernel_moment();
    assert!(m > 0.1 && m < 10.0, "moment {m}");
    for seed in [3, 11] {
        let (g, f) = standard_pair(xg, tg, seed);
        let mut js = vec![];
        let mut logs = vec![];
        for j in 3..=6 {
            for (qi, q2) in [(f64::INFINITY, 2.0), (4.0, 4.0)] {
                let r = commutator_norm(&g, &f, j, 1.0, qi, q2, &bank).unwrap();
                assert!(r.h_norm <= r.bound, "j={j} seed={seed}: {} > {}", r.h_norm, r.bound);
                if qi.is_infinite() {
                    js.push(j as f64);
                    logs.push(r.ratio.log2());
                }
            }
        }
        let slope = linear_fit(&js, &logs).0;
        assert!((slope + 1.0).abs() < 0.2, "seed {seed}: slope {slope}");
    }
}

#[test]
fn commutator_of_time_independent_pair_reduces_to_one_dimension() {
    let (xg, tg) = commutator_grids();
    let bank = LittlewoodPaleyBank::default();
    let (g, f) = standard_pair(xg, tg, 5);
    let freeze = |u: &SpaceTimeField| {
        let s = u.slice(0).to_vec();
        SpaceTimeField::from_slices(xg, tg, vec![s; tg.n], false).unwrap()
    };
    let (g1, f1) = (freeze(&g), freeze(&f));
    let single = Grid1d::spanning(0.0, 1.0, 2).unwrap();
    let one = |u: &SpaceTimeField| SpaceTimeField::from_slices(xg, single, vec![u.slice(0).to_vec(); 2], false).unwrap();
    let full = commutator_norm(&g1, &f1, 4, 1.0, f64::INFINITY, 2.0, &bank).unwrap();
    let red = commutator_norm(&one(&g1), &one(&f1), 4, 1.0, f64::INFINITY, 2.0, &bank).unwrap();
    let span = (tg.last() - tg.x0).sqrt();
    assert!((full.h_norm / (red.h_norm * span) - 1.0).abs() < 1e-10);
}

#[test]
fn commutator_rejects_bad_exponents() {
    let (xg, tg) = commutator_grids();
    let (g, f) = standard_pair(xg, tg, 1);
    let bank = LittlewoodPaleyBank::default();
    assert!(matches!(commutator_norm(&g, &f, 3, 1.0, 4.0, 2.0, &bank), Err(Error::InvalidParameter(_))));
}

#[test]
fn families_are_deterministic() {
    let fam = FamilySpec::uniformity();
    let a = fam.members().unwrap();
    let b = fam.members().unwrap();
    assert_eq!(a, b);
    for (n, _, c) in &a {
        assert_eq!(c.n_jumps(), *n);
        assert!((c.total_variation() - 2.0).abs() < 1e-12);
        assert!((c.min() - 1.0).abs() < 1e-12);
    }
    let other = FamilySpec { seed: 8, ..fam }.members().unwrap();
    assert_ne!(a, other);
    for (_, tv, c) in FamilySpec::control().members().unwrap() {
        assert!((c.total_variation() - tv).abs() < 1e-12);
    }
    let bar = alternating_steps(4, 2.0, 1.0, 0.0, 16.0).unwrap();
    assert_eq!(bar.values, vec![1.0, 1.5, 1.0, 1.5, 1.0]);
}

#[test]
fn sweep_table_summary() {
    let row = |n: usize, tv: f64, q: f64| SweepRow { n_jumps: n, tv, bv_norm: 1.0 + tv, quotient: q };
    let t = SweepTable::from_rows(QuotientKind::Smoothing, vec![row(4, 2.0, 0.6), row(4, 1.0, 0.5), row(4, 4.0, 0.9)]);
    assert!((t.spread - 1.8).abs() < 1e-12);
    assert_eq!(t.trend(), 1);
    let csv = t.to_csv();
    assert!(csv.starts_with("n_jumps,tv,bv_norm,quotient\n"));
    assert!(csv.trim_end().ends_with("1.800000000000e0"));
    let flatline = SweepTable::from_rows(QuotientKind::Smoothing, vec![row(1, 1.0, 0.5), row(1, 2.0, 0.7), row(1, 3.0, 0.6)]);
    assert_eq!(flatline.trend(), 0);
}
