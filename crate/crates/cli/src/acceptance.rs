//! The twelve acceptance criteria, each reduced to one measured number against a threshold.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use bvdisp::coefficients::{mollify_on, step_family_on, Coefficient, StepCoefficient};
use bvdisp::counterexample::quasimode::{blowup_experiment, residual_decay_rate};
use bvdisp::counterexample::{build_metric, build_quasimode, floquet_mode, tune_phase, BlowupConfig, DEFAULT_DELTA};
use bvdisp::estimates::calibration::{maximal_key, FlatCalibration};
use bvdisp::estimates::canonical::{GaussianProblem, PacketProblem};
use bvdisp::estimates::commutator::{commutator_norm, standard_pair};
use bvdisp::estimates::sweep::{uniformity_sweep, FamilySpec};
use bvdisp::estimates::{estimate_quotient, flat_quotient, Estimate};
use bvdisp::evolution::{build_divergence_operator, eigen_oracle, evolve_crank_nicolson, profiles, Boundary};
use bvdisp::grid::Grid1d;
use bvdisp::heat_lp::{band_probes, gaussian_fit, kernel_matrix, kernel_shape_matrix, offdiagonal_decay, HeatCalculus, KernelShape};
use bvdisp::norms::LittlewoodPaleyBank;
use bvdisp::quadrature::linear_fit;
use bvdisp::resolvent::{bump_source, certify_bound, gronwall_trace, hat_source, solve_step_resolvent, SpectralParameter, StepResolvent};
use bvdisp::{Complex64, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Criteria whose thresholds the implementation cannot meet; see the README.
pub const KNOWN_GAPS: [u8; 2] = [9, 10];

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "flat green kernel"),
    (2, "elliptic certified bound"),
    (3, "discrete gronwall chain"),
    (4, "smoothing uniformity"),
    (5, "strichartz scaling line"),
    (6, "maximal function"),
    (7, "commutator scaling"),
    (8, "heat kernel bounds"),
    (9, "besov off-diagonal decay"),
    (10, "counterexample"),
    (11, "propagator correctness"),
    (12, "mollification stability"),
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub quick: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub known_gap: bool,
    /// What `measured` and `threshold` refer to.
    pub quantity: String,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
    pub seconds: f64,
    pub time_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub quick: bool,
    pub seed: u64,
    pub outcomes: Vec<Outcome>,
    pub passed: bool,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,name,status,quantity,measured,threshold,seconds,time_limit\n");
        for o in &self.outcomes {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.6e},{:.6e},{:.3},{:.0}",
                o.id,
                o.name,
                o.status(),
                o.quantity,
                o.measured,
                o.threshold,
                o.seconds,
                o.time_limit
            );
        }
        s
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        for o in &self.outcomes {
            let _ = writeln!(s, "{}", o.line());
        }
        let _ = writeln!(
            s,
            "{} of {} passed in {:.1} s{}",
            self.outcomes.iter().filter(|o| o.passed).count(),
            self.outcomes.len(),
            self.seconds,
            if self.quick { " (quick)" } else { "" }
        );
        s
    }
}

impl Outcome {
    pub fn status(&self) -> &'static str {
        match (self.passed, self.known_gap) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known gap)",
            (false, false) => "FAIL",
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{:>2}] {:<26} {:<16} {} = {:.4e} (threshold {:.4e}) {:.1}s/{:.0}s  {}",
            self.id,
            self.name,
            self.status(),
            self.quantity,
            self.measured,
            self.threshold,
            self.seconds,
            self.time_limit,
            self.detail
        )
    }
}

/// A criterion body's verdict before timing is attached.
struct Verdict {
    ok: bool,
    quantity: &'static str,
    measured: f64,
    threshold: f64,
    detail: String,
}

fn time_limit(id: u8) -> f64 {
    match id {
        1 => 1.0,
        2 => 60.0,
        3 | 7 | 11 => 120.0,
        4 => 600.0,
        10 => 900.0,
        _ => 300.0,
    }
}

/// Tolerances double in quick mode.
fn tol(opts: &SuiteOptions, t: f64) -> f64 {
    if opts.quick {
        2.0 * t
    } else {
        t
    }
}

pub fn run_criterion(id: u8, opts: &SuiteOptions) -> Outcome {
    let name = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown");
    let start = Instant::now();
    let verdict = match id {
        1 => flat_green_kernel(opts),
        2 => elliptic_bound(opts),
        3 => gronwall_chain(opts),
        4 => uniformity(opts),
        5 => strichartz(opts),
        6 => maximal(opts),
        7 => commutator(opts),
        8 => heat_kernel(opts),
        9 => offdiagonal(opts),
        10 => counterexample(opts),
        11 => propagator(opts),
        12 => mollification(opts),
        _ => Err(bvdisp::Error::InvalidParameter(format!("no criterion {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let limit = time_limit(id);
    let known_gap = KNOWN_GAPS.contains(&id);
    match verdict {
        Ok(v) => {
            let in_time = opts.quick || seconds <= limit;
            let mut detail = v.detail;
            if !in_time {
                detail.push_str(" | over the time limit");
            }
            Outcome {
                id,
                name: name.into(),
                passed: v.ok && in_time,
                known_gap,
                quantity: v.quantity.into(),
                measured: v.measured,
                threshold: v.threshold,
                detail,
                seconds,
                time_limit: limit,
            }
        }
        Err(e) => Outcome {
            id,
            name: name.into(),
            passed: false,
            known_gap,
            quantity: "error".into(),
            measured: f64::NAN,
            threshold: f64::NAN,
            detail: e.to_string(),
            seconds,
            time_limit: limit,
        },
    }
}

pub fn run_suite(opts: &SuiteOptions, only: &[u8]) -> SuiteReport {
    let start = Instant::now();
    let outcomes: Vec<Outcome> = CRITERIA
        .iter()
        .map(|c| c.0)
        .filter(|id| only.is_empty() || only.contains(id))
        .map(|id| run_criterion(id, opts))
        .collect();
    SuiteReport {
        quick: opts.quick,
        seed: opts.seed,
        passed: outcomes.iter().all(|o| o.passed),
        outcomes,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn flat() -> Coefficient {
    Coefficient::Step(StepCoefficient::constant(1.0).expect("constant"))
}

fn two_step(hi: f64) -> Coefficient {
    Coefficient::Step(StepCoefficient::new(vec![0.0], vec![1.0, hi]).expect("two-step"))
}

fn flat_green_kernel(opts: &SuiteOptions) -> Result<Verdict> {
    let grid = Grid1d::spanning(-10.0, 10.0, 20001)?;
    let g = hat_source(grid, 0.0, 0.002);
    let a = StepCoefficient::constant(1.0)?;
    let mut worst: f64 = 0.0;
    for tau in [1.0, -1.0] {
        let sol = solve_step_resolvent(&a, SpectralParameter::new(tau, 1e-8), &g)?;
        worst = worst.max((sol.v.norm_inf() / (0.5 * g.norm_l1()) - 1.0).abs());
    }
    let threshold = tol(opts, 5e-3);
    Ok(Verdict { ok: worst < threshold, quantity: "rel err ‖v‖∞", measured: worst, threshold, detail: "τ = ±1, ε = 1e-8".into() })
}

/// Seeded admissible step coefficients with jumps in `[-4, 4]`.
fn random_coefficients(seed: u64, count: usize, max_jumps: usize) -> Result<Vec<StepCoefficient>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_jumps);
            let tv = rng.gen_range(0.5..4.0);
            let m = rng.gen_range(0.5..2.0);
            step_family_on(n, tv, m, rng.gen(), -4.0, 4.0)
        })
        .collect()
}

fn elliptic_bound(opts: &SuiteOptions) -> Result<Verdict> {
    let grid = Grid1d::spanning(-10.0, 10.0, 4001)?;
    let g = bump_source(grid, -6.0, 0.5);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for a in random_coefficients(opts.seed, 20, 16)? {
        let coeff = Coefficient::Step(a.clone());
        for tau in [0.01, 1.0, 100.0] {
            let sigma = SpectralParameter::with_default_epsilon(tau);
            let sol = solve_step_resolvent(&a, sigma, &g)?;
            let rep = certify_bound(&sol, &coeff, sigma, &g);
            violations += usize::from(!rep.omega_bound_ok);
            worst = worst.max(rep.omega_sup / rep.omega_bound);
        }
    }
    Ok(Verdict {
        ok: violations == 0,
        quantity: "violations",
        measured: violations as f64,
        threshold: 0.0,
        detail: format!("60 solves, largest sup Ω / bound = {worst:.3e}"),
    })
}

fn gronwall_chain(opts: &SuiteOptions) -> Result<Verdict> {
    let grid = Grid1d::spanning(-10.0, 10.0, 4001)?;
    let g = bump_source(grid, -6.0, 0.5);
    let mut violations = 0;
    let mut checks = 0;
    let mut slack = f64::INFINITY;
    for a in random_coefficients(opts.seed.wrapping_add(1), 20, 32)? {
        for tau in [-100.0, -10.0, -1.0, -0.1, -0.01] {
            let r = StepResolvent::new(&a, SpectralParameter::with_default_epsilon(tau), &g)?;
            let t = gronwall_trace(&a, &r, &g)?;
            violations += t.violations;
            checks += t.gamma.len() + t.partial_sums.len();
            slack = slack.min(t.recursion_slack);
        }
    }
    Ok(Verdict {
        ok: violations == 0,
        quantity: "violations",
        measured: violations as f64,
        threshold: 0.0,
        detail: format!("{checks} index checks, smallest relative slack {slack:.3e}"),
    })
}

/// Default packet, or a coarser and shorter one in quick mode.
fn packet(opts: &SuiteOptions) -> PacketProblem {
    if opts.quick {
        PacketProblem { lo: -40.0, hi: 60.0, n: 4001, t_max: 2.0, n_t: 201, ..PacketProblem::default() }
    } else {
        PacketProblem::default()
    }
}

fn uniformity(opts: &SuiteOptions) -> Result<Verdict> {
    let bank = LittlewoodPaleyBank::default();
    let est = Estimate::Smoothing { s: 0.0 };
    let p = packet(opts);
    let sweep = uniformity_sweep(&FamilySpec::uniformity(), &est, &p, &bank)?;
    let control = uniformity_sweep(&FamilySpec::control(), &est, &p, &bank)?;
    let threshold = tol(opts, 2.0);
    let quotients = |t: &bvdisp::estimates::sweep::SweepTable| {
        t.rows.iter().map(|r| format!("{:.4}", r.quotient)).collect::<Vec<_>>().join(" ")
    };
    Ok(Verdict {
        ok: sweep.spread < threshold && control.trend() == 1,
        quantity: "spread",
        measured: sweep.spread,
        threshold,
        detail: format!("N=1,4,16,64: {} | control TV=1,2,4,8: {} (trend {})", quotients(&sweep), quotients(&control), control.trend()),
    })
}

/// Gaussian problem with the box stretched by `√a_max` so the fastest waves stay inside.
/// Time window for rough coefficients in the Strichartz criterion.
const ROUGH_T_MAX: f64 = 10.0;

fn gaussian(opts: &SuiteOptions, a_max: f64) -> GaussianProblem {
    let base = if opts.quick {
        GaussianProblem { lo: -160.0, hi: 160.0, n: 2731, t_max: 10.0, n_t: 201 }
    } else {
        GaussianProblem::default()
    };
    let h = (base.hi - base.lo) / (base.n - 1) as f64;
    // Group speed is 2aξ at fixed ξ, so the reach grows linearly with a.
    let half = base.hi * a_max;
    let n = (2.0 * half / h).round() as usize + 1;
    GaussianProblem { lo: -half, hi: -half + (n - 1) as f64 * h, n, ..base }
}

fn strichartz(opts: &SuiteOptions) -> Result<Verdict> {
    let bank = LittlewoodPaleyBank::default();
    let est = Estimate::Strichartz { p: 8.0, q: 4.0, besov: false };
    let g = gaussian(opts, 1.0);
    let oracle = g.flat_strichartz_84();
    let flat_q = estimate_quotient(&flat(), &g.datum()?, &g.window()?, &est, &bank)?.quotient;
    let err = (flat_q / oracle - 1.0).abs();
    let rough = [two_step(2.0), Coefficient::Step(step_family_on(8, 1.0, 1.0, opts.seed, -4.0, 4.0)?)];
    let mut worst_factor: f64 = 1.0;
    let mut rough_q = vec![];
    for a in &rough {
        // A jump under the datum feeds modes of every speed; a shorter window keeps
        // the edge leak under tolerance.
        let gp = GaussianProblem { t_max: ROUGH_T_MAX.min(g.t_max), ..gaussian(opts, a.max()) };
        let q = estimate_quotient(a, &gp.datum()?, &gp.window()?, &est, &bank)?.quotient;
        worst_factor = worst_factor.max(q / flat_q).max(flat_q / q);
        rough_q.push(format!("{q:.4}"));
    }
    let threshold = tol(opts, 0.02);
    Ok(Verdict {
        ok: err < threshold && worst_factor < 4.0,
        quantity: "rel err vs oracle",
        measured: err,
        threshold,
        detail: format!("flat {flat_q:.5} oracle {oracle:.5} | rough {} (worst factor {worst_factor:.3})", rough_q.join(" ")),
    })
}

fn maximal(opts: &SuiteOptions) -> Result<Verdict> {
    let bank = LittlewoodPaleyBank::default();
    let cal = FlatCalibration::embedded()?;
    let p = packet(opts);
    let fam = FamilySpec::uniformity();
    let coeffs = [
        // Jump kept well away from the datum: the band-limited packet has algebraic
        // tails, and whatever of it sits on a jump feeds arbitrarily fast modes.
        Coefficient::Step(StepCoefficient::new(vec![6.0], vec![1.0, 4.0])?),
        Coefficient::Step(step_family_on(16, 2.0, 1.0, opts.seed, fam.lo, fam.hi)?),
    ];
    let mut worst: f64 = 1.0;
    let mut parts = vec![];
    for s in [0.0, 0.25] {
        let est = Estimate::Maximal { s };
        let reference = if opts.quick {
            flat_quotient(&p.datum(&bank)?, &p.window()?, &est, &bank)?.quotient
        } else {
            cal.get(&maximal_key(s))?
        };
        for a in &coeffs {
            let fp = p.fitted(a.value_at(p.center), a.max(), fam.lo.min(-1.0), fam.hi);
            let q = estimate_quotient(a, &fp.datum(&bank)?, &fp.window()?, &est, &bank)?.quotient;
            if !q.is_finite() {
                return Ok(Verdict { ok: false, quantity: "factor vs flat", measured: f64::INFINITY, threshold: 4.0, detail: format!("s={s}: non-finite quotient") });
            }
            worst = worst.max(q / reference).max(reference / q);
            parts.push(format!("s={s}: {q:.4}/{reference:.4}"));
        }
    }
    Ok(Verdict { ok: worst < 4.0, quantity: "factor vs flat", measured: worst, threshold: 4.0, detail: parts.join(" ") })
}

fn commutator(opts: &SuiteOptions) -> Result<Verdict> {
    let xg = Grid1d::spanning(-20.0, 20.0, 2048)?;
    let tg = Grid1d::spanning(0.0, 2.0 * PI, 33)?;
    let bank = LittlewoodPaleyBank::default();
    let seeds: Vec<u64> = if opts.quick { vec![opts.seed + 3] } else { vec![opts.seed + 3, opts.seed + 11] };
    let mut over = 0;
    let mut worst: f64 = 0.0;
    let mut slopes = vec![];
    for seed in seeds {
        let (g, f) = standard_pair(xg, tg, seed);
        let (mut js, mut logs) = (vec![], vec![]);
        for j in 3..=6 {
            for (qi, q2) in [(f64::INFINITY, 2.0), (4.0, 4.0)] {
                let r = commutator_norm(&g, &f, j, 1.0, qi, q2, &bank)?;
                over += usize::from(r.h_norm > r.bound);
                if qi.is_infinite() {
                    js.push(j as f64);
                    logs.push(r.ratio.log2());
                }
            }
        }
        let slope = linear_fit(&js, &logs).0;
        worst = worst.max((slope + 1.0).abs());
        slopes.push(format!("{slope:.3}"));
    }
    let threshold = tol(opts, 0.2);
    Ok(Verdict {
        ok: over == 0 && worst < threshold,
        quantity: "|slope + 1|",
        measured: worst,
        threshold,
        detail: format!("slopes {} | bound violations {over}", slopes.join(" ")),
    })
}

fn heat_kernel(opts: &SuiteOptions) -> Result<Verdict> {
    let op = build_divergence_operator(&flat(), Grid1d::spanning(-8.0, 8.0, 1024)?, Boundary::Dirichlet)?;
    let fit = gaussian_fit(&kernel_matrix(&op, 0.5)?)?;
    let err_c = (fit.c_big / (4.0 * PI).powf(-0.5) - 1.0).abs();
    let err_small = (fit.c_small / 0.25 - 1.0).abs();
    let measured = err_c.max(err_small);
    let rough = build_divergence_operator(&two_step(4.0), Grid1d::spanning(-10.0, 10.0, 1024)?, Boundary::Dirichlet)?;
    let mut failing = vec![];
    for shape in KernelShape::all() {
        for t in [0.01, 0.1, 1.0] {
            let f = gaussian_fit(&kernel_shape_matrix(&rough, t, shape)?)?;
            if !f.holds() {
                failing.push(format!("{shape:?} t={t} c={:.3}", f.c_small));
            }
        }
    }
    let threshold = tol(opts, 0.02);
    Ok(Verdict {
        ok: measured < threshold && failing.is_empty(),
        quantity: "flat rel err (C, c)",
        measured,
        threshold,
        detail: format!(
            "C={:.5} c={:.5} | step shapes failing: {}",
            fit.c_big,
            fit.c_small,
            if failing.is_empty() { "none".into() } else { failing.join(", ") }
        ),
    })
}

/// Log2 slope of `‖Δ^A_j Δ_k f‖/‖f‖` against `|j - k|` for `j = k+1..=k+4`.
fn offdiagonal_slope(a: &Coefficient, n: usize, bank: &LittlewoodPaleyBank) -> Result<f64> {
    let op = build_divergence_operator(a, Grid1d::spanning(-20.0, 20.0, n)?, Boundary::Dirichlet)?;
    let calc = HeatCalculus::new(&op)?;
    let k = 1;
    let probes = band_probes(op.grid, k, &[0.0, 0.4, -0.7], bank);
    let (mut d, mut y) = (vec![], vec![]);
    for j in k + 1..=k + 4 {
        d.push((j - k) as f64);
        y.push(offdiagonal_decay(&calc, bank, j, k, 2.0, &probes)?.log2());
    }
    Ok(linear_fit(&d, &y).0)
}

fn offdiagonal(opts: &SuiteOptions) -> Result<Verdict> {
    let bank = LittlewoodPaleyBank::default();
    let n = if opts.quick { 1024 } else { 2048 };
    let flat_slope = offdiagonal_slope(&flat(), n, &bank)?;
    let step_slope = offdiagonal_slope(&two_step(2.0), n, &bank)?;
    let measured = (flat_slope + 1.0).abs().max((step_slope + 1.0).abs());
    let threshold = tol(opts, 0.3);
    Ok(Verdict {
        ok: measured < threshold,
        quantity: "|slope + 1|",
        measured,
        threshold,
        detail: format!("flat {flat_slope:.3}, two-step {step_slope:.3}"),
    })
}

fn counterexample(opts: &SuiteOptions) -> Result<Verdict> {
    let mode = floquet_mode(&tune_phase(DEFAULT_DELTA)?)?;
    let metric = build_metric(mode, 10)?;
    let report = metric.report(4);
    let k_top = if opts.quick { 6 } else { 8 };
    let quasimodes = (3..=k_top).map(|k| Ok(build_quasimode(&metric, k)?.summary())).collect::<Result<Vec<_>>>()?;
    let norm_err = quasimodes.iter().map(|q| (q.norm - 1.0).abs()).fold(0.0, f64::max);
    let c = residual_decay_rate(&quasimodes);
    let cfg = BlowupConfig { k_max: if opts.quick { 5 } else { 6 }, ..BlowupConfig::default() };
    let table = blowup_experiment(&metric, &cfg)?;
    let slope_err = (table.slope / table.envelope_slope - 1.0).abs();
    let spread_max = tol(opts, 3.0);
    let checks = [
        norm_err <= tol(opts, 1e-8),
        c > 0.0,
        table.increasing,
        slope_err <= tol(opts, 0.3),
        report.l1_spread < spread_max,
        report.w11_spread < spread_max,
    ];
    let q: Vec<String> = table.rows.iter().map(|r| format!("{:.3e}", r.quotient)).collect();
    Ok(Verdict {
        ok: checks.iter().all(|&b| b),
        quantity: "residual decay c",
        measured: c,
        threshold: 0.0,
        detail: format!(
            "norm err {norm_err:.1e} | Q_k {} (slope {:.3} vs envelope {:.3}) | spreads L1 {:.3} W11 {:.3}",
            q.join(" "),
            table.slope,
            table.envelope_slope,
            report.l1_spread,
            report.w11_spread
        ),
    })
}

fn l2_diff(a: &[Complex64], b: &[Complex64], h: f64) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * h).sqrt()
}

fn propagator(opts: &SuiteOptions) -> Result<Verdict> {
    let a = two_step(4.0);
    let g = Grid1d::new(-16.0, 32.0 / 512.0, 512)?;
    let op = build_divergence_operator(&a, g, Boundary::Dirichlet)?;
    let u0 = profiles::wave_packet(g, false, -5.0, 3.0, 0.8);
    let t1 = Grid1d::new(0.0, 1.0, 2)?;
    let exact = eigen_oracle(&op, &u0, t1)?;
    let run = evolve_crank_nicolson(&op, &u0, t1, Some(50000))?;
    let err = l2_diff(run.field.slice(1), exact.slice(1), g.dx) / u0.norm_l2();
    let drift = evolve_crank_nicolson(&op, &u0, Grid1d::new(0.0, 0.5, 3)?, Some(5000))?.mass_drift;

    let gc = Grid1d::new(-16.0, 32.0 / 256.0, 256)?;
    let opc = build_divergence_operator(&a, gc, Boundary::Dirichlet)?;
    let uc = profiles::wave_packet(gc, false, -5.0, 3.0, 0.8);
    let exact_c = eigen_oracle(&opc, &uc, t1)?;
    let (mut x, mut y) = (vec![], vec![]);
    for steps in [1000, 2000, 4000] {
        let r = evolve_crank_nicolson(&opc, &uc, t1, Some(steps))?;
        x.push((1.0 / steps as f64).ln());
        y.push(l2_diff(r.field.slice(1), exact_c.slice(1), gc.dx).ln());
    }
    let slope = linear_fit(&x, &y).0;
    let threshold = tol(opts, 1e-6);
    Ok(Verdict {
        ok: err < threshold && drift < tol(opts, 1e-12) && (slope - 2.0).abs() < tol(opts, 0.2),
        quantity: "L2 err vs eigen",
        measured: err,
        threshold,
        detail: format!("mass drift {drift:.2e} per 1e4 steps | dt slope {slope:.3}"),
    })
}

fn mollification(opts: &SuiteOptions) -> Result<Verdict> {
    let bank = LittlewoodPaleyBank::default();
    let step = StepCoefficient::new(vec![0.0, 3.0], vec![1.0, 2.0, 1.5])?;
    let a = Coefficient::Step(step.clone());
    let p = packet(opts).fitted(step.value_at(packet(opts).center), step.max(), -1.0, 4.0);
    let (u0, w) = (p.datum(&bank)?, p.window()?);
    let est = Estimate::Smoothing { s: 0.0 };
    let target = estimate_quotient(&a, &u0, &w, &est, &bank)?.quotient;
    let mut gaps = vec![];
    for eps in [0.8, 0.4, 0.2] {
        let m = Coefficient::Sampled(mollify_on(&step, eps, p.grid()?)?);
        gaps.push((estimate_quotient(&m, &u0, &w, &est, &bank)?.quotient - target).abs());
    }
    let monotone = gaps.windows(2).all(|g| g[1] < g[0]);
    Ok(Verdict {
        ok: monotone,
        quantity: "final gap / step quotient",
        measured: gaps[2] / target,
        threshold: gaps[0] / target,
        detail: format!(
            "step {target:.5} | gaps at ε=0.8,0.4,0.2: {}",
            gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>().join(" ")
        ),
    })
}
