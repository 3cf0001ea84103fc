//! Dispatch from a configuration to the library, and emission of the artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bvdisp::coefficients::Coefficient;
use bvdisp::counterexample::quasimode::blowup_experiment;
use bvdisp::counterexample::{build_metric, build_quasimode, floquet_mode, tune_phase};
use bvdisp::estimates::calibration::{maximal_key, smoothing_key, FlatCalibration, CALIBRATION_VERSION, INHOMOGENEOUS_KEY, STRICHARTZ_KEY};
use bvdisp::estimates::sweep::uniformity_sweep;
use bvdisp::estimates::{estimate_quotient, inhomogeneous_smoothing_check, Estimate, QuotientReport};
use bvdisp::evolution::{build_divergence_operator, evolve_crank_nicolson, profiles, Boundary};
use bvdisp::grid::Grid1d;
use bvdisp::heat_lp::{band_probes, gaussian_fit, kernel_shape_matrix, offdiagonal_decay, HeatCalculus, KernelShape};
use bvdisp::norms::LittlewoodPaleyBank;
use bvdisp::resolvent::{bump_source, sweep_csv};
use bvdisp::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::acceptance::{run_suite, SuiteOptions};
use crate::config::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub calibration_version: u32,
    pub subcommand: String,
    pub seed: u64,
    pub version: String,
}

/// Everything a run produced, before it is written anywhere.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub provenance: Provenance,
    pub csv: String,
    pub report: Value,
    /// False when the run completed but its checks failed (acceptance).
    pub success: bool,
    /// Human-readable table for the terminal.
    pub summary: Option<String>,
}

impl RunOutput {
    pub fn json(&self) -> Value {
        json!({ "provenance": self.provenance, "report": self.report, "success": self.success })
    }
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let provenance = Provenance {
        config_sha256: config.hash(),
        calibration_version: CALIBRATION_VERSION,
        subcommand: config.experiment.name().into(),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").into(),
    };
    let seed = config.seed;
    let mut summary = None;
    let (csv, report, success) = match &config.experiment {
        Experiment::Resolvent(job) => resolvent(job, seed)?,
        Experiment::Evolve(job) => evolve(job, seed, config.output.field.as_deref())?,
        Experiment::Estimate(job) => estimate(job, seed)?,
        Experiment::Heatlp(job) => heatlp(job, seed)?,
        Experiment::Counterexample(job) => counterexample(job)?,
        Experiment::Sweep(job) => sweep(job)?,
        Experiment::Accept(job) => {
            let r = run_suite(&SuiteOptions { quick: job.quick, seed }, &job.only);
            summary = Some(r.table());
            (r.to_csv(), serde_json::to_value(&r)?, r.passed)
        }
    };
    let out = RunOutput { provenance, csv, report, success, summary };
    write_outputs(config, &out)?;
    Ok(out)
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_outputs(config: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    let meta = serde_json::to_string_pretty(&out.provenance)? + "\n";
    if let Some(p) = &config.output.csv {
        std::fs::write(p, &out.csv)?;
        std::fs::write(meta_path(p), &meta)?;
    }
    if let Some(p) = &config.output.json {
        std::fs::write(p, serde_json::to_string_pretty(&out.json())? + "\n")?;
    }
    if let Some(p) = &config.output.field {
        std::fs::write(meta_path(p), &meta)?;
    }
    Ok(())
}

type Parts = (String, Value, bool);

fn resolvent(job: &ResolventJob, seed: u64) -> Result<Parts> {
    let a = job.coefficient.resolve_step(seed)?;
    let grid = Grid1d::spanning(job.grid.lo, job.grid.hi, job.grid.n)?;
    let g = bump_source(grid, job.source_center, job.source_width);
    let rows = bvdisp::resolvent::resolvent_sweep(&a, &job.taus, job.epsilon, &g)?;
    let ok = rows.iter().all(|r| r.certificate.omega_bound_ok && r.certificate.absorption_ok);
    Ok((sweep_csv(&rows), json!({ "coefficient": Coefficient::Step(a).describe(), "rows": rows }), ok))
}

fn evolve(job: &EvolveJob, seed: u64, field: Option<&Path>) -> Result<Parts> {
    let a = job.coefficient.resolve(seed)?;
    let grid = if job.periodic {
        Grid1d::periodic(job.grid.lo, job.grid.hi, job.grid.n)?
    } else {
        Grid1d::spanning(job.grid.lo, job.grid.hi, job.grid.n)?
    };
    let boundary = if job.periodic { Boundary::Periodic } else { Boundary::Dirichlet };
    let op = build_divergence_operator(&a, grid, boundary)?;
    let u0 = profiles::wave_packet(grid, job.periodic, job.center, job.xi0, job.width);
    let t_grid = Grid1d::spanning(0.0, job.t_max, job.n_t)?;
    let run = evolve_crank_nicolson(&op, &u0, t_grid, job.substeps)?;
    let mut csv = String::from("t,l2,linf,edge_fraction\n");
    let n = grid.n;
    let k = (n / 20).max(1);
    for it in 0..job.n_t {
        let s = run.field.slice_function(it);
        let total: f64 = s.values.iter().map(|z| z.norm_sqr()).sum();
        let edge: f64 = s.values[..k].iter().chain(&s.values[n - k..]).map(|z| z.norm_sqr()).sum();
        let _ = writeln!(csv, "{:.6e},{:.12e},{:.12e},{:.3e}", t_grid.x(it), s.norm_l2(), s.norm_inf(), edge / total.max(f64::MIN_POSITIVE));
    }
    if let Some(p) = field {
        run.field.write(p)?;
    }
    let report = json!({
        "coefficient": a.describe(),
        "dt": run.dt,
        "substeps": run.substeps,
        "mass_drift": run.mass_drift,
        "boundary_leak": run.boundary_leak,
    });
    Ok((csv, report, true))
}

fn calibration_key(est: &Estimate) -> Option<String> {
    match *est {
        Estimate::Smoothing { s } => Some(smoothing_key(s)),
        Estimate::Maximal { s } => Some(maximal_key(s)),
        Estimate::Strichartz { p, q, besov: false } if p == 8.0 && q == 4.0 => Some(STRICHARTZ_KEY.into()),
        Estimate::Strichartz { .. } => None,
    }
}

fn quotient_csv(r: &QuotientReport, reference: Option<f64>) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    format!(
        "kind,s,p,q,numerator,denominator,quotient,flat_reference,bv_norm,n_jumps\n{},{},{},{},{:.12e},{:.12e},{:.12e},{},{:.6e},{}\n",
        r.kind,
        opt(r.s),
        opt(r.p),
        opt(r.q),
        r.numerator,
        r.denominator,
        r.quotient,
        opt(reference),
        r.bv_norm,
        r.n_jumps
    )
}

/// Interval outside which the coefficient is constant.
fn variation_range(a: &Coefficient, fallback: f64) -> (f64, f64) {
    match a {
        Coefficient::Step(c) => match (c.breakpoints.first(), c.breakpoints.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => (fallback, fallback),
        },
        Coefficient::Sampled(c) => c.domain(),
    }
}

fn estimate(job: &EstimateJob, seed: u64) -> Result<Parts> {
    let a = job.coefficient.resolve(seed)?;
    let cal = FlatCalibration::embedded()?;
    let bank = LittlewoodPaleyBank::default();
    let (report, key) = match &job.estimate {
        EstimateSpec::Inhomogeneous => (inhomogeneous_smoothing_check(&a, &job.source.field()?, None)?, Some(INHOMOGENEOUS_KEY.to_string())),
        EstimateSpec::Homogeneous { estimate } => {
            estimate.validate()?;
            let r = match estimate {
                Estimate::Strichartz { .. } => {
                    let g = &job.gaussian;
                    estimate_quotient(&a, &g.datum()?, &g.window()?, estimate, &bank)?
                }
                _ => {
                    let (lo_c, hi_c) = variation_range(&a, job.packet.center);
                    let p = job.packet.fitted(a.value_at(job.packet.center), a.max(), lo_c, hi_c);
                    estimate_quotient(&a, &p.datum(&bank)?, &p.window()?, estimate, &bank)?
                }
            };
            (r, calibration_key(estimate))
        }
    };
    let reference = key.as_deref().and_then(|k| cal.get(k).ok());
    let ratio = reference.map(|r| report.quotient / r);
    Ok((quotient_csv(&report, reference), json!({ "quotient": report, "flat_reference": reference, "ratio_to_flat": ratio }), true))
}

fn heatlp(job: &HeatJob, seed: u64) -> Result<Parts> {
    let a = job.coefficient.resolve(seed)?;
    let grid = Grid1d::spanning(job.grid.lo, job.grid.hi, job.grid.n)?;
    let op = build_divergence_operator(&a, grid, Boundary::Dirichlet)?;
    let mut csv = String::from("t,shape,power,c_big,c_small,residual,holds\n");
    let mut fits = vec![];
    for &t in &job.times {
        for shape in KernelShape::all() {
            let f = gaussian_fit(&kernel_shape_matrix(&op, t, shape)?)?;
            let _ = writeln!(csv, "{t:e},{shape:?},{},{:.6e},{:.6e},{:.3e},{}", f.power, f.c_big, f.c_small, f.residual, f.holds());
            fits.push(json!({ "shape": format!("{shape:?}"), "fit": f }));
        }
    }
    let bank = LittlewoodPaleyBank::default();
    let calc = HeatCalculus::new(&op)?;
    let k = job.probe_band;
    let probes = band_probes(grid, k, &[0.0, 0.4, -0.7], &bank);
    let offdiag = (k - 3..=k + 4)
        .map(|j| Ok(json!({ "j": j, "k": k, "ratio": offdiagonal_decay(&calc, &bank, j, k, 2.0, &probes)? })))
        .collect::<Result<Vec<_>>>()?;
    let ok = fits.iter().all(|f| f["fit"]["c_small"].as_f64().is_some_and(|c| c > 0.0));
    Ok((csv, json!({ "coefficient": a.describe(), "fits": fits, "offdiagonal": offdiag }), ok))
}

fn counterexample(job: &CounterexampleJob) -> Result<Parts> {
    let mode = floquet_mode(&tune_phase(job.delta)?)?;
    let metric = build_metric(mode, job.n_max)?;
    let report = metric.report(1);
    let (k_lo, k_hi) = job.quasimode_k;
    if k_lo == 0 || k_lo > k_hi {
        return Err(Error::InvalidParameter(format!("empty quasimode range {k_lo}..={k_hi}")));
    }
    let quasimodes = (k_lo..=k_hi).map(|k| Ok(build_quasimode(&metric, k)?.summary())).collect::<Result<Vec<_>>>()?;
    let decay = bvdisp::counterexample::quasimode::residual_decay_rate(&quasimodes);
    let blowup = job.blowup.as_ref().map(|cfg| blowup_experiment(&metric, cfg)).transpose()?;
    let csv = match &blowup {
        Some(t) => t.to_csv(),
        None => {
            let mut s = String::from("k,lambda,norm,residual_l2,residual_h1\n");
            for q in &quasimodes {
                let _ = writeln!(s, "{},{:.6e},{:.15e},{:.6e},{:.6e}", q.k, q.lambda, q.norm, q.residual_l2, q.residual_h1);
            }
            s
        }
    };
    Ok((csv, json!({ "metric": report, "quasimodes": quasimodes, "residual_decay_rate": decay, "blowup": blowup }), true))
}

fn sweep(job: &SweepJob) -> Result<Parts> {
    let bank = LittlewoodPaleyBank::default();
    let table = uniformity_sweep(&job.family, &job.estimate, &job.packet, &bank)?;
    Ok((table.to_csv(), serde_json::to_value(&table)?, true))
}

/// Machine-readable record for a failed run.
pub fn error_record(e: &Error) -> Value {
    let kind = match e {
        Error::InvalidCoefficient(_) => "invalid_coefficient",
        Error::InvalidGrid(_) => "invalid_grid",
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::UnderResolved(_) => "under_resolved",
        Error::Nyquist { .. } => "nyquist",
        Error::BoxTooSmall(_) => "box_too_small",
        Error::InadmissiblePair { .. } => "inadmissible_pair",
        Error::RegularityOutOfRange { .. } => "regularity_out_of_range",
        Error::TooLarge { .. } => "too_large",
        Error::StableMonodromy(_) => "stable_monodromy",
        Error::DegenerateFit(_) => "degenerate_fit",
        Error::Singular => "singular",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        Error::Config(_) => "config",
    };
    json!({ "error": { "kind": kind, "message": e.to_string() } })
}
