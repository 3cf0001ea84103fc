//! Estimate quotients (smoothing, Strichartz, maximal, inhomogeneous), uniformity sweeps,
//! the commutator bound and the flat calibration.

pub mod calibration;
pub mod canonical;
pub mod commutator;
pub mod sweep;

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::Coefficient;
use crate::error::{Error, Result};
use crate::evolution::{
    build_divergence_operator, evolve_crank_nicolson, evolve_with_source, flat_duhamel, flat_group, spectral_substeps,
    Boundary,
};
use crate::grid::{norm_lp_real, norm_lp_slice, Grid1d, GridFunction, SpaceTimeField};
use crate::norms::{besov_norm, fractional_derivative, mixed_norm, LittlewoodPaleyBank, MixedNormSpec, Variable};

/// Largest admissible fraction of `‖u‖₂²` in the outer 5% of the box.
pub const LEAK_TOL: f64 = 1e-6;

/// Crank-Nicolson phase budget at the top of the datum's spectrum.
pub const PHASE_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub t_max: f64,
    pub n_t: usize,
    #[serde(default)]
    pub substeps: Option<usize>,
    #[serde(default = "default_leak")]
    pub leak_tol: f64,
}

fn default_leak() -> f64 {
    LEAK_TOL
}

impl TimeWindow {
    pub fn new(t_max: f64, n_t: usize) -> Result<Self> {
        let w = Self { t_max, n_t, substeps: None, leak_tol: LEAK_TOL };
        w.grid()?;
        Ok(w)
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = Some(substeps);
        self
    }

    pub fn grid(&self) -> Result<Grid1d> {
        if !(self.t_max > 0.0) || self.n_t < 2 {
            return Err(Error::InvalidGrid(format!("time window [0, {}] with {} samples", self.t_max, self.n_t)));
        }
        Grid1d::spanning(0.0, self.t_max, self.n_t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuotientKind {
    Smoothing,
    Strichartz,
    Maximal,
    Inhomogeneous,
}

impl fmt::Display for QuotientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            QuotientKind::Smoothing => "smoothing",
            QuotientKind::Strichartz => "strichartz",
            QuotientKind::Maximal => "maximal",
            QuotientKind::Inhomogeneous => "inhomogeneous",
        };
        f.write_str(s)
    }
}

/// One data-to-solution estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Estimate {
    Smoothing { s: f64 },
    Strichartz { p: f64, q: f64, #[serde(default)] besov: bool },
    Maximal { s: f64 },
}

pub fn check_strichartz_pair(p: f64, q: f64, besov: bool) -> Result<()> {
    let bad = |reason: String| Err(Error::InadmissiblePair { p, q, reason });
    if !(p >= 1.0 && q >= 2.0) {
        return bad("exponents must satisfy p ≥ 1, q ≥ 2".into());
    }
    let line = 2.0 / p + 1.0 / q;
    if (line - 0.5).abs() > 1e-12 {
        return bad(format!("off the scaling line 2/p + 1/q = 1/2 (got {line})"));
    }
    if p < 4.0 {
        return bad("p < 4".into());
    }
    if p == 4.0 && !besov {
        return bad("the end-point (4, ∞) is missing; use the Besov-valued norm".into());
    }
    Ok(())
}

impl Estimate {
    pub fn kind(&self) -> QuotientKind {
        match self {
            Estimate::Smoothing { .. } => QuotientKind::Smoothing,
            Estimate::Strichartz { .. } => QuotientKind::Strichartz,
            Estimate::Maximal { .. } => QuotientKind::Maximal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Estimate::Smoothing { s } if !(s > -1.0 && s < 0.5) => {
                Err(Error::RegularityOutOfRange { s, range: "(-1, 1/2)" })
            }
            Estimate::Maximal { s } if !(s > -0.75 && s < 1.0) => {
                Err(Error::RegularityOutOfRange { s, range: "(-3/4, 1)" })
            }
            Estimate::Strichartz { p, q, besov } => check_strichartz_pair(p, q, besov),
            _ => Ok(()),
        }
    }

    pub fn numerator_spec(&self, bank: LittlewoodPaleyBank) -> MixedNormSpec {
        match *self {
            Estimate::Smoothing { s } => {
                MixedNormSpec::lebesgue(Variable::X, f64::INFINITY, 2.0).with_besov(s + 0.5, 2.0, bank)
            }
            Estimate::Maximal { s } => MixedNormSpec::lebesgue(Variable::X, 4.0, f64::INFINITY).with_besov(s - 0.25, 2.0, bank),
            Estimate::Strichartz { p, q, besov } => {
                let spec = MixedNormSpec::lebesgue(Variable::T, p, q);
                if besov {
                    spec.with_besov(0.0, 2.0, bank)
                } else {
                    spec
                }
            }
        }
    }

    pub fn denominator(&self, u0: &GridFunction, bank: &LittlewoodPaleyBank) -> f64 {
        match *self {
            Estimate::Smoothing { s } | Estimate::Maximal { s } => besov_norm(u0, s, 2.0, 2.0, bank),
            Estimate::Strichartz { .. } => u0.norm_l2(),
        }
    }

    fn regularity(&self) -> Option<f64> {
        match *self {
            Estimate::Smoothing { s } | Estimate::Maximal { s } => Some(s),
            Estimate::Strichartz { .. } => None,
        }
    }

    fn exponents(&self) -> (Option<f64>, Option<f64>) {
        match *self {
            Estimate::Strichartz { p, q, .. } => (Some(p), Some(q)),
            _ => (None, None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub propagator: String,
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
    pub t_max: f64,
    pub n_t: usize,
    pub substeps: usize,
    pub mass_drift: f64,
    pub boundary_leak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub kind: QuotientKind,
    pub s: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub t_max: f64,
    pub norm: String,
    pub numerator: f64,
    pub denominator: f64,
    pub quotient: f64,
    pub coefficient: String,
    /// `sup a + TV(a)`.
    pub bv_norm: f64,
    pub n_jumps: usize,
    pub run: RunProvenance,
}

/// A solution field together with how it was produced.
pub struct Evolved {
    pub field: SpaceTimeField,
    pub run: RunProvenance,
}

fn bv_norm(a: &Coefficient) -> f64 {
    a.max() + a.total_variation()
}

/// Crank-Nicolson on a Dirichlet box, rejecting runs whose mass reaches the edges.
pub fn evolve_for_estimate(a: &Coefficient, u0: &GridFunction, window: &TimeWindow) -> Result<Evolved> {
    let t_grid = window.grid()?;
    let op = build_divergence_operator(a, u0.grid, Boundary::Dirichlet)?;
    let substeps =
        window.substeps.unwrap_or_else(|| spectral_substeps(u0, a.max(), t_grid.dx, window.t_max, PHASE_TOL));
    let run = evolve_crank_nicolson(&op, u0, t_grid, Some(substeps))?;
    if run.boundary_leak > window.leak_tol {
        return Err(Error::BoxTooSmall(format!(
            "{:.2e} of the mass reaches the box edges (tolerance {:.0e})",
            run.boundary_leak, window.leak_tol
        )));
    }
    let prov = RunProvenance {
        propagator: "crank-nicolson".into(),
        x0: u0.grid.x0,
        dx: u0.grid.dx,
        n: u0.grid.n,
        t_max: window.t_max,
        n_t: window.n_t,
        substeps,
        mass_drift: run.mass_drift,
        boundary_leak: run.boundary_leak,
    };
    Ok(Evolved { field: run.field, run: prov })
}

/// Exact flat propagation (Fourier multiplier on the zero-padded box).
pub fn flat_evolution(u0: &GridFunction, window: &TimeWindow) -> Result<Evolved> {
    let field = flat_group(u0, window.grid()?);
    let prov = RunProvenance {
        propagator: "flat-multiplier".into(),
        x0: u0.grid.x0,
        dx: u0.grid.dx,
        n: u0.grid.n,
        t_max: window.t_max,
        n_t: window.n_t,
        substeps: 0,
        mass_drift: 0.0,
        boundary_leak: 0.0,
    };
    Ok(Evolved { field, run: prov })
}

/// Numerator and denominator of `est` on an already computed field.
pub fn quotient_parts(est: &Estimate, field: &SpaceTimeField, u0: &GridFunction, bank: &LittlewoodPaleyBank) -> Result<(f64, f64)> {
    est.validate()?;
    let num = mixed_norm(field, &est.numerator_spec(*bank))?;
    let den = est.denominator(u0, bank);
    Ok((num, den))
}

fn report(est: &Estimate, a: &Coefficient, ev: Evolved, u0: &GridFunction, bank: &LittlewoodPaleyBank) -> Result<QuotientReport> {
    let (numerator, denominator) = quotient_parts(est, &ev.field, u0, bank)?;
    if !(denominator > 0.0) {
        return Err(Error::InvalidParameter("zero datum".into()));
    }
    let (p, q) = est.exponents();
    Ok(QuotientReport {
        kind: est.kind(),
        s: est.regularity(),
        p,
        q,
        t_max: ev.run.t_max,
        norm: est.numerator_spec(*bank).to_string(),
        numerator,
        denominator,
        quotient: numerator / denominator,
        coefficient: a.describe(),
        bv_norm: bv_norm(a),
        n_jumps: a.n_jumps(),
        run: ev.run,
    })
}

pub fn estimate_quotient(a: &Coefficient, u0: &GridFunction, window: &TimeWindow, est: &Estimate, bank: &LittlewoodPaleyBank) -> Result<QuotientReport> {
    est.validate()?;
    let ev = evolve_for_estimate(a, u0, window)?;
    report(est, a, ev, u0, bank)
}

/// Same quotient with the exact flat propagator in place of Crank-Nicolson.
pub fn flat_quotient(u0: &GridFunction, window: &TimeWindow, est: &Estimate, bank: &LittlewoodPaleyBank) -> Result<QuotientReport> {
    est.validate()?;
    let ev = flat_evolution(u0, window)?;
    let a = Coefficient::Step(crate::coefficients::StepCoefficient::constant(1.0)?);
    report(est, &a, ev, u0, bank)
}

pub fn smoothing_quotient(a: &Coefficient, u0: &GridFunction, window: &TimeWindow, s: f64, bank: &LittlewoodPaleyBank) -> Result<QuotientReport> {
    estimate_quotient(a, u0, window, &Estimate::Smoothing { s }, bank)
}

pub fn strichartz_quotient(a: &Coefficient, u0: &GridFunction, p: f64, q: f64, window: &TimeWindow, besov: bool) -> Result<QuotientReport> {
    estimate_quotient(a, u0, window, &Estimate::Strichartz { p, q, besov }, &LittlewoodPaleyBank::default())
}

pub fn maximal_quotient(a: &Coefficient, u0: &GridFunction, s: f64, window: &TimeWindow, bank: &LittlewoodPaleyBank) -> Result<QuotientReport> {
    estimate_quotient(a, u0, window, &Estimate::Maximal { s }, bank)
}

fn taper(t: f64, t0: f64, t1: f64) -> f64 {
    let ramp = 0.8;
    let u = (t - t0) / (t1 - t0);
    if u <= ramp {
        1.0
    } else {
        (0.5 * std::f64::consts::PI * (u - ramp) / (1.0 - ramp)).cos().powi(2)
    }
}

/// `‖∂ₓu‖_{L∞ₓL²ₜ} + ‖|∂ₜ|^{1/2} u‖_{L∞ₓL²ₜ}`; the half derivative acts on each time
/// series after a cosine taper over the last 20% of the window.
pub fn inhomogeneous_numerator(u: &SpaceTimeField) -> f64 {
    let (nx, nt) = (u.n_x(), u.n_t());
    let h = u.x_grid.dx;
    let dt = u.t_grid.dx;
    let (t0, t1) = (u.t_grid.x0, u.t_grid.last());
    let grad: Vec<f64> = (0..nx)
        .into_par_iter()
        .map(|ix| {
            let (l, r) = (ix.saturating_sub(1), (ix + 1).min(nx - 1));
            let col: Vec<Complex64> =
                (0..nt).map(|it| (u.at(r, it) - u.at(l, it)) / ((r - l) as f64 * h)).collect();
            norm_lp_slice(&col, dt, 2.0, false)
        })
        .collect();
    let half: Vec<f64> = (0..nx)
        .into_par_iter()
        .map(|ix| {
            let col: Vec<Complex64> = (0..nt).map(|it| u.at(ix, it) * taper(u.t_grid.x(it), t0, t1)).collect();
            let g = GridFunction { grid: u.t_grid, values: col, periodic: false };
            fractional_derivative(&g, 0.5).norm_l2()
        })
        .collect();
    let sup = |v: &[f64]| norm_lp_real(v, h, f64::INFINITY, false);
    sup(&grad) + sup(&half)
}

fn check_source_support(f: &SpaceTimeField) -> Result<()> {
    let n = f.n_x();
    let k = (n / 20).max(1);
    let peak = f.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let edge = (0..f.n_t())
        .flat_map(|it| {
            let s = f.slice(it);
            s[..k].iter().chain(&s[n - k..]).map(|z| z.norm()).collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    if edge > 1e-10 * peak {
        return Err(Error::BoxTooSmall("source support reaches the outer 5% of the box".into()));
    }
    Ok(())
}

fn inhomogeneous_report(a: &Coefficient, f: &SpaceTimeField, u: &SpaceTimeField, run: RunProvenance) -> QuotientReport {
    let denominator = mixed_norm(f, &MixedNormSpec::lebesgue(Variable::X, 1.0, 2.0)).expect("valid exponents");
    let numerator = if denominator > 0.0 { inhomogeneous_numerator(u) } else { 0.0 };
    QuotientReport {
        kind: QuotientKind::Inhomogeneous,
        s: None,
        p: None,
        q: None,
        t_max: f.t_grid.last() - f.t_grid.x0,
        norm: "L∞_x L2_t of ∂x u plus |∂t|^{1/2} u over L1_x L2_t of f".into(),
        numerator,
        denominator,
        quotient: if denominator > 0.0 { numerator / denominator } else { 0.0 },
        coefficient: a.describe(),
        bv_norm: bv_norm(a),
        n_jumps: a.n_jumps(),
        run,
    }
}

fn source_provenance(f: &SpaceTimeField, propagator: &str, substeps: usize, leak: f64) -> RunProvenance {
    RunProvenance {
        propagator: propagator.into(),
        x0: f.x_grid.x0,
        dx: f.x_grid.dx,
        n: f.n_x(),
        t_max: f.t_grid.last() - f.t_grid.x0,
        n_t: f.n_t(),
        substeps,
        mass_drift: 0.0,
        boundary_leak: leak,
    }
}

/// Duhamel solution of `i u_t + (a u_x)_x = f` with zero data at the first time of `f`.
pub fn inhomogeneous_smoothing_check(a: &Coefficient, f: &SpaceTimeField, substeps: Option<usize>) -> Result<QuotientReport> {
    check_source_support(f)?;
    let op = build_divergence_operator(a, f.x_grid, Boundary::Dirichlet)?;
    let loudest = (0..f.n_t())
        .max_by(|&i, &j| norm_lp_slice(f.slice(i), 1.0, 2.0, false).total_cmp(&norm_lp_slice(f.slice(j), 1.0, 2.0, false)))
        .unwrap_or(0);
    let span = f.t_grid.last() - f.t_grid.x0;
    let substeps = substeps.unwrap_or_else(|| spectral_substeps(&f.slice_function(loudest), a.max(), f.t_grid.dx, span, PHASE_TOL));
    let run = evolve_with_source(&op, f, Some(substeps))?;
    if run.boundary_leak > LEAK_TOL {
        return Err(Error::BoxTooSmall(format!("{:.2e} of the mass reaches the box edges", run.boundary_leak)));
    }
    let prov = source_provenance(f, "crank-nicolson", substeps, run.boundary_leak);
    Ok(inhomogeneous_report(a, f, &run.field, prov))
}

/// Flat reference for the inhomogeneous quotient (exact multiplier Duhamel).
pub fn flat_inhomogeneous(f: &SpaceTimeField) -> Result<QuotientReport> {
    check_source_support(f)?;
    let a = Coefficient::Step(crate::coefficients::StepCoefficient::constant(1.0)?);
    let u = flat_duhamel(f);
    Ok(inhomogeneous_report(&a, f, &u, source_provenance(f, "flat-multiplier", 0, 0.0)))
}
