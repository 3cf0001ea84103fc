//! Quasimodes `φ_k = c v(λ_k(y - m_k)) Ψ₂(2^k(y - m_k))` of `∂_y β ∂_y` and the
//! Strichartz blow-up experiment built on them.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metric::{center, rate, SingularMetric};
use crate::coefficients::{Coefficient, SampledCoefficient};
use crate::error::{Error, Result};
use crate::evolution::{evolve_crank_nicolson, Boundary, DivergenceOperator};
use crate::fourier::{apply_multiplier, spectrum};
use crate::grid::{norm_lp_real, Grid1d, GridFunction};
use crate::quadrature::{integrate, linear_fit};

/// Samples per quasimode support interval.
pub const QUASIMODE_POINTS: usize = 4097;

#[derive(Debug, Clone)]
pub struct Quasimode {
    pub k: usize,
    pub lambda: f64,
    /// `]2^{-k-1/2}, 2^{-k+1/2}[`.
    pub interval: (f64, f64),
    /// Closed support of the cutoff, `m_k ± 2^{-k}/5`.
    pub support: (f64, f64),
    /// Normalizing constant `c`.
    pub scale: f64,
    pub phi: GridFunction,
    /// `(∂β∂ + λ²)φ` in closed form.
    pub residual: GridFunction,
    pub residual_l2: f64,
    pub residual_h1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasimodeSummary {
    pub k: usize,
    pub lambda: f64,
    pub norm: f64,
    pub residual_l2: f64,
    pub residual_h1: f64,
}

impl Quasimode {
    pub fn summary(&self) -> QuasimodeSummary {
        QuasimodeSummary {
            k: self.k,
            lambda: self.lambda,
            norm: self.phi.norm_l2(),
            residual_l2: self.residual_l2,
            residual_h1: self.residual_h1,
        }
    }
}

fn check_scale(metric: &SingularMetric, k: usize) -> Result<()> {
    if k == 0 || k > metric.n_max {
        return Err(Error::UnderResolved(format!("scale {k} not in the metric (1..={})", metric.n_max)));
    }
    Ok(())
}

impl SingularMetric {
    /// Unnormalized `v Ψ₂` and the closed-form `(∂β∂ + λ²)(v Ψ₂)` at `y`.
    pub fn quasimode_parts(&self, k: usize, y: f64) -> (f64, f64) {
        let (m, l, s) = (center(k), rate(k), 2f64.powi(k as i32));
        let u = s * (y - m);
        if u.abs() >= self.psi2.outer {
            return (0.0, 0.0);
        }
        let z = l * (y - m);
        let (v, vz) = self.profile(z);
        let (b, bz) = self.base(z);
        let (p, dp, ddp) = (self.psi2.value(u), s * self.psi2.derivative(u), s * s * self.psi2.second(u));
        let (dv, db) = (l * vz, l * bz);
        (v * p, 2.0 * b * dv * dp + db * v * dp + b * v * ddp)
    }
}

pub fn build_quasimode(metric: &SingularMetric, k: usize) -> Result<Quasimode> {
    check_scale(metric, k)?;
    let m = center(k);
    let interval = (m * 0.5f64.sqrt(), m * 2f64.sqrt());
    let support = (m - metric.psi2.outer * m, m + metric.psi2.outer * m);
    let grid = Grid1d::spanning(interval.0, interval.1, QUASIMODE_POINTS)?;
    let mass = integrate(|y| metric.quasimode_parts(k, y).0.powi(2), support.0, support.1, 2000, 8);
    let scale = mass.sqrt().recip();
    let parts: Vec<(f64, f64)> = grid.points().into_par_iter().map(|y| metric.quasimode_parts(k, y)).collect();
    let phi = GridFunction::new(grid, parts.iter().map(|p| Complex64::new(scale * p.0, 0.0)).collect(), false)?;
    let residual = GridFunction::new(grid, parts.iter().map(|p| Complex64::new(scale * p.1, 0.0)).collect(), false)?;
    let dr = apply_multiplier(&residual, |xi| Complex64::new(0.0, xi));
    let residual_l2 = residual.norm_l2();
    Ok(Quasimode {
        k,
        lambda: rate(k),
        interval,
        support,
        scale,
        residual_h1: residual_l2 + dr.norm_l2(),
        residual_l2,
        phi,
        residual,
    })
}

/// `(∫(1 + ξ²)^r |φ̂|² dξ/2π)^{1/2}` from the padded spectrum.
pub fn sobolev_norm(f: &GridFunction, r: f64) -> f64 {
    let (freqs, hat) = spectrum(f);
    let n = hat.len() as f64;
    let s: f64 = freqs.iter().zip(&hat).map(|(x, z)| (1.0 + x * x).powf(r) * z.norm_sqr()).sum();
    (s * f.grid.dx / n).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupConfig {
    pub q: f64,
    pub r: f64,
    pub k_min: usize,
    pub k_max: usize,
    /// Half width of the evolution box around `m_k`.
    pub half_width: f64,
    /// Output times on `[0, ε_k]`.
    pub n_t: usize,
    /// Total Crank-Nicolson phase error allowed at the frequency `λ_k`.
    pub phase_tol: f64,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        Self { q: 6.0, r: 0.2, k_min: 3, k_max: 6, half_width: 12.0, n_t: 65, phase_tol: 0.2 }
    }
}

impl BlowupConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 2.0 && self.q.is_finite()) {
            return Err(Error::InvalidParameter(format!("need 2 < q < ∞, got {}", self.q)));
        }
        let bound = (self.q - 2.0) / (2.0 * self.q);
        if !(self.r >= 0.0 && self.r < bound) {
            return Err(Error::InvalidParameter(format!(
                "r = {} must lie in [0, (q-2)/2q) = [0, {bound:.4}): beyond it the Sobolev embedding H^r ⊂ L^q rules out blow-up",
                self.r
            )));
        }
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(Error::InvalidParameter(format!("empty scale range {}..={}", self.k_min, self.k_max)));
        }
        if self.n_t < 3 {
            return Err(Error::InvalidParameter("need at least 3 output times".into()));
        }
        Ok(())
    }

    /// Reference growth `2^{k(q-2)/q} / (k 2^k)^r`.
    pub fn envelope(&self, k: usize) -> f64 {
        2f64.powf(k as f64 * (self.q - 2.0) / self.q) / rate(k).powf(self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupRow {
    pub k: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub residual_h1: f64,
    pub hr_norm: f64,
    /// `‖u‖_{L¹((-ε, ε); L^q)}`.
    pub strichartz: f64,
    pub quotient: f64,
    pub envelope: f64,
    /// Smallest fraction of `‖u(t)‖₂²` inside the 3×-inflated support over `|t| ≤ ε`.
    pub localization: f64,
    pub boundary_leak: f64,
    pub n_x: usize,
    pub substeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupTable {
    pub config: BlowupConfig,
    pub rows: Vec<BlowupRow>,
    pub increasing: bool,
    /// Least-squares slope of `ln Q_k` in k.
    pub slope: f64,
    pub envelope_slope: f64,
    /// Fitted exponent of `‖φ_k‖_{H^r}` against `λ_k`.
    pub hr_exponent: f64,
}

impl BlowupTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,lambda,residual,Q_k,envelope,hr_norm,localization\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}\n",
                r.k, r.lambda, r.residual_h1, r.quotient, r.envelope, r.hr_norm, r.localization
            ));
        }
        s
    }
}

/// `L = -∂β∂` with every link set to the harmonic mean of β over its cell, the exact
/// one-dimensional effective coefficient of scales the grid does not resolve.
pub fn cell_averaged_operator(metric: &SingularMetric, grid: Grid1d, sub: usize) -> Result<DivergenceOperator> {
    let h = grid.dx;
    let mean = |lo: f64| {
        let inv: f64 = (0..sub).map(|j| 1.0 / metric.value(lo + (j as f64 + 0.5) * h / sub as f64).0).sum();
        sub as f64 / inv
    };
    let half: Vec<f64> = (0..grid.n).into_par_iter().map(|i| mean(grid.x(i))).collect();
    let left = mean(grid.x0 - h);
    let a = Coefficient::Sampled(SampledCoefficient::new(grid, half.clone())?);
    Ok(DivergenceOperator::from_links(a, grid, Boundary::Dirichlet, half, left))
}

/// Evolve `φ_k` under `∂β∂` over `|t| ≤ ε_k = 1/λ_k`. The operator is real and `φ_k` is
/// real, so `u(-t) = conj u(t)` and only `[0, ε]` is computed.
pub fn blowup_row(metric: &SingularMetric, k: usize, cfg: &BlowupConfig) -> Result<BlowupRow> {
    let qm = build_quasimode(metric, k)?;
    let (m, l) = (center(k), rate(k));
    let eps = 1.0 / l;
    let h = (std::f64::consts::PI.powi(2) / (16.0 * l)).min((metric.psi2.outer - metric.psi2.inner) * m / 3.0);
    let n = (2.0 * cfg.half_width / h).ceil() as usize + 1;
    let grid = Grid1d::spanning(m - cfg.half_width, m + cfg.half_width, n)?;
    let op = cell_averaged_operator(metric, grid, 16)?;
    let u0 = GridFunction::from_fn(grid, false, |y| Complex64::new(qm.scale * metric.quasimode_parts(k, y).0, 0.0));
    let t_grid = Grid1d::spanning(0.0, eps, cfg.n_t)?;
    let omega = l * l;
    let dt = (12.0 * cfg.phase_tol / (omega.powi(3) * eps)).sqrt();
    let substeps = ((t_grid.dx / dt).ceil() as usize).max(1);
    let run = evolve_crank_nicolson(&op, &u0, t_grid, Some(substeps))?;
    let (lo, hi) = (qm.support.0 - (qm.support.1 - qm.support.0), qm.support.1 + (qm.support.1 - qm.support.0));
    let (ilo, ihi) = (grid.nearest(lo), grid.nearest(hi));
    let mut localization: f64 = 1.0;
    let mut lq = Vec::with_capacity(cfg.n_t);
    for it in 0..cfg.n_t {
        let s = run.field.slice(it);
        let total: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        let inside: f64 = s[ilo..=ihi].iter().map(|z| z.norm_sqr()).sum();
        localization = localization.min(inside / total);
        lq.push(crate::grid::norm_lp_slice(s, grid.dx, cfg.q, false));
    }
    let strichartz = 2.0 * norm_lp_real(&lq, t_grid.dx, 1.0, false);
    let hr_norm = sobolev_norm(&qm.phi, cfg.r);
    Ok(BlowupRow {
        k,
        lambda: l,
        epsilon: eps,
        residual_h1: qm.residual_h1,
        hr_norm,
        strichartz,
        quotient: strichartz / hr_norm,
        envelope: cfg.envelope(k),
        localization,
        boundary_leak: run.boundary_leak,
        n_x: n,
        substeps,
    })
}

pub fn blowup_experiment(metric: &SingularMetric, cfg: &BlowupConfig) -> Result<BlowupTable> {
    cfg.validate()?;
    check_scale(metric, cfg.k_max)?;
    let rows = (cfg.k_min..=cfg.k_max).map(|k| blowup_row(metric, k, cfg)).collect::<Result<Vec<_>>>()?;
    let ks: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
    let lq: Vec<f64> = rows.iter().map(|r| r.quotient.ln()).collect();
    let le: Vec<f64> = rows.iter().map(|r| r.envelope.ln()).collect();
    let (slope, envelope_slope) = if rows.len() >= 2 { (linear_fit(&ks, &lq).0, linear_fit(&ks, &le).0) } else { (0.0, 0.0) };
    let ll: Vec<f64> = rows.iter().map(|r| r.lambda.ln()).collect();
    let lh: Vec<f64> = rows.iter().map(|r| r.hr_norm.ln()).collect();
    let hr_exponent = if rows.len() >= 2 { linear_fit(&ll, &lh).0 } else { 0.0 };
    Ok(BlowupTable {
        config: *cfg,
        increasing: rows.windows(2).all(|w| w[1].quotient > w[0].quotient),
        rows,
        slope,
        envelope_slope,
        hr_exponent,
    })
}

/// Least-squares `c` in `residual_h1(k)/λ_k ≈ A e^{-ck}`.
pub fn residual_decay_rate(summaries: &[QuasimodeSummary]) -> f64 {
    let ks: Vec<f64> = summaries.iter().map(|s| s.k as f64).collect();
    let y: Vec<f64> = summaries.iter().map(|s| (s.residual_h1 / s.lambda).ln()).collect();
    -linear_fit(&ks, &y).0
}
