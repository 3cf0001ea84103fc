//! Resolvent `(a v')' - σ v = g`, `σ = τ + iε`: exact step solver, grid oracle,
//! bound certification, the discrete Gronwall chain and spectral sweeps.

mod grid;
mod gronwall;
mod step;

pub use grid::{discrete_pairing, solve_grid_resolvent};
pub use gronwall::{gronwall_trace, GronwallTrace};
pub use step::{solve_step_resolvent, StepResolvent};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{mollifier, Coefficient, StepCoefficient};
use crate::error::{Error, Result};
use crate::grid::{Grid1d, GridFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParameter {
    pub tau: f64,
    pub epsilon: f64,
}

impl SpectralParameter {
    pub fn new(tau: f64, epsilon: f64) -> Self {
        Self { tau, epsilon }
    }

    /// `ε = 1e-6 · max(1, |τ|)`.
    pub fn with_default_epsilon(tau: f64) -> Self {
        Self { tau, epsilon: default_epsilon(tau) }
    }

    pub fn sigma(&self) -> Complex64 {
        Complex64::new(self.tau, self.epsilon)
    }

    pub fn validate_direct(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter("non-finite spectral parameter".into()));
        }
        if self.epsilon == 0.0 {
            return Err(Error::InvalidParameter("ε = 0: the resolvent needs a nonzero imaginary part".into()));
        }
        Ok(())
    }
}

pub fn default_epsilon(tau: f64) -> f64 {
    1e-6 * tau.abs().max(1.0)
}

/// Whole-line integrals of a computed solution (exterior tails included).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyIntegrals {
    pub v_l2_sq: f64,
    pub dv_l2_sq: f64,
    pub a_dv_sq: f64,
    pub a_v_dv: f64,
    pub g_vbar: Complex64,
    /// `∫ a|v'|² + τ ∫|v|²`, with the tails combined before summation.
    pub real_balance: f64,
}

#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub sigma: SpectralParameter,
    pub v: GridFunction,
    /// `a ∂ₓ v`.
    pub flux: GridFunction,
    /// Running supremum from the left of `(|ε|+|τ|) a|v|² + |a v'|²`.
    pub omega_trace: GridFunction,
    pub energy: EnergyIntegrals,
}

pub(crate) fn omega_trace(v: &GridFunction, flux: &GridFunction, a: &[f64], sigma: SpectralParameter) -> GridFunction {
    let w = sigma.epsilon.abs() + sigma.tau.abs();
    let mut run = 0.0f64;
    let values = (0..v.len())
        .map(|i| {
            run = run.max(w * a[i] * v.values[i].norm_sqr() + flux.values[i].norm_sqr());
            Complex64::new(run, 0.0)
        })
        .collect();
    GridFunction { grid: v.grid, values, periodic: false }
}

/// Unit-mass hat centred at `center` with half-width `w`.
pub fn hat_source(grid: Grid1d, center: f64, w: f64) -> GridFunction {
    GridFunction::from_real(grid, false, |x| ((1.0 - (x - center).abs() / w) / w).max(0.0))
}

/// Unit-mass smooth bump centred at `center` with half-width `w`.
pub fn bump_source(grid: Grid1d, center: f64, w: f64) -> GridFunction {
    GridFunction::from_real(grid, false, |x| mollifier((x - center) / w) / w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub tau: f64,
    pub epsilon: f64,
    pub g_l1: f64,
    /// `‖v‖_∞ / ‖g‖₁`.
    pub q_v: f64,
    /// `√|σ| ‖v‖_∞ / ‖g‖₁`, invariant under the parabolic rescaling.
    pub q_v_scaled: f64,
    /// `‖a v'‖_∞ / ‖g‖₁`.
    pub q_flux: f64,
    pub omega_sup: f64,
    pub omega_bound: f64,
    /// Elliptic check `sup Ω ≤ ((M+4)²/m) ‖g‖₁²`; vacuous for τ ≤ 0.
    pub omega_bound_ok: bool,
    /// `|ε∫|v|² + Im∫g v̄| / (‖g‖₁ ‖v‖_∞)`.
    pub energy_residual: f64,
    /// `|∫a|v'|² + τ∫|v|² + Re∫g v̄| / (‖g‖₁ ‖v‖_∞)`.
    pub real_residual: f64,
    /// `|ε|∫|v|² ≤ ‖g‖₁ ‖v‖_∞`.
    pub absorption_ok: bool,
    /// `‖v‖²_∞ / (2‖v‖₂‖v'‖₂)`, at most 1.
    pub interpolation_ratio: f64,
}

pub fn certify_bound(sol: &ResolventSolution, a: &Coefficient, sigma: SpectralParameter, g: &GridFunction) -> CertificateReport {
    let g_l1 = g.norm_l1();
    let v_inf = sol.v.norm_inf();
    let flux_inf = sol.flux.norm_inf();
    let e = &sol.energy;
    let m = a.min();
    let big_m = a.max();
    let omega_sup = sol.omega_trace.values.last().map(|z| z.re).unwrap_or(0.0);
    let omega_bound = (big_m + 4.0).powi(2) / m * g_l1 * g_l1;
    let scale = (g_l1 * v_inf).max(f64::MIN_POSITIVE);
    let energy_residual = (sigma.epsilon * e.v_l2_sq + e.g_vbar.im).abs() / scale;
    let real_residual = (e.real_balance + e.g_vbar.re).abs() / scale;
    let sigma_abs = sigma.sigma().norm();
    CertificateReport {
        tau: sigma.tau,
        epsilon: sigma.epsilon,
        g_l1,
        q_v: v_inf / g_l1,
        q_v_scaled: sigma_abs.sqrt() * v_inf / g_l1,
        q_flux: flux_inf / g_l1,
        omega_sup,
        omega_bound,
        omega_bound_ok: sigma.tau <= 0.0 || omega_sup <= omega_bound,
        energy_residual,
        real_residual,
        absorption_ok: sigma.epsilon.abs() * e.v_l2_sq <= g_l1 * v_inf * (1.0 + 1e-9),
        interpolation_ratio: v_inf * v_inf / (2.0 * e.v_l2_sq.sqrt() * e.dv_l2_sq.sqrt()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub certificate: CertificateReport,
    /// `q_flux` of the rescaled problem at `τ = ±1`.
    pub q_flux_rescaled: f64,
    /// Relative gap between `q_flux` and its rescaled counterpart.
    pub scale_gap: f64,
}

/// The problem `(ã V')' - σ s² V = s² g(s·)` with `ã = a(s·)`, `s = 1/√|τ|`.
pub fn rescale_problem(a: &StepCoefficient, sigma: SpectralParameter, g: &GridFunction) -> (StepCoefficient, SpectralParameter, GridFunction) {
    let s = 1.0 / sigma.tau.abs().sqrt();
    let a2 = a.rescaled(1.0 / s);
    let sig2 = SpectralParameter::new(sigma.tau * s * s, sigma.epsilon * s * s);
    let grid = Grid1d { x0: g.grid.x0 / s, dx: g.grid.dx / s, n: g.grid.n };
    let g2 = GridFunction { grid, values: g.values.iter().map(|z| z * (s * s)).collect(), periodic: false };
    (a2, sig2, g2)
}

/// Certified quotients over a list of τ, with a rescaled re-solve per entry.
pub fn resolvent_sweep(a: &StepCoefficient, taus: &[f64], epsilon: Option<f64>, g: &GridFunction) -> Result<Vec<SweepRow>> {
    let coeff = Coefficient::Step(a.clone());
    taus.par_iter()
        .map(|&tau| {
            if tau == 0.0 {
                return Err(Error::InvalidParameter("τ = 0 has no parabolic rescaling".into()));
            }
            let sigma = SpectralParameter::new(tau, epsilon.unwrap_or_else(|| default_epsilon(tau)));
            let sol = solve_step_resolvent(a, sigma, g)?;
            let certificate = certify_bound(&sol, &coeff, sigma, g);
            let (a2, s2, g2) = rescale_problem(a, sigma, g);
            let sol2 = solve_step_resolvent(&a2, s2, &g2)?;
            let q2 = sol2.flux.norm_inf() / g2.norm_l1();
            Ok(SweepRow {
                certificate,
                q_flux_rescaled: q2,
                scale_gap: (q2 - certificate.q_flux).abs() / certificate.q_flux,
            })
        })
        .collect()
}

/// CSV with columns `tau,eps,q_v,q_flux,omega_bound_ok,energy_residual`.
pub fn report_csv(rows: &[CertificateReport]) -> String {
    let mut out = String::from("tau,eps,q_v,q_flux,omega_bound_ok,energy_residual\n");
    for r in rows {
        out.push_str(&format!(
            "{:e},{:e},{:.12e},{:.12e},{},{:.3e}\n",
            r.tau, r.epsilon, r.q_v, r.q_flux, r.omega_bound_ok, r.energy_residual
        ));
    }
    out
}

/// Sweep CSV: the report columns plus the scaled quotient and the rescaling gap.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("tau,eps,q_v,q_flux,omega_bound_ok,energy_residual,q_v_scaled,q_flux_rescaled,scale_gap\n");
    for r in rows {
        let c = &r.certificate;
        out.push_str(&format!(
            "{:e},{:e},{:.12e},{:.12e},{},{:.3e},{:.12e},{:.12e},{:.3e}\n",
            c.tau, c.epsilon, c.q_v, c.q_flux, c.omega_bound_ok, c.energy_residual, c.q_v_scaled, r.q_flux_rescaled, r.scale_gap
        ));
    }
    out
}
