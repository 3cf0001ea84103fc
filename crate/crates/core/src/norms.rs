//! Littlewood-Paley bands, Besov norms, mixed space-time norms, fractional
//! derivatives and composition with a change of variables.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::Diffeomorphism;
use crate::error::{Error, Result};
use crate::fourier::{apply_multiplier, apply_multiplier_x};
use crate::grid::{norm_lp_real, norm_lp_slice, GridFunction, SpaceTimeField};

/// Mother cutoff: 1 on |ξ| ≤ 1, 0 on |ξ| ≥ 3/2, quintic C² transition.
pub fn mother_symbol(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 1.5 {
        0.0
    } else {
        let t = (a - 1.0) / 0.5;
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LittlewoodPaleyBank {
    pub j_min: i32,
    pub j_max: i32,
}

impl Default for LittlewoodPaleyBank {
    fn default() -> Self {
        Self { j_min: -8, j_max: 8 }
    }
}

impl LittlewoodPaleyBank {
    pub fn new(j_min: i32, j_max: i32) -> Result<Self> {
        if j_min > j_max {
            return Err(Error::InvalidParameter(format!("empty band range [{j_min}, {j_max}]")));
        }
        Ok(Self { j_min, j_max })
    }

    /// Symbol of `S_j`.
    pub fn low_pass(&self, j: i32, xi: f64) -> f64 {
        mother_symbol(xi / 2f64.powi(j))
    }

    /// Symbol of `Δ_j = S_{j+1} - S_j`, supported in 2^j ≤ |ξ| ≤ 3·2^j.
    pub fn band(&self, j: i32, xi: f64) -> f64 {
        mother_symbol(xi / 2f64.powi(j + 1)) - mother_symbol(xi / 2f64.powi(j))
    }

    pub fn bands(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    /// Bands of the range whose upper edge 2^{j+1} is below `nyquist`.
    pub fn resolved_bands(&self, nyquist: f64) -> Vec<i32> {
        self.bands().filter(|&j| 2f64.powi(j + 1) <= nyquist).collect()
    }
}

fn nyquist_check(j: i32, nyquist: f64) -> Result<()> {
    let needed = 2f64.powi(j + 1);
    if needed > nyquist {
        return Err(Error::Nyquist { band: j, needed, nyquist });
    }
    Ok(())
}

pub fn lp_project(f: &GridFunction, j: i32, bank: &LittlewoodPaleyBank) -> Result<GridFunction> {
    nyquist_check(j, f.grid.nyquist())?;
    Ok(apply_multiplier(f, |xi| Complex64::new(bank.band(j, xi), 0.0)))
}

/// `Δ_j` applied in x to every time slice.
pub fn lp_project_field(u: &SpaceTimeField, j: i32, bank: &LittlewoodPaleyBank) -> Result<SpaceTimeField> {
    nyquist_check(j, u.x_grid.nyquist())?;
    Ok(apply_multiplier_x(u, |xi| Complex64::new(bank.band(j, xi), 0.0)))
}

fn lr_sum(terms: &[f64], r: f64) -> f64 {
    if r.is_infinite() {
        terms.iter().copied().fold(0.0, f64::max)
    } else {
        terms.iter().map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Weighted band norms `2^{js}‖Δ_j f‖_p` for every resolved band.
pub fn besov_terms(f: &GridFunction, s: f64, p: f64, bank: &LittlewoodPaleyBank) -> Vec<(i32, f64)> {
    bank.resolved_bands(f.grid.nyquist())
        .into_par_iter()
        .map(|j| {
            let band = lp_project(f, j, bank).expect("band resolved");
            (j, 2f64.powf(j as f64 * s) * band.norm_lp(p))
        })
        .collect()
}

/// Homogeneous Besov norm with quadrature L^p band norms and l^r summation.
pub fn besov_norm(f: &GridFunction, s: f64, p: f64, r: f64, bank: &LittlewoodPaleyBank) -> f64 {
    let terms: Vec<f64> = besov_terms(f, s, p, bank).into_iter().map(|(_, v)| v).collect();
    lr_sum(&terms, r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    X,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovWeight {
    pub s: f64,
    pub r: f64,
}

/// `L^p_outer(L^q_inner)`, optionally Besov-valued in x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub outer: Variable,
    pub p_outer: f64,
    pub q_inner: f64,
    pub besov: Option<BesovWeight>,
    #[serde(default)]
    pub bank: Option<LittlewoodPaleyBank>,
}

impl MixedNormSpec {
    pub fn lebesgue(outer: Variable, p_outer: f64, q_inner: f64) -> Self {
        Self { outer, p_outer, q_inner, besov: None, bank: None }
    }

    pub fn with_besov(mut self, s: f64, r: f64, bank: LittlewoodPaleyBank) -> Self {
        self.besov = Some(BesovWeight { s, r });
        self.bank = Some(bank);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |e: f64| e >= 1.0;
        if !ok(self.p_outer) || !ok(self.q_inner) {
            return Err(Error::InvalidParameter(format!(
                "exponents must lie in [1, ∞]: ({}, {})",
                self.p_outer, self.q_inner
            )));
        }
        if let Some(b) = self.besov {
            if !ok(b.r) {
                return Err(Error::InvalidParameter(format!("summation exponent {} outside [1, ∞]", b.r)));
            }
        }
        Ok(())
    }
}

impl fmt::Display for MixedNormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (o, i) = match self.outer {
            Variable::X => ("x", "t"),
            Variable::T => ("t", "x"),
        };
        write!(f, "L{}_{} L{}_{}", self.p_outer, o, self.q_inner, i)?;
        if let Some(b) = self.besov {
            write!(f, " besov(s={}, r={})", b.s, b.r)?;
        }
        Ok(())
    }
}

fn plain_mixed(u: &SpaceTimeField, outer: Variable, p: f64, q: f64) -> f64 {
    match outer {
        Variable::X => {
            let inner: Vec<f64> = (0..u.n_x())
                .into_par_iter()
                .map(|ix| norm_lp_slice(&u.column(ix), u.t_grid.dx, q, false))
                .collect();
            norm_lp_real(&inner, u.x_grid.dx, p, u.periodic)
        }
        Variable::T => {
            let inner: Vec<f64> = (0..u.n_t())
                .into_par_iter()
                .map(|it| norm_lp_slice(u.slice(it), u.x_grid.dx, q, u.periodic))
                .collect();
            norm_lp_real(&inner, u.t_grid.dx, p, false)
        }
    }
}

pub fn mixed_norm(u: &SpaceTimeField, spec: &MixedNormSpec) -> Result<f64> {
    spec.validate()?;
    let Some(b) = spec.besov else {
        return Ok(plain_mixed(u, spec.outer, spec.p_outer, spec.q_inner));
    };
    let bank = spec.bank.unwrap_or_default();
    match spec.outer {
        Variable::X => {
            let terms: Vec<f64> = bank
                .resolved_bands(u.x_grid.nyquist())
                .into_iter()
                .map(|j| {
                    let band = lp_project_field(u, j, &bank)?;
                    Ok(2f64.powf(j as f64 * b.s) * plain_mixed(&band, Variable::X, spec.p_outer, spec.q_inner))
                })
                .collect::<Result<_>>()?;
            Ok(lr_sum(&terms, b.r))
        }
        Variable::T => {
            let inner: Vec<f64> = (0..u.n_t())
                .into_par_iter()
                .map(|it| besov_norm(&u.slice_function(it), b.s, spec.q_inner, b.r, &bank))
                .collect();
            Ok(norm_lp_real(&inner, u.t_grid.dx, spec.p_outer, false))
        }
    }
}

/// Fourier multiplier |ξ|^s; the zero mode is dropped for s ≠ 0.
pub fn fractional_derivative(f: &GridFunction, s: f64) -> GridFunction {
    if s == 0.0 {
        return f.clone();
    }
    apply_multiplier(f, |xi| {
        let a = xi.abs();
        Complex64::new(if a == 0.0 { 0.0 } else { a.powf(s) }, 0.0)
    })
}

/// Resample `f ∘ φ` on the y-grid of `d` by cubic interpolation.
pub fn compose_with_diffeo(f: &GridFunction, d: &Diffeomorphism) -> Result<GridFunction> {
    let (lo, hi) = (d.x_grid.x0, d.x_grid.last());
    let (flo, fhi) = (f.grid.x0, f.grid.last());
    let tol = 1e-9 * (fhi - flo);
    if lo < flo - tol || hi > fhi + tol {
        return Err(Error::InvalidParameter(format!(
            "diffeomorphism range [{lo}, {hi}] leaves the function domain [{flo}, {fhi}]"
        )));
    }
    let values = d.inverse.iter().map(|&x| f.interpolate(x)).collect();
    GridFunction::new(d.y_grid, values, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mother_symbol_is_c2() {
        let h = 1e-6;
        for &x in &[1.0, 1.5] {
            let d1 = (mother_symbol(x + h) - mother_symbol(x - h)) / (2.0 * h);
            assert!(d1.abs() < 1e-5);
        }
        assert_eq!(mother_symbol(0.3), 1.0);
        assert_eq!(mother_symbol(-2.0), 0.0);
    }

    #[test]
    fn band_plateau_and_support() {
        let b = LittlewoodPaleyBank::default();
        for j in -3..4 {
            let p = 2f64.powi(j);
            assert_eq!(b.band(j, 1.5 * p), 1.0);
            assert_eq!(b.band(j, 1.99 * p), 1.0);
            assert_eq!(b.band(j, 0.99 * p), 0.0);
            assert_eq!(b.band(j, 3.01 * p), 0.0);
        }
    }
}
