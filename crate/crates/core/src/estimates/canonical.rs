//! Reference problems shared by the calibration, the acceptance suite and the CLI.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TimeWindow;
use crate::error::Result;
use crate::fourier::apply_multiplier;
use crate::grid::{Grid1d, GridFunction, SpaceTimeField};
use crate::norms::LittlewoodPaleyBank;

/// A right-moving modulated Gaussian projected onto one Littlewood-Paley band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketProblem {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub center: f64,
    pub xi0: f64,
    pub width: f64,
    pub band: i32,
    pub t_max: f64,
    pub n_t: usize,
}

impl Default for PacketProblem {
    fn default() -> Self {
        Self { lo: -104.0, hi: 136.0, n: 9600, center: -6.0, xi0: 3.5, width: 1.5, band: 1, t_max: 4.0, n_t: 401 }
    }
}

impl PacketProblem {
    pub fn grid(&self) -> Result<Grid1d> {
        Grid1d::spanning(self.lo, self.hi, self.n)
    }

    pub fn datum(&self, bank: &LittlewoodPaleyBank) -> Result<GridFunction> {
        let raw = GridFunction::from_fn(self.grid()?, false, |x| {
            let y = (x - self.center) / self.width;
            Complex64::new(0.0, self.xi0 * x).exp() * (-0.5 * y * y).exp()
        });
        Ok(apply_multiplier(&raw, |xi| Complex64::new(bank.band(self.band, xi), 0.0)))
    }

    pub fn window(&self) -> Result<TimeWindow> {
        TimeWindow::new(self.t_max, self.n_t)
    }

    /// Widest group speed times the window. The frequency `ω = a ξ²` is fixed by the
    /// value `a_datum` under the packet, so in a region with coefficient `a` the speed is
    /// `2√(aω)`.
    pub fn reach(&self, a_datum: f64, a_max: f64) -> f64 {
        2.0 * 3.0 * 2f64.powi(self.band) * (a_datum * a_max).sqrt() * self.t_max
    }

    /// Same spacing, box widened so the waves stay inside, with `[lo_c, hi_c]` the
    /// region where the coefficient varies.
    pub fn fitted(&self, a_datum: f64, a_max: f64, lo_c: f64, hi_c: f64) -> Self {
        let h = (self.hi - self.lo) / (self.n - 1) as f64;
        let l = 1.1 * self.reach(a_datum, a_max) + 10.0;
        let lo = self.center.min(lo_c) - l;
        let hi = self.center.max(hi_c) + l;
        let n = ((hi - lo) / h).round() as usize + 1;
        Self { lo, hi: lo + (n - 1) as f64 * h, n, ..*self }
    }

    /// Parabolic rescaling `x → x/2^k`: the same problem `k` bands higher.
    pub fn dilated(&self, k: i32) -> Self {
        let s = 2f64.powi(k);
        Self {
            lo: self.lo / s,
            hi: self.hi / s,
            center: self.center / s,
            xi0: self.xi0 * s,
            width: self.width / s,
            band: self.band + k,
            t_max: self.t_max / (s * s),
            ..*self
        }
    }
}

/// `u0 = e^{-x²/2}` on a wide box for the Strichartz quotient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProblem {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub t_max: f64,
    pub n_t: usize,
}

impl Default for GaussianProblem {
    fn default() -> Self {
        Self { lo: -400.0, hi: 400.0, n: 8192, t_max: 50.0, n_t: 501 }
    }
}

impl GaussianProblem {
    pub fn grid(&self) -> Result<Grid1d> {
        Grid1d::spanning(self.lo, self.hi, self.n)
    }

    pub fn datum(&self) -> Result<GridFunction> {
        Ok(GridFunction::from_real(self.grid()?, false, |x| (-0.5 * x * x).exp()))
    }

    pub fn window(&self) -> Result<TimeWindow> {
        TimeWindow::new(self.t_max, self.n_t)
    }

    /// `(π/4 · arctan 2T)^{1/8} / π^{1/4}`: the flat `L⁸ₜL⁴ₓ` quotient over `[0, T]`.
    pub fn flat_strichartz_84(&self) -> f64 {
        let pi = std::f64::consts::PI;
        (0.25 * pi * (2.0 * self.t_max).atan()).powf(0.125) / pi.powf(0.25)
    }
}

/// Separable source `f(x, t) = e^{-x²} e^{-(t - t_c)²/w²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceProblem {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub t0: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub t_center: f64,
    pub t_width: f64,
}

impl Default for SourceProblem {
    fn default() -> Self {
        Self { lo: -64.0, hi: 64.0, n: 4096, t0: 0.0, t_max: 4.0, n_t: 401, t_center: 1.0, t_width: 0.3 }
    }
}

impl SourceProblem {
    pub fn field(&self) -> Result<SpaceTimeField> {
        let xg = Grid1d::spanning(self.lo, self.hi, self.n)?;
        let tg = Grid1d::spanning(self.t0, self.t0 + self.t_max, self.n_t)?;
        Ok(SpaceTimeField::from_fn(xg, tg, false, |x, t| {
            let s = (t - self.t0 - self.t_center) / self.t_width;
            Complex64::new((-x * x - s * s).exp(), 0.0)
        }))
    }

    /// The same problem started at `t0 + shift`.
    pub fn shifted(&self, shift: f64) -> Self {
        Self { t0: self.t0 + shift, ..*self }
    }
}
