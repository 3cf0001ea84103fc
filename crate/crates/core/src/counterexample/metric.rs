//! The singular metric: rescaled copies of the Hill coefficient placed at `m_n = 2^{-n}`
//! with rate `λ_n = n 2^n`, glued into a background `4π`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::hill::{smooth_step, smooth_step_d, smooth_step_dd, FloquetSolution, HillCoefficient, STEPS_PER_PERIOD};
use crate::error::{Error, Result};
use crate::grid::{Grid1d, GridFunction};
use crate::norms::{besov_norm, LittlewoodPaleyBank};
use crate::quadrature::{gauss_legendre, integrate};

/// Largest scale a desk-sized grid resolves.
pub const MAX_SCALES: usize = 14;

pub const BACKGROUND: f64 = 4.0 * PI;

/// Even cutoff: 1 on `|z| ≤ inner`, 0 on `|z| ≥ outer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Cutoff {
    pub const PSI1: Cutoff = Cutoff { inner: 0.2, outer: 0.25 };
    pub const PSI2: Cutoff = Cutoff { inner: 1.0 / 6.0, outer: 0.2 };

    fn arg(&self, z: f64) -> f64 {
        (self.outer - z.abs()) / (self.outer - self.inner)
    }

    pub fn value(&self, z: f64) -> f64 {
        smooth_step(self.arg(z))
    }

    pub fn derivative(&self, z: f64) -> f64 {
        -z.signum() * smooth_step_d(self.arg(z)) / (self.outer - self.inner)
    }

    pub fn second(&self, z: f64) -> f64 {
        let w = self.outer - self.inner;
        smooth_step_dd(self.arg(z)) / (w * w)
    }
}

/// `y(x) = ∫₀ˣ α`, odd in x, with its inverse.
#[derive(Debug, Clone)]
pub struct ChangeOfVariables {
    pub alpha: HillCoefficient,
    /// `∫₀¹ α`.
    pub period_y: f64,
    table: Vec<f64>,
    rule: (Vec<f64>, Vec<f64>),
}

impl ChangeOfVariables {
    pub fn new(alpha: HillCoefficient) -> Self {
        let rule = gauss_legendre(6);
        let h = 1.0 / STEPS_PER_PERIOD as f64;
        let mut table = vec![0.0; STEPS_PER_PERIOD + 1];
        for i in 0..STEPS_PER_PERIOD {
            table[i + 1] = table[i] + Self::cell(&alpha, &rule, i as f64 * h, (i + 1) as f64 * h);
        }
        Self { alpha, period_y: table[STEPS_PER_PERIOD], table, rule }
    }

    fn cell(alpha: &HillCoefficient, rule: &(Vec<f64>, Vec<f64>), a: f64, b: f64) -> f64 {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        rule.0.iter().zip(&rule.1).map(|(z, w)| w * alpha.value(m + r * z)).sum::<f64>() * r
    }

    pub fn y_of_x(&self, x: f64) -> f64 {
        let ax = x.abs();
        let k = ax.floor();
        let s = ax - k;
        let h = 1.0 / STEPS_PER_PERIOD as f64;
        let i = ((s / h).floor() as usize).min(STEPS_PER_PERIOD - 1);
        let y = k * self.period_y + self.table[i] + Self::cell(&self.alpha, &self.rule, i as f64 * h, s);
        y.copysign(x)
    }

    pub fn x_of_y(&self, y: f64) -> f64 {
        let mut x = y / self.period_y;
        for _ in 0..50 {
            let dx = (self.y_of_x(x) - y) / self.alpha.value(x);
            x -= dx;
            if dx.abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        x
    }
}

/// Per-scale norms of the piece `β_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleNorms {
    pub n: usize,
    pub center: f64,
    pub lambda: f64,
    pub support: (f64, f64),
    pub l1: f64,
    pub w11: f64,
    /// `‖β_n‖_{Ḃ^s_{1,1}}` at `s = BESOV_S`.
    pub besov: f64,
    /// `‖β_n‖_{L¹} 2^n`.
    pub l1_ratio: f64,
    /// `‖β_n‖_{W^{1,1}} / n`.
    pub w11_ratio: f64,
}

pub const BESOV_S: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub alpha: HillCoefficient,
    pub trace: f64,
    pub multiplier: f64,
    pub kappa: f64,
    pub period_y: f64,
    pub n_max: usize,
    pub min_beta: f64,
    pub scales: Vec<ScaleNorms>,
    /// Spread (max / min) of `l1_ratio` over the reported scales.
    pub l1_spread: f64,
    pub w11_spread: f64,
    pub besov_s: f64,
    pub besov_sum: f64,
}

#[derive(Debug, Clone)]
pub struct SingularMetric {
    pub mode: FloquetSolution,
    pub coords: ChangeOfVariables,
    pub n_max: usize,
    pub psi1: Cutoff,
    pub psi2: Cutoff,
}

pub fn center(n: usize) -> f64 {
    2f64.powi(-(n as i32))
}

pub fn rate(n: usize) -> f64 {
    n as f64 * 2f64.powi(n as i32)
}

/// Open support of the `n`-th piece.
pub fn piece_support(n: usize, cut: &Cutoff) -> (f64, f64) {
    let m = center(n);
    (m - cut.outer * m, m + cut.outer * m)
}

pub fn build_metric(mode: FloquetSolution, n_max: usize) -> Result<SingularMetric> {
    if n_max == 0 || n_max > MAX_SCALES {
        return Err(Error::UnderResolved(format!("scales 1..={n_max} outside the resolvable range 1..={MAX_SCALES}")));
    }
    let psi1 = Cutoff::PSI1;
    for n in 1..n_max {
        let (lo, _) = piece_support(n, &psi1);
        let (_, hi) = piece_support(n + 1, &psi1);
        if hi >= lo {
            return Err(Error::InvalidParameter(format!("pieces {n} and {} overlap", n + 1)));
        }
    }
    let coords = ChangeOfVariables::new(mode.alpha);
    Ok(SingularMetric { mode, coords, n_max, psi1, psi2: Cutoff::PSI2 })
}

impl SingularMetric {
    /// `(β, β_z)` of the unscaled profile `α(x(z))`.
    pub fn base(&self, z: f64) -> (f64, f64) {
        let x = self.coords.x_of_y(z);
        let a = self.coords.alpha.value(x);
        (a, self.coords.alpha.derivative(x) / a)
    }

    /// `(v, v_z)` with `v(z) = w(x(z))`, solving `(β v_z)_z + v = 0`.
    pub fn profile(&self, z: f64) -> (f64, f64) {
        let x = self.coords.x_of_y(z);
        let (w, dw) = self.mode.eval(x);
        (w, dw / self.coords.alpha.value(x))
    }

    /// Scale whose cutoff support contains `y`.
    pub fn scale_at(&self, y: f64) -> Option<usize> {
        (1..=self.n_max).find(|&n| {
            let (lo, hi) = piece_support(n, &self.psi1);
            y > lo && y < hi
        })
    }

    /// `(β_n, β_n')` at `y`.
    pub fn piece(&self, n: usize, y: f64) -> (f64, f64) {
        let (m, l, s) = (center(n), rate(n), 2f64.powi(n as i32));
        let u = s * (y - m);
        if u.abs() >= self.psi1.outer {
            return (0.0, 0.0);
        }
        let (b, db) = self.base(l * (y - m));
        let (c, dc) = (self.psi1.value(u), s * self.psi1.derivative(u));
        (b * c, l * db * c + b * dc)
    }

    /// `(β, β')` at `y`.
    pub fn value(&self, y: f64) -> (f64, f64) {
        match self.scale_at(y) {
            None => (BACKGROUND, 0.0),
            Some(n) => {
                let (b, db) = self.piece(n, y);
                let s = 2f64.powi(n as i32);
                let u = s * (y - center(n));
                (b + BACKGROUND * (1.0 - self.psi1.value(u)), db - BACKGROUND * s * self.psi1.derivative(u))
            }
        }
    }

    fn scale_norms(&self, n: usize, bank: &LittlewoodPaleyBank) -> ScaleNorms {
        let (lo, hi) = piece_support(n, &self.psi1);
        let (m, l) = (center(n), rate(n));
        let panels = 400 + 40 * n;
        let l1 = integrate(|y| self.piece(n, y).0.abs(), lo, hi, panels, 8);
        let dl1 = integrate(|y| self.piece(n, y).1.abs(), lo, hi, panels, 8);
        let width = hi - lo;
        let h = (width / 1024.0).min(PI / (8.0 * l / PI));
        let npts = ((2.0 * width) / h).ceil() as usize + 1;
        let grid = Grid1d::spanning(m - width, m + width, npts).expect("nonempty");
        let f = GridFunction::from_real(grid, false, |y| self.piece(n, y).0);
        ScaleNorms {
            n,
            center: m,
            lambda: l,
            support: (lo, hi),
            l1,
            w11: l1 + dl1,
            besov: besov_norm(&f, BESOV_S, 1.0, 1.0, bank),
            l1_ratio: l1 * 2f64.powi(n as i32),
            w11_ratio: (l1 + dl1) / n as f64,
        }
    }

    /// Minimum of β sampled through every piece and the background.
    pub fn min_value(&self) -> f64 {
        let mut lo = BACKGROUND;
        for n in 1..=self.n_max {
            let (a, b) = piece_support(n, &self.psi1);
            for i in 0..=4000 {
                lo = lo.min(self.value(a + (b - a) * i as f64 / 4000.0).0);
            }
        }
        lo
    }

    /// Norm report over scales `n_lo..=n_max`.
    pub fn report(&self, n_lo: usize) -> MetricReport {
        use rayon::prelude::*;
        let bank = LittlewoodPaleyBank { j_min: -6, j_max: 40 };
        let scales: Vec<ScaleNorms> = (n_lo.max(1)..=self.n_max).into_par_iter().map(|n| self.scale_norms(n, &bank)).collect();
        let spread = |f: &dyn Fn(&ScaleNorms) -> f64| {
            let v: Vec<f64> = scales.iter().map(f).collect();
            v.iter().copied().fold(0.0, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min)
        };
        MetricReport {
            alpha: self.mode.alpha,
            trace: self.mode.trace,
            multiplier: self.mode.multiplier,
            kappa: self.mode.exponent,
            period_y: self.coords.period_y,
            n_max: self.n_max,
            min_beta: self.min_value(),
            l1_spread: spread(&|s| s.l1_ratio),
            w11_spread: spread(&|s| s.w11_ratio),
            besov_s: BESOV_S,
            besov_sum: scales.iter().map(|s| s.besov).sum(),
            scales,
        }
    }
}
