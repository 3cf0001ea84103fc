//! Hill equation `w'' + α w = 0` with a 1-periodic α close to 4π², its monodromy and
//! the decaying Floquet solution glued evenly across 0.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// RK4 steps per period.
pub const STEPS_PER_PERIOD: usize = 4096;

fn flat_part(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn flat_part_d(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp() / (t * t)
    }
}

/// C∞ step: 0 for t ≤ 0, 1 for t ≥ 1.
pub fn smooth_step(t: f64) -> f64 {
    let (a, b) = (flat_part(t), flat_part(1.0 - t));
    a / (a + b)
}

pub fn smooth_step_d(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let (a, b) = (flat_part(t), flat_part(1.0 - t));
    let (da, db) = (flat_part_d(t), flat_part_d(1.0 - t));
    (da * b + a * db) / ((a + b) * (a + b))
}

pub fn smooth_step_dd(t: f64) -> f64 {
    let h = 1e-5;
    (smooth_step_d(t + h) - smooth_step_d(t - h)) / (2.0 * h)
}

/// Envelope on one period: vanishes on `[0, 0.05] ∪ [0.95, 1]`, equals 1 on `[0.2, 0.8]`.
fn envelope(s: f64) -> (f64, f64) {
    let w = 0.15;
    let (u, v) = ((s - 0.05) / w, (0.95 - s) / w);
    let (a, b) = (smooth_step(u), smooth_step(v));
    (a * b, (smooth_step_d(u) * b - a * smooth_step_d(v)) / w)
}

/// `α(x) = 4π² + δ b(x) cos(4πx + θ)` on each period, mirrored to `x < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillCoefficient {
    pub delta: f64,
    pub theta: f64,
}

impl HillCoefficient {
    pub fn new(delta: f64, theta: f64) -> Result<Self> {
        if !(delta.abs() <= 1.0) {
            return Err(Error::InvalidParameter(format!("|α - 4π²| ≤ 1 needs |δ| ≤ 1, got {delta}")));
        }
        Ok(Self { delta, theta })
    }

    pub fn value(&self, x: f64) -> f64 {
        let s = x.abs().fract();
        let (b, _) = envelope(s);
        FOUR_PI_SQ + self.delta * b * (4.0 * PI * s + self.theta).cos()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let s = x.abs().fract();
        let (b, db) = envelope(s);
        let c = 4.0 * PI * s + self.theta;
        let d = self.delta * (db * c.cos() - 4.0 * PI * b * c.sin());
        if x < 0.0 {
            -d
        } else {
            d
        }
    }

    /// `max |α - 4π²|` sampled on one period.
    pub fn deviation(&self) -> f64 {
        (0..=4096).map(|i| (self.value(i as f64 / 4096.0) - FOUR_PI_SQ).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monodromy {
    pub matrix: [[f64; 2]; 2],
    pub trace: f64,
    pub det: f64,
}

fn rk4_step(alpha: &HillCoefficient, x: f64, h: f64, (w, dw): (f64, f64)) -> (f64, f64) {
    let f = |x: f64, w: f64, dw: f64| (dw, -alpha.value(x) * w);
    let k1 = f(x, w, dw);
    let k2 = f(x + 0.5 * h, w + 0.5 * h * k1.0, dw + 0.5 * h * k1.1);
    let k3 = f(x + 0.5 * h, w + 0.5 * h * k2.0, dw + 0.5 * h * k2.1);
    let k4 = f(x + h, w + h * k3.0, dw + h * k3.1);
    (
        w + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        dw + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// `(w, w')` at `x0 + i/steps` for `i = 0..=steps·periods`.
pub fn integrate(alpha: &HillCoefficient, x0: f64, init: (f64, f64), periods: usize, steps: usize) -> Vec<(f64, f64)> {
    let h = 1.0 / steps as f64;
    let mut out = Vec::with_capacity(periods * steps + 1);
    let mut s = init;
    out.push(s);
    for i in 0..periods * steps {
        s = rk4_step(alpha, x0 + i as f64 * h, h, s);
        out.push(s);
    }
    out
}

pub fn monodromy(alpha: &HillCoefficient) -> Monodromy {
    let a = *integrate(alpha, 0.0, (1.0, 0.0), 1, STEPS_PER_PERIOD).last().expect("nonempty");
    let b = *integrate(alpha, 0.0, (0.0, 1.0), 1, STEPS_PER_PERIOD).last().expect("nonempty");
    let matrix = [[a.0, b.0], [a.1, b.1]];
    Monodromy { matrix, trace: a.0 + b.1, det: a.0 * b.1 - b.0 * a.1 }
}

/// Phase θ at which `(1, 0)` is the contracting eigenvector of the monodromy, so the
/// decaying solution has `w'(0) = 0` and glues evenly across 0.
pub fn tune_phase(delta: f64) -> Result<HillCoefficient> {
    let m21 = |th: f64| -> Result<(f64, Monodromy)> {
        let m = monodromy(&HillCoefficient::new(delta, th)?);
        Ok((m.matrix[1][0], m))
    };
    let n = 64;
    let mut prev = (0.0, m21(0.0)?.0);
    for i in 1..=n {
        let th = PI * i as f64 / n as f64;
        let cur = m21(th)?.0;
        if prev.1.signum() != cur.signum() {
            let (mut lo, mut hi, mut flo) = (prev.0, th, prev.1);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm = m21(mid)?.0;
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let th = 0.5 * (lo + hi);
            let (_, m) = m21(th)?;
            if m.trace.abs() > 2.0 && m.matrix[0][0].abs() < 1.0 {
                return HillCoefficient::new(delta, th);
            }
        }
        prev = (th, cur);
    }
    Err(Error::StableMonodromy(monodromy(&HillCoefficient::new(delta, 0.0)?).trace))
}

/// Decaying solution `w = p e^{-κ|x|}` built from the contracting eigenvector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloquetSolution {
    pub alpha: HillCoefficient,
    pub monodromy: Monodromy,
    pub trace: f64,
    /// Contracting multiplier μ, `|μ| < 1`.
    pub multiplier: f64,
    /// `κ = -ln|μ|`.
    pub exponent: f64,
    /// `(w, w')` over one period at `STEPS_PER_PERIOD + 1` nodes, L²(ℝ)-normalized.
    pub period: Vec<(f64, f64)>,
    /// `p(x) = w(x) e^{κx}` on the same nodes.
    pub periodic_part: Vec<f64>,
    /// `|w'(0⁺)| / |w(0)|`: the C¹ gluing defect at 0.
    pub gluing_defect: f64,
}

pub fn floquet_mode(alpha: &HillCoefficient) -> Result<FloquetSolution> {
    let m = monodromy(alpha);
    if m.trace.abs() <= 2.0 {
        return Err(Error::StableMonodromy(m.trace));
    }
    let [[a, b], [c, d]] = m.matrix;
    let disc = (m.trace * m.trace - 4.0 * m.det).sqrt();
    let mu = 0.5 * (m.trace - m.trace.signum() * disc);
    let (e0, e1) = if (mu - a).abs() + b.abs() > (mu - d).abs() + c.abs() { (b, mu - a) } else { (mu - d, c) };
    let nrm = (e0 * e0 + e1 * e1).sqrt();
    let (e0, e1) = (e0 / nrm, e1 / nrm);
    let raw = integrate(alpha, 0.0, (e0, e1), 1, STEPS_PER_PERIOD);
    let h = 1.0 / STEPS_PER_PERIOD as f64;
    let simpson: f64 = raw
        .iter()
        .enumerate()
        .map(|(i, (w, _))| {
            let c = if i == 0 || i == STEPS_PER_PERIOD { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            c * w * w
        })
        .sum::<f64>()
        * h
        / 3.0;
    let total = 2.0 * simpson / (1.0 - mu * mu);
    let scale = total.sqrt().recip() * e0.signum();
    let period: Vec<(f64, f64)> = raw.iter().map(|(w, dw)| (w * scale, dw * scale)).collect();
    let kappa = -mu.abs().ln();
    let periodic_part = period.iter().enumerate().map(|(i, (w, _))| w * (kappa * i as f64 * h).exp()).collect();
    let gluing_defect = period[0].1.abs() / period[0].0.abs();
    Ok(FloquetSolution {
        alpha: *alpha,
        monodromy: m,
        trace: m.trace,
        multiplier: mu,
        exponent: kappa,
        period,
        periodic_part,
        gluing_defect,
    })
}

impl FloquetSolution {
    /// `(w(x), w'(x))` on ℝ, with `w` even.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let ax = x.abs();
        let k = ax.floor();
        let s = ax - k;
        let n = STEPS_PER_PERIOD;
        let h = 1.0 / n as f64;
        let i = ((s / h).floor() as usize).min(n - 1);
        let t = s / h - i as f64;
        let (w0, d0) = self.period[i];
        let (w1, d1) = self.period[i + 1];
        let (a0, a1) = (self.alpha.value(i as f64 * h), self.alpha.value((i + 1) as f64 * h));
        // quintic Hermite with w'' = -α w at the nodes
        let (s0, s1) = (-a0 * w0, -a1 * w1);
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let w = h0 * w0 + h * h1 * d0 + h * h * h2 * s0 + h * h * h3 * s1 + h * h4 * d1 + h5 * w1;
        let g0 = (-30.0 * t2 + 60.0 * t3 - 30.0 * t4) / h;
        let g1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let g2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4) * h;
        let g3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4) * h;
        let g4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let g5 = (30.0 * t2 - 60.0 * t3 + 30.0 * t4) / h;
        let dw = g0 * w0 + g1 * d0 + g2 * s0 + g3 * s1 + g4 * d1 + g5 * w1;
        let f = self.multiplier.powi(k as i32);
        if x < 0.0 {
            (f * w, -f * dw)
        } else {
            (f * w, f * dw)
        }
    }
}
