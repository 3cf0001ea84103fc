//! `[Δ_j, g] f` in `L¹ₓL²ₜ` against `2^{-j} ‖∂ₓg‖ ‖f‖` with Hölder-dual exponents.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{apply_multiplier_x, SpectralPlan};
use crate::grid::{Grid1d, SpaceTimeField};
use crate::norms::{lp_project_field, mixed_norm, LittlewoodPaleyBank, MixedNormSpec, Variable};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub j: i32,
    pub h_norm: f64,
    pub bound: f64,
    pub grad_norm: f64,
    pub f_norm: f64,
    pub moment: f64,
    /// `‖h‖ / (‖∂ₓg‖ ‖f‖)`, expected to scale like `2^{-j}`.
    pub ratio: f64,
}

/// `∫|z| |ψ̌₀(z)| dz` for the band-0 kernel; band j has moment `2^{-j}` times this.
pub fn kernel_moment() -> f64 {
    static MOMENT: OnceLock<f64> = OnceLock::new();
    *MOMENT.get_or_init(|| {
        let bank = LittlewoodPaleyBank::default();
        let (nodes, weights) = gauss_legendre(8);
        let mut xs = vec![];
        let mut ws = vec![];
        let panels = 200;
        let w = 2.0 / panels as f64;
        for k in 0..panels {
            let a = 1.0 + k as f64 * w;
            for (t, wt) in nodes.iter().zip(&weights) {
                let xi = a + 0.5 * w * (t + 1.0);
                xs.push(xi);
                ws.push(0.5 * w * wt * bank.band(0, xi));
            }
        }
        let kernel = |z: f64| xs.iter().zip(&ws).map(|(xi, w)| w * (xi * z).cos()).sum::<f64>() / PI;
        let (zmax, dz) = (200.0, 0.01);
        let nz = (zmax / dz) as usize;
        let mut acc = 0.0;
        for i in 0..=nz {
            let z = i as f64 * dz;
            let wt = if i == 0 || i == nz { 0.5 } else { 1.0 };
            acc += wt * z * kernel(z).abs();
        }
        2.0 * acc * dz
    })
}

fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn recip(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// `h = Δ_j(g f) - g Δ_j f` measured in `L¹ₓL²ₜ`; the bound uses
/// `‖∂ₓg‖_{L^{p1}ₓL^{q∞}ₜ} ‖f‖_{L^{p1'}ₓL^{q2}ₜ}` with `1/q∞ + 1/q2 = 1/2`.
pub fn commutator_norm(
    g: &SpaceTimeField,
    f: &SpaceTimeField,
    j: i32,
    p1: f64,
    q_inf: f64,
    q2: f64,
    bank: &LittlewoodPaleyBank,
) -> Result<CommutatorReport> {
    if !(p1 >= 1.0 && q_inf >= 2.0 && q2 >= 2.0) {
        return Err(Error::InvalidParameter(format!("exponents ({p1}, {q_inf}, {q2}) out of range")));
    }
    if (recip(q_inf) + recip(q2) - 0.5).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("1/{q_inf} + 1/{q2} must equal 1/2")));
    }
    if g.x_grid != f.x_grid || g.t_grid != f.t_grid {
        return Err(Error::InvalidGrid("g and f live on different grids".into()));
    }
    let p_inf = conjugate(p1);
    let gf = SpaceTimeField { values: g.values.iter().zip(&f.values).map(|(a, b)| a * b).collect(), ..f.clone() };
    let left = lp_project_field(&gf, j, bank)?;
    let df = lp_project_field(f, j, bank)?;
    let h = SpaceTimeField {
        values: left.values.iter().zip(g.values.iter().zip(&df.values)).map(|(l, (gv, d))| l - gv * d).collect(),
        ..f.clone()
    };
    let h_norm = mixed_norm(&h, &MixedNormSpec::lebesgue(Variable::X, 1.0, 2.0))?;
    let dg = apply_multiplier_x(g, |xi| Complex64::new(0.0, xi));
    let grad_norm = mixed_norm(&dg, &MixedNormSpec::lebesgue(Variable::X, p1, q_inf))?;
    let f_norm = mixed_norm(f, &MixedNormSpec::lebesgue(Variable::X, p_inf, q2))?;
    let moment = kernel_moment();
    let scale = 2f64.powi(-j);
    Ok(CommutatorReport {
        j,
        h_norm,
        bound: scale * moment * grad_norm * f_norm,
        grad_norm,
        f_norm,
        moment,
        ratio: h_norm / (grad_norm * f_norm),
    })
}

/// Real noise with `|f̂(ξ)|² ∝ 1/|ξ|` for `|ξ| ≥ xi_min` (equal energy per octave).
pub fn pink_noise(grid: Grid1d, xi_min: f64, seed: u64) -> Vec<f64> {
    let plan = SpectralPlan::new(grid.n, grid.dx);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf: Vec<Complex64> = plan
        .freqs
        .iter()
        .map(|&xi| {
            let phase = 2.0 * PI * rng.gen::<f64>();
            if xi.abs() < xi_min {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(xi.abs().powf(-0.5), phase)
            }
        })
        .collect();
    plan.inverse(&mut buf);
    let v: Vec<f64> = buf.iter().map(|z| z.re).collect();
    let rms = (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    v.into_iter().map(|x| x / rms).collect()
}

/// Test pair: `g = e^{-x²}(1 + ½ sin t)` and pink noise in x times `2 + cos t`.
pub fn standard_pair(x_grid: Grid1d, t_grid: Grid1d, seed: u64) -> (SpaceTimeField, SpaceTimeField) {
    let noise = pink_noise(x_grid, 1.0, seed);
    let g = SpaceTimeField::from_fn(x_grid, t_grid, false, |x, t| Complex64::new((-x * x).exp() * (1.0 + 0.5 * t.sin()), 0.0));
    let mut f = SpaceTimeField::zeros(x_grid, t_grid, false);
    for it in 0..t_grid.n {
        let c = 2.0 + t_grid.x(it).cos();
        for ix in 0..x_grid.n {
            f.values[it * x_grid.n + ix] = Complex64::new(noise[ix] * c, 0.0);
        }
    }
    (g, f)
}
