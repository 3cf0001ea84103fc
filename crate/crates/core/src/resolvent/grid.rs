//! Flux-form finite differences for `(a v')' - σ v = g` with exact discrete radiation conditions.

use num_complex::Complex64;

use super::{EnergyIntegrals, ResolventSolution, SpectralParameter};
use crate::coefficients::Coefficient;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::linalg::{solve_tridiagonal_pivoted, Tridiagonal};

/// Root of `ρ² - (2 + σh²/a)ρ + 1 = 0` inside the unit disc.
fn decaying_root(sigma: Complex64, h: f64, a: f64) -> Complex64 {
    let b = 2.0 + sigma * h * h / a;
    let disc = (b * b - 4.0).sqrt();
    let r1 = (b + disc) / 2.0;
    let r2 = (b - disc) / 2.0;
    if r1.norm() < r2.norm() {
        r1
    } else {
        r2
    }
}

/// Cells at each end over which the coefficient must be constant and the source must vanish.
const QUIET_CELLS: usize = 4;

pub fn solve_grid_resolvent(a: &Coefficient, sigma: SpectralParameter, g: &GridFunction) -> Result<ResolventSolution> {
    sigma.validate_direct()?;
    a.validate()?;
    let grid = g.grid;
    let n = grid.n;
    if n < 2 * QUIET_CELLS + 2 {
        return Err(Error::InvalidGrid("grid too short for the radiation closure".into()));
    }
    let h = grid.dx;
    let s = sigma.sigma();
    let half: Vec<f64> = (0..n - 1).map(|i| a.cell_value(grid.x(i), grid.x(i + 1))).collect();
    let gmax = g.norm_inf();
    let a_lo = a.value_at(grid.x0 - h);
    let a_hi = a.value_at(grid.last() + h);
    let quiet = |idx: std::ops::Range<usize>, edge: f64| -> bool {
        idx.into_iter().all(|i| {
            let ai = a.value_at(grid.x(i));
            g.values[i].norm() <= 1e-12 * gmax.max(1e-300) && (ai - edge).abs() <= 1e-12 * edge
        })
    };
    if !quiet(0..QUIET_CELLS, a_lo) || !quiet(n - QUIET_CELLS..n, a_hi) {
        return Err(Error::BoxTooSmall(
            "source or coefficient variation reaches the box edge; enlarge the box".into(),
        ));
    }
    let rho_lo = decaying_root(s, h, a_lo);
    let rho_hi = decaying_root(s, h, a_hi);
    let h2 = h * h;
    let mut m = Tridiagonal {
        lower: vec![Complex64::new(0.0, 0.0); n - 1],
        diag: vec![Complex64::new(0.0, 0.0); n],
        upper: vec![Complex64::new(0.0, 0.0); n - 1],
    };
    for i in 0..n {
        let (al, ar) = (
            if i == 0 { a_lo } else { half[i - 1] },
            if i + 1 == n { a_hi } else { half[i] },
        );
        let mut d = Complex64::new(-(al + ar) / h2, 0.0) - s;
        if i == 0 {
            d += al * rho_lo / h2;
        } else {
            m.lower[i - 1] = Complex64::new(al / h2, 0.0);
        }
        if i + 1 == n {
            d += ar * rho_hi / h2;
        } else {
            m.upper[i] = Complex64::new(ar / h2, 0.0);
        }
        m.diag[i] = d;
    }
    let v = solve_tridiagonal_pivoted(&m, &g.values)?;

    let mut edge_flux = vec![Complex64::new(0.0, 0.0); n + 1];
    edge_flux[0] = a_lo * (v[0] - rho_lo * v[0]) / h;
    edge_flux[n] = a_hi * (rho_hi * v[n - 1] - v[n - 1]) / h;
    for i in 0..n - 1 {
        edge_flux[i + 1] = half[i] * (v[i + 1] - v[i]) / h;
    }
    let flux: Vec<Complex64> = (0..n).map(|i| 0.5 * (edge_flux[i] + edge_flux[i + 1])).collect();

    let mut e = EnergyIntegrals::default();
    for i in 0..n {
        e.v_l2_sq += h * v[i].norm_sqr();
        e.g_vbar += h * g.values[i] * v[i].conj();
    }
    for i in 0..n - 1 {
        let d = (v[i + 1] - v[i]) / h;
        e.dv_l2_sq += h * d.norm_sqr();
        e.a_dv_sq += h * half[i] * d.norm_sqr();
        e.a_v_dv += h * half[i] * d.norm() * 0.5 * (v[i].norm() + v[i + 1].norm());
    }
    let mut real_balance = e.a_dv_sq + sigma.tau * e.v_l2_sq;
    for (edge, rho, aa) in [(v[0], rho_lo, a_lo), (v[n - 1], rho_hi, a_hi)] {
        let r2 = rho.norm_sqr();
        let geo = r2 / (1.0 - r2);
        let jump = (rho - 1.0).norm_sqr() / h2;
        let mass = h * edge.norm_sqr() * geo;
        let grad = h * edge.norm_sqr() * jump / (1.0 - r2);
        e.v_l2_sq += mass;
        e.dv_l2_sq += grad;
        e.a_dv_sq += aa * grad;
        e.a_v_dv += aa * grad.sqrt() * mass.sqrt();
        real_balance += aa * grad + sigma.tau * mass;
    }
    e.real_balance = real_balance;

    let vg = GridFunction { grid, values: v, periodic: false };
    let fg = GridFunction { grid, values: flux, periodic: false };
    let coeff: Vec<f64> = (0..n).map(|i| a.value_at(grid.x(i))).collect();
    let omega_trace = super::omega_trace(&vg, &fg, &coeff, sigma);
    Ok(ResolventSolution { sigma, v: vg, flux: fg, omega_trace, energy: e })
}

/// Discrete `⟨R_σ g, w⟩ = h Σ (R_σ g)_i conj(w_i)`.
pub fn discrete_pairing(u: &GridFunction, w: &GridFunction) -> Complex64 {
    u.values.iter().zip(&w.values).map(|(a, b)| a * b.conj()).sum::<Complex64>() * u.grid.dx
}
