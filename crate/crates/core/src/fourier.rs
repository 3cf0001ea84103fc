//! FFT-based Fourier multipliers on uniform grids.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid::{GridFunction, SpaceTimeField};

/// Zero-padding factor applied to non-periodic data.
pub const PAD_FACTOR: usize = 4;

/// Angular frequencies of an `n`-point DFT with spacing `h`, in FFT order.
pub fn frequencies(n: usize, h: f64) -> Vec<f64> {
    let scale = 2.0 * PI / (n as f64 * h);
    (0..n)
        .map(|k| {
            let kk = if k < n.div_ceil(2) { k as isize } else { k as isize - n as isize };
            kk as f64 * scale
        })
        .collect()
}

/// Forward and inverse transforms of a fixed length.
#[derive(Clone)]
pub struct SpectralPlan {
    pub n: usize,
    pub freqs: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl SpectralPlan {
    pub fn new(n: usize, h: f64) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            freqs: frequencies(n, h),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    /// Inverse transform including the 1/n normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= s);
    }

    pub fn symbol_table<F: Fn(f64) -> Complex64>(&self, symbol: F) -> Vec<Complex64> {
        self.freqs.iter().map(|&xi| symbol(xi)).collect()
    }

    pub fn apply_table(&self, buf: &mut [Complex64], table: &[Complex64]) {
        self.forward(buf);
        buf.iter_mut().zip(table).for_each(|(z, m)| *z *= m);
        self.inverse(buf);
    }
}

/// Length of the transform used for `n` samples.
pub fn transform_len(n: usize, periodic: bool) -> usize {
    if periodic {
        n
    } else {
        PAD_FACTOR * n
    }
}

fn padded(values: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..values.len()].copy_from_slice(values);
    buf
}

/// Apply a multiplier given as a table on `plan.freqs` to samples, padding when non-periodic.
pub fn apply_with_plan(values: &[Complex64], plan: &SpectralPlan, table: &[Complex64]) -> Vec<Complex64> {
    let mut buf = padded(values, plan.n);
    plan.apply_table(&mut buf, table);
    buf.truncate(values.len());
    buf
}

/// Apply the Fourier multiplier `symbol(ξ)` to a grid function.
pub fn apply_multiplier<F: Fn(f64) -> Complex64>(f: &GridFunction, symbol: F) -> GridFunction {
    let plan = SpectralPlan::new(transform_len(f.len(), f.periodic), f.grid.dx);
    let table = plan.symbol_table(symbol);
    f.with_values(apply_with_plan(&f.values, &plan, &table))
}

/// Apply an x-multiplier to every time slice.
pub fn apply_multiplier_x<F: Fn(f64) -> Complex64>(u: &SpaceTimeField, symbol: F) -> SpaceTimeField {
    let plan = SpectralPlan::new(transform_len(u.n_x(), u.periodic), u.x_grid.dx);
    let table = plan.symbol_table(symbol);
    let slices: Vec<Vec<Complex64>> = (0..u.n_t())
        .into_par_iter()
        .map(|it| apply_with_plan(u.slice(it), &plan, &table))
        .collect();
    SpaceTimeField::from_slices(u.x_grid, u.t_grid, slices, u.periodic).expect("shape preserved")
}

/// Apply a t-multiplier along every spatial column; time data are treated as non-periodic.
pub fn apply_multiplier_t<F: Fn(f64) -> Complex64>(u: &SpaceTimeField, symbol: F) -> SpaceTimeField {
    let plan = SpectralPlan::new(transform_len(u.n_t(), false), u.t_grid.dx);
    let table = plan.symbol_table(symbol);
    let columns: Vec<Vec<Complex64>> = (0..u.n_x())
        .into_par_iter()
        .map(|ix| apply_with_plan(&u.column(ix), &plan, &table))
        .collect();
    let mut out = u.clone();
    for (ix, col) in columns.into_iter().enumerate() {
        for (it, z) in col.into_iter().enumerate() {
            out.values[it * u.n_x() + ix] = z;
        }
    }
    out
}

/// Discrete Fourier coefficients of periodic samples, with angular frequencies.
pub fn spectrum(f: &GridFunction) -> (Vec<f64>, Vec<Complex64>) {
    let plan = SpectralPlan::new(transform_len(f.len(), f.periodic), f.grid.dx);
    let mut buf = padded(&f.values, plan.n);
    plan.forward(&mut buf);
    (plan.freqs.clone(), buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1d;

    #[test]
    fn frequency_layout() {
        let f = frequencies(4, 0.5);
        let s = 2.0 * PI / 2.0;
        assert_eq!(f, vec![0.0, s, -2.0 * s, -s]);
    }

    #[test]
    fn derivative_of_periodic_mode() {
        let g = Grid1d::periodic(0.0, 2.0 * PI, 64).unwrap();
        let f = GridFunction::from_fn(g, true, |x| Complex64::new(0.0, 3.0 * x).exp());
        let d = apply_multiplier(&f, |xi| Complex64::new(0.0, xi));
        for i in 0..64 {
            let want = Complex64::new(0.0, 3.0) * f.values[i];
            assert!((d.values[i] - want).norm() < 1e-12);
        }
    }
}
