//! Uniform grids, grid functions and space-time fields.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::trapezoid_weight;

/// Uniform 1D grid `x_i = x0 + i*dx`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1d {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid1d {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n}")));
        }
        if !(dx > 0.0 && dx.is_finite() && x0.is_finite()) {
            return Err(Error::InvalidGrid(format!("bad origin/step ({x0}, {dx})")));
        }
        Ok(Self { x0, dx, n })
    }

    /// `n` points including both endpoints of `[lo, hi]`.
    pub fn spanning(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) || n < 2 {
            return Err(Error::InvalidGrid(format!("bad interval [{lo}, {hi}] with n = {n}")));
        }
        Self::new(lo, (hi - lo) / (n - 1) as f64, n)
    }

    /// `n` points on the periodic box `[lo, hi)`.
    pub fn periodic(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) || n < 2 {
            return Err(Error::InvalidGrid(format!("bad interval [{lo}, {hi}) with n = {n}")));
        }
        Self::new(lo, (hi - lo) / n as f64, n)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn last(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Index of the grid point nearest to `x`, clamped.
    pub fn nearest(&self, x: f64) -> usize {
        let k = ((x - self.x0) / self.dx).round();
        k.clamp(0.0, (self.n - 1) as f64) as usize
    }

    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.dx
    }
}

/// Complex samples on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid1d,
    pub values: Vec<Complex64>,
    pub periodic: bool,
}

impl GridFunction {
    pub fn new(grid: Grid1d, values: Vec<Complex64>, periodic: bool) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::InvalidGrid(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.n
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidGrid("non-finite sample".into()));
        }
        Ok(Self { grid, values, periodic })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Grid1d, periodic: bool, f: F) -> Self {
        let values = (0..grid.n).map(|i| f(grid.x(i))).collect();
        Self { grid, values, periodic }
    }

    pub fn from_real<F: Fn(f64) -> f64>(grid: Grid1d, periodic: bool, f: F) -> Self {
        Self::from_fn(grid, periodic, |x| Complex64::new(f(x), 0.0))
    }

    pub fn zeros(grid: Grid1d, periodic: bool) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.n], periodic }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_values(&self, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), self.grid.n);
        Self { grid: self.grid, values, periodic: self.periodic }
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    /// Trapezoid-rule L^p norm; `p = inf` gives the grid maximum.
    pub fn norm_lp(&self, p: f64) -> f64 {
        norm_lp_slice(&self.values, self.grid.dx, p, self.periodic)
    }

    pub fn norm_l1(&self) -> f64 {
        self.norm_lp(1.0)
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_lp(2.0)
    }

    pub fn norm_inf(&self) -> f64 {
        self.norm_lp(f64::INFINITY)
    }

    /// Trapezoid `∫ f conj(g)`.
    pub fn inner(&self, other: &GridFunction) -> Complex64 {
        let n = self.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            acc += self.values[i] * other.values[i].conj()
                * trapezoid_weight(i, n, self.grid.dx, self.periodic);
        }
        acc
    }

    /// Trapezoid `∫ f`.
    pub fn integral(&self) -> Complex64 {
        let n = self.len();
        (0..n)
            .map(|i| self.values[i] * trapezoid_weight(i, n, self.grid.dx, self.periodic))
            .sum()
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect())
    }

    /// Cubic (Catmull-Rom) interpolation at `x`; zero outside the grid unless periodic.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        let g = &self.grid;
        let n = g.n as isize;
        let s = (x - g.x0) / g.dx;
        let i = s.floor() as isize;
        let t = s - i as f64;
        let sample = |k: isize| -> Complex64 {
            if self.periodic {
                self.values[k.rem_euclid(n) as usize]
            } else if k < 0 {
                self.values[0]
            } else if k >= n {
                self.values[(n - 1) as usize]
            } else {
                self.values[k as usize]
            }
        };
        if !self.periodic && (s < -1e-9 || s > (n - 1) as f64 + 1e-9) {
            return Complex64::new(0.0, 0.0);
        }
        let (p0, p1, p2, p3) = (sample(i - 1), sample(i), sample(i + 1), sample(i + 2));
        let t2 = t * t;
        let t3 = t2 * t;
        p1 * (1.0 - 2.5 * t2 + 1.5 * t3)
            + p0 * (-0.5 * t + t2 - 0.5 * t3)
            + p2 * (0.5 * t + 2.0 * t2 - 1.5 * t3)
            + p3 * (-0.5 * t2 + 0.5 * t3)
    }
}

/// L^p norm of uniformly spaced samples by the trapezoid rule.
pub fn norm_lp_slice(v: &[Complex64], h: f64, p: f64, periodic: bool) -> f64 {
    let n = v.len();
    if p.is_infinite() {
        return v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    let mut acc = 0.0;
    for (i, z) in v.iter().enumerate() {
        let w = trapezoid_weight(i, n, h, periodic);
        acc += w * if p == 2.0 { z.norm_sqr() } else { z.norm().powf(p) };
    }
    acc.powf(1.0 / p)
}

/// Real-valued variant of [`norm_lp_slice`].
pub fn norm_lp_real(v: &[f64], h: f64, p: f64, periodic: bool) -> f64 {
    let n = v.len();
    if p.is_infinite() {
        return v.iter().map(|z| z.abs()).fold(0.0, f64::max);
    }
    let mut acc = 0.0;
    for (i, z) in v.iter().enumerate() {
        acc += trapezoid_weight(i, n, h, periodic) * z.abs().powf(p);
    }
    acc.powf(1.0 / p)
}

/// Complex field on an x-grid times a t-grid, stored t-major: `values[it * n_x + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub x_grid: Grid1d,
    pub t_grid: Grid1d,
    pub values: Vec<Complex64>,
    pub periodic: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FieldSidecar {
    pub n_x: usize,
    pub n_t: usize,
    pub x0: f64,
    pub dx: f64,
    pub t0: f64,
    pub dt: f64,
    #[serde(default)]
    pub periodic: bool,
}

impl SpaceTimeField {
    pub fn new(x_grid: Grid1d, t_grid: Grid1d, values: Vec<Complex64>, periodic: bool) -> Result<Self> {
        if values.len() != x_grid.n * t_grid.n {
            return Err(Error::InvalidGrid(format!(
                "{} values for a {}x{} field",
                values.len(),
                x_grid.n,
                t_grid.n
            )));
        }
        Ok(Self { x_grid, t_grid, values, periodic })
    }

    pub fn zeros(x_grid: Grid1d, t_grid: Grid1d, periodic: bool) -> Self {
        Self {
            x_grid,
            t_grid,
            values: vec![Complex64::new(0.0, 0.0); x_grid.n * t_grid.n],
            periodic,
        }
    }

    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(x_grid: Grid1d, t_grid: Grid1d, periodic: bool, f: F) -> Self {
        let mut values = Vec::with_capacity(x_grid.n * t_grid.n);
        for it in 0..t_grid.n {
            let t = t_grid.x(it);
            for ix in 0..x_grid.n {
                values.push(f(x_grid.x(ix), t));
            }
        }
        Self { x_grid, t_grid, values, periodic }
    }

    /// Build from time slices of equal length.
    pub fn from_slices(x_grid: Grid1d, t_grid: Grid1d, slices: Vec<Vec<Complex64>>, periodic: bool) -> Result<Self> {
        if slices.len() != t_grid.n {
            return Err(Error::InvalidGrid("slice count mismatch".into()));
        }
        let mut values = Vec::with_capacity(x_grid.n * t_grid.n);
        for s in slices {
            if s.len() != x_grid.n {
                return Err(Error::InvalidGrid("slice length mismatch".into()));
            }
            values.extend(s);
        }
        Ok(Self { x_grid, t_grid, values, periodic })
    }

    #[inline]
    pub fn n_x(&self) -> usize {
        self.x_grid.n
    }

    #[inline]
    pub fn n_t(&self) -> usize {
        self.t_grid.n
    }

    #[inline]
    pub fn at(&self, ix: usize, it: usize) -> Complex64 {
        self.values[it * self.x_grid.n + ix]
    }

    pub fn slice(&self, it: usize) -> &[Complex64] {
        let n = self.x_grid.n;
        &self.values[it * n..(it + 1) * n]
    }

    pub fn slice_function(&self, it: usize) -> GridFunction {
        GridFunction { grid: self.x_grid, values: self.slice(it).to_vec(), periodic: self.periodic }
    }

    /// Time series at spatial index `ix`.
    pub fn column(&self, ix: usize) -> Vec<Complex64> {
        (0..self.n_t()).map(|it| self.at(ix, it)).collect()
    }

    /// The first `n_t` time samples.
    pub fn prefix(&self, n_t: usize) -> Result<Self> {
        if n_t == 0 || n_t > self.n_t() {
            return Err(Error::InvalidGrid(format!("prefix of {n_t} samples out of {}", self.n_t())));
        }
        let t_grid = Grid1d::new(self.t_grid.x0, self.t_grid.dx, n_t)?;
        Ok(Self { t_grid, values: self.values[..n_t * self.x_grid.n].to_vec(), ..self.clone() })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    pub fn sidecar(&self) -> FieldSidecar {
        FieldSidecar {
            n_x: self.x_grid.n,
            n_t: self.t_grid.n,
            x0: self.x_grid.x0,
            dx: self.x_grid.dx,
            t0: self.t_grid.x0,
            dt: self.t_grid.dx,
            periodic: self.periodic,
        }
    }

    /// Write interleaved little-endian (re, im) doubles plus a `<path>.json` sidecar.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for z in &self.values {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        w.flush()?;
        let side = sidecar_path(path);
        std::fs::write(side, serde_json::to_string_pretty(&self.sidecar())?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let meta: FieldSidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        let mut r = BufReader::new(File::open(path)?);
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let expected = meta.n_x * meta.n_t * 16;
        if bytes.len() != expected {
            return Err(Error::InvalidGrid(format!("expected {expected} bytes, found {}", bytes.len())));
        }
        let values = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        let x_grid = Grid1d::new(meta.x0, meta.dx, meta.n_x)?;
        let t_grid = Grid1d::new(meta.t0, meta.dt, meta.n_t)?;
        Self::new(x_grid, t_grid, values, meta.periodic)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}
