//! Heat semigroup `e^{-tL}` for `L = -∂ₓ a ∂ₓ`, Gaussian bound fits for its kernel,
//! and the Littlewood-Paley localization `Δ^A_j = 4^{-j} L e^{-4^{-j} L}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{DivergenceOperator, ImplicitStepper, OperatorEigen};
use crate::fourier::apply_multiplier;
use crate::grid::{Grid1d, GridFunction};
use crate::norms::LittlewoodPaleyBank;
use crate::quadrature::linear_fit;

/// Largest grid for the dense kernel matrix and the eigen path.
pub const KERNEL_LIMIT: usize = 2048;

/// Time steps of the stepping path (two implicit Euler half steps, then Crank-Nicolson).
pub const HEAT_STEPS: usize = 1024;

/// Spectral calculus of one operator, dense when small enough.
pub struct HeatCalculus<'a> {
    op: &'a DivergenceOperator,
    eigen: Option<OperatorEigen>,
}

impl<'a> HeatCalculus<'a> {
    pub fn new(op: &'a DivergenceOperator) -> Result<Self> {
        let eigen = if op.n() <= KERNEL_LIMIT { Some(OperatorEigen::new(op, KERNEL_LIMIT)?) } else { None };
        Ok(Self { op, eigen })
    }

    /// Force the time-stepping path.
    pub fn stepping(op: &'a DivergenceOperator) -> Self {
        Self { op, eigen: None }
    }

    pub fn op(&self) -> &DivergenceOperator {
        self.op
    }

    fn heat_real(&self, f: &[f64], t: f64) -> Result<Vec<f64>> {
        if let Some(e) = &self.eigen {
            let c: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            return Ok(e.apply_function(&c, |l| Complex64::new((-t * l).exp(), 0.0)).iter().map(|z| z.re).collect());
        }
        let dt = t / HEAT_STEPS as f64;
        let half = ImplicitStepper::new(self.op, 0.5 * dt)?;
        let cn = ImplicitStepper::new(self.op, 0.5 * dt)?;
        let mut u = f.to_vec();
        half.solve(&mut u);
        half.solve(&mut u);
        for _ in 1..HEAT_STEPS {
            let lu = self.op.apply_real(&u);
            for i in 0..u.len() {
                u[i] -= 0.5 * dt * lu[i];
            }
            cn.solve(&mut u);
        }
        Ok(u)
    }

    /// `e^{-tL} f`.
    pub fn heat(&self, f: &GridFunction, t: f64) -> Result<GridFunction> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("heat time must be positive, got {t}")));
        }
        let re: Vec<f64> = f.values.iter().map(|z| z.re).collect();
        let im: Vec<f64> = f.values.iter().map(|z| z.im).collect();
        let (re, im) = (self.heat_real(&re, t)?, self.heat_real(&im, t)?);
        Ok(f.with_values(re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect()))
    }

    /// `Δ^A_j f = 4^{-j} L e^{-4^{-j} L} f`.
    pub fn lp_project(&self, f: &GridFunction, j: i32) -> Result<GridFunction> {
        let s = 4f64.powi(-j);
        if let Some(e) = &self.eigen {
            return Ok(f.with_values(e.apply_function(&f.values, |l| Complex64::new(s * l * (-s * l).exp(), 0.0))));
        }
        let h = self.heat(f, s)?;
        Ok(f.with_values(self.op.apply(&h.values).into_iter().map(|z| z * s).collect()))
    }
}

pub fn heat_apply(op: &DivergenceOperator, f: &GridFunction, t: f64) -> Result<GridFunction> {
    HeatCalculus::new(op)?.heat(f, t)
}

pub fn lp_a_project(op: &DivergenceOperator, f: &GridFunction, j: i32) -> Result<GridFunction> {
    HeatCalculus::new(op)?.lp_project(f, j)
}

/// Bound shapes `|K| ≲ t^{-1/2}`, `|∂K| ≲ t^{-1}`, `|AK| ≲ t^{-3/2}` (times a Gaussian).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelShape {
    Value,
    Gradient,
    Generator,
}

impl KernelShape {
    pub fn power(&self) -> f64 {
        match self {
            KernelShape::Value => 0.5,
            KernelShape::Gradient => 1.0,
            KernelShape::Generator => 1.5,
        }
    }

    pub fn all() -> [KernelShape; 3] {
        [KernelShape::Value, KernelShape::Gradient, KernelShape::Generator]
    }
}

#[derive(Debug, Clone)]
pub struct HeatKernelMatrix {
    pub t: f64,
    pub grid: Grid1d,
    pub shape: KernelShape,
    /// `matrix[(i, j)] ≈ K(x_i, y_j, t)` (or its derivative/generator image).
    pub matrix: DMatrix<f64>,
}

impl HeatKernelMatrix {
    pub fn symmetry_defect(&self) -> f64 {
        let m = &self.matrix;
        let n = m.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        worst
    }

    /// `h Σ_j K(x_i, y_j)`.
    pub fn row_mass(&self, i: usize) -> f64 {
        self.matrix.row(i).sum() * self.grid.dx
    }
}

fn kernel_dense(eig: &OperatorEigen, h: f64, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let v = &eig.eigen.vectors;
    let n = v.nrows();
    let scaled = DMatrix::from_fn(n, n, |i, k| v[(i, k)] * f(eig.eigen.values[k]));
    (scaled * v.transpose()) / h
}

pub fn kernel_matrix(op: &DivergenceOperator, t: f64) -> Result<HeatKernelMatrix> {
    kernel_shape_matrix(op, t, KernelShape::Value)
}

/// Kernel, `|∂ₓK| + |∂_yK|` (central differences) or `L K`.
pub fn kernel_shape_matrix(op: &DivergenceOperator, t: f64, shape: KernelShape) -> Result<HeatKernelMatrix> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("heat time must be positive, got {t}")));
    }
    let eig = OperatorEigen::new(op, KERNEL_LIMIT)?;
    let h = op.grid.dx;
    let matrix = match shape {
        KernelShape::Value => kernel_dense(&eig, h, |l| (-t * l).exp()),
        KernelShape::Generator => kernel_dense(&eig, h, |l| l * (-t * l).exp()),
        KernelShape::Gradient => {
            let k = kernel_dense(&eig, h, |l| (-t * l).exp());
            let n = k.nrows();
            let d = |a: f64, b: f64, span: f64| (b - a) / span;
            DMatrix::from_fn(n, n, |i, j| {
                let (i0, i1) = (i.saturating_sub(1), (i + 1).min(n - 1));
                let (j0, j1) = (j.saturating_sub(1), (j + 1).min(n - 1));
                let dx = d(k[(i0, j)], k[(i1, j)], (i1 - i0) as f64 * h);
                let dy = d(k[(i, j0)], k[(i, j1)], (j1 - j0) as f64 * h);
                dx.abs() + dy.abs()
            })
        }
    };
    Ok(HeatKernelMatrix { t, grid: op.grid, shape, matrix })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub t: f64,
    pub power: f64,
    pub c_big: f64,
    pub c_small: f64,
    /// Largest `log|K| - log(model)` over the fitted window.
    pub residual: f64,
}

impl GaussianFit {
    /// Registered convention: positive rate and the fitted constant within a factor 10 of every sample.
    pub fn holds(&self) -> bool {
        self.c_small > 0.0 && self.residual < 10f64.ln()
    }
}

/// Least squares of the log-envelope of `|K|` against `r²/t` over `r ≤ 6√t`,
/// using rows and columns at least `6√t` away from the box edges.
pub fn gaussian_fit(k: &HeatKernelMatrix) -> Result<GaussianFit> {
    let t = k.t;
    let g = k.grid;
    let h = g.dx;
    let reach = 6.0 * t.sqrt();
    let margin = ((reach / h).ceil() as usize) + 2;
    let n = g.n;
    if 2 * margin >= n {
        return Err(Error::BoxTooSmall(format!("kernel window 6√t = {reach} does not fit the grid")));
    }
    let kmax = k.matrix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-14 * kmax.max(1e-300);
    let max_off = (reach / h).floor() as usize;
    let mut envelope = vec![0.0f64; max_off + 1];
    for i in margin..n - margin {
        for d in 0..=max_off {
            for j in [i.wrapping_sub(d), i + d] {
                if j < n {
                    envelope[d] = envelope[d].max(k.matrix[(i, j)].abs());
                }
            }
        }
    }
    let (mut xs, mut ys) = (vec![], vec![]);
    for (d, &e) in envelope.iter().enumerate() {
        if e > floor {
            let r = d as f64 * h;
            xs.push(r * r / t);
            ys.push(e.ln() + k.shape.power() * t.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::DegenerateFit("kernel below the floor on the fit window".into()));
    }
    let (slope, intercept) = linear_fit(&xs, &ys);
    let c_big = intercept.exp();
    let c_small = -slope;
    let residual = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).fold(f64::NEG_INFINITY, f64::max);
    Ok(GaussianFit { t, power: k.shape.power(), c_big, c_small, residual })
}

/// Slope of `log K(x, y)` against `(x - y)²/t` along column `y`, on one side up to `6√t`.
pub fn tail_slope(k: &HeatKernelMatrix, y: f64, towards_right: bool) -> f64 {
    let g = k.grid;
    let j = g.nearest(y);
    let reach = ((6.0 * k.t.sqrt()) / g.dx) as usize;
    let (mut xs, mut ys) = (vec![], vec![]);
    for d in 1..=reach {
        let i = if towards_right { j + d } else { j.wrapping_sub(d) };
        if i >= g.n {
            break;
        }
        let v = k.matrix[(i, j)];
        if v > 0.0 {
            let r = d as f64 * g.dx;
            xs.push(r * r / k.t);
            ys.push(v.ln());
        }
    }
    linear_fit(&xs, &ys).0
}

/// Fourier-band probes: band `k` projections of modulated Gaussians at the given centres.
pub fn band_probes(grid: Grid1d, k: i32, centers: &[f64], bank: &LittlewoodPaleyBank) -> Vec<GridFunction> {
    let xi = 1.5 * 2f64.powi(k);
    centers
        .iter()
        .map(|&c| {
            let width = 4.0 / xi;
            let raw = GridFunction::from_fn(grid, false, |x| {
                Complex64::new(0.0, xi * x).exp() * (-(x - c).powi(2) / (2.0 * width * width)).exp()
            });
            apply_multiplier(&raw, |z| Complex64::new(bank.band(k, z), 0.0))
        })
        .collect()
}

/// `max_probe ‖Δ^A_j Δ_k f‖_p / ‖f‖_p`.
pub fn offdiagonal_decay(
    calc: &HeatCalculus,
    bank: &LittlewoodPaleyBank,
    j: i32,
    k: i32,
    p: f64,
    probes: &[GridFunction],
) -> Result<f64> {
    let ratios: Vec<f64> = probes
        .par_iter()
        .map(|f| {
            let banded = apply_multiplier(f, |z| Complex64::new(bank.band(k, z), 0.0));
            let out = calc.lp_project(&banded, j)?;
            Ok(out.norm_lp(p) / f.norm_lp(p))
        })
        .collect::<Result<_>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{Coefficient, StepCoefficient};
    use crate::evolution::{build_divergence_operator, Boundary};

    #[test]
    fn stepping_and_eigen_paths_agree() {
        let a = Coefficient::Step(StepCoefficient::new(vec![0.0], vec![1.0, 4.0]).unwrap());
        let g = Grid1d::spanning(-6.0, 6.0, 400).unwrap();
        let op = build_divergence_operator(&a, g, Boundary::Dirichlet).unwrap();
        let f = GridFunction::from_real(g, false, |x| (-(x - 0.3).powi(2)).exp());
        let e = HeatCalculus::new(&op).unwrap().heat(&f, 0.2).unwrap();
        let s = HeatCalculus::stepping(&op).heat(&f, 0.2).unwrap();
        assert!(e.sub(&s).norm_inf() < 1e-6);
    }
}
