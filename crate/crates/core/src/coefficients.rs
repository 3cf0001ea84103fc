//! The coefficient a(x): step and sampled representations, admissibility,
//! mollification, the change of variables built from it, and seeded families.

use std::path::Path;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1d;
use crate::quadrature::gauss_legendre;

/// Piecewise constant coefficient; `values[i]` holds on `[x_i, x_{i+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCoefficient {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepCoefficient {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let c = Self { breakpoints, values };
        c.validate()?;
        Ok(c)
    }

    pub fn constant(a: f64) -> Result<Self> {
        Self::new(vec![], vec![a])
    }

    /// Jumps at `breakpoints` between consecutive `values`.
    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.breakpoints.len() + 1 {
            return Err(Error::InvalidCoefficient(format!(
                "{} values for {} breakpoints",
                self.values.len(),
                self.breakpoints.len()
            )));
        }
        if self.breakpoints.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCoefficient("non-finite breakpoint".into()));
        }
        if self.breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidCoefficient("breakpoints must increase strictly".into()));
        }
        if self.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidCoefficient("values must be finite and positive".into()));
        }
        Ok(())
    }

    pub fn n_jumps(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn value_at(&self, x: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= x);
        self.values[k]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// `(hi - lo) / ∫_lo^hi 1/a`.
    pub fn harmonic_average(&self, lo: f64, hi: f64) -> f64 {
        let mut inv = 0.0;
        let mut x = lo;
        let mut k = self.breakpoints.partition_point(|&b| b <= lo);
        while x < hi {
            let end = if k < self.breakpoints.len() { self.breakpoints[k].min(hi) } else { hi };
            inv += (end - x) / self.values[k];
            x = end;
            k += 1;
        }
        (hi - lo) / inv
    }

    /// The coefficient `x ↦ a(x / s)`.
    pub fn rescaled(&self, s: f64) -> Self {
        Self { breakpoints: self.breakpoints.iter().map(|x| x * s).collect(), values: self.values.clone() }
    }

    /// Shortest piece length between consecutive breakpoints (infinite with < 2 jumps).
    pub fn min_piece(&self) -> f64 {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

/// Samples of a(x) on a uniform grid, linearly interpolated and extended constantly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCoefficient {
    pub grid: Grid1d,
    pub values: Vec<f64>,
}

impl SampledCoefficient {
    pub fn new(grid: Grid1d, values: Vec<f64>) -> Result<Self> {
        let c = Self { grid, values };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.n < 2 || self.values.len() != self.grid.n {
            return Err(Error::InvalidCoefficient(format!(
                "{} samples on a grid of {}",
                self.values.len(),
                self.grid.n
            )));
        }
        if self.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidCoefficient("samples must be finite and positive".into()));
        }
        Ok(())
    }

    pub fn value_at(&self, x: f64) -> f64 {
        let s = (x - self.grid.x0) / self.grid.dx;
        if s <= 0.0 {
            return self.values[0];
        }
        let n = self.grid.n;
        if s >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = s.floor() as usize;
        let t = s - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.grid.x0, self.grid.last())
    }
}

/// Either coefficient representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Coefficient {
    Step(StepCoefficient),
    Sampled(SampledCoefficient),
}

impl From<StepCoefficient> for Coefficient {
    fn from(c: StepCoefficient) -> Self {
        Coefficient::Step(c)
    }
}

impl From<SampledCoefficient> for Coefficient {
    fn from(c: SampledCoefficient) -> Self {
        Coefficient::Sampled(c)
    }
}

impl Coefficient {
    pub fn value_at(&self, x: f64) -> f64 {
        match self {
            Coefficient::Step(c) => c.value_at(x),
            Coefficient::Sampled(c) => c.value_at(x),
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            Coefficient::Step(c) => c.min(),
            Coefficient::Sampled(c) => c.min(),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Coefficient::Step(c) => c.max(),
            Coefficient::Sampled(c) => c.max(),
        }
    }

    pub fn total_variation(&self) -> f64 {
        total_variation(self)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Coefficient::Step(c) => c.validate(),
            Coefficient::Sampled(c) => c.validate(),
        }
    }

    pub fn n_jumps(&self) -> usize {
        match self {
            Coefficient::Step(c) => c.n_jumps(),
            Coefficient::Sampled(_) => 0,
        }
    }

    /// Half-point value used by flux discretizations on `[lo, hi]`.
    pub fn cell_value(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Coefficient::Step(c) => c.harmonic_average(lo, hi),
            Coefficient::Sampled(c) => 0.5 * (c.value_at(lo) + c.value_at(hi)),
        }
    }

    /// Short human-readable descriptor for report metadata.
    pub fn describe(&self) -> String {
        match self {
            Coefficient::Step(c) => format!("step[{} jumps, {:.4}..{:.4}]", c.n_jumps(), c.min(), c.max()),
            Coefficient::Sampled(c) => format!("sampled[{} pts, {:.4}..{:.4}]", c.grid.n, c.min(), c.max()),
        }
    }
}

pub fn total_variation(c: &Coefficient) -> f64 {
    match c {
        Coefficient::Step(c) => c.total_variation(),
        Coefficient::Sampled(c) => c.total_variation(),
    }
}

/// On-disk form: the coefficient plus its admissibility bound `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    #[serde(flatten)]
    pub coefficient: Coefficient,
    pub m: f64,
}

impl CoefficientFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: Self = serde_json::from_str(&text)?;
        file.coefficient.validate()?;
        if !(file.m > 0.0) {
            return Err(Error::InvalidCoefficient(format!("m must be positive, got {}", file.m)));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// Observed infimum.
    pub m: f64,
    #[serde(rename = "M")]
    pub sup: f64,
    pub tv: f64,
    pub bv_norm: f64,
    pub admissible: bool,
}

pub fn check_admissible(c: &Coefficient, m: f64) -> AdmissibilityReport {
    let inf = c.min();
    let sup = c.max();
    let tv = c.total_variation();
    AdmissibilityReport { m: inf, sup, tv, bv_norm: sup + tv, admissible: inf >= m && tv.is_finite() }
}

const BUMP_TABLE: usize = 4096;

struct BumpTable {
    norm: f64,
    cdf: Vec<f64>,
}

fn bump_raw(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

fn bump_table() -> &'static BumpTable {
    static TABLE: OnceLock<BumpTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let (z, w) = gauss_legendre(10);
        let h = 2.0 / BUMP_TABLE as f64;
        let mut cdf = vec![0.0; BUMP_TABLE + 1];
        for k in 0..BUMP_TABLE {
            let mid = -1.0 + (k as f64 + 0.5) * h;
            let s: f64 = z.iter().zip(&w).map(|(z, w)| w * bump_raw(mid + 0.5 * h * z)).sum();
            cdf[k + 1] = cdf[k] + 0.5 * h * s;
        }
        let norm = cdf[BUMP_TABLE];
        cdf.iter_mut().for_each(|c| *c /= norm);
        BumpTable { norm, cdf }
    })
}

/// Unit-mass bump `ρ` supported on (-1, 1).
pub fn mollifier(x: f64) -> f64 {
    bump_raw(x) / bump_table().norm
}

/// `∫_{-1}^{u} ρ`.
pub fn mollifier_cdf(u: f64) -> f64 {
    if u <= -1.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let t = bump_table();
    let h = 2.0 / BUMP_TABLE as f64;
    let s = (u + 1.0) / h;
    let k = (s.floor() as usize).min(BUMP_TABLE - 1);
    let th = s - k as f64;
    let (x0, x1) = (-1.0 + k as f64 * h, -1.0 + (k + 1) as f64 * h);
    let (y0, y1) = (t.cdf[k], t.cdf[k + 1]);
    let (d0, d1) = (mollifier(x0) * h, mollifier(x1) * h);
    let th2 = th * th;
    let th3 = th2 * th;
    y0 * (2.0 * th3 - 3.0 * th2 + 1.0)
        + d0 * (th3 - 2.0 * th2 + th)
        + y1 * (-2.0 * th3 + 3.0 * th2)
        + d1 * (th3 - th2)
}

/// Sample `ρ_ε ⋆ a` on a default grid covering every transition with margin.
pub fn mollify(c: &StepCoefficient, epsilon: f64) -> Result<SampledCoefficient> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("mollifier width must be positive, got {epsilon}")));
    }
    let (lo, hi) = match (c.breakpoints.first(), c.breakpoints.last()) {
        (Some(&a), Some(&b)) => (a - 1.0 - 2.0 * epsilon, b + 1.0 + 2.0 * epsilon),
        _ => (-1.0, 1.0),
    };
    let h = epsilon / 16.0;
    let n = ((hi - lo) / h).ceil() as usize + 1;
    mollify_on(c, epsilon, Grid1d::new(lo, h, n)?)
}

/// Sample `ρ_ε ⋆ a` on a caller-supplied grid.
pub fn mollify_on(c: &StepCoefficient, epsilon: f64, grid: Grid1d) -> Result<SampledCoefficient> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("mollifier width must be positive, got {epsilon}")));
    }
    if epsilon < grid.dx {
        return Err(Error::UnderResolved(format!(
            "mollifier width {epsilon} is below the grid step {}",
            grid.dx
        )));
    }
    let values = (0..grid.n)
        .map(|i| {
            let x = grid.x(i);
            let mut v = c.values[0];
            for (k, &xb) in c.breakpoints.iter().enumerate() {
                v += (c.values[k + 1] - c.values[k]) * mollifier_cdf((x - xb) / epsilon);
            }
            v
        })
        .collect();
    SampledCoefficient::new(grid, values)
}

/// Change of variables `y = ∫_0^x ω` and its inverse `x = φ(y)`.
#[derive(Debug, Clone)]
pub struct Diffeomorphism {
    pub x_grid: Grid1d,
    pub omega: Vec<f64>,
    /// `φ⁻¹` sampled on `x_grid`.
    pub forward: Vec<f64>,
    /// Uniform grid in y spanning the image of `x_grid`.
    pub y_grid: Grid1d,
    /// `φ` sampled on `y_grid`.
    pub inverse: Vec<f64>,
    /// Range of `dx/dy = 1/ω`.
    pub jacobian_bounds: [f64; 2],
}

impl Diffeomorphism {
    /// `y = φ⁻¹(x)`, exact for the piecewise-linear interpolant of ω.
    pub fn phi_inv(&self, x: f64) -> f64 {
        let g = &self.x_grid;
        let s = ((x - g.x0) / g.dx).clamp(0.0, (g.n - 1) as f64);
        let i = (s.floor() as usize).min(g.n - 2);
        let d = x - g.x(i);
        let slope = (self.omega[i + 1] - self.omega[i]) / g.dx;
        self.forward[i] + self.omega[i] * d + 0.5 * slope * d * d
    }

    /// `x = φ(y)`, inverting the quadratic on the containing cell.
    pub fn phi(&self, y: f64) -> f64 {
        let g = &self.x_grid;
        let i = self.forward.partition_point(|&v| v <= y).clamp(1, g.n - 1) - 1;
        let delta = y - self.forward[i];
        let w0 = self.omega[i];
        let slope = (self.omega[i + 1] - w0) / g.dx;
        let disc = (w0 * w0 + 2.0 * slope * delta).max(0.0);
        g.x(i) + 2.0 * delta / (w0 + disc.sqrt())
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.forward[0], self.forward[self.forward.len() - 1])
    }
}

pub fn build_diffeomorphism(omega: &SampledCoefficient) -> Result<Diffeomorphism> {
    if omega.values.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidCoefficient("ω must be positive".into()));
    }
    let g = omega.grid;
    let mut forward = vec![0.0; g.n];
    for i in 1..g.n {
        forward[i] = forward[i - 1] + 0.5 * g.dx * (omega.values[i - 1] + omega.values[i]);
    }
    let mut d = Diffeomorphism {
        x_grid: g,
        omega: omega.values.clone(),
        forward,
        y_grid: g,
        inverse: vec![],
        jacobian_bounds: [1.0 / omega.max(), 1.0 / omega.min()],
    };
    if g.x0 <= 0.0 && g.last() >= 0.0 {
        let origin = d.phi_inv(0.0);
        d.forward.iter_mut().for_each(|y| *y -= origin);
    }
    let (y_lo, y_hi) = d.y_range();
    d.y_grid = Grid1d::spanning(y_lo, y_hi, g.n)?;
    d.inverse = (0..g.n).map(|i| d.phi(d.y_grid.x(i))).collect();
    Ok(d)
}

/// Seeded step coefficient with `n_jumps` jumps on `[0, 16]`, TV `bv_target` and infimum `m`.
pub fn step_family_fixed_bv(n_jumps: usize, bv_target: f64, m: f64, seed: u64) -> Result<StepCoefficient> {
    step_family_on(n_jumps, bv_target, m, seed, 0.0, 16.0)
}

/// As [`step_family_fixed_bv`] with jumps placed in `[lo, hi]`.
pub fn step_family_on(n_jumps: usize, bv_target: f64, m: f64, seed: u64, lo: f64, hi: f64) -> Result<StepCoefficient> {
    if n_jumps == 0 {
        return Err(Error::InvalidParameter("need at least one jump".into()));
    }
    if !(bv_target > 0.0 && bv_target.is_finite()) {
        return Err(Error::InvalidParameter(format!("infeasible total variation {bv_target}")));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("infeasible lower bound {m}")));
    }
    if !(hi > lo) {
        return Err(Error::InvalidParameter("empty placement interval".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_jumps as f64;
    let breakpoints: Vec<f64> = (0..n_jumps)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5 + 0.25 * (2.0 * rng.gen::<f64>() - 1.0)) / n)
        .collect();
    let weights: Vec<f64> = (0..n_jumps).map(|_| 0.5 + rng.gen::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let mut path = vec![0.0; n_jumps + 1];
    for i in 0..n_jumps {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        path[i + 1] = path[i] + sign * weights[i] / total;
    }
    let pmin = path.iter().copied().fold(f64::INFINITY, f64::min);
    let mut values: Vec<f64> = path.iter().map(|p| m + bv_target * (p - pmin)).collect();
    let tv: f64 = values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let fix = bv_target / tv;
    for v in values.iter_mut() {
        *v = m + (*v - m) * fix;
    }
    StepCoefficient::new(breakpoints, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_cdf_is_consistent() {
        assert!((mollifier_cdf(0.0) - 0.5).abs() < 1e-13);
        assert!((mollifier_cdf(1.0) - 1.0).abs() < 1e-15);
        let u = 0.37;
        let h = 1e-5;
        let d = (mollifier_cdf(u + h) - mollifier_cdf(u - h)) / (2.0 * h);
        assert!((d - mollifier(u)).abs() < 1e-7);
    }

    #[test]
    fn harmonic_average_across_jump() {
        let c = StepCoefficient::new(vec![0.0], vec![1.0, 4.0]).unwrap();
        let v = c.harmonic_average(-0.5, 0.5);
        assert!((v - 1.0 / (0.5 + 0.125)).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_steps() {
        assert!(StepCoefficient::new(vec![1.0, 0.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(StepCoefficient::new(vec![0.0], vec![1.0, -2.0]).is_err());
        assert!(StepCoefficient::new(vec![0.0], vec![1.0]).is_err());
    }
}
