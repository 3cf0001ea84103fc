//! Banded solvers and a dense symmetric eigen wrapper.

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Tridiagonal matrix: `lower[i]` couples row i+1 to i, `upper[i]` couples row i to i+1.
#[derive(Debug, Clone)]
pub struct Tridiagonal<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let n = self.n();
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s = s + self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s = s + self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }
}

/// Reusable LU factors of a tridiagonal matrix (no pivoting).
#[derive(Debug, Clone)]
pub struct ThomasFactor<T> {
    lower: Vec<T>,
    inv_pivot: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> ThomasFactor<T> {
    pub fn new(m: &Tridiagonal<T>) -> Result<Self> {
        let n = m.n();
        let mut inv_pivot = vec![T::zero(); n];
        let mut d = m.diag[0];
        for i in 0..n {
            if i > 0 {
                d = m.diag[i] - m.lower[i - 1] * m.upper[i - 1] * inv_pivot[i - 1];
            }
            if d.modulus() < 1e-300 {
                return Err(Error::Singular);
            }
            inv_pivot[i] = T::one() / d;
        }
        Ok(Self { lower: m.lower.clone(), inv_pivot, upper: m.upper.clone() })
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.inv_pivot.len();
        for i in 1..n {
            b[i] = b[i] - self.lower[i - 1] * self.inv_pivot[i - 1] * b[i - 1];
        }
        b[n - 1] = b[n - 1] * self.inv_pivot[n - 1];
        for i in (0..n - 1).rev() {
            b[i] = (b[i] - self.upper[i] * b[i + 1]) * self.inv_pivot[i];
        }
    }
}

/// Factors of a cyclic tridiagonal matrix with corner entries, solved by Sherman-Morrison.
#[derive(Debug, Clone)]
pub struct CyclicFactor<T> {
    inner: ThomasFactor<T>,
    z: Vec<T>,
    gamma: T,
    top: T,
    denom: T,
}

impl<T: Scalar> CyclicFactor<T> {
    /// `top` sits at (0, n-1), `bottom` at (n-1, 0).
    pub fn new(m: &Tridiagonal<T>, top: T, bottom: T) -> Result<Self> {
        let n = m.n();
        let gamma = -m.diag[0];
        let mut modified = m.clone();
        modified.diag[0] = m.diag[0] - gamma;
        modified.diag[n - 1] = m.diag[n - 1] - top * bottom / gamma;
        let inner = ThomasFactor::new(&modified)?;
        let mut z = vec![T::zero(); n];
        z[0] = gamma;
        z[n - 1] = bottom;
        inner.solve_in_place(&mut z);
        let denom = T::one() + z[0] + top * z[n - 1] / gamma;
        if denom.modulus() < 1e-300 {
            return Err(Error::Singular);
        }
        Ok(Self { inner, z, gamma, top, denom })
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = b.len();
        self.inner.solve_in_place(b);
        let fac = (b[0] + self.top * b[n - 1] / self.gamma) / self.denom;
        for (bi, zi) in b.iter_mut().zip(&self.z) {
            *bi = *bi - fac * *zi;
        }
    }
}

/// Tridiagonal solve with partial pivoting (fill-in on a second superdiagonal).
pub fn solve_tridiagonal_pivoted(m: &Tridiagonal<Complex64>, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = m.n();
    let zero = Complex64::new(0.0, 0.0);
    let mut dl = m.lower.clone();
    let mut d = m.diag.clone();
    let mut du = m.upper.clone();
    let mut du2 = vec![zero; n.saturating_sub(2)];
    let mut b = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        if d[i].norm() >= dl[i].norm() {
            if d[i].norm() == 0.0 {
                return Err(Error::Singular);
            }
            let f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            let bi = b[i];
            b[i + 1] -= f * bi;
            dl[i] = zero;
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            du[i] = tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du2[i];
            }
            b.swap(i, i + 1);
            let bi = b[i];
            b[i + 1] -= f * bi;
        }
    }
    if d[n - 1].norm() == 0.0 {
        return Err(Error::Singular);
    }
    let mut x = vec![zero; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        if i + 1 < n {
            s -= du[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= du2[i] * x[i + 2];
        }
        x[i] = s / d[i];
    }
    Ok(x)
}

/// Dense complex solve with partial pivoting.
pub fn solve_dense(a: DMatrix<Complex64>, b: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let n = b.len();
    let rhs = nalgebra::DVector::from_vec(b);
    let sol = a.lu().solve(&rhs).ok_or(Error::Singular)?;
    Ok((0..n).map(|i| sol[i]).collect())
}

/// Eigenpairs of a real symmetric tridiagonal (optionally cyclic) matrix, ascending.
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Column-major eigenvectors: `vectors[(i, k)]` is component i of mode k.
    pub vectors: DMatrix<f64>,
}

pub fn symmetric_eigen(dense: DMatrix<f64>) -> SymmetricEigen {
    let eig = dense.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    SymmetricEigen { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Tridiagonal<Complex64> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        Tridiagonal {
            lower: vec![c(1.0, 0.5), c(-2.0, 0.0), c(0.3, 1.0)],
            diag: vec![c(0.1, 0.0), c(4.0, 1.0), c(0.0, 0.2), c(3.0, -1.0)],
            upper: vec![c(2.0, 0.0), c(1.0, -1.0), c(0.5, 0.5)],
        }
    }

    #[test]
    fn pivoted_solver_inverts_matvec() {
        let m = sample();
        let x: Vec<Complex64> = (0..4).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let b = m.matvec(&x);
        let y = solve_tridiagonal_pivoted(&m, &b).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn cyclic_solver_matches_dense() {
        let n = 7;
        let m = Tridiagonal {
            lower: vec![-1.0; n - 1],
            diag: vec![3.0; n],
            upper: vec![-1.0; n - 1],
        };
        let f = CyclicFactor::new(&m, -1.0, -1.0).unwrap();
        let mut b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let orig = b.clone();
        f.solve_in_place(&mut b);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            dense[(i, i)] = 3.0;
            dense[(i, (i + 1) % n)] = -1.0;
            dense[((i + 1) % n, i)] = -1.0;
        }
        let r = &dense * nalgebra::DVector::from_vec(b);
        for i in 0..n {
            assert!((r[i] - orig[i]).abs() < 1e-12);
        }
    }
}
