//! Small dense linear algebra: row-major matrices over `f64` and `Complex64`,
//! a complex Jacobi eigensolver for Hermitian matrices, inversion and the
//! matrix exponential.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{Num, NumAssign};

use crate::error::{Error, Result};
use crate::math;

/// Field scalars the matrix routines are generic over.
pub trait Scalar:
    Copy + Num + NumAssign + Neg<Output = Self> + Debug + PartialEq + Send + Sync + 'static
{
    fn modulus(self) -> f64;
    fn conjugate(self) -> Self;
    fn from_real(x: f64) -> Self;
    fn is_finite_value(self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn modulus(self) -> f64 {
        math::abs(self)
    }
    #[inline]
    fn conjugate(self) -> Self {
        self
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn conjugate(self) -> Self {
        self.conj()
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type RMatrix = Matrix<f64>;
pub type CMatrix = Matrix<Complex64>;

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diagonal(values: &[T]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conjugate())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == T::zero() {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "mul_vec shape");
        let mut out = vec![T::zero(); self.rows];
        self.mul_vec_into(v, &mut out);
        out
    }

    /// Writes `self * v` into `out` without allocating.
    #[inline]
    pub fn mul_vec_into(&self, v: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = T::zero();
            for (&a, &b) in row.iter().zip(v) {
                acc += a * b;
            }
            *o = acc;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|x| x.modulus() * x.modulus()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| f64::max(m, x.modulus()))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> T {
        let mut t = T::zero();
        for i in 0..self.rows.min(self.cols) {
            t += self[(i, i)];
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite_value())
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                context: "matrix inverse",
                expected: self.rows,
                got: self.cols,
            });
        }
        let n = self.rows;
        let scale = self.max_abs();
        if scale == 0.0 || !self.is_finite() {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r, &s| {
                    a[(r, col)]
                        .modulus()
                        .partial_cmp(&a[(s, col)].modulus())
                        .unwrap_or(core::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            let pivot = a[(pivot_row, col)];
            if pivot.modulus() <= 1e-300 || pivot.modulus() <= scale * f64::EPSILON * 1e-3 {
                return Err(Error::IllConditioned(f64::INFINITY));
            }
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                inv.swap_rows(pivot_row, col);
            }
            let pinv = T::one() / pivot;
            for j in 0..n {
                a[(col, j)] *= pinv;
                inv[(col, j)] *= pinv;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let av = a[(col, j)];
                    let iv = inv[(col, j)];
                    a[(r, j)] -= f * av;
                    inv[(r, j)] -= f * iv;
                }
            }
        }
        Ok(inv)
    }

    /// One-norm condition number estimate `‖A‖₁‖A⁻¹‖₁`.
    pub fn condition_number(&self) -> f64 {
        match self.inverse() {
            Ok(inv) => self.norm1() * inv.norm1(),
            Err(_) => f64::INFINITY,
        }
    }

    fn swap_rows(&mut self, r: usize, s: usize) {
        for j in 0..self.cols {
            self.data.swap(r * self.cols + j, s * self.cols + j);
        }
    }
}

impl RMatrix {
    pub fn to_complex(&self) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    /// Symmetric part `½(A + Aᵀ)`.
    pub fn symmetric_part(&self) -> RMatrix {
        RMatrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// Antisymmetric part `½(A − Aᵀ)`.
    pub fn antisymmetric_part(&self) -> RMatrix {
        RMatrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] - self[(j, i)]))
    }
}

impl CMatrix {
    pub fn real_part(&self) -> RMatrix {
        RMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.re).collect(),
        }
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Hermitian part `½(A + Aᴴ)`.
    pub fn hermitian_part(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)].conj()))
    }

    /// Anti-Hermitian part `½(A − Aᴴ)`.
    pub fn antihermitian_part(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] - self[(j, i)].conj()))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.matmul(rhs)
    }
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// unitary matrix whose columns are the corresponding eigenvectors.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

const MAX_JACOBI_SWEEPS: usize = 100;

/// Cyclic complex Jacobi iteration on the Hermitian part of `a`.
pub fn hermitian_eigen(a: &CMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "hermitian eigenproblem",
            expected: a.rows(),
            got: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument("non-finite matrix in eigenproblem".into()));
    }
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm();
    let mut sweep = 0;
    loop {
        if scale == 0.0 || n <= 1 {
            break;
        }
        if sweep >= MAX_JACOBI_SWEEPS {
            return Err(Error::NoConvergence(MAX_JACOBI_SWEEPS));
        }
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += m[(p, q)].norm_sqr();
                }
            }
        }
        if math::sqrt(off) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = m[(p, q)];
                let bn = b.norm();
                if bn == 0.0 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                if sweep > 3
                    && math::abs(app) + 100.0 * bn == math::abs(app)
                    && math::abs(aqq) + 100.0 * bn == math::abs(aqq)
                {
                    m[(p, q)] = Complex64::new(0.0, 0.0);
                    m[(q, p)] = Complex64::new(0.0, 0.0);
                    continue;
                }
                let phase_conj = (b / bn).conj();
                let theta = (aqq - app) / (2.0 * bn);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + math::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                let g_pp = Complex64::new(c, 0.0);
                let g_pq = Complex64::new(s, 0.0);
                let g_qp = -phase_conj * s;
                let g_qq = phase_conj * c;
                // M <- M G
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * g_pp + miq * g_qp;
                    m[(i, q)] = mip * g_pq + miq * g_qq;
                }
                // M <- Gᴴ M
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = g_pp.conj() * mpj + g_qp.conj() * mqj;
                    m[(q, j)] = g_pq.conj() * mpj + g_qq.conj() * mqj;
                }
                m[(p, q)] = Complex64::new(0.0, 0.0);
                m[(q, p)] = Complex64::new(0.0, 0.0);
                m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * g_pp + viq * g_qp;
                    v[(i, q)] = vip * g_pq + viq * g_qq;
                }
            }
        }
        sweep += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(i, i)]
            .re
            .partial_cmp(&m[(j, j)].re)
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// Eigen-decomposition of a real symmetric matrix (via the complex routine).
pub fn symmetric_eigen(a: &RMatrix) -> Result<(Vec<f64>, RMatrix)> {
    let eig = hermitian_eigen(&a.to_complex())?;
    Ok((eig.values, eig.vectors.real_part()))
}

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> Result<f64> {
    let gram = a.adjoint().matmul(a);
    let eig = hermitian_eigen(&gram)?;
    Ok(math::sqrt(eig.values.last().copied().unwrap_or(0.0).max(0.0)))
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &CMatrix) -> CMatrix {
    assert!(a.is_square(), "expm requires a square matrix");
    let n = a.rows();
    let norm = a.norm1();
    let mut squarings = 0u32;
    let mut scaled_norm = norm;
    while scaled_norm > 0.25 && squarings < 200 {
        scaled_norm *= 0.5;
        squarings += 1;
    }
    let x = a.scale(Complex64::new(math::powf(2.0, -(squarings as f64)), 0.0));
    let mut sum = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..=40 {
        term = term.matmul(&x).scale(Complex64::new(1.0 / k as f64, 0.0));
        sum = &sum + &term;
        if term.norm1() <= 1e-20 * sum.norm1() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

/// Inner product `uᴴ v`.
pub fn dot_h(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inverse_of_known_matrix() {
        let a = RMatrix::from_vec(2, 2, vec![4.0, 7.0, 2.0, 6.0]);
        let inv = a.inverse().unwrap();
        let expected = [0.6, -0.7, -0.2, 0.4];
        for (x, e) in inv.as_slice().iter().zip(expected) {
            assert!((x - e).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = RMatrix::from_vec(2, 2, vec![1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(a.inverse(), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let a = CMatrix::from_vec(
            3,
            3,
            vec![
                c(2.0, 0.0),
                c(1.0, 1.0),
                c(0.0, -0.5),
                c(1.0, -1.0),
                c(3.0, 0.0),
                c(0.25, 0.0),
                c(0.0, 0.5),
                c(0.25, 0.0),
                c(-1.0, 0.0),
            ],
        );
        let eig = hermitian_eigen(&a).unwrap();
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let lam = CMatrix::diagonal(&eig.values.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
        let rebuilt = eig.vectors.matmul(&lam).matmul(&eig.vectors.adjoint());
        assert!((&rebuilt - &a).max_abs() < 1e-13);
        let gram = eig.vectors.adjoint().matmul(&eig.vectors);
        assert!((&gram - &CMatrix::identity(3)).max_abs() < 1e-13);
    }

    #[test]
    fn eigen_of_pauli_x() {
        let a = RMatrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let (vals, _) = symmetric_eigen(&a).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-15);
        assert!((vals[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_eigenvalues() {
        let a = CMatrix::identity(4).scale(c(2.5, 0.0));
        let eig = hermitian_eigen(&a).unwrap();
        assert!(eig.values.iter().all(|&x| (x - 2.5).abs() < 1e-15));
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp(-i t σx) = cos t I - i sin t σx
        let t = 0.7_f64;
        let a = CMatrix::from_vec(2, 2, vec![c(0.0, 0.0), c(0.0, -t), c(0.0, -t), c(0.0, 0.0)]);
        let e = expm(&a);
        assert!((e[(0, 0)] - c(t.cos(), 0.0)).norm() < 1e-15);
        assert!((e[(0, 1)] - c(0.0, -t.sin())).norm() < 1e-15);
    }

    #[test]
    fn expm_of_large_diagonal() {
        let a = CMatrix::diagonal(&[c(-30.0, 5.0), c(2.0, -100.0)]);
        let e = expm(&a);
        let e0 = c(-30.0, 5.0).exp();
        let e1 = c(2.0, -100.0).exp();
        assert!((e[(0, 0)] - e0).norm() <= 1e-12 * e0.norm());
        assert!((e[(1, 1)] - e1).norm() <= 1e-12 * e1.norm());
        assert!(e[(0, 1)].norm() < 1e-300);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = CMatrix::diagonal(&[c(3.0, 4.0), c(1.0, 0.0)]);
        assert!((spectral_norm(&a).unwrap() - 5.0).abs() < 1e-13);
    }
}
