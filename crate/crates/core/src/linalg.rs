//! Small dense linear algebra.
//!
//! The matrices in this crate are tiny (tens of rows), so storage is a
//! row-major `Vec` with straightforward products. Decompositions go through
//! nalgebra in double precision.

use core::ops::{Add, Index, IndexMut, Mul};

use nalgebra::{Cholesky, DMatrix, SymmetricEigen, QR, SVD};
use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::{norm_sqr, Real};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

pub type CMatrix<T> = Matrix<Complex<T>>;

impl<E: Copy + Zero> Matrix<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![E::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data. Panics on a length mismatch.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<E>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length");
        Self { rows, cols, data }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<E>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<E> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Concatenates columns of `self` and `other`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        })
    }

    pub fn map<F: Copy + Zero>(&self, f: impl Fn(E) -> F) -> Matrix<F> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&e| f(e)).collect(),
        }
    }
}

impl<E: Copy + Zero + Add<Output = E> + Mul<Output = E>> Matrix<E> {
    /// Matrix product. Panics on inner-dimension mismatch.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul inner dimension");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                let rrow = rhs.row(k);
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[E]) -> Vec<E> {
        assert_eq!(self.cols, v.len(), "matvec dimension");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(E::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }
}

impl<E> Index<(usize, usize)> for Matrix<E> {
    type Output = E;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &E {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<E> IndexMut<(usize, usize)> for Matrix<E> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Matrix<T> {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|e| e * s)
    }

    pub fn frobenius_sqr(&self) -> T {
        self.data.iter().map(|&e| e * e).sum()
    }
}

impl<T: Real> Matrix<Complex<T>> {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::zero()
            }
        })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|e| e * s)
    }

    pub fn frobenius_sqr(&self) -> T {
        self.data.iter().map(|&e| norm_sqr(e)).sum()
    }

    /// `diag(d) * self`.
    pub fn scale_rows(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.rows, "row scaling length");
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * d[i])
    }

    /// `self * diag(d)`.
    pub fn scale_cols(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.cols, "column scaling length");
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * d[j])
    }
}

fn to_na<T: Real>(a: &Matrix<T>) -> DMatrix<f64> {
    DMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)].as_f64())
}

fn to_na_complex<T: Real>(a: &CMatrix<T>) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(a.rows(), a.cols(), |i, j| {
        let z = a[(i, j)];
        Complex::new(z.re.as_f64(), z.im.as_f64())
    })
}

fn from_na_complex<T: Real>(a: &DMatrix<Complex<f64>>) -> CMatrix<T> {
    Matrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        let z = a[(i, j)];
        Complex::new(T::lit(z.re), T::lit(z.im))
    })
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    order
}

/// Eigen-decomposition of a real symmetric matrix.
///
/// Returns eigenvalues in descending order and the matching orthonormal
/// eigenvectors as matrix columns.
pub fn symmetric_eigen<T: Real>(a: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    assert_eq!(a.rows(), a.cols(), "symmetric_eigen needs a square matrix");
    let eig = SymmetricEigen::new(to_na(a));
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = descending(&vals);
    let values = order.iter().map(|&i| T::lit(vals[i])).collect();
    let vectors = Matrix::from_fn(a.rows(), a.rows(), |i, j| T::lit(eig.eigenvectors[(i, order[j])]));
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues<T: Real>(a: &CMatrix<T>) -> Vec<T> {
    let vals: Vec<f64> = SymmetricEigen::new(to_na_complex(a)).eigenvalues.iter().copied().collect();
    descending(&vals).into_iter().map(|i| T::lit(vals[i])).collect()
}

/// Singular values, descending.
pub fn singular_values<T: Real>(a: &CMatrix<T>) -> Vec<T> {
    if a.is_empty() {
        return Vec::new();
    }
    let vals: Vec<f64> = SVD::new(to_na_complex(a), false, false).singular_values.iter().copied().collect();
    descending(&vals).into_iter().map(|i| T::lit(vals[i])).collect()
}

/// Inverse of a Hermitian positive definite matrix; `None` if the Cholesky
/// factorization fails.
pub fn hermitian_pd_inverse<T: Real>(a: &CMatrix<T>) -> Option<CMatrix<T>> {
    let chol = Cholesky::new(to_na_complex(a))?;
    // The complex factorization takes square roots of negative pivots
    // instead of failing.
    let l = chol.l_dirty();
    if (0..l.nrows()).any(|i| !(l[(i, i)].re > 0.0) || l[(i, i)].im.abs() > 1e-12 * l[(i, i)].re) {
        return None;
    }
    Some(from_na_complex(&chol.inverse()))
}

/// Orthonormal basis (as columns) of the null space of `h` (rows x cols),
/// assuming `h` has full row rank.
///
/// The full `Q` of a Householder QR of `[h^H | I]` spans the row space of `h`
/// with its leading columns; the remaining columns span the complement.
pub fn null_space<T: Real>(h: &CMatrix<T>) -> CMatrix<T> {
    let (u, k) = h.shape();
    if u >= k {
        return CMatrix::zeros(k, 0);
    }
    let hh = to_na_complex(h).adjoint();
    let padded = DMatrix::from_fn(k, u + k, |i, j| {
        if j < u {
            hh[(i, j)]
        } else if i == j - u {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    let q = QR::new(padded).q();
    from_na_complex(&q.columns(u, k - u).into_owned())
}
