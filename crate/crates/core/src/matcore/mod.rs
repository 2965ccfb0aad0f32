//! Complex matrix types, the diagonal partition `M = D + Δ`, inverse gaps and the
//! norm-based convergence certificate.

mod dense;
mod norm;
mod partition;
mod sparse;

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

pub use dense::DenseMatrix;
pub use norm::{certify, spectral_norm, ConvergenceCertificate, NormEstimate, CERTIFICATE_BOUND};
pub use partition::{build_gaps, partition, InverseGaps, Partition};
pub use sparse::CsrMatrix;

pub type C64 = Complex<f64>;

/// A complex matrix stored either densely or in compressed-row form.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ComplexMatrix {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl ComplexMatrix {
    pub fn rows(&self) -> usize {
        match self {
            ComplexMatrix::Dense(m) => m.rows(),
            ComplexMatrix::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            ComplexMatrix::Dense(m) => m.cols(),
            ComplexMatrix::Sparse(m) => m.cols(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, ComplexMatrix::Sparse(_))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match self {
            ComplexMatrix::Dense(m) => m[(i, j)],
            ComplexMatrix::Sparse(m) => m.get(i, j),
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows().min(self.cols())).map(|i| self.get(i, i)).collect()
    }

    /// Same matrix with its diagonal set to zero.
    pub fn without_diagonal(&self) -> ComplexMatrix {
        match self {
            ComplexMatrix::Dense(m) => {
                let mut out = m.clone();
                for i in 0..m.rows().min(m.cols()) {
                    out[(i, i)] = C64::zero();
                }
                ComplexMatrix::Dense(out)
            }
            ComplexMatrix::Sparse(m) => {
                let t = m.iter().filter(|&(i, j, _)| i != j).collect();
                ComplexMatrix::Sparse(
                    CsrMatrix::from_triplets(m.rows(), m.cols(), t).expect("subset of a valid matrix"),
                )
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            ComplexMatrix::Dense(m) => m.clone(),
            ComplexMatrix::Sparse(m) => m.to_dense(),
        }
    }

    pub fn transpose(&self) -> ComplexMatrix {
        match self {
            ComplexMatrix::Dense(m) => ComplexMatrix::Dense(m.transpose()),
            ComplexMatrix::Sparse(m) => ComplexMatrix::Sparse(m.transpose()),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            ComplexMatrix::Dense(m) => m.frobenius_norm(),
            ComplexMatrix::Sparse(m) => m.frobenius_norm(),
        }
    }

    pub fn scaled(&self, c: C64) -> ComplexMatrix {
        let mut out = self.clone();
        match &mut out {
            ComplexMatrix::Dense(m) => m.scale(c),
            ComplexMatrix::Sparse(m) => m.scale(c),
        }
        out
    }

    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        match self {
            ComplexMatrix::Dense(m) => m.mul_vec_into(x, y),
            ComplexMatrix::Sparse(m) => m.mul_vec_into(x, y),
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        match self {
            ComplexMatrix::Dense(m) => m.mul_vec(x),
            ComplexMatrix::Sparse(m) => m.mul_vec(x),
        }
    }

    pub fn mul_adjoint_vec(&self, x: &[C64]) -> Vec<C64> {
        match self {
            ComplexMatrix::Dense(m) => m.mul_adjoint_vec(x),
            ComplexMatrix::Sparse(m) => m.mul_adjoint_vec(x),
        }
    }

    /// `out ← self · rhs` with a dense right-hand side.
    pub fn mul_dense_into(&self, rhs: &DenseMatrix, out: &mut DenseMatrix) {
        match self {
            ComplexMatrix::Dense(m) => m.matmul_into(rhs, out),
            ComplexMatrix::Sparse(m) => m.mul_dense_into(rhs, out),
        }
    }

    pub fn mul_dense(&self, rhs: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows(), rhs.cols());
        self.mul_dense_into(rhs, &mut out);
        out
    }
}

impl From<DenseMatrix> for ComplexMatrix {
    fn from(m: DenseMatrix) -> Self {
        ComplexMatrix::Dense(m)
    }
}

impl From<CsrMatrix> for ComplexMatrix {
    fn from(m: CsrMatrix) -> Self {
        ComplexMatrix::Sparse(m)
    }
}

/// Anything that can apply itself and its adjoint to a vector.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64>;
    fn frobenius(&self) -> f64;
    /// Largest absolute column sum `‖·‖₁` and row sum `‖·‖∞`.
    fn abs_sums(&self) -> (f64, f64);
}

fn abs_sums_of(rows: usize, cols: usize, entries: impl Iterator<Item = (usize, usize, C64)>) -> (f64, f64) {
    let mut col = vec![0.0f64; cols];
    let mut row = vec![0.0f64; rows];
    for (i, j, v) in entries {
        let a = v.norm();
        col[j] += a;
        row[i] += a;
    }
    let max = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
    (max(col), max(row))
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.mul_vec(x)
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.mul_adjoint_vec(x)
    }
    fn frobenius(&self) -> f64 {
        self.frobenius_norm()
    }
    fn abs_sums(&self) -> (f64, f64) {
        abs_sums_of(self.rows(), self.cols(), (0..self.rows()).flat_map(move |i| self.row(i).iter().enumerate().map(move |(j, &v)| (i, j, v))))
    }
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.mul_vec(x)
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.mul_adjoint_vec(x)
    }
    fn frobenius(&self) -> f64 {
        self.frobenius_norm()
    }
    fn abs_sums(&self) -> (f64, f64) {
        abs_sums_of(self.rows(), self.cols(), self.iter())
    }
}

impl LinearOperator for ComplexMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.mul_vec(x)
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.mul_adjoint_vec(x)
    }
    fn frobenius(&self) -> f64 {
        self.frobenius_norm()
    }
    fn abs_sums(&self) -> (f64, f64) {
        match self {
            ComplexMatrix::Dense(m) => m.abs_sums(),
            ComplexMatrix::Sparse(m) => m.abs_sums(),
        }
    }
}

pub(crate) fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
