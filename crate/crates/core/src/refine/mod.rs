//! Mixed-precision refinement of a full eigenbasis.
//!
//! A 32-bit eigenbasis `Z₀` turns `M` into the near-diagonal `M′ = Z₀⁻¹ M Z₀`,
//! which the full-spectrum iteration solves in 64-bit arithmetic. The refined
//! basis is `Z₀ Z′`.

pub mod eig;
pub mod lu;

use alloc::vec::Vec;

use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;

use crate::matcore::{certify, partition, ComplexMatrix, ConvergenceCertificate, DenseMatrix, InverseGaps, C64};
use crate::solver::{solve_full, IterationConfig, Status};
use crate::{Error, Result};

pub use eig::{eig, Eigen};
pub use lu::{condition_estimate, lu_factor, LuFactors};

/// Square matrix stored in 32-bit complex arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct LowPrecisionMatrix {
    n: usize,
    data: Vec<Complex<f32>>,
}

impl LowPrecisionMatrix {
    pub fn from_vec(n: usize, data: Vec<Complex<f32>>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: data.len() });
        }
        Ok(Self { n, data })
    }

    /// Rounds every entry to the nearest 32-bit value.
    pub fn truncate(m: &DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
        }
        let data = m.data().iter().map(|z| Complex::new(z.re as f32, z.im as f32)).collect();
        Ok(Self { n: m.rows(), data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Complex<f32>] {
        &self.data
    }

    /// Exact conversion to working precision.
    pub fn promote(&self) -> DenseMatrix {
        let data = self.data.iter().map(|z| C64::new(z.re as f64, z.im as f64)).collect();
        DenseMatrix::from_vec(self.n, self.n, data).expect("square")
    }
}

/// Eigenbasis computed entirely in 32-bit arithmetic, unit-norm columns.
pub fn make_low_precision_seed(m: &ComplexMatrix) -> Result<LowPrecisionMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let a = LowPrecisionMatrix::truncate(&m.to_dense())?;
    let e = eig(a.n, &a.data)?;
    LowPrecisionMatrix::from_vec(a.n, e.vectors)
}

/// Working-precision eigenpairs by the direct dense method.
pub fn direct_eig(m: &ComplexMatrix) -> Result<(Vec<C64>, DenseMatrix)> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    let e = eig(n, m.to_dense().data())?;
    Ok((e.values, DenseMatrix::from_vec(n, n, e.vectors)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineConfig {
    pub iteration: IterationConfig,
    /// Largest accepted 1-norm condition estimate of the seed.
    pub condition_guard: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            iteration: IterationConfig::default(),
            condition_guard: 1e6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinementResult {
    /// Refined eigenvectors with unit-norm columns.
    pub z: DenseMatrix,
    pub eigenvalues: Vec<C64>,
    /// `‖MZ₀ − Z₀ diag(M′)‖_F` for the column-normalized seed.
    pub seed_residual: f64,
    /// `‖MZ − ZΛ‖_F` for the column-normalized result.
    pub refined_residual: f64,
    pub seed_condition_estimate: f64,
    pub status: Status,
    pub iterations: usize,
    /// Diagnostic only; the inner solve does not require it.
    pub certificate: ConvergenceCertificate,
}

/// Scales every column to unit 2-norm; zero columns are left alone.
pub fn normalize_columns(z: &mut DenseMatrix) {
    let n = z.cols();
    let mut norms = alloc::vec![0.0f64; n];
    for i in 0..z.rows() {
        for (s, x) in norms.iter_mut().zip(z.row(i)) {
            *s += x.norm_sqr();
        }
    }
    let inv: Vec<C64> = norms
        .iter()
        .map(|&s| if s > 0.0 { C64::new(1.0 / s.sqrt(), 0.0) } else { C64::new(1.0, 0.0) })
        .collect();
    z.scale_columns(&inv);
}

/// `‖MZ − Z diag(λ)‖_F`.
pub fn eigen_residual(m: &ComplexMatrix, z: &DenseMatrix, lambda: &[C64]) -> f64 {
    let mut zl = z.clone();
    zl.scale_columns(lambda);
    m.mul_dense(z).distance(&zl)
}

/// Refines a seed eigenbasis of `m` given in working precision.
pub fn refine_spectrum(m: &ComplexMatrix, seed: &DenseMatrix, config: &RefineConfig) -> Result<RefinementResult> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if seed.rows() != m.rows() || seed.cols() != m.rows() {
        return Err(Error::DimensionMismatch { expected: m.rows(), found: seed.rows() });
    }
    let mut z0 = seed.clone();
    normalize_columns(&mut z0);
    let lu = lu_factor(&z0).map_err(|_| Error::SingularSeed { condition: f64::INFINITY })?;
    let condition = lu::norm1(&z0) * lu.inverse_norm1_estimate();
    if !(condition <= config.condition_guard) {
        return Err(Error::SingularSeed { condition });
    }

    let mz0 = m.mul_dense(&z0);
    let m_prime = ComplexMatrix::Dense(lu.solve_matrix(&mz0));
    let p = partition(&m_prime)?;
    let seed_residual = eigen_residual(m, &z0, p.diagonal());
    let g = InverseGaps::new(&p)?;
    let certificate = certify(&p, &g);
    let inner = solve_full(&p, &g, &config.iteration)?;

    let mut z = z0.matmul(&inner.z);
    normalize_columns(&mut z);
    let refined_residual = eigen_residual(m, &z, &inner.eigenvalues);
    Ok(RefinementResult {
        z,
        eigenvalues: inner.eigenvalues,
        seed_residual,
        refined_residual,
        seed_condition_estimate: condition,
        status: inner.status,
        iterations: inner.iterations,
        certificate,
    })
}

/// [`refine_spectrum`] from a 32-bit seed.
pub fn refine_low_precision(m: &ComplexMatrix, seed: &LowPrecisionMatrix, config: &RefineConfig) -> Result<RefinementResult> {
    refine_spectrum(m, &seed.promote(), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testgen::{FamilyKind, FamilySpec};

    fn ill(n: usize, alpha: f64) -> ComplexMatrix {
        FamilySpec::new(FamilyKind::IllConditioned { n, alpha }, 11).generate().unwrap()
    }

    #[test]
    fn diagonal_seed_is_identity() {
        let d: Vec<C64> = (0..5).map(|k| C64::new(k as f64 * 1.5, 0.0)).collect();
        let s = make_low_precision_seed(&DenseMatrix::from_diagonal(&d).into()).unwrap();
        assert_eq!(s.promote(), DenseMatrix::identity(5));
    }

    #[test]
    fn exact_basis_is_a_fixed_point() {
        let m = ill(24, 1.0);
        let (_, z) = direct_eig(&m).unwrap();
        let r = refine_spectrum(&m, &z, &RefineConfig::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(r.iterations <= 2, "{}", r.iterations);
        for k in 0..24 {
            let dot: C64 = (0..24).map(|i| z[(i, k)].conj() * r.z[(i, k)]).sum();
            let sine = (0..24).map(|i| (r.z[(i, k)] - z[(i, k)] * dot).norm_sqr()).sum::<f64>().sqrt();
            assert!(sine <= 10.0 * f64::EPSILON, "{k}: {sine}");
        }
    }

    #[test]
    fn refinement_reaches_working_precision() {
        let m = ill(64, 1.0);
        let seed = make_low_precision_seed(&m).unwrap();
        let r = refine_low_precision(&m, &seed, &RefineConfig::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(r.seed_residual > 1e-8, "{}", r.seed_residual);
        assert!(r.refined_residual <= 1e-10 * m.frobenius_norm(), "{}", r.refined_residual);
    }

    #[test]
    fn singular_seed_is_rejected() {
        let m = ill(4, 1.0);
        let mut z = DenseMatrix::identity(4);
        z.set_column(3, &z.column(2));
        assert!(matches!(
            refine_spectrum(&m, &z, &RefineConfig::default()),
            Err(Error::SingularSeed { .. })
        ));
    }
}
