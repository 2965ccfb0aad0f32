use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{vec_norm, InverseGaps, LinearOperator, Partition, C64};

/// `3 - 2√2`: below this value of `‖G‖‖Δ‖` the matrix map is a contraction
/// on the ball of radius `√2` around the identity.
pub const CERTIFICATE_BOUND: f64 = 3.0 - 2.0 * core::f64::consts::SQRT_2;

const NORM_TOL: f64 = 1e-6;
const NORM_MAX_ITERS: usize = 200;

/// Spectral norm estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormEstimate {
    pub value: f64,
    /// Power iteration did not settle and `value` is the smaller of the
    /// Frobenius norm and `√(‖·‖₁‖·‖∞)`, both upper bounds.
    pub conservative: bool,
    pub iterations: usize,
}

/// Largest singular value by power iteration on `MᴴM`.
///
/// Stops when the relative change of the estimate drops below `tol`. If that
/// never happens within `max_iters`, a rigorous upper bound is returned instead
/// and the estimate is flagged conservative.
pub fn spectral_norm<A: LinearOperator + ?Sized>(m: &A, tol: f64, max_iters: usize) -> NormEstimate {
    let fro = m.frobenius();
    if fro == 0.0 || m.ncols() == 0 {
        return NormEstimate {
            value: 0.0,
            conservative: false,
            iterations: 0,
        };
    }
    let n = m.ncols();
    // Fixed, non-symmetric start vector so that results are reproducible.
    let mut v: Vec<C64> = (0..n)
        .map(|j| C64::new(1.0 + 0.5 * ((j * 7919) % 13) as f64 / 13.0, 0.25 * ((j * 104729) % 7) as f64 / 7.0))
        .collect();
    normalize(&mut v);

    let mut sigma = 0.0;
    for it in 1..=max_iters {
        let w = m.apply(&v);
        let next = vec_norm(&w);
        if next == 0.0 {
            break;
        }
        let settled = (next - sigma).abs() <= tol * next;
        sigma = next;
        if settled {
            return NormEstimate {
                value: sigma,
                conservative: false,
                iterations: it,
            };
        }
        v = m.apply_adjoint(&w);
        if normalize(&mut v) == 0.0 {
            break;
        }
    }
    let (n1, ninf) = m.abs_sums();
    NormEstimate {
        value: fro.min((n1 * ninf).sqrt()),
        conservative: true,
        iterations: max_iters,
    }
}

fn normalize(v: &mut [C64]) -> f64 {
    let nrm = vec_norm(v);
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

/// Sufficient condition for convergence of the full-spectrum iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceCertificate {
    pub g_norm: f64,
    pub delta_norm: f64,
    pub product: f64,
    pub certified: bool,
    pub estimator_tolerance: f64,
    /// Either norm fell back to the Frobenius bound.
    pub conservative: bool,
}

impl ConvergenceCertificate {
    fn from_norms(g: NormEstimate, delta: NormEstimate, tol: f64) -> Self {
        let product = g.value * delta.value;
        Self {
            g_norm: g.value,
            delta_norm: delta.value,
            product,
            certified: product < CERTIFICATE_BOUND,
            estimator_tolerance: tol,
            conservative: g.conservative || delta.conservative,
        }
    }
}

/// Checks `‖G‖‖Δ‖ < 3 - 2√2` with estimated spectral norms.
pub fn certify(p: &Partition, g: &InverseGaps) -> ConvergenceCertificate {
    let gn = spectral_norm(g, NORM_TOL, NORM_MAX_ITERS);
    let dn = spectral_norm(p.delta(), NORM_TOL, NORM_MAX_ITERS);
    ConvergenceCertificate::from_norms(gn, dn, NORM_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{ComplexMatrix, DenseMatrix};
    use alloc::vec;

    fn real(n: usize, values: &[f64]) -> DenseMatrix {
        DenseMatrix::from_real(n, n, values).unwrap()
    }

    #[test]
    fn bound_value() {
        assert!((CERTIFICATE_BOUND - 0.171_572_875_253_809_9).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_matrix_has_unit_norm() {
        let est = spectral_norm(&real(2, &[0.0, -1.0, 1.0, 0.0]), 1e-10, 200);
        assert!((est.value - 1.0).abs() < 1e-12);
        assert!(!est.conservative);
    }

    #[test]
    fn symmetric_swap_scaled() {
        let est = spectral_norm(&real(2, &[0.0, 0.1, 0.1, 0.0]), 1e-10, 200);
        assert!((est.value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn falls_back_to_upper_bound_without_budget() {
        // Frobenius √16.5 exceeds √(‖·‖₁‖·‖∞) = 4.
        let m = real(3, &[3.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0]);
        let est = spectral_norm(&m, 1e-14, 1);
        assert!(est.conservative);
        assert_eq!(est.value, 4.0);
        let d = real(2, &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(spectral_norm(&d, 1e-14, 1).value, 1.0);
    }

    #[test]
    fn certificate_for_two_by_two() {
        for (eps, certified) in [(0.1, true), (0.2, false)] {
            let delta: ComplexMatrix = real(2, &[0.0, eps, eps, 0.0]).into();
            let p = Partition::new(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], delta).unwrap();
            let g = InverseGaps::new(&p).unwrap();
            let cert = certify(&p, &g);
            assert!((cert.g_norm - 1.0).abs() < 1e-9);
            assert!((cert.product - eps).abs() < 1e-9);
            assert_eq!(cert.certified, certified);
        }
    }

    #[test]
    fn zero_perturbation_certifies() {
        let p = Partition::new(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], real(2, &[0.0; 4]).into()).unwrap();
        let cert = certify(&p, &InverseGaps::new(&p).unwrap());
        assert_eq!(cert.product, 0.0);
        assert!(cert.certified);
    }
}
