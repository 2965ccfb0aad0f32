//! Rayleigh–Schrödinger coefficients and the order test against IPT iterates.
//!
//! The expansion is parametric: the partition carries the unit perturbation
//! `Δ₀` and `ε` is supplied when a partial sum is evaluated.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::matcore::{DenseMatrix, InverseGaps, Partition, C64};
use crate::solver::map_full_into;
use crate::{Error, Result};

/// Coefficients of `Z(ε) = Σ εˡ Z^[ℓ]` and `λ(ε) = Σ εˡ λ^[ℓ]`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RSExpansion {
    /// `Z^[0] = I`; `diag(Z^[ℓ]) = 0` for `ℓ ≥ 1`.
    pub coefficients: Vec<DenseMatrix>,
    /// `λ^[0] = d`.
    pub eigenvalue_coefficients: Vec<Vec<C64>>,
    pub order: usize,
}

/// Coefficients up to order `k` by the recursion
/// `Z^[ℓ] = G∘(Σ_{s<ℓ} Z^[ℓ−1−s] 𝒟(ΔZ^[s]) − ΔZ^[ℓ−1])`, `λ^[ℓ] = diag(ΔZ^[ℓ−1])`.
pub fn rs_coefficients(p: &Partition, g: &InverseGaps, k: usize) -> Result<RSExpansion> {
    let n = p.dim();
    if g.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: g.dim() });
    }
    let gd = g.to_dense();
    let mut z = vec![DenseMatrix::identity(n)];
    let mut lambda = vec![p.diagonal().to_vec()];
    // delta_z[s] = Δ Z^[s]; diag_dz[s] = 𝒟(ΔZ^[s]).
    let mut delta_z: Vec<DenseMatrix> = Vec::with_capacity(k);
    let mut diag_dz: Vec<Vec<C64>> = Vec::with_capacity(k);

    for l in 1..=k {
        let dz = p.delta().mul_dense(&z[l - 1]);
        let dd = dz.diagonal();
        lambda.push(dd.clone());
        delta_z.push(dz);
        diag_dz.push(dd);

        let mut acc = DenseMatrix::zeros(n, n);
        for s in 0..l {
            let mut term = z[l - 1 - s].clone();
            term.scale_columns(&diag_dz[s]);
            for (a, t) in acc.data_mut().iter_mut().zip(term.data()) {
                *a += t;
            }
        }
        let next = DenseMatrix::from_fn(n, n, |a, b| {
            if a == b {
                C64::zero()
            } else {
                gd[(a, b)] * (acc[(a, b)] - delta_z[l - 1][(a, b)])
            }
        });
        z.push(next);
    }
    Ok(RSExpansion {
        coefficients: z,
        eigenvalue_coefficients: lambda,
        order: k,
    })
}

fn horner<T: Clone>(coeffs: &[T], eps: C64, zero: T, fma: impl Fn(&T, C64, &T) -> T) -> T {
    coeffs.iter().rev().fold(zero, |acc, c| fma(&acc, eps, c))
}

/// `Z_RS^(k)(ε) = Σ_{ℓ≤k} εˡ Z^[ℓ]`, evaluated by Horner's rule.
pub fn rs_partial_sum(exp: &RSExpansion, eps: C64, k: usize) -> Result<DenseMatrix> {
    if k > exp.order {
        return Err(Error::OrderOverflow {
            requested: k,
            available: exp.order,
        });
    }
    let n = exp.coefficients[0].rows();
    Ok(horner(&exp.coefficients[..=k], eps, DenseMatrix::zeros(n, n), |acc, e, c| {
        let data = acc.data().iter().zip(c.data()).map(|(a, b)| a * e + b).collect();
        DenseMatrix::from_vec(n, n, data).expect("square")
    }))
}

/// `λ_RS^(k)(ε) = Σ_{ℓ≤k} εˡ λ^[ℓ]`.
pub fn rs_eigenvalue_sum(exp: &RSExpansion, eps: C64, k: usize) -> Result<Vec<C64>> {
    if k > exp.order {
        return Err(Error::OrderOverflow {
            requested: k,
            available: exp.order,
        });
    }
    let n = exp.eigenvalue_coefficients[0].len();
    Ok(horner(&exp.eigenvalue_coefficients[..=k], eps, vec![C64::zero(); n], |acc, e, c| {
        acc.iter().zip(c).map(|(a, b)| a * e + b).collect()
    }))
}

/// Errors below this are rounding noise and carry no order information.
pub const NOISE_FLOOR: f64 = 1e3 * f64::EPSILON;

/// Least-squares slope of `log E` against `log |ε|` for one order.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrderFit {
    pub k: usize,
    /// `None` when fewer than two points survive the filters.
    pub slope: Option<f64>,
    pub errors: Vec<f64>,
    pub used: usize,
    pub excluded_noise: usize,
    pub excluded_nonfinite: usize,
}

impl OrderFit {
    /// Whether the fit supports an error of order at least `min_slope`.
    ///
    /// A grid on which every error sits below the noise floor agrees with any
    /// order and passes; a grid that lost points to overflow never does.
    pub fn satisfies(&self, min_slope: f64) -> bool {
        if self.excluded_nonfinite > 0 {
            return false;
        }
        match self.slope {
            Some(s) => s >= min_slope,
            None => self.used == 0 && self.excluded_noise > 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContainmentReport {
    pub eps_grid: Vec<C64>,
    pub fits: Vec<OrderFit>,
}

impl ContainmentReport {
    pub fn all_satisfy(&self, margin: f64) -> bool {
        self.fits.iter().all(|f| f.satisfies(f.k as f64 + 1.0 - margin))
    }
}

/// Least-squares slope through `(x, y)` pairs.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// `n` logarithmically spaced real values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<C64> {
    if n == 1 {
        return vec![C64::new(lo, 0.0)];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|t| C64::new((a + (b - a) * t as f64 / (n - 1) as f64).exp(), 0.0))
        .collect()
}

/// Compares the `k`-th IPT iterate with the `k`-th RS partial sum for every
/// `k ≤ order` and `ε` in the grid, then fits the order of the difference.
pub fn containment_check(p: &Partition, g: &InverseGaps, order: usize, eps_grid: &[C64]) -> Result<ContainmentReport> {
    let exp = rs_coefficients(p, g, order)?;
    let n = p.dim();
    let gd = g.to_dense();
    let mut errors = vec![Vec::with_capacity(eps_grid.len()); order + 1];

    for &eps in eps_grid {
        let pe = p.with_scaled_delta(eps);
        let mut z = DenseMatrix::identity(n);
        let mut dz = DenseMatrix::zeros(n, n);
        let mut next = DenseMatrix::zeros(n, n);
        for (k, errs) in errors.iter_mut().enumerate() {
            if k > 0 {
                pe.delta().mul_dense_into(&z, &mut dz);
                map_full_into(&gd, &z, &dz, &mut next);
                core::mem::swap(&mut z, &mut next);
            }
            errs.push(z.distance(&rs_partial_sum(&exp, eps, k)?));
        }
    }

    let fits = errors
        .into_iter()
        .enumerate()
        .map(|(k, errs)| {
            let mut pts = Vec::new();
            let (mut noise, mut nonfinite) = (0, 0);
            for (e, eps) in errs.iter().zip(eps_grid) {
                if !e.is_finite() {
                    nonfinite += 1;
                } else if *e < NOISE_FLOOR {
                    noise += 1;
                } else {
                    pts.push((eps.norm().ln(), e.ln()));
                }
            }
            OrderFit {
                k,
                slope: fit_slope(&pts),
                errors: errs,
                used: pts.len(),
                excluded_noise: noise,
                excluded_nonfinite: nonfinite,
            }
        })
        .collect();
    Ok(ContainmentReport {
        eps_grid: eps_grid.to_vec(),
        fits,
    })
}

/// Largest entry of the order-`ℓ` balance
/// `D Z^[ℓ] + Δ Z^[ℓ−1] − Σ_{s≤ℓ} Z^[ℓ−s] diag(λ^[s])` for `ℓ = 1..=order`.
pub fn balance_residuals(p: &Partition, exp: &RSExpansion) -> Vec<f64> {
    let n = p.dim();
    (1..=exp.order)
        .map(|l| {
            let mut r = p.delta().mul_dense(&exp.coefficients[l - 1]);
            for a in 0..n {
                for b in 0..n {
                    r[(a, b)] += p.diagonal()[a] * exp.coefficients[l][(a, b)];
                }
            }
            for s in 0..=l {
                let mut t = exp.coefficients[l - s].clone();
                t.scale_columns(&exp.eigenvalue_coefficients[s]);
                r = r.sub(&t);
            }
            r.max_abs()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testgen::two_by_two;
    use num_traits::One;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn first_coefficient_of_two_by_two() {
        let p = two_by_two(C64::one());
        let g = InverseGaps::new(&p).unwrap();
        let e = rs_coefficients(&p, &g, 3).unwrap();
        assert_eq!(e.coefficients[0], DenseMatrix::identity(2));
        assert_eq!(e.coefficients[1], DenseMatrix::from_real(2, 2, &[0.0, 1.0, -1.0, 0.0]).unwrap());
        for z in &e.coefficients[1..] {
            assert!(z.diagonal().iter().all(|x| x.is_zero()));
        }
        let s = rs_partial_sum(&e, c(0.1), 1).unwrap();
        assert!(s.distance(&DenseMatrix::from_real(2, 2, &[1.0, 0.1, -0.1, 1.0]).unwrap()) < 1e-16);
        assert_eq!(rs_partial_sum(&e, c(0.3), 0).unwrap(), DenseMatrix::identity(2));
        assert_eq!(rs_partial_sum(&e, c(0.0), 3).unwrap(), DenseMatrix::identity(2));
        assert_eq!(
            rs_partial_sum(&e, c(0.1), 4),
            Err(Error::OrderOverflow { requested: 4, available: 3 })
        );
    }

    #[test]
    fn eigenvalue_series_of_two_by_two() {
        // λ₀(ε) = (1 − √(1+4ε²))/2 = −ε² + ε⁴ − 2ε⁶ + …
        let p = two_by_two(C64::one());
        let g = InverseGaps::new(&p).unwrap();
        let e = rs_coefficients(&p, &g, 6).unwrap();
        let l0: Vec<f64> = e.eigenvalue_coefficients.iter().map(|v| v[0].re).collect();
        assert_eq!(l0, vec![0.0, 0.0, -1.0, 0.0, 1.0, 0.0, -2.0]);
    }

    #[test]
    fn zero_perturbation_has_trivial_series() {
        let p = two_by_two(C64::zero());
        let g = InverseGaps::new(&p).unwrap();
        let e = rs_coefficients(&p, &g, 4).unwrap();
        for z in &e.coefficients[1..] {
            assert_eq!(z.frobenius_norm(), 0.0);
        }
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [1e-3, 2e-3, 5e-3, 1e-2].iter().map(|&x: &f64| (x.ln(), (3.0 * x.powi(3)).ln())).collect();
        assert!((fit_slope(&pts).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(fit_slope(&pts[..1]), None);
    }

    #[test]
    fn satisfies_handles_degenerate_fits() {
        let base = OrderFit {
            k: 1,
            slope: None,
            errors: vec![],
            used: 0,
            excluded_noise: 6,
            excluded_nonfinite: 0,
        };
        assert!(base.satisfies(1.9));
        assert!(!OrderFit { excluded_nonfinite: 1, ..base.clone() }.satisfies(1.9));
        assert!(!OrderFit { excluded_noise: 0, ..base.clone() }.satisfies(1.9));
        assert!(!OrderFit { slope: Some(1.5), used: 6, ..base }.satisfies(1.9));
    }

    #[test]
    fn two_by_two_containment_orders() {
        let p = two_by_two(C64::one());
        let g = InverseGaps::new(&p).unwrap();
        let report = containment_check(&p, &g, 4, &log_grid(1e-2, 1e-1, 8)).unwrap();
        assert!(report.all_satisfy(0.1), "{report:?}");
    }
}
