use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use super::{ComplexMatrix, CsrMatrix, DenseMatrix, LinearOperator, C64};
use crate::{Error, Result};

/// The split `M = diag(d) + Δ`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Partition {
    d: Vec<C64>,
    delta: ComplexMatrix,
}

impl Partition {
    pub fn new(d: Vec<C64>, delta: ComplexMatrix) -> Result<Self> {
        if !delta.is_square() {
            return Err(Error::NotSquare {
                rows: delta.rows(),
                cols: delta.cols(),
            });
        }
        if delta.rows() != d.len() {
            return Err(Error::DimensionMismatch {
                expected: d.len(),
                found: delta.rows(),
            });
        }
        Ok(Self { d, delta })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn diagonal(&self) -> &[C64] {
        &self.d
    }

    pub fn delta(&self) -> &ComplexMatrix {
        &self.delta
    }

    /// `diag(d) + c·Δ`, the same diagonal with a rescaled perturbation.
    pub fn with_scaled_delta(&self, c: C64) -> Partition {
        Partition {
            d: self.d.clone(),
            delta: self.delta.scaled(c),
        }
    }

    /// Rebuilds `diag(d) + Δ`, keeping the storage kind of `Δ`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        match &self.delta {
            ComplexMatrix::Dense(delta) => {
                let mut m = delta.clone();
                for (i, &di) in self.d.iter().enumerate() {
                    m[(i, i)] += di;
                }
                ComplexMatrix::Dense(m)
            }
            ComplexMatrix::Sparse(delta) => {
                let n = self.d.len();
                let mut diag = vec![C64::zero(); n];
                let mut t: Vec<_> = delta
                    .iter()
                    .filter_map(|(i, j, v)| {
                        if i == j {
                            diag[i] = v;
                            None
                        } else {
                            Some((i, j, v))
                        }
                    })
                    .collect();
                t.extend(self.d.iter().zip(diag).enumerate().map(|(i, (&di, v))| (i, i, di + v)));
                ComplexMatrix::Sparse(CsrMatrix::from_triplets(n, n, t).expect("valid entries"))
            }
        }
    }

    /// `‖M z - λ z‖₂` computed from a precomputed product `Δz`.
    pub(crate) fn residual_from_product(&self, z: &[C64], delta_z: &[C64], lambda: C64) -> f64 {
        self.d
            .iter()
            .zip(z)
            .zip(delta_z)
            .map(|((&di, &zi), &dz)| (di * zi + dz - lambda * zi).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Splits a square matrix into its diagonal and the off-diagonal remainder.
pub fn partition(m: &ComplexMatrix) -> Result<Partition> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Partition::new(m.diagonal(), m.without_diagonal())
}

/// Inverse gaps `G_jk = 1/(d_j - d_k)` for `j ≠ k`, `G_jj = 0`.
///
/// Entries are evaluated from the stored diagonal on demand, so sparse problems
/// of large dimension never materialize an `n × n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseGaps {
    d: Vec<C64>,
}

impl InverseGaps {
    /// Default tolerance: `1e-12 · max_j |d_j|`.
    pub fn default_tolerance(d: &[C64]) -> f64 {
        1e-12 * d.iter().fold(0.0, |acc: f64, x| acc.max(x.norm()))
    }

    pub fn new(p: &Partition) -> Result<Self> {
        build_gaps(p, Self::default_tolerance(p.diagonal()))
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> C64 {
        if j == k {
            C64::zero()
        } else {
            (self.d[j] - self.d[k]).inv()
        }
    }

    /// Column `g_i`, with `(g_i)_j = 1/(d_j - d_i)`.
    pub fn column(&self, i: usize) -> Vec<C64> {
        (0..self.d.len()).map(|j| self.get(j, i)).collect()
    }

    fn real_diagonal(&self) -> Option<Vec<f64>> {
        self.d.iter().all(|x| x.im == 0.0).then(|| self.d.iter().map(|x| x.re).collect())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.d.len();
        DenseMatrix::from_fn(n, n, |j, k| self.get(j, k))
    }
}

/// Builds the inverse gaps, rejecting any pair with `|d_j - d_k| ≤ degeneracy_tol`.
pub fn build_gaps(p: &Partition, degeneracy_tol: f64) -> Result<InverseGaps> {
    let d = p.diagonal();
    for j in 0..d.len() {
        for k in j + 1..d.len() {
            let gap = (d[j] - d[k]).norm();
            if gap <= degeneracy_tol {
                return Err(Error::DegenerateDiagonal { i: j, j: k, gap });
            }
        }
    }
    Ok(InverseGaps { d: d.to_vec() })
}

/// `sign · G x` for a real diagonal, in real arithmetic.
fn real_gap_product(d: &[f64], x: &[C64], sign: f64) -> Vec<C64> {
    d.iter()
        .enumerate()
        .map(|(j, &dj)| {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, (&dk, xk)) in d.iter().zip(x).enumerate() {
                if k != j {
                    let w = 1.0 / (dj - dk);
                    re += w * xk.re;
                    im += w * xk.im;
                }
            }
            C64::new(sign * re, sign * im)
        })
        .collect()
}

impl LinearOperator for InverseGaps {
    fn nrows(&self) -> usize {
        self.d.len()
    }

    fn ncols(&self) -> usize {
        self.d.len()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        if let Some(d) = self.real_diagonal() {
            return real_gap_product(&d, x, 1.0);
        }
        (0..self.d.len())
            .map(|j| x.iter().enumerate().map(|(k, xk)| self.get(j, k) * xk).sum())
            .collect()
    }

    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        if let Some(d) = self.real_diagonal() {
            // Real G is antisymmetric, so Gᴴ = −G.
            return real_gap_product(&d, x, -1.0);
        }
        (0..self.d.len())
            .map(|j| x.iter().enumerate().map(|(k, xk)| self.get(k, j).conj() * xk).sum())
            .collect()
    }

    fn frobenius(&self) -> f64 {
        let n = self.d.len();
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                s += self.get(j, k).norm_sqr();
            }
        }
        s.sqrt()
    }

    fn abs_sums(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut col = vec![0.0f64; n];
        let mut row = vec![0.0f64; n];
        for j in 0..n {
            for k in 0..n {
                let a = self.get(j, k).norm();
                row[j] += a;
                col[k] += a;
            }
        }
        let max = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
        (max(col), max(row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: usize, values: &[f64]) -> ComplexMatrix {
        DenseMatrix::from_real(rows, values.len() / rows, values).unwrap().into()
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn splits_two_by_two_family() {
        let p = partition(&real(2, &[0.0, 0.1, 0.1, 1.0])).unwrap();
        assert_eq!(p.diagonal(), &[c(0.0), c(1.0)]);
        assert_eq!(p.delta(), &real(2, &[0.0, 0.1, 0.1, 0.0]));
    }

    #[test]
    fn diagonal_input_has_zero_residual() {
        let p = partition(&real(3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0])).unwrap();
        assert_eq!(p.diagonal(), &[c(1.0), c(2.0), c(3.0)]);
        assert_eq!(p.delta().frobenius_norm(), 0.0);
    }

    #[test]
    fn direct_split() {
        let m = real(2, &[1.0, 2.0, 3.0, 4.0]);
        let p = partition(&m).unwrap();
        assert_eq!(p.diagonal(), &[c(1.0), c(4.0)]);
        assert_eq!(p.delta(), &real(2, &[0.0, 2.0, 3.0, 0.0]));
        assert_eq!(p.reconstruct(), m);
    }

    #[test]
    fn sparse_partition_reconstructs() {
        let m = ComplexMatrix::Sparse(CsrMatrix::from_dense(&DenseMatrix::from_real(3, 3, &[1.0, 0.0, 2.0, 0.0, 5.0, 0.0, 3.0, 0.0, 0.0]).unwrap()));
        let p = partition(&m).unwrap();
        assert!(p.delta().is_sparse());
        assert_eq!(p.delta().diagonal(), vec![c(0.0); 3]);
        assert_eq!(p.reconstruct().to_dense(), m.to_dense());
    }

    #[test]
    fn rejects_rectangular() {
        let m = real(2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(partition(&m), Err(Error::NotSquare { rows: 2, cols: 3 }));
    }

    #[test]
    fn gaps_from_definition() {
        let p = Partition::new(vec![c(0.0), c(1.0)], real(2, &[0.0; 4])).unwrap();
        let g = InverseGaps::new(&p).unwrap().to_dense();
        assert_eq!(g, DenseMatrix::from_real(2, 2, &[0.0, -1.0, 1.0, 0.0]).unwrap());

        let p = Partition::new(vec![c(0.0), c(1.0), c(3.0)], real(3, &[0.0; 9])).unwrap();
        let g = InverseGaps::new(&p).unwrap().to_dense();
        let expected = [0.0, -1.0, -1.0 / 3.0, 1.0, 0.0, -0.5, 1.0 / 3.0, 0.5, 0.0];
        for (a, b) in g.data().iter().zip(expected) {
            assert!((a - c(b)).norm() < 1e-15);
        }
    }

    #[test]
    fn degenerate_pair_is_named() {
        let p = Partition::new(vec![c(2.0), c(2.0)], real(2, &[0.0; 4])).unwrap();
        assert_eq!(
            InverseGaps::new(&p),
            Err(Error::DegenerateDiagonal { i: 0, j: 1, gap: 0.0 })
        );
    }

    #[test]
    fn operator_matches_dense() {
        let d = vec![C64::new(0.0, 1.0), c(1.5), C64::new(-2.0, 0.3), c(4.0)];
        let p = Partition::new(d, real(4, &[0.0; 16])).unwrap();
        let g = InverseGaps::new(&p).unwrap();
        let dense = g.to_dense();
        let x: Vec<C64> = (0..4).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect();
        for (a, b) in g.apply(&x).iter().zip(dense.mul_vec(&x)) {
            assert!((a - b).norm() < 1e-14);
        }
        for (a, b) in g.apply_adjoint(&x).iter().zip(dense.mul_adjoint_vec(&x)) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!((g.frobenius() - dense.frobenius_norm()).abs() < 1e-14);
    }
}
