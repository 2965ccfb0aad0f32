//! LU factorization with partial pivoting and a 1-norm condition estimator.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::matcore::{DenseMatrix, C64};
use crate::{Error, Result};

/// `P A = L U` packed into one matrix; `L` has a unit diagonal.
#[derive(Clone, Debug)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

pub fn lu_factor(a: &DenseMatrix) -> Result<LuFactors> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].norm()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax == 0.0 || !pmax.is_finite() {
            return Err(Error::SingularMatrix { pivot: k });
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
        }
        let pivot_inv = lu[(k, k)].inv();
        let (head, tail) = lu.data_mut().split_at_mut((k + 1) * n);
        let pivot_row = &head[k * n..(k + 1) * n];
        for row in tail.chunks_mut(n) {
            let l = row[k] * pivot_inv;
            row[k] = l;
            if l.is_zero() {
                continue;
            }
            for (x, u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                *x -= l * u;
            }
        }
    }
    Ok(LuFactors { lu, perm })
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.dim();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: C64 = row[..i].iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: C64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / row[i];
        }
        b.copy_from_slice(&x);
    }

    /// Solves `Aᴴ x = b` in place.
    pub fn solve_adjoint_in_place(&self, b: &mut [C64]) {
        let n = self.dim();
        // Aᴴ = Uᴴ Lᴴ P, so solve Uᴴ y = b, Lᴴ w = y, x = Pᵀ w.
        let mut y = b.to_vec();
        for i in 0..n {
            let yi = y[i] / self.lu[(i, i)].conj();
            y[i] = yi;
            for (yj, u) in y[i + 1..].iter_mut().zip(&self.lu.row(i)[i + 1..]) {
                *yj -= u.conj() * yi;
            }
        }
        for i in (0..n).rev() {
            let yi = y[i];
            for (yj, l) in y[..i].iter_mut().zip(&self.lu.row(i)[..i]) {
                *yj -= l.conj() * yi;
            }
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = y[k];
        }
    }

    /// Solves `A X = B` for a dense right-hand side.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        let n = self.dim();
        assert_eq!(b.rows(), n);
        let m = b.cols();
        let mut x = DenseMatrix::zeros(n, m);
        for (i, &p) in self.perm.iter().enumerate() {
            x.row_mut(i).copy_from_slice(b.row(p));
        }
        let data = x.data_mut();
        for i in 0..n {
            let (done, rest) = data.split_at_mut(i * m);
            let xi = &mut rest[..m];
            for (k, l) in self.lu.row(i)[..i].iter().enumerate() {
                if l.is_zero() {
                    continue;
                }
                for (a, b) in xi.iter_mut().zip(&done[k * m..(k + 1) * m]) {
                    *a -= l * b;
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = data.split_at_mut((i + 1) * m);
            let xi = &mut head[i * m..];
            let row = self.lu.row(i);
            for (off, u) in row[i + 1..].iter().enumerate() {
                if u.is_zero() {
                    continue;
                }
                let src = &tail[off * m..(off + 1) * m];
                for (a, b) in xi.iter_mut().zip(src) {
                    *a -= u * b;
                }
            }
            let inv = row[i].inv();
            xi.iter_mut().for_each(|a| *a *= inv);
        }
        x
    }

    /// Estimate of `‖A⁻¹‖₁` (Hager's method with Higham's refinements).
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(&mut y);
            let new_est: f64 = y.iter().map(|v| v.norm()).sum();
            if new_est <= est && last_j != usize::MAX {
                break;
            }
            est = new_est;
            let mut z: Vec<C64> = y
                .iter()
                .map(|v| {
                    let a = v.norm();
                    if a == 0.0 {
                        C64::new(1.0, 0.0)
                    } else {
                        v / a
                    }
                })
                .collect();
            self.solve_adjoint_in_place(&mut z);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.norm()))
                .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![C64::zero(); n];
            x[j] = C64::new(1.0, 0.0);
        }
        // Higham's alternative vector guards against underestimates.
        let mut alt: Vec<C64> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                C64::new(sign * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0)), 0.0)
            })
            .collect();
        self.solve_in_place(&mut alt);
        let alt_est = 2.0 * alt.iter().map(|v| v.norm()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_est)
    }
}

/// Maximum absolute column sum.
pub fn norm1(a: &DenseMatrix) -> f64 {
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number estimate `‖A‖₁ ‖A⁻¹‖₁`; infinite for singular input.
pub fn condition_estimate(a: &DenseMatrix) -> f64 {
    match lu_factor(a) {
        Ok(f) => norm1(a) * f.inverse_norm1_estimate(),
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, n, |i, j| {
            let t = (i * 31 + j * 17) % 11;
            C64::new(t as f64 - 5.0 + if i == j { 3.0 } else { 0.0 }, ((i + 2 * j) % 5) as f64 * 0.3)
        })
    }

    #[test]
    fn solves_and_adjoint_solves() {
        let a = sample(6);
        let f = lu_factor(&a).unwrap();
        let x: Vec<C64> = (0..6).map(|k| C64::new(k as f64 + 1.0, -(k as f64))).collect();
        let mut b = a.mul_vec(&x);
        f.solve_in_place(&mut b);
        assert!(b.iter().zip(&x).all(|(u, v)| (u - v).norm() < 1e-10));
        let mut c = a.mul_adjoint_vec(&x);
        f.solve_adjoint_in_place(&mut c);
        assert!(c.iter().zip(&x).all(|(u, v)| (u - v).norm() < 1e-10));
    }

    #[test]
    fn matrix_solve_matches_vector_solve() {
        let a = sample(5);
        let b = DenseMatrix::from_fn(5, 3, |i, j| C64::new(i as f64 * 0.5, j as f64));
        let f = lu_factor(&a).unwrap();
        let x = f.solve_matrix(&b);
        assert!(a.matmul(&x).distance(&b) < 1e-10);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = DenseMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(lu_factor(&a), Err(Error::SingularMatrix { .. })));
        assert_eq!(condition_estimate(&a), f64::INFINITY);
    }

    #[test]
    fn condition_of_diagonal_matrix_is_exact() {
        let a = DenseMatrix::from_real(3, 3, &[1.0, 0.0, 0.0, 0.0, 1e-3, 0.0, 0.0, 0.0, 10.0]).unwrap();
        let k = condition_estimate(&a);
        assert!((k - 1e4).abs() < 1e-6 * 1e4, "{k}");
    }
}
