use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use super::{DenseMatrix, C64};
use crate::{Error, Result};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row and no explicit zeros
/// are stored.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    ///
    /// Zero values are dropped. Repeated positions are rejected.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        if let Some(&(row, col, _)) = triplets.iter().find(|t| t.0 >= rows || t.1 >= cols) {
            return Err(Error::IndexOutOfBounds { row, col });
        }
        triplets.sort_unstable_by_key(|t| (t.0, t.1));
        if let Some(w) = triplets.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::DuplicateEntry { row: w[0].0, col: w[0].1 });
        }
        let mut row_ptr = vec![0; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if v.is_zero() {
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut row_ptr = Vec::with_capacity(m.rows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if !v.is_zero() {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(values.len());
        }
        Self {
            rows: m.rows(),
            cols: m.cols(),
            row_ptr,
            col_idx,
            values,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => C64::zero(),
        }
    }

    /// Iterates over stored `(row, col, value)` entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let t = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.cols, self.rows, t).expect("transpose of a valid matrix is valid")
    }

    pub fn scale(&mut self, c: C64) {
        if c.is_zero() {
            *self = Self::zeros(self.rows, self.cols);
        } else {
            self.values.iter_mut().for_each(|v| *v *= c);
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, a)| a * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::zero(); self.rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = Mᴴ x`.
    pub fn mul_adjoint_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::zero(); self.cols];
        for (i, j, a) in self.iter() {
            y[j] += a.conj() * x[i];
        }
        y
    }

    /// Sparse-dense product `self * rhs` written into `out`.
    pub fn mul_dense_into(&self, rhs: &DenseMatrix, out: &mut DenseMatrix) {
        assert_eq!(self.cols, rhs.rows());
        assert_eq!((out.rows(), out.cols()), (self.rows, rhs.cols()));
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            let out_row = out.row_mut(i);
            out_row.iter_mut().for_each(|x| *x = C64::zero());
            for (&k, a) in c.iter().zip(v) {
                for (o, b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn triplets_are_sorted_and_zeros_dropped() {
        let m = CsrMatrix::from_triplets(2, 3, vec![(1, 2, c(3.0)), (0, 1, c(0.0)), (1, 0, c(1.0)), (0, 2, c(2.0))])
            .unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.row(1).0, &[0, 2]);
        assert_eq!(m.get(0, 1), c(0.0));
        assert_eq!(m.get(1, 2), c(3.0));
    }

    #[test]
    fn duplicates_and_out_of_bounds_are_rejected() {
        assert_eq!(
            CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0)), (0, 1, c(2.0))]),
            Err(Error::DuplicateEntry { row: 0, col: 1 })
        );
        assert_eq!(
            CsrMatrix::from_triplets(2, 2, vec![(2, 0, c(1.0))]),
            Err(Error::IndexOutOfBounds { row: 2, col: 0 })
        );
    }

    #[test]
    fn dense_round_trip_and_products_agree() {
        let d = DenseMatrix::from_fn(4, 4, |i, j| if (i + j) % 3 == 0 { C64::new(i as f64 + 1.0, j as f64) } else { C64::zero() });
        let s = CsrMatrix::from_dense(&d);
        assert_eq!(s.to_dense(), d);
        let x: Vec<C64> = (0..4).map(|k| C64::new(k as f64, 1.0)).collect();
        assert_eq!(s.mul_vec(&x), d.mul_vec(&x));
        let b = DenseMatrix::from_fn(4, 2, |i, j| C64::new(i as f64 - j as f64, 0.5));
        let mut out = DenseMatrix::zeros(4, 2);
        s.mul_dense_into(&b, &mut out);
        assert!(out.distance(&d.matmul(&b)) < 1e-13);
        let ya = s.mul_adjoint_vec(&x);
        let yb = d.mul_adjoint_vec(&x);
        assert!(ya.iter().zip(&yb).all(|(a, b)| (a - b).norm() < 1e-13));
        assert_eq!(s.transpose().to_dense(), d.transpose());
    }
}
