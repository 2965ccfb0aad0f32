//! Dense complex eigensolver, generic over the floating-point width.
//!
//! Householder reduction to Hessenberg form, shifted complex QR to Schur form
//! `A = Q T Qᴴ`, then eigenvectors of `T` by back substitution. Used to build
//! reduced-precision seeds and as the working-precision direct baseline.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{One, Zero};

use crate::{Error, Result};

/// Eigenvalues and unit-norm eigenvectors (columns of a row-major `n × n` matrix).
#[derive(Clone, Debug, PartialEq)]
pub struct Eigen<T> {
    pub n: usize,
    pub values: Vec<Complex<T>>,
    pub vectors: Vec<Complex<T>>,
}

/// QR sweeps allowed per eigenvalue before giving up.
const SWEEPS_PER_EIGENVALUE: usize = 60;

struct Mat<T> {
    n: usize,
    a: Vec<Complex<T>>,
}

impl<T: Float> Mat<T> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex<T> {
        self.a[i * self.n + j]
    }
    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex<T> {
        &mut self.a[i * self.n + j]
    }
}

fn c<T: Float>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

fn abs1<T: Float>(z: Complex<T>) -> T {
    z.re.abs() + z.im.abs()
}

/// Householder reduction; returns `(H, Q)` with `A = Q H Qᴴ`.
fn hessenberg<T: Float>(h: &mut Mat<T>, q: &mut Mat<T>) {
    let n = h.n;
    let two = T::one() + T::one();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<Complex<T>> = (k + 1..n).map(|i| h.at(i, k)).collect();
        let xnorm = v.iter().fold(T::zero(), |acc, x| acc.hypot(x.norm()));
        if xnorm == T::zero() {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == T::zero() { Complex::one() } else { x0 / c(x0.norm()) };
        let alpha = -phase * c(xnorm);
        v[0] = x0 - alpha;
        let vnorm = v.iter().fold(T::zero(), |acc, x| acc.hypot(x.norm()));
        if vnorm == T::zero() {
            continue;
        }
        v.iter_mut().for_each(|x| *x = *x / c(vnorm));

        for j in k..n {
            let w: Complex<T> = v.iter().enumerate().fold(Complex::zero(), |acc, (t, vt)| acc + vt.conj() * h.at(k + 1 + t, j));
            for (t, vt) in v.iter().enumerate() {
                *h.at_mut(k + 1 + t, j) = h.at(k + 1 + t, j) - *vt * w * c(two);
            }
        }
        for m in [&mut *h, &mut *q] {
            for i in 0..n {
                let w: Complex<T> = v.iter().enumerate().fold(Complex::zero(), |acc, (t, vt)| acc + m.at(i, k + 1 + t) * *vt);
                for (t, vt) in v.iter().enumerate() {
                    *m.at_mut(i, k + 1 + t) = m.at(i, k + 1 + t) - w * vt.conj() * c(two);
                }
            }
        }
        *h.at_mut(k + 1, k) = alpha;
        for i in k + 2..n {
            *h.at_mut(i, k) = Complex::zero();
        }
    }
}

/// Rotation `[[c, s], [−s̄, c]]` mapping `(a, b)` to `(r, 0)`.
fn givens<T: Float>(a: Complex<T>, b: Complex<T>) -> (T, Complex<T>) {
    let na = a.norm();
    let nb = b.norm();
    if nb == T::zero() {
        return (T::one(), Complex::zero());
    }
    if na == T::zero() {
        return (T::zero(), Complex::one());
    }
    let nu = na.hypot(nb);
    let cs = na / nu;
    let s = (a / c(na)) * b.conj() / c(nu);
    (cs, s)
}

/// Eigenvalue of `[[a, b], [cc, d]]` closest to `d`.
fn wilkinson<T: Float>(a: Complex<T>, b: Complex<T>, cc: Complex<T>, d: Complex<T>) -> Complex<T> {
    let half = c(T::one() / (T::one() + T::one()));
    let p = (a - d) * half;
    let disc = (p * p + b * cc).sqrt();
    let (u, w) = (p + disc, p - disc);
    if u.norm() <= w.norm() {
        d + u
    } else {
        d + w
    }
}

/// Reduces Hessenberg `h` to upper triangular form, accumulating into `q`.
fn schur<T: Float>(h: &mut Mat<T>, q: &mut Mat<T>) -> Result<()> {
    let n = h.n;
    let eps = T::epsilon();
    let norm = h.a.iter().fold(T::zero(), |acc, x| acc.max(abs1(*x)));
    let small = T::min_positive_value() / eps;
    let mut hi = n.saturating_sub(1);
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut lo = 0;
        for k in (1..=hi).rev() {
            let sub = abs1(h.at(k, k - 1));
            let mut scale = abs1(h.at(k, k)) + abs1(h.at(k - 1, k - 1));
            if scale == T::zero() {
                scale = norm;
            }
            if sub <= eps * scale || sub <= small {
                *h.at_mut(k, k - 1) = Complex::zero();
                lo = k;
                break;
            }
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > SWEEPS_PER_EIGENVALUE * n {
            return Err(Error::NoConvergence { iterations: total });
        }
        let mu = if iter % 11 == 10 {
            // Exceptional shift breaks cycles of the standard shift.
            let e = abs1(h.at(hi, hi - 1)) + if hi >= 2 { abs1(h.at(hi - 1, hi - 2)) } else { T::zero() };
            let tq = T::from(0.75).expect("constant");
            h.at(hi, hi) + Complex::new(tq * e, tq * e)
        } else {
            wilkinson(h.at(hi - 1, hi - 1), h.at(hi - 1, hi), h.at(hi, hi - 1), h.at(hi, hi))
        };

        for k in lo..=hi {
            *h.at_mut(k, k) = h.at(k, k) - mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (cs, s) = givens(h.at(k, k), h.at(k + 1, k));
            for j in k..n {
                let (x, y) = (h.at(k, j), h.at(k + 1, j));
                *h.at_mut(k, j) = x * c(cs) + s * y;
                *h.at_mut(k + 1, j) = -s.conj() * x + y * c(cs);
            }
            *h.at_mut(k + 1, k) = Complex::zero();
            rots.push((cs, s));
        }
        for (t, &(cs, s)) in rots.iter().enumerate() {
            let k = lo + t;
            let last = (k + 2).min(hi);
            for i in 0..=last {
                let (x, y) = (h.at(i, k), h.at(i, k + 1));
                *h.at_mut(i, k) = x * c(cs) + y * s.conj();
                *h.at_mut(i, k + 1) = -x * s + y * c(cs);
            }
            for i in 0..n {
                let (x, y) = (q.at(i, k), q.at(i, k + 1));
                *q.at_mut(i, k) = x * c(cs) + y * s.conj();
                *q.at_mut(i, k + 1) = -x * s + y * c(cs);
            }
        }
        for k in lo..=hi {
            *h.at_mut(k, k) = h.at(k, k) + mu;
        }
    }
    Ok(())
}

/// Eigenpairs of the row-major `n × n` matrix `a`.
pub fn eig<T: Float>(n: usize, a: &[Complex<T>]) -> Result<Eigen<T>> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: a.len() });
    }
    if a.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::InvalidArgument("matrix has non-finite entries"));
    }
    let mut h = Mat { n, a: a.to_vec() };
    let mut q = Mat {
        n,
        a: vec![Complex::zero(); n * n],
    };
    for i in 0..n {
        *q.at_mut(i, i) = Complex::one();
    }
    hessenberg(&mut h, &mut q);
    schur(&mut h, &mut q)?;

    let values: Vec<Complex<T>> = (0..n).map(|i| h.at(i, i)).collect();
    let tnorm = h.a.iter().fold(T::zero(), |acc, x| acc.max(x.norm()));
    let smin = (T::epsilon() * tnorm).max(T::min_positive_value());

    // Eigenvectors of T, column k in y[.., k].
    let mut y = Mat {
        n,
        a: vec![Complex::zero(); n * n],
    };
    for k in 0..n {
        *y.at_mut(k, k) = Complex::one();
        for j in (0..k).rev() {
            let s: Complex<T> = (j + 1..=k).fold(Complex::zero(), |acc, l| acc + h.at(j, l) * y.at(l, k));
            let mut d = h.at(j, j) - values[k];
            if d.norm() < smin {
                d = c(smin);
            }
            *y.at_mut(j, k) = -s / d;
        }
    }
    // vectors = Q Y, Y upper triangular.
    let mut vectors = vec![Complex::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            vectors[i * n + k] = (0..=k).fold(Complex::zero(), |acc, l| acc + q.at(i, l) * y.at(l, k));
        }
    }
    for k in 0..n {
        let nrm = (0..n).fold(T::zero(), |acc, i| acc.hypot(vectors[i * n + k].norm()));
        if nrm > T::zero() {
            for i in 0..n {
                vectors[i * n + k] = vectors[i * n + k] / c(nrm);
            }
        }
    }
    Ok(Eigen { n, values, vectors })
}
