//! Fixed-point eigensolvers.
//!
//! For a partition `M = D + Δ` with inverse gaps `G`, the eigenvector closest
//! to `e_i`, normalized so that its `i`-th coordinate is one, is a fixed point of
//!
//! ```text
//! f_i(z) = e_i + g_i ∘ (z (Δz)_i − Δz)
//! ```
//!
//! and the full eigenvector matrix with unit diagonal is a fixed point of
//!
//! ```text
//! F(Z) = I + G ∘ (Z 𝒟(ΔZ) − ΔZ).
//! ```
//!
//! Eigenvalues are read off as `λ_i = d_i + (Δz)_i`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{One, Zero};

use crate::matcore::{vec_norm, DenseMatrix, InverseGaps, Partition, C64};
use crate::refine::lu::lu_factor;
use crate::{Error, Result};

/// Stopping and bookkeeping parameters shared by the iterative solvers.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationConfig {
    /// Relative step tolerance η.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Iterate norm above which the run is declared divergent.
    pub divergence_threshold: f64,
    pub record_trace: bool,
    /// Residual threshold `‖Mz − λz‖/‖z‖` used by the accelerated solver.
    pub residual_tolerance: f64,
    /// Estimate `σ_min(Z)` after a full-spectrum solve (costs one LU).
    pub estimate_min_singular_value: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            tolerance: 100.0 * f64::EPSILON,
            max_iterations: 1000,
            divergence_threshold: 1e8,
            record_trace: false,
            residual_tolerance: 1e-8,
            estimate_min_singular_value: true,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive"));
        }
        if !(self.divergence_threshold > 1.0) {
            return Err(Error::InvalidArgument("divergence threshold must exceed 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Status {
    Converged,
    MaxIterations,
    Diverged,
}

impl Status {
    pub fn is_converged(self) -> bool {
        self == Status::Converged
    }
}

/// Step size and residual of one iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceEntry {
    pub step: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EigenpairResult {
    /// Eigenvector with `z[anchor] == 1`.
    pub z: Vec<C64>,
    pub eigenvalue: C64,
    pub anchor: usize,
    pub iterations: usize,
    /// `‖z − f_i(z)‖/‖z‖` at the returned vector.
    pub final_step: f64,
    /// `‖Mz − λz‖₂/‖z‖₂`.
    pub residual: f64,
    pub status: Status,
    /// Number of products with `Δ`.
    pub matvecs: usize,
    pub trace: Vec<TraceEntry>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectrumResult {
    /// Eigenvectors as columns, unit diagonal.
    pub z: DenseMatrix,
    pub eigenvalues: Vec<C64>,
    pub iterations: usize,
    /// `‖Z − F(Z)‖_F/‖Z‖_F` at the returned matrix.
    pub final_step: f64,
    /// `‖MZ − ZΛ‖_F`.
    pub residual_frobenius: f64,
    /// `‖M z_k − λ_k z_k‖/‖z_k‖` for every column.
    pub column_residuals: Vec<f64>,
    /// Estimate of the smallest singular value of `Z`; NaN when not requested.
    pub min_singular_value_estimate: f64,
    pub status: Status,
    /// Number of products with `Δ`.
    pub matmuls: usize,
    pub trace: Vec<TraceEntry>,
}

/// Notified every time a solver multiplies by `Δ`.
///
/// Used for counting and by the benchmark harness to inject artificial cost.
pub trait ProductHook {
    fn on_matvec(&mut self) {}
    fn on_matmul(&mut self) {}
}

impl ProductHook for () {}

fn check_dims(p: &Partition, g: &InverseGaps) -> Result<()> {
    if g.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: g.dim(),
        });
    }
    Ok(())
}

fn check_anchor(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::AnchorOutOfRange { anchor: i, n });
    }
    Ok(())
}

/// Writes `f_i(z)` into `out` given the product `Δz`.
///
/// With `scale = Some(s)` the perturbation is replaced by `sΔ`.
#[inline]
pub(crate) fn map_single_into(
    g_col: &[C64],
    i: usize,
    z: &[C64],
    delta_z: &[C64],
    scale: Option<f64>,
    out: &mut [C64],
) {
    let pivot = match scale {
        Some(s) => delta_z[i] * s,
        None => delta_z[i],
    };
    for (j, o) in out.iter_mut().enumerate() {
        let dz = match scale {
            Some(s) => delta_z[j] * s,
            None => delta_z[j],
        };
        *o = g_col[j] * (z[j] * pivot - dz);
    }
    out[i] = C64::one();
}

/// One application of the single-column map `f_i`.
pub fn apply_map_single(p: &Partition, g: &InverseGaps, i: usize, z: &[C64]) -> Result<Vec<C64>> {
    check_dims(p, g)?;
    check_anchor(i, p.dim())?;
    if z.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: z.len(),
        });
    }
    let dz = p.delta().mul_vec(z);
    let mut out = vec![C64::zero(); z.len()];
    map_single_into(&g.column(i), i, z, &dz, None, &mut out);
    Ok(out)
}

/// Algorithm for one eigenpair: iterate `z ← f_i(z)` from `e_i`.
pub fn solve_single(p: &Partition, g: &InverseGaps, i: usize, config: &IterationConfig) -> Result<EigenpairResult> {
    solve_single_from(p, g, i, config, None, &mut ())
}

/// [`solve_single`] with an optional warm start and a product hook.
///
/// The warm start is rescaled so that its anchor coordinate is one.
pub fn solve_single_from<H: ProductHook + ?Sized>(
    p: &Partition,
    g: &InverseGaps,
    i: usize,
    config: &IterationConfig,
    start: Option<&[C64]>,
    hook: &mut H,
) -> Result<EigenpairResult> {
    single_iteration(p, g, i, config, start, Schedule::Autonomous, hook)
}

/// Nonautonomous iteration: step `k` uses the perturbation `(1 − αᵏ)Δ`.
///
/// The effective coupling ramps up to the target, continuing the fixed point
/// from the unperturbed problem. Convergence is only declared once the scale
/// has reached one in floating point, so the returned pair belongs to `M`.
pub fn solve_single_continuation(
    p: &Partition,
    g: &InverseGaps,
    i: usize,
    config: &IterationConfig,
    alpha: f64,
) -> Result<EigenpairResult> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument("continuation factor must lie in [0, 1)"));
    }
    single_iteration(p, g, i, config, None, Schedule::Continuation(alpha), &mut ())
}

#[derive(Clone, Copy)]
enum Schedule {
    Autonomous,
    Continuation(f64),
}

pub(crate) fn anchored_start(n: usize, i: usize, start: Option<&[C64]>) -> Result<Vec<C64>> {
    match start {
        None => {
            let mut z = vec![C64::zero(); n];
            z[i] = C64::one();
            Ok(z)
        }
        Some(s) => {
            if s.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: s.len() });
            }
            if s[i].is_zero() {
                return Err(Error::InvalidArgument("warm start vanishes at the anchor"));
            }
            let a = s[i];
            let mut z: Vec<C64> = s.iter().map(|x| x / a).collect();
            z[i] = C64::one();
            Ok(z)
        }
    }
}

fn single_iteration<H: ProductHook + ?Sized>(
    p: &Partition,
    g: &InverseGaps,
    i: usize,
    config: &IterationConfig,
    start: Option<&[C64]>,
    schedule: Schedule,
    hook: &mut H,
) -> Result<EigenpairResult> {
    config.validate()?;
    check_dims(p, g)?;
    let n = p.dim();
    check_anchor(i, n)?;
    let g_col = g.column(i);
    let d_i = p.diagonal()[i];

    let mut z = anchored_start(n, i, start)?;
    let mut next = vec![C64::zero(); n];
    let mut dz = vec![C64::zero(); n];
    let mut trace = Vec::new();
    let mut alpha_pow = 1.0;
    let mut matvecs = 0;

    for k in 1..=config.max_iterations {
        let scale = match schedule {
            Schedule::Autonomous => None,
            Schedule::Continuation(alpha) => {
                alpha_pow *= alpha;
                Some(1.0 - alpha_pow)
            }
        };
        p.delta().mul_vec_into(&z, &mut dz);
        matvecs += 1;
        hook.on_matvec();
        map_single_into(&g_col, i, &z, &dz, scale, &mut next);

        let s = scale.unwrap_or(1.0);
        let z_norm = vec_norm(&z);
        let step = distance(&z, &next) / z_norm;
        let eigenvalue = d_i + dz[i] * s;
        let residual = scaled_residual(p, &z, &dz, s, eigenvalue) / z_norm;
        if config.record_trace {
            trace.push(TraceEntry { step, residual });
        }
        let result = |status, z: Vec<C64>, trace| EigenpairResult {
            z,
            eigenvalue,
            anchor: i,
            iterations: k,
            final_step: step,
            residual,
            status,
            matvecs,
            trace,
        };
        if step <= config.tolerance && s == 1.0 {
            return Ok(result(Status::Converged, z, trace));
        }
        let next_norm = vec_norm(&next);
        if !(next_norm <= config.divergence_threshold) {
            return Ok(result(Status::Diverged, z, trace));
        }
        if k == config.max_iterations {
            return Ok(result(Status::MaxIterations, z, trace));
        }
        core::mem::swap(&mut z, &mut next);
    }
    unreachable!("max_iterations is validated to be positive")
}

fn scaled_residual(p: &Partition, z: &[C64], dz: &[C64], s: f64, lambda: C64) -> f64 {
    if s == 1.0 {
        p.residual_from_product(z, dz, lambda)
    } else {
        let sdz: Vec<C64> = dz.iter().map(|x| x * s).collect();
        p.residual_from_product(z, &sdz, lambda)
    }
}

fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Writes `F(Z)` into `out` given `ΔZ`.
pub(crate) fn map_full_into(g: &DenseMatrix, z: &DenseMatrix, delta_z: &DenseMatrix, out: &mut DenseMatrix) {
    let n = z.rows();
    for j in 0..n {
        let gr = g.row(j);
        let zr = z.row(j);
        let dzr = delta_z.row(j);
        let or = out.row_mut(j);
        for k in 0..n {
            or[k] = gr[k] * (zr[k] * delta_z[(k, k)] - dzr[k]);
        }
        or[j] = C64::one();
    }
}

/// One application of the matrix map `F`.
pub fn apply_map_full(p: &Partition, g: &InverseGaps, z: &DenseMatrix) -> Result<DenseMatrix> {
    check_dims(p, g)?;
    let n = p.dim();
    if z.rows() != n || z.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: z.rows(),
        });
    }
    let dz = p.delta().mul_dense(z);
    let mut out = DenseMatrix::zeros(n, n);
    map_full_into(&g.to_dense(), z, &dz, &mut out);
    Ok(out)
}

/// Algorithm for the full spectrum: iterate `Z ← F(Z)` from the identity.
pub fn solve_full(p: &Partition, g: &InverseGaps, config: &IterationConfig) -> Result<SpectrumResult> {
    solve_full_from(p, g, config, None, &mut ())
}

/// [`solve_full`] with an optional warm start and a product hook.
///
/// Each column of the warm start is rescaled to have a unit diagonal entry.
pub fn solve_full_from<H: ProductHook + ?Sized>(
    p: &Partition,
    g: &InverseGaps,
    config: &IterationConfig,
    start: Option<&DenseMatrix>,
    hook: &mut H,
) -> Result<SpectrumResult> {
    config.validate()?;
    check_dims(p, g)?;
    let n = p.dim();
    let gd = g.to_dense();
    let mut z = match start {
        None => DenseMatrix::identity(n),
        Some(s) => {
            if s.rows() != n || s.cols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: s.rows() });
            }
            let diag = s.diagonal();
            if diag.iter().any(|x| x.is_zero()) {
                return Err(Error::InvalidArgument("warm start has a zero diagonal entry"));
            }
            let mut z = s.clone();
            z.scale_columns(&diag.iter().map(|x| x.inv()).collect::<Vec<_>>());
            for k in 0..n {
                z[(k, k)] = C64::one();
            }
            z
        }
    };
    let mut dz = DenseMatrix::zeros(n, n);
    let mut next = DenseMatrix::zeros(n, n);
    let mut trace = Vec::new();
    let mut matmuls = 0;
    let mut iterations = 0;
    let mut step = f64::NAN;
    let mut status = Status::MaxIterations;

    for k in 1..=config.max_iterations {
        iterations = k;
        p.delta().mul_dense_into(&z, &mut dz);
        matmuls += 1;
        hook.on_matmul();
        map_full_into(&gd, &z, &dz, &mut next);
        step = z.distance(&next) / z.frobenius_norm();
        if config.record_trace {
            let lambda = eigenvalues_from(p, &dz);
            let residual = spectrum_residuals(p, &z, &dz, &lambda).0;
            trace.push(TraceEntry { step, residual });
        }
        if step <= config.tolerance {
            status = Status::Converged;
            break;
        }
        if !(next.frobenius_norm() <= config.divergence_threshold) {
            status = Status::Diverged;
            break;
        }
        if k == config.max_iterations {
            break;
        }
        core::mem::swap(&mut z, &mut next);
    }

    let eigenvalues = eigenvalues_from(p, &dz);
    let (residual_frobenius, column_residuals) = spectrum_residuals(p, &z, &dz, &eigenvalues);
    let min_singular_value_estimate = if config.estimate_min_singular_value {
        min_singular_value(&z)
    } else {
        f64::NAN
    };
    Ok(SpectrumResult {
        z,
        eigenvalues,
        iterations,
        final_step: step,
        residual_frobenius,
        column_residuals,
        min_singular_value_estimate,
        status,
        matmuls,
        trace,
    })
}

fn eigenvalues_from(p: &Partition, dz: &DenseMatrix) -> Vec<C64> {
    p.diagonal().iter().enumerate().map(|(k, &d)| d + dz[(k, k)]).collect()
}

/// `‖DZ + ΔZ − ZΛ‖_F` and the relative residual of every column.
fn spectrum_residuals(p: &Partition, z: &DenseMatrix, dz: &DenseMatrix, lambda: &[C64]) -> (f64, Vec<f64>) {
    let n = z.rows();
    let mut col_res = vec![0.0; n];
    let mut col_norm = vec![0.0; n];
    for j in 0..n {
        let dj = p.diagonal()[j];
        for k in 0..n {
            let zjk = z[(j, k)];
            col_res[k] += (dj * zjk + dz[(j, k)] - zjk * lambda[k]).norm_sqr();
            col_norm[k] += zjk.norm_sqr();
        }
    }
    let total = col_res.iter().sum::<f64>().sqrt();
    let rel = col_res.iter().zip(&col_norm).map(|(r, z)| (r / z).sqrt()).collect();
    (total, rel)
}

/// Smallest singular value of `z` by inverse iteration on `zᴴz`.
///
/// Returns zero when `z` is exactly singular.
pub fn min_singular_value(z: &DenseMatrix) -> f64 {
    let n = z.rows();
    if n == 0 {
        return 0.0;
    }
    let Ok(lu) = lu_factor(z) else {
        return 0.0;
    };
    let mut x: Vec<C64> = (0..n)
        .map(|j| C64::new(1.0 + ((j * 37) % 11) as f64 / 11.0, ((j * 13) % 5) as f64 / 10.0))
        .collect();
    let nrm = vec_norm(&x);
    x.iter_mut().for_each(|v| *v /= nrm);
    let mut mu = 0.0;
    for _ in 0..100 {
        lu.solve_adjoint_in_place(&mut x);
        lu.solve_in_place(&mut x);
        let next = vec_norm(&x);
        if !next.is_finite() || next == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= next);
        let settled = (next - mu).abs() <= 1e-10 * next;
        mu = next;
        if settled {
            break;
        }
    }
    1.0 / mu.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{partition, ComplexMatrix};

    fn two_by_two(eps: f64) -> (Partition, InverseGaps) {
        let m: ComplexMatrix = DenseMatrix::from_real(2, 2, &[0.0, eps, eps, 1.0]).unwrap().into();
        let p = partition(&m).unwrap();
        let g = InverseGaps::new(&p).unwrap();
        (p, g)
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn single_map_closed_form() {
        let (p, g) = two_by_two(0.1);
        let z = apply_map_single(&p, &g, 0, &[c(1.0), c(0.0)]).unwrap();
        assert_eq!(z[0], c(1.0));
        assert!((z[1] - c(-0.1)).norm() < 1e-16);
    }

    #[test]
    fn zero_perturbation_gives_basis_vector() {
        let (p, g) = two_by_two(0.0);
        let z = apply_map_single(&p, &g, 1, &[c(0.3), c(-2.0)]).unwrap();
        assert_eq!(z, vec![c(0.0), c(1.0)]);
        let r = solve_single(&p, &g, 1, &IterationConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.eigenvalue, c(1.0));
    }

    #[test]
    fn two_by_two_fixed_point() {
        let (p, g) = two_by_two(0.1);
        let r = solve_single(&p, &g, 0, &IterationConfig::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        let x = (1.0 - 1.04f64.sqrt()) / 0.2;
        assert!((r.z[1] - c(x)).norm() < 1e-13);
        assert!((r.eigenvalue - c(0.1 * x)).norm() < 1e-13);
        assert_eq!(r.z[0], c(1.0));
    }

    #[test]
    fn beyond_flip_bifurcation_does_not_converge() {
        let (p, g) = two_by_two(1.0);
        let r = solve_single(&p, &g, 0, &IterationConfig::default()).unwrap();
        assert_ne!(r.status, Status::Converged);
    }

    #[test]
    fn full_map_closed_form() {
        let (p, g) = two_by_two(0.1);
        let f = apply_map_full(&p, &g, &DenseMatrix::identity(2)).unwrap();
        let expected = DenseMatrix::from_real(2, 2, &[1.0, 0.1, -0.1, 1.0]).unwrap();
        assert!(f.distance(&expected) < 1e-16);
    }

    #[test]
    fn full_solve_uncertified_but_stable() {
        let (p, g) = two_by_two(0.3);
        assert!(!crate::certify(&p, &g).certified);
        let r = solve_full(&p, &g, &IterationConfig::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        let disc = (1.0f64 + 4.0 * 0.09).sqrt();
        assert!((r.eigenvalues[0] - c((1.0 - disc) / 2.0)).norm() < 1e-13);
        assert!((r.eigenvalues[1] - c((1.0 + disc) / 2.0)).norm() < 1e-13);
    }

    #[test]
    fn diagonal_full_solve_takes_one_iteration() {
        let (p, g) = two_by_two(0.0);
        let r = solve_full(&p, &g, &IterationConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.z, DenseMatrix::identity(2));
        assert_eq!(r.eigenvalues, vec![c(0.0), c(1.0)]);
        assert!((r.min_singular_value_estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn warm_start_is_renormalized() {
        let (p, g) = two_by_two(0.1);
        let cold = solve_single(&p, &g, 0, &IterationConfig::default()).unwrap();
        let start = [c(2.0), c(-0.2)];
        let warm = solve_single_from(&p, &g, 0, &IterationConfig::default(), Some(&start), &mut ()).unwrap();
        assert_eq!(warm.status, Status::Converged);
        assert!(warm.iterations < cold.iterations);
        assert!((warm.z[1] - cold.z[1]).norm() < 1e-14);
    }

    #[test]
    fn bad_inputs_are_reported() {
        let (p, g) = two_by_two(0.1);
        assert_eq!(
            solve_single(&p, &g, 2, &IterationConfig::default()),
            Err(Error::AnchorOutOfRange { anchor: 2, n: 2 })
        );
        let bad = IterationConfig {
            tolerance: 0.0,
            ..Default::default()
        };
        assert!(solve_full(&p, &g, &bad).is_err());
        assert!(solve_single_continuation(&p, &g, 0, &IterationConfig::default(), 1.0).is_err());
    }

    #[test]
    fn continuation_with_zero_factor_matches_plain() {
        let (p, g) = two_by_two(0.4);
        let cfg = IterationConfig {
            record_trace: true,
            ..Default::default()
        };
        let plain = solve_single(&p, &g, 0, &cfg).unwrap();
        let cont = solve_single_continuation(&p, &g, 0, &cfg, 0.0).unwrap();
        assert_eq!(plain, cont);
    }

    #[test]
    fn continuation_on_diagonal_returns_basis_vector() {
        let (p, g) = two_by_two(0.0);
        let r = solve_single_continuation(&p, &g, 1, &IterationConfig::default(), 0.9).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.z, vec![c(0.0), c(1.0)]);
    }

    #[test]
    fn singular_matrix_has_zero_min_singular_value() {
        let z = DenseMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(min_singular_value(&z), 0.0);
        let z = DenseMatrix::from_real(2, 2, &[3.0, 0.0, 0.0, 0.5]).unwrap();
        assert!((min_singular_value(&z) - 0.5).abs() < 1e-9);
    }
}
