//! Anderson acceleration of the single-eigenpair iteration.
//!
//! Type-II Anderson mixing in the difference formulation: with residuals
//! `g_j = f(z_j) − z_j`, the coefficients `γ` minimize
//! `‖g_k − Σ γ_j (g_{j+1} − g_j)‖₂` and the next iterate is the affine
//! combination `Σ α_j f(z_j)` whose weights `α` are recovered from `γ`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{One, Zero};

use crate::matcore::{vec_norm, InverseGaps, Partition, C64};
use crate::solver::{anchored_start, map_single_into, EigenpairResult, IterationConfig, ProductHook, Status, TraceEntry};
use crate::{Error, Result};

/// Consecutive residual increases that clear the history.
pub const RESTART_AFTER: usize = 3;
/// Relative Tikhonov weight used when the plain least-squares solve is rank deficient.
pub const RETRY_REGULARIZATION: f64 = 1e-12;

#[derive(Clone, Debug)]
struct Entry {
    fz: Vec<C64>,
    g: Vec<C64>,
}

/// History and settings of one Anderson-mixed solve.
#[derive(Clone, Debug)]
pub struct AndersonState {
    memory: usize,
    /// Coordinate re-pinned to one after mixing, if any.
    anchor: Option<usize>,
    regularization: f64,
    /// At most `memory + 1` entries, oldest first.
    history: VecDeque<Entry>,
    last_weights: Vec<f64>,
    last_complex_weights: Vec<C64>,
    last_residual: f64,
    increases: usize,
    restarts: usize,
    fallbacks: usize,
}

impl AndersonState {
    pub fn new(memory: usize) -> Self {
        Self {
            memory,
            anchor: None,
            regularization: 0.0,
            history: VecDeque::with_capacity(memory + 1),
            last_weights: Vec::new(),
            last_complex_weights: Vec::new(),
            last_residual: f64::INFINITY,
            increases: 0,
            restarts: 0,
            fallbacks: 0,
        }
    }

    pub fn with_anchor(mut self, anchor: usize) -> Self {
        self.anchor = Some(anchor);
        self
    }

    /// Tikhonov weight applied on every solve, relative to the difference matrix norm.
    pub fn with_regularization(mut self, regularization: f64) -> Self {
        self.regularization = regularization;
        self
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    /// Number of stored differences `m_k = min(m, k)`.
    pub fn depth(&self) -> usize {
        self.history.len().saturating_sub(1)
    }

    /// Sum-to-one weights of the last mixing step, oldest iterate first.
    pub fn last_weights(&self) -> &[C64] {
        &self.last_complex_weights
    }

    /// Real parts of [`Self::last_weights`].
    pub fn last_real_weights(&self) -> &[f64] {
        &self.last_weights
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    /// Steps that fell back to the plain iterate.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    pub fn clear(&mut self) {
        self.history.clear();
        self.increases = 0;
        self.last_residual = f64::INFINITY;
    }
}

/// Solves `min ‖b − Aγ‖₂` by Gram–Schmidt QR (two passes) on the columns of
/// `A`, optionally augmented with `reg · I` below. Returns `None` when a
/// pivot falls to `tiny` or below.
fn least_squares(cols: &[Vec<C64>], b: &[C64], reg: f64, tiny: f64) -> Option<Vec<C64>> {
    let m = cols.len();
    let rows = b.len() + if reg > 0.0 { m } else { 0 };
    let extend = |v: &[C64], j: Option<usize>| {
        let mut e = v.to_vec();
        if reg > 0.0 {
            e.extend((0..m).map(|t| if Some(t) == j { C64::new(reg, 0.0) } else { C64::zero() }));
        }
        e
    };
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut r = vec![vec![C64::zero(); m]; m];
    for (j, col) in cols.iter().enumerate() {
        let mut v = extend(col, Some(j));
        for _ in 0..2 {
            for (k, qk) in q.iter().enumerate() {
                let c: C64 = qk.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(qk).for_each(|(x, y)| *x -= c * y);
                r[k][j] += c;
            }
        }
        let nrm = vec_norm(&v);
        if !(nrm > tiny) {
            return None;
        }
        r[j][j] = C64::new(nrm, 0.0);
        v.iter_mut().for_each(|x| *x /= nrm);
        q.push(v);
    }
    debug_assert!(q.iter().all(|c| c.len() == rows));
    let rhs = extend(b, None);
    let mut y: Vec<C64> = q.iter().map(|qk| qk.iter().zip(&rhs).map(|(a, b)| a.conj() * b).sum()).collect();
    for j in (0..m).rev() {
        let s: C64 = (j + 1..m).map(|k| r[j][k] * y[k]).sum();
        y[j] = (y[j] - s) / r[j][j];
    }
    y.iter().all(|x| x.re.is_finite() && x.im.is_finite()).then_some(y)
}

/// One Anderson update given the current iterate `z` and `fz = f(z)`.
///
/// Returns the mixed next iterate and records `(z, fz)` in the history.
pub fn anderson_step(state: &mut AndersonState, z: &[C64], fz: &[C64]) -> Vec<C64> {
    if state.memory == 0 {
        state.last_complex_weights = vec![C64::one()];
        state.last_weights = vec![1.0];
        return fz.to_vec();
    }
    let g: Vec<C64> = fz.iter().zip(z).map(|(f, x)| f - x).collect();
    let gn = vec_norm(&g);
    if gn > state.last_residual {
        state.increases += 1;
    } else {
        state.increases = 0;
    }
    state.last_residual = gn;
    if state.increases >= RESTART_AFTER {
        state.history.clear();
        state.increases = 0;
        state.restarts += 1;
    }

    if state.history.len() == state.memory + 1 {
        state.history.pop_front();
    }
    state.history.push_back(Entry { fz: fz.to_vec(), g });

    let mk = state.depth();
    let weights = if mk == 0 {
        vec![C64::one()]
    } else {
        let h = &state.history;
        let dg: Vec<Vec<C64>> = (0..mk)
            .map(|j| h[j + 1].g.iter().zip(&h[j].g).map(|(a, b)| a - b).collect())
            .collect();
        let scale = dg.iter().map(|c| vec_norm(c).powi(2)).sum::<f64>().sqrt();
        let current = &h[mk].g;
        let solve = |reg: f64| {
            if !(scale > 0.0) {
                return None;
            }
            least_squares(&dg, current, reg * scale, RETRY_REGULARIZATION * scale * 1e-3)
        };
        let gamma = solve(state.regularization).or_else(|| solve(RETRY_REGULARIZATION.max(state.regularization * 10.0)));
        match gamma {
            Some(gamma) => {
                // α_0 = γ_0, α_j = γ_j − γ_{j−1}, α_{m_k} = 1 − γ_{m_k−1}; oldest first.
                let mut a = Vec::with_capacity(mk + 1);
                a.push(gamma[0]);
                for j in 1..mk {
                    a.push(gamma[j] - gamma[j - 1]);
                }
                a.push(C64::one() - gamma[mk - 1]);
                a
            }
            None => {
                state.fallbacks += 1;
                let mut a = vec![C64::zero(); mk + 1];
                a[mk] = C64::one();
                a
            }
        }
    };

    let n = fz.len();
    let mut out = vec![C64::zero(); n];
    for (w, e) in weights.iter().zip(&state.history) {
        if w.is_zero() {
            continue;
        }
        out.iter_mut().zip(&e.fz).for_each(|(o, f)| *o += w * f);
    }
    if let Some(i) = state.anchor {
        let a = out[i];
        if !a.is_zero() && a != C64::one() {
            out.iter_mut().for_each(|x| *x /= a);
        }
        out[i] = C64::one();
    }
    state.last_weights = weights.iter().map(|w| w.re).collect();
    state.last_complex_weights = weights;
    out
}

/// Single-eigenpair iteration with Anderson mixing of memory `m`.
///
/// Converged means the anchored iterate satisfies
/// `‖Mz − λz‖₂ ≤ config.residual_tolerance`, `λ = d_i + (Δz)_i`.
pub fn solve_single_accelerated(
    p: &Partition,
    g: &InverseGaps,
    i: usize,
    config: &IterationConfig,
    m: usize,
) -> Result<EigenpairResult> {
    solve_single_accelerated_from(p, g, i, config, m, None, &mut ())
}

/// [`solve_single_accelerated`] with an optional warm start and a product hook.
pub fn solve_single_accelerated_from<H: ProductHook + ?Sized>(
    p: &Partition,
    g: &InverseGaps,
    i: usize,
    config: &IterationConfig,
    m: usize,
    start: Option<&[C64]>,
    hook: &mut H,
) -> Result<EigenpairResult> {
    config.validate()?;
    let n = p.dim();
    if g.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: g.dim() });
    }
    if i >= n {
        return Err(Error::AnchorOutOfRange { anchor: i, n });
    }
    let g_col = g.column(i);
    let d_i = p.diagonal()[i];
    let mut state = AndersonState::new(m).with_anchor(i);
    let mut z = anchored_start(n, i, start)?;
    let mut fz = vec![C64::zero(); n];
    let mut dz = vec![C64::zero(); n];
    let mut trace = Vec::new();

    for k in 1..=config.max_iterations {
        p.delta().mul_vec_into(&z, &mut dz);
        hook.on_matvec();
        map_single_into(&g_col, i, &z, &dz, None, &mut fz);
        let eigenvalue = d_i + dz[i];
        let z_norm = vec_norm(&z);
        let absolute = p.residual_from_product(&z, &dz, eigenvalue);
        let step = fz.iter().zip(&z).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() / z_norm;
        if config.record_trace {
            trace.push(TraceEntry {
                step,
                residual: absolute / z_norm,
            });
        }
        let status = if absolute <= config.residual_tolerance {
            Some(Status::Converged)
        } else if !(absolute.is_finite() && vec_norm(&fz) <= config.divergence_threshold) {
            Some(Status::Diverged)
        } else if k == config.max_iterations {
            Some(Status::MaxIterations)
        } else {
            None
        };
        if let Some(status) = status {
            return Ok(EigenpairResult {
                z,
                eigenvalue,
                anchor: i,
                iterations: k,
                final_step: step,
                residual: absolute / z_norm,
                status,
                matvecs: k,
                trace,
            });
        }
        z = anderson_step(&mut state, &z, &fz);
    }
    unreachable!("max_iterations is validated to be positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve_single;
    use crate::testgen::two_by_two;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn zero_memory_returns_plain_iterate() {
        let mut s = AndersonState::new(0);
        let z = [c(1.0), c(2.0)];
        let fz = [c(0.5), c(-1.0)];
        assert_eq!(anderson_step(&mut s, &z, &fz), fz.to_vec());
        assert_eq!(anderson_step(&mut s, &fz, &z), z.to_vec());
    }

    #[test]
    fn affine_scalar_map_is_solved_by_secant_step() {
        let (a, b) = (0.7, 2.0);
        let fixed = b / (1.0 - a);
        for x0 in [-5.0, 0.0, 3.0, 100.0] {
            let mut s = AndersonState::new(1);
            let mut x = vec![c(x0)];
            let mut steps = 0;
            while (x[0].re - fixed).abs() > 1e-12 * fixed {
                let fx = vec![x[0] * a + b];
                x = anderson_step(&mut s, &x, &fx);
                steps += 1;
                assert!(steps <= 3, "x0 = {x0}");
            }
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let p = two_by_two(c(0.3));
        let g = InverseGaps::new(&p).unwrap();
        let mut s = AndersonState::new(5).with_anchor(0);
        let mut z = vec![c(1.0), c(0.0)];
        for _ in 0..6 {
            let fz = crate::solver::apply_map_single(&p, &g, 0, &z).unwrap();
            z = anderson_step(&mut s, &z, &fz);
            let total: C64 = s.last_weights().iter().sum();
            assert!((total - c(1.0)).norm() <= 1e-12);
            assert_eq!(z[0], c(1.0));
        }
    }

    #[test]
    fn zero_memory_matches_plain_solver_iterates() {
        let p = two_by_two(c(0.3));
        let g = InverseGaps::new(&p).unwrap();
        let cfg = IterationConfig {
            residual_tolerance: f64::MIN_POSITIVE,
            max_iterations: 25,
            ..Default::default()
        };
        let acc = solve_single_accelerated(&p, &g, 0, &cfg, 0).unwrap();
        let plain = solve_single(&p, &g, 0, &IterationConfig { tolerance: f64::MIN_POSITIVE, ..cfg.clone() }).unwrap();
        assert_eq!(acc.z, plain.z);
        assert_eq!(acc.matvecs, acc.iterations);
    }

    #[test]
    fn zero_perturbation_converges_immediately() {
        let p = two_by_two(c(0.0));
        let g = InverseGaps::new(&p).unwrap();
        let r = solve_single_accelerated(&p, &g, 1, &IterationConfig::default(), 5).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.eigenvalue, c(1.0));
    }

    #[test]
    fn converges_beyond_certified_bound() {
        let p = two_by_two(c(0.4));
        let g = InverseGaps::new(&p).unwrap();
        assert!(!crate::matcore::certify(&p, &g).certified);
        let r = solve_single_accelerated(&p, &g, 0, &IterationConfig::default(), 5).unwrap();
        assert_eq!(r.status, Status::Converged);
        let exact = (1.0 - (1.0f64 + 4.0 * 0.16).sqrt()) / 2.0;
        assert!((r.eigenvalue - c(exact)).norm() < 1e-8);
        assert!(r.residual <= 1e-8);
    }

    #[test]
    fn rank_deficient_history_falls_back() {
        let mut s = AndersonState::new(3);
        let z = [c(1.0), c(1.0)];
        let fz = [c(1.0), c(2.0)];
        anderson_step(&mut s, &z, &fz);
        let out = anderson_step(&mut s, &z, &fz);
        assert_eq!(out, fz.to_vec());
        assert_eq!(s.fallbacks(), 1);
    }
}
