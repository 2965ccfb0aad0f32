//! Classification of the single-column iteration over the complex `ε`-plane.
//!
//! Every cell starts from `e_i` and is classified independently, so a scan is
//! a pure function of `ε`. Order of the tests: step convergence, escape past
//! the divergence threshold, recurrence in the trailing window, otherwise
//! bounded and nonperiodic.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{One, Zero};

use crate::matcore::{vec_norm, InverseGaps, Partition, C64};
use crate::solver::map_single_into;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidArgument("grid resolution must be at least 1x1"));
        }
        let b = [self.re_min, self.re_max, self.im_min, self.im_max];
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("grid bounds must be finite"));
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * (k as f64 / (n - 1) as f64)
        }
    }

    /// `ε` of cell `(ix, iy)`; both axes include their endpoints and `iy = 0` is `im_min`.
    pub fn point(&self, ix: usize, iy: usize) -> C64 {
        C64::new(
            Self::axis(self.re_min, self.re_max, self.nx, ix),
            Self::axis(self.im_min, self.im_max, self.ny, iy),
        )
    }
}

#[derive(Clone, Debug)]
pub struct ScanSpec {
    family: Partition,
    gaps: InverseGaps,
    pub anchor: usize,
    pub grid: Grid,
    pub max_iterations: usize,
    pub divergence_threshold: f64,
    /// Relative step size that counts as convergence.
    pub tolerance: f64,
    pub period_window: usize,
    /// Relative recurrence tolerance for cycle detection.
    pub period_tolerance: f64,
    /// Shrink factor of the nonautonomous schedule `ε(1 − αᵏ)`.
    pub continuation: Option<f64>,
}

impl ScanSpec {
    /// Scan of `diag(d) + εΔ₀` where `family` holds `d` and the unit `Δ₀`.
    pub fn new(family: Partition, anchor: usize, grid: Grid) -> Result<Self> {
        if anchor >= family.dim() {
            return Err(Error::AnchorOutOfRange { anchor, n: family.dim() });
        }
        grid.validate()?;
        let gaps = InverseGaps::new(&family)?;
        Ok(Self {
            family,
            gaps,
            anchor,
            grid,
            max_iterations: 2000,
            divergence_threshold: 1e8,
            tolerance: 100.0 * f64::EPSILON,
            period_window: 64,
            period_tolerance: 1e-9,
            continuation: None,
        })
    }

    pub fn family(&self) -> &Partition {
        &self.family
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.max_iterations == 0 || self.period_window < 4 {
            return Err(Error::InvalidArgument("iteration budget or period window too small"));
        }
        if let Some(a) = self.continuation {
            if !(0.0..1.0).contains(&a) {
                return Err(Error::InvalidArgument("continuation factor must lie in [0, 1)"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Classification {
    ConvergedFixedPoint,
    PeriodicCycle(usize),
    BoundedNonperiodic,
    /// Step at which the iterate norm first exceeded the threshold.
    Diverged(usize),
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::ConvergedFixedPoint => "converged",
            Classification::PeriodicCycle(_) => "periodic",
            Classification::BoundedNonperiodic => "bounded",
            Classification::Diverged(_) => "diverged",
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, Classification::ConvergedFixedPoint)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanCell {
    pub eps: C64,
    pub classification: Classification,
    pub steps_to_converge: Option<usize>,
}

/// Smallest `p ≥ 2` such that every iterate of the window recurs after `p` steps.
fn detect_period(window: &VecDeque<Vec<C64>>, tol: f64) -> Option<usize> {
    let w = window.len();
    (2..=w / 2).find(|&p| {
        (p..w).all(|k| {
            let (a, b) = (&window[k], &window[k - p]);
            let d = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            d <= tol * vec_norm(a).max(1.0)
        })
    })
}

/// Classifies the orbit of `e_i` under the map at `ε`.
pub fn classify_point(spec: &ScanSpec, eps: C64) -> ScanCell {
    let p = &spec.family;
    let n = p.dim();
    let i = spec.anchor;
    let g_col = spec.gaps.column(i);
    let mut z = vec![C64::zero(); n];
    z[i] = C64::one();
    let mut next = vec![C64::zero(); n];
    let mut dz = vec![C64::zero(); n];
    let mut window: VecDeque<Vec<C64>> = VecDeque::with_capacity(spec.period_window + 1);
    let mut alpha_pow = 1.0;
    let cell = |classification, steps| ScanCell {
        eps,
        classification,
        steps_to_converge: steps,
    };

    for k in 1..=spec.max_iterations {
        let scale = match spec.continuation {
            Some(a) => {
                alpha_pow *= a;
                1.0 - alpha_pow
            }
            None => 1.0,
        };
        p.delta().mul_vec_into(&z, &mut dz);
        let e = eps * scale;
        dz.iter_mut().for_each(|x| *x *= e);
        map_single_into(&g_col, i, &z, &dz, None, &mut next);
        let step = next.iter().zip(&z).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() / vec_norm(&z);
        if step <= spec.tolerance && scale == 1.0 {
            return cell(Classification::ConvergedFixedPoint, Some(k));
        }
        if !(vec_norm(&next) <= spec.divergence_threshold) {
            return cell(Classification::Diverged(k), None);
        }
        core::mem::swap(&mut z, &mut next);
        if k + spec.period_window > spec.max_iterations {
            window.push_back(z.clone());
        }
    }
    match detect_period(&window, spec.period_tolerance) {
        Some(period) => cell(Classification::PeriodicCycle(period), None),
        None => cell(Classification::BoundedNonperiodic, None),
    }
}

/// Cells in row-major order, `cells[iy * nx + ix]`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanGrid {
    pub grid: Grid,
    pub cells: Vec<ScanCell>,
}

impl ScanGrid {
    pub fn cell(&self, ix: usize, iy: usize) -> &ScanCell {
        &self.cells[iy * self.grid.nx + ix]
    }

    pub fn count(&self, pred: impl Fn(&Classification) -> bool) -> usize {
        self.cells.iter().filter(|c| pred(&c.classification)).count()
    }
}

/// Classifies one row of the grid.
pub fn scan_row(spec: &ScanSpec, iy: usize) -> Vec<ScanCell> {
    (0..spec.grid.nx).map(|ix| classify_point(spec, spec.grid.point(ix, iy))).collect()
}

pub fn scan_grid(spec: &ScanSpec) -> Result<ScanGrid> {
    spec.validate()?;
    let cells = (0..spec.grid.ny).flat_map(|iy| scan_row(spec, iy)).collect();
    Ok(ScanGrid { grid: spec.grid, cells })
}

/// Bisects the segment from a converging `inside` to a non-converging
/// `outside` until it is shorter than `tol`; returns the midpoint.
pub fn locate_boundary(spec: &ScanSpec, inside: C64, outside: C64, tol: f64) -> Result<C64> {
    spec.validate()?;
    if !classify_point(spec, inside).classification.is_converged() {
        return Err(Error::InvalidArgument("inner endpoint does not converge"));
    }
    if classify_point(spec, outside).classification.is_converged() {
        return Err(Error::InvalidArgument("outer endpoint converges"));
    }
    let (mut a, mut b) = (inside, outside);
    while (b - a).norm() > tol {
        let mid = (a + b) * 0.5;
        if classify_point(spec, mid).classification.is_converged() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((a + b) * 0.5)
}

/// The two `ε` on the stability boundary of the two-dimensional example with
/// multiplier `e^{it}`: roots of `4ε² + e^{it}(2 − e^{it}) = 0`.
pub fn cardioid_points(t: f64) -> [C64; 2] {
    let w = C64::new(t.cos(), t.sin());
    let r = (-(w * (C64::new(2.0, 0.0) - w)) / 4.0).sqrt();
    [r, -r]
}
