//! Iterative perturbation theory (IPT) eigensolvers for near-diagonal matrices.
//!
//! A square matrix is split as `M = D + Δ` with `D` diagonal. Eigenvectors are
//! computed as attracting fixed points of a quadratic map built from `Δ` and the
//! inverse diagonal gaps `G_jk = 1/(d_j - d_k)`:
//!
//! * [`solver::solve_single`] iterates the single-column map for one eigenpair,
//! * [`solver::solve_full`] iterates the matrix map for the whole spectrum,
//! * [`accel`] adds Anderson mixing to the single-column iteration,
//! * [`rspt`] computes Rayleigh–Schrödinger coefficients and checks that the
//!   IPT iterates agree with the series to the expected order,
//! * [`refine`] turns a low-precision eigenbasis into a near-diagonal problem
//!   and polishes it in double precision,
//! * [`explorer`] classifies the dynamics over a grid of complex couplings,
//! * [`testgen`] builds the seeded matrix families used throughout the tests.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x <= bound)` is deliberate throughout: NaN must take the failing branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod accel;
mod error;
pub mod explorer;
pub mod matcore;
pub mod refine;
pub mod rspt;
pub mod solver;
pub mod testgen;

pub use error::{Error, Result};
pub use matcore::{
    build_gaps, certify, partition, spectral_norm, ComplexMatrix, ConvergenceCertificate,
    CsrMatrix, DenseMatrix, InverseGaps, NormEstimate, Partition, C64, CERTIFICATE_BOUND,
};
pub use solver::{
    apply_map_full, apply_map_single, solve_full, solve_single, solve_single_continuation,
    EigenpairResult, IterationConfig, SpectrumResult, Status,
};
pub use accel::{anderson_step, solve_single_accelerated, AndersonState};
pub use explorer::{classify_point, scan_grid, Classification, Grid, ScanCell, ScanSpec};
pub use refine::{make_low_precision_seed, refine_spectrum, RefineConfig, RefinementResult};
pub use rspt::{containment_check, rs_coefficients, rs_partial_sum, RSExpansion};
pub use testgen::{FamilyKind, FamilySpec};
