//! JSON run reports.
//!
//! Field order is the declaration order, so output is stable. Every float goes
//! through [`crate::float`], which keeps NaN and infinities representable and
//! makes `parse(serialize(report)) == report` hold exactly.

use ipt_core::explorer::{Classification, ScanGrid};
use ipt_core::rspt::ContainmentReport;
use ipt_core::solver::TraceEntry;
use ipt_core::{ConvergenceCertificate, EigenpairResult, RefinementResult, SpectrumResult, Status, C64};
use serde::{Deserialize, Serialize};

use crate::float;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Arguments as given on the command line.
    pub command: Vec<String>,
    pub config: RunConfig,
    pub timings: Vec<PhaseTiming>,
    pub counters: Counters,
    pub payload: Payload,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Family spec or matrix path.
    pub source: String,
    #[serde(with = "float::real")]
    pub tolerance: f64,
    pub max_iterations: usize,
    #[serde(with = "float::real")]
    pub divergence_threshold: f64,
    #[serde(with = "float::real")]
    pub residual_tolerance: f64,
    pub anchor: Option<usize>,
    pub anderson_m: Option<usize>,
    #[serde(with = "float::opt_real")]
    pub continuation_alpha: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: String,
    #[serde(with = "float::real")]
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub iterations: usize,
    pub matvecs: usize,
    pub matmuls: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Spectrum(SpectrumPayload),
    Eigenpair(EigenpairPayload),
    Refinement(RefinementPayload),
    Scan(ScanSummary),
    RsCheck(RsCheckPayload),
    Generated(GeneratedPayload),
    Bench(crate::bench::BenchReport),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificatePayload {
    #[serde(with = "float::real")]
    pub g_norm: f64,
    #[serde(with = "float::real")]
    pub delta_norm: f64,
    #[serde(with = "float::real")]
    pub product: f64,
    pub certified: bool,
    /// A norm estimate fell back to an upper bound.
    pub conservative: bool,
}

impl From<&ConvergenceCertificate> for CertificatePayload {
    fn from(c: &ConvergenceCertificate) -> Self {
        Self {
            g_norm: c.g_norm,
            delta_norm: c.delta_norm,
            product: c.product,
            certified: c.certified,
            conservative: c.conservative,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    #[serde(with = "float::real")]
    pub step: f64,
    #[serde(with = "float::real")]
    pub residual: f64,
}

fn trace(t: &[TraceEntry]) -> Vec<TracePoint> {
    t.iter().map(|e| TracePoint { step: e.step, residual: e.residual }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPayload {
    pub n: usize,
    pub status: Status,
    pub iterations: usize,
    #[serde(with = "float::real")]
    pub final_step: f64,
    #[serde(with = "float::real")]
    pub residual_frobenius: f64,
    #[serde(with = "float::real_vec")]
    pub column_residuals: Vec<f64>,
    #[serde(with = "float::real")]
    pub min_singular_value_estimate: f64,
    #[serde(with = "float::complex_vec")]
    pub eigenvalues: Vec<C64>,
    pub certificate: Option<CertificatePayload>,
    /// Row-major eigenvector matrix, only when requested.
    #[serde(with = "float::complex_vec")]
    pub vectors: Vec<C64>,
    pub trace: Vec<TracePoint>,
}

impl SpectrumPayload {
    pub fn new(r: &SpectrumResult, certificate: Option<&ConvergenceCertificate>, vectors: bool) -> Self {
        Self {
            n: r.eigenvalues.len(),
            status: r.status,
            iterations: r.iterations,
            final_step: r.final_step,
            residual_frobenius: r.residual_frobenius,
            column_residuals: r.column_residuals.clone(),
            min_singular_value_estimate: r.min_singular_value_estimate,
            eigenvalues: r.eigenvalues.clone(),
            certificate: certificate.map(Into::into),
            vectors: if vectors { r.z.data().to_vec() } else { Vec::new() },
            trace: trace(&r.trace),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenpairPayload {
    pub anchor: usize,
    pub status: Status,
    pub method: String,
    pub iterations: usize,
    pub matvecs: usize,
    #[serde(with = "float::complex")]
    pub eigenvalue: C64,
    #[serde(with = "float::real")]
    pub final_step: f64,
    #[serde(with = "float::real")]
    pub residual: f64,
    pub certificate: Option<CertificatePayload>,
    #[serde(with = "float::complex_vec")]
    pub vector: Vec<C64>,
    pub trace: Vec<TracePoint>,
}

impl EigenpairPayload {
    pub fn new(r: &EigenpairResult, method: &str, certificate: Option<&ConvergenceCertificate>, vector: bool) -> Self {
        Self {
            anchor: r.anchor,
            status: r.status,
            method: method.to_string(),
            iterations: r.iterations,
            matvecs: r.matvecs,
            eigenvalue: r.eigenvalue,
            final_step: r.final_step,
            residual: r.residual,
            certificate: certificate.map(Into::into),
            vector: if vector { r.z.clone() } else { Vec::new() },
            trace: trace(&r.trace),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementPayload {
    pub n: usize,
    pub status: Status,
    pub iterations: usize,
    #[serde(with = "float::real")]
    pub seed_residual: f64,
    #[serde(with = "float::real")]
    pub refined_residual: f64,
    #[serde(with = "float::real")]
    pub seed_condition_estimate: f64,
    #[serde(with = "float::complex_vec")]
    pub eigenvalues: Vec<C64>,
    pub certificate: CertificatePayload,
    #[serde(with = "float::complex_vec")]
    pub vectors: Vec<C64>,
}

impl RefinementPayload {
    pub fn new(r: &RefinementResult, vectors: bool) -> Self {
        Self {
            n: r.eigenvalues.len(),
            status: r.status,
            iterations: r.iterations,
            seed_residual: r.seed_residual,
            refined_residual: r.refined_residual,
            seed_condition_estimate: r.seed_condition_estimate,
            eigenvalues: r.eigenvalues.clone(),
            certificate: (&r.certificate).into(),
            vectors: if vectors { r.z.data().to_vec() } else { Vec::new() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub nx: usize,
    pub ny: usize,
    #[serde(with = "float::real_vec")]
    pub bounds: Vec<f64>,
    pub anchor: usize,
    #[serde(with = "float::opt_real")]
    pub continuation: Option<f64>,
    pub converged: usize,
    pub periodic: usize,
    pub bounded: usize,
    pub diverged: usize,
}

impl ScanSummary {
    pub fn new(scan: &ScanGrid, anchor: usize, continuation: Option<f64>) -> Self {
        let g = scan.grid;
        Self {
            nx: g.nx,
            ny: g.ny,
            bounds: vec![g.re_min, g.re_max, g.im_min, g.im_max],
            anchor,
            continuation,
            converged: scan.count(|c| matches!(c, Classification::ConvergedFixedPoint)),
            periodic: scan.count(|c| matches!(c, Classification::PeriodicCycle(_))),
            bounded: scan.count(|c| matches!(c, Classification::BoundedNonperiodic)),
            diverged: scan.count(|c| matches!(c, Classification::Diverged(_))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderFitPayload {
    pub k: usize,
    #[serde(with = "float::opt_real")]
    pub slope: Option<f64>,
    #[serde(with = "float::real")]
    pub required: f64,
    pub passed: bool,
    pub used: usize,
    pub excluded_noise: usize,
    pub excluded_nonfinite: usize,
    #[serde(with = "float::real_vec")]
    pub errors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsCheckPayload {
    #[serde(with = "float::complex_vec")]
    pub eps_grid: Vec<C64>,
    pub fits: Vec<OrderFitPayload>,
    pub passed: bool,
}

impl RsCheckPayload {
    /// Orders `k ≥ 1` must show a slope of at least `k + 1 − margin`.
    pub fn new(r: &ContainmentReport, margin: f64) -> Self {
        let fits: Vec<OrderFitPayload> = r
            .fits
            .iter()
            .map(|f| {
                let required = f.k as f64 + 1.0 - margin;
                OrderFitPayload {
                    k: f.k,
                    slope: f.slope,
                    required,
                    passed: f.satisfies(required),
                    used: f.used,
                    excluded_noise: f.excluded_noise,
                    excluded_nonfinite: f.excluded_nonfinite,
                    errors: f.errors.clone(),
                }
            })
            .collect();
        let passed = fits.iter().all(|f| f.passed);
        Self { eps_grid: r.eps_grid.clone(), fits, passed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedPayload {
    pub path: String,
    pub rows: usize,
    pub cols: usize,
    pub stored_entries: usize,
}

impl RunReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
