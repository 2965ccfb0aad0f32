//! Timing harness normalized by the cost of one product with `Δ`.
//!
//! Absolute times are machine dependent; the ratio of a solve to a single
//! product is not, and for the full-spectrum iteration it should track the
//! iteration count because each iteration performs one matrix product.

use std::time::{Duration, Instant};

use ipt_core::solver::{solve_full_from, solve_single_from, ProductHook};
use ipt_core::{DenseMatrix, InverseGaps, IterationConfig, Partition, Status, C64};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::float;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMode {
    /// All eigenpairs; normalized by a matrix-matrix product.
    Full,
    /// One eigenpair; normalized by a matrix-vector product.
    Single,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub mode: BenchMode,
    pub repetitions: usize,
    pub anchor: usize,
    pub iteration: IterationConfig,
    /// Artificial delay added to every product, in the solve and in the reference timing alike.
    pub injected_delay: Option<Duration>,
    /// Each reference sample times products for at least this long.
    pub min_sample_time: Duration,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            mode: BenchMode::Full,
            repetitions: 5,
            anchor: 0,
            iteration: IterationConfig {
                estimate_min_singular_value: false,
                ..Default::default()
            },
            injected_delay: None,
            min_sample_time: Duration::from_millis(20),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub mode: BenchMode,
    pub n: usize,
    pub repetitions: usize,
    pub status: Status,
    pub iterations: usize,
    /// Products with `Δ` per solve.
    pub products: usize,
    #[serde(with = "float::real_vec")]
    pub product_seconds: Vec<f64>,
    #[serde(with = "float::real_vec")]
    pub solve_seconds: Vec<f64>,
    #[serde(with = "float::real")]
    pub median_product_seconds: f64,
    #[serde(with = "float::real")]
    pub median_solve_seconds: f64,
    /// `T_eig/T_mm` in full mode, `T_eigs/T_mv` in single mode.
    #[serde(with = "float::real")]
    pub ratio: f64,
    #[serde(with = "float::opt_real")]
    pub injected_delay_seconds: Option<f64>,
}

pub fn median(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Counts products and optionally sleeps after each one.
#[derive(Debug, Default)]
pub struct DelayHook {
    pub delay: Option<Duration>,
    pub matvecs: usize,
    pub matmuls: usize,
}

impl DelayHook {
    pub fn new(delay: Option<Duration>) -> Self {
        Self { delay, matvecs: 0, matmuls: 0 }
    }

    fn pause(&self) {
        if let Some(d) = self.delay {
            std::thread::sleep(d);
        }
    }
}

impl ProductHook for DelayHook {
    fn on_matvec(&mut self) {
        self.matvecs += 1;
        self.pause();
    }

    fn on_matmul(&mut self) {
        self.matmuls += 1;
        self.pause();
    }
}

/// Seconds per product, averaged over a batch lasting at least `min_time`.
fn time_products(p: &Partition, mode: BenchMode, delay: Option<Duration>, min_time: Duration) -> f64 {
    let n = p.dim();
    let mut hook = DelayHook::new(delay);
    let start = Instant::now();
    let mut count = 0u32;
    match mode {
        BenchMode::Full => {
            let z = DenseMatrix::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(1e-3, 0.0) });
            let mut out = DenseMatrix::zeros(n, n);
            while count == 0 || start.elapsed() < min_time {
                p.delta().mul_dense_into(std::hint::black_box(&z), &mut out);
                hook.on_matmul();
                std::hint::black_box(&out);
                count += 1;
            }
        }
        BenchMode::Single => {
            let x = vec![C64::new(1e-3, 0.0); n];
            let mut y = vec![C64::new(0.0, 0.0); n];
            while count == 0 || start.elapsed() < min_time {
                p.delta().mul_vec_into(std::hint::black_box(&x), &mut y);
                hook.on_matvec();
                std::hint::black_box(&y);
                count += 1;
            }
        }
    }
    start.elapsed().as_secs_f64() / f64::from(count)
}

/// Times `repetitions` solves and reference products, sequentially.
pub fn bench(p: &Partition, config: &BenchConfig) -> Result<BenchReport> {
    let reps = config.repetitions.max(1);
    let mut product_seconds = Vec::with_capacity(reps);
    let mut solve_seconds = Vec::with_capacity(reps);
    let mut outcome = (Status::MaxIterations, 0, 0);
    for _ in 0..reps {
        product_seconds.push(time_products(p, config.mode, config.injected_delay, config.min_sample_time));

        let mut hook = DelayHook::new(config.injected_delay);
        let start = Instant::now();
        let g = InverseGaps::new(p)?;
        outcome = match config.mode {
            BenchMode::Full => {
                let r = solve_full_from(p, &g, &config.iteration, None, &mut hook)?;
                (r.status, r.iterations, hook.matmuls)
            }
            BenchMode::Single => {
                let r = solve_single_from(p, &g, config.anchor, &config.iteration, None, &mut hook)?;
                (r.status, r.iterations, hook.matvecs)
            }
        };
        solve_seconds.push(start.elapsed().as_secs_f64());
    }
    let median_product_seconds = median(&product_seconds);
    let median_solve_seconds = median(&solve_seconds);
    Ok(BenchReport {
        mode: config.mode,
        n: p.dim(),
        repetitions: reps,
        status: outcome.0,
        iterations: outcome.1,
        products: outcome.2,
        product_seconds,
        solve_seconds,
        median_product_seconds,
        median_solve_seconds,
        ratio: median_solve_seconds / median_product_seconds,
        injected_delay_seconds: config.injected_delay.map(|d| d.as_secs_f64()),
    })
}

/// Outcome of the scale-invariance self-test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfTest {
    pub fast: BenchReport,
    pub slow: BenchReport,
    /// `|slow.ratio / fast.ratio − 1|`.
    #[serde(with = "float::real")]
    pub relative_change: f64,
}

/// Benchmarks twice, with products slowed by `delay` and by `2·delay`.
///
/// Doubling the cost of a product models a machine half as fast; the
/// normalized ratio should not move.
pub fn self_test(p: &Partition, config: &BenchConfig, delay: Duration) -> Result<SelfTest> {
    let with = |d: Duration| BenchConfig {
        injected_delay: Some(d),
        ..config.clone()
    };
    let fast = bench(p, &with(delay))?;
    let slow = bench(p, &with(2 * delay))?;
    let relative_change = (slow.ratio / fast.ratio - 1.0).abs();
    Ok(SelfTest { fast, slow, relative_change })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn zero_perturbation_costs_about_one_product() {
        let d: Vec<C64> = (0..96).map(|k| C64::new(k as f64, 0.0)).collect();
        let p = Partition::new(d, DenseMatrix::zeros(96, 96).into()).unwrap();
        let cfg = BenchConfig {
            repetitions: 5,
            injected_delay: Some(Duration::from_millis(5)),
            min_sample_time: Duration::from_millis(5),
            ..Default::default()
        };
        let r = bench(&p, &cfg).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.products, 1);
        assert_eq!(r.solve_seconds.len(), 5);
        assert_eq!(r.product_seconds.len(), 5);
        assert!(r.ratio >= 0.8 && r.ratio <= 2.0, "{}", r.ratio);
    }
}
