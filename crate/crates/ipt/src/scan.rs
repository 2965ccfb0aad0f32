//! Parallel grid scans and their CSV and PGM renderings.

use std::io::Write;
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};

use ipt_core::explorer::{scan_row, Classification, ScanCell, ScanGrid, ScanSpec};
use serde::Serialize;

use crate::error::Result;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "IPT_THREADS";

pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, NonZeroUsize::get))
}

/// [`ipt_core::scan_grid`] with rows distributed over `threads` workers.
///
/// Cells are independent, so the result does not depend on the schedule.
pub fn scan_parallel(spec: &ScanSpec, threads: usize) -> Result<ScanGrid> {
    spec.validate()?;
    let ny = spec.grid.ny;
    let next = AtomicUsize::new(0);
    let mut rows: Vec<(usize, Vec<ScanCell>)> = std::thread::scope(|s| {
        let workers: Vec<_> = (0..threads.clamp(1, ny))
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let iy = next.fetch_add(1, Ordering::Relaxed);
                        if iy >= ny {
                            return done;
                        }
                        done.push((iy, scan_row(spec, iy)));
                    }
                })
            })
            .collect();
        workers.into_iter().flat_map(|w| w.join().expect("scan worker panicked")).collect()
    });
    rows.sort_unstable_by_key(|r| r.0);
    Ok(ScanGrid {
        grid: spec.grid,
        cells: rows.into_iter().flat_map(|r| r.1).collect(),
    })
}

#[derive(Serialize)]
struct CsvRow {
    eps_re: f64,
    eps_im: f64,
    class: &'static str,
    period: Option<usize>,
    escape_step: Option<usize>,
    steps_to_converge: Option<usize>,
}

/// One row per cell, row-major from `im_min`, with a header line.
pub fn write_csv<W: Write>(scan: &ScanGrid, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in &scan.cells {
        let (period, escape_step) = match c.classification {
            Classification::PeriodicCycle(p) => (Some(p), None),
            Classification::Diverged(k) => (None, Some(k)),
            _ => (None, None),
        };
        w.serialize(CsvRow {
            eps_re: c.eps.re,
            eps_im: c.eps.im,
            class: c.classification.label(),
            period,
            escape_step,
            steps_to_converge: c.steps_to_converge,
        })?;
    }
    w.flush().map_err(|e| crate::error::Error::io("<csv>", e))?;
    Ok(())
}

/// Gray level of a cell: converged black, periodic and bounded dark grays,
/// diverged lighter the faster it escapes.
pub fn shade(c: &Classification, max_iterations: usize) -> u8 {
    match *c {
        Classification::ConvergedFixedPoint => 0,
        Classification::PeriodicCycle(_) => 48,
        Classification::BoundedNonperiodic => 96,
        Classification::Diverged(k) => {
            let slow = (k as f64).ln_1p() / (max_iterations as f64).ln_1p();
            (255.0 - 127.0 * slow.clamp(0.0, 1.0)).round() as u8
        }
    }
}

/// Binary PGM, top row at `im_max`.
pub fn write_pgm<W: Write>(scan: &ScanGrid, max_iterations: usize, mut out: W) -> std::io::Result<()> {
    let (nx, ny) = (scan.grid.nx, scan.grid.ny);
    write!(out, "P5\n{nx} {ny}\n255\n")?;
    let mut row = vec![0u8; nx];
    for iy in (0..ny).rev() {
        for (ix, px) in row.iter_mut().enumerate() {
            *px = shade(&scan.cell(ix, iy).classification, max_iterations);
        }
        out.write_all(&row)?;
    }
    Ok(())
}
