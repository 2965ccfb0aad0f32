use std::process::{Command, Output};

use ipt::report::{Payload, RunReport};

fn ipt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipt")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> RunReport {
    RunReport::from_json(std::str::from_utf8(&out.stdout).unwrap()).expect("valid report")
}

#[test]
fn solve_near_diagonal_converges() {
    let out = ipt(&["solve", "--family", "near-diagonal:N=256,eps=0.01"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let Payload::Spectrum(s) = &r.payload else { panic!("{:?}", r.payload) };
    assert_eq!(s.status, ipt_core::Status::Converged);
    assert_eq!(s.eigenvalues.len(), 256);
    assert!(s.residual_frobenius <= 1e-9);
    assert_eq!(r.counters.iterations, s.iterations);
    assert!(r.timings.iter().any(|t| t.phase == "solve"));
}

#[test]
fn scan_csv_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("scan.pgm");
    let out = ipt(&["scan", "--family", "2x2:eps=1", "--out", "csv", "--pgm", pgm.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rows.headers().unwrap().iter().collect::<Vec<_>>()[..3], ["eps_re", "eps_im", "class"]);
    let records: Vec<_> = rows.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 201 * 201);
    let origin = records.iter().find(|r| &r[0] == "0.0" && &r[1] == "0.0").unwrap();
    assert_eq!(&origin[2], "converged");
    let raster = std::fs::read(&pgm).unwrap();
    assert!(raster.starts_with(b"P5\n201 201\n255\n"));
    assert_eq!(raster.len(), b"P5\n201 201\n255\n".len() + 201 * 201);
}

#[test]
fn rs_check_passes_on_two_by_two() {
    let out = ipt(&["rs-check", "--family", "2x2:eps=1", "--order", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let Payload::RsCheck(r) = report(&out).payload else { panic!() };
    assert!(r.passed);
    assert_eq!(r.fits.len(), 4);
}

#[test]
fn budget_exhaustion_exits_two() {
    let out = ipt(&["solve-one", "--family", "2x2:eps=0.1", "--max-iters", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let Payload::Eigenpair(e) = report(&out).payload else { panic!() };
    assert_eq!(e.status, ipt_core::Status::MaxIterations);
}

#[test]
fn divergence_exits_two() {
    let out = ipt(&["solve-one", "--family", "3x3:eps=0.75", "--anchor", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ipt(&["solve-one", "--family", "3x3:eps=0.75", "--anchor", "1", "--continuation-alpha", "0.9"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ipt(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(ipt(&["solve"]).status.code(), Some(1));
    assert_eq!(ipt(&["solve", "--family", "5x5:eps=1"]).status.code(), Some(1));
    assert_eq!(ipt(&["solve", "--matrix", "/nonexistent/m.mtx"]).status.code(), Some(1));
    assert_eq!(ipt(&["scan", "--family", "2x2", "--grid", "1,2,3"]).status.code(), Some(1));
    assert_eq!(ipt(&["--help"]).status.code(), Some(0));
}

#[test]
fn generated_file_solves_like_the_family() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.mtx");
    let spec = "near-diagonal:N=32,eps=0.02,symmetric=true,density=0.3,seed=4";
    assert_eq!(ipt(&["gen", "--family", spec, "--output", path.to_str().unwrap(), "--symmetric"]).status.code(), Some(0));
    let a = report(&ipt(&["solve", "--family", spec]));
    let b = report(&ipt(&["solve", "--matrix", path.to_str().unwrap()]));
    let (Payload::Spectrum(a), Payload::Spectrum(b)) = (a.payload, b.payload) else { panic!() };
    assert_eq!(a.eigenvalues, b.eigenvalues);
}

#[test]
fn anderson_flags_reach_the_solver() {
    let out = ipt(&["solve-one", "--family", "fci:N=512,gap=0.5,seed=2", "--anderson-m", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r.config.anderson_m, Some(5));
    let Payload::Eigenpair(e) = r.payload else { panic!() };
    assert_eq!(e.method, "anderson");
    assert!(e.residual <= 1e-8);
}
