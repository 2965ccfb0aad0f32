use ipt_core::accel::solve_single_accelerated;
use ipt_core::explorer::{classify_point, locate_boundary, scan_grid, Classification, Grid, ScanSpec};
use ipt_core::testgen::{gen_fci_like, three_by_three, two_by_two};
use ipt_core::*;

fn square(half: f64, n: usize) -> Grid {
    Grid { re_min: -half, re_max: half, im_min: -half, im_max: half, nx: n, ny: n }
}

#[test]
fn two_by_two_scan_matches_closed_form() {
    let spec = ScanSpec::new(two_by_two(C64::new(1.0, 0.0)), 0, square(1.0, 201)).unwrap();
    let scan = scan_grid(&spec).unwrap();
    assert_eq!(scan.cells.len(), 201 * 201);
    let flip = 3f64.sqrt() / 2.0;
    for cell in &scan.cells {
        let e = cell.eps;
        if e.norm() < 0.17 || (e.im == 0.0 && e.re.abs() < 0.85) {
            assert!(cell.classification.is_converged(), "{e}: {:?}", cell.classification);
        }
    }
    // Real axis is row 100; the first non-converged cell on each side sits
    // within one cell of the flip points.
    let row: Vec<_> = (0..201).map(|ix| scan.cell(ix, 100)).collect();
    assert!(row.iter().all(|c| c.eps.im == 0.0));
    let right = row.iter().find(|c| c.eps.re > 0.0 && !c.classification.is_converged()).unwrap();
    let left = row.iter().rev().find(|c| c.eps.re < 0.0 && !c.classification.is_converged()).unwrap();
    assert!((right.eps.re - flip).abs() <= 0.01 + 1e-12, "{}", right.eps);
    assert!((left.eps.re + flip).abs() <= 0.01 + 1e-12, "{}", left.eps);
    // Conjugation symmetry of the whole grid.
    for iy in 0..201 {
        for ix in 0..201 {
            assert_eq!(scan.cell(ix, iy).classification, scan.cell(ix, 200 - iy).classification);
        }
    }
}

#[test]
fn certified_disk_converges_in_three_by_three() {
    let p = three_by_three(C64::new(1.0, 0.0));
    let g = InverseGaps::new(&p).unwrap();
    let radius = CERTIFICATE_BOUND / certify(&p, &g).product;
    let spec = ScanSpec::new(p, 1, square(0.3, 41)).unwrap();
    let scan = scan_grid(&spec).unwrap();
    let mut inside = 0;
    for cell in scan.cells.iter().filter(|c| c.eps.norm() < radius) {
        inside += 1;
        assert!(cell.classification.is_converged(), "{}", cell.eps);
    }
    assert!(inside > 1);
}

#[test]
fn imaginary_axis_boundary_is_the_fold() {
    let mut spec = ScanSpec::new(two_by_two(C64::new(1.0, 0.0)), 0, square(1.0, 3)).unwrap();
    spec.max_iterations = 20000;
    let b = locate_boundary(&spec, C64::new(0.0, 0.2), C64::new(0.0, 0.8), 1e-4).unwrap();
    assert!((b.im - 0.5).abs() < 0.005, "{b}");
}

#[test]
fn escape_is_monotone_in_threshold() {
    let mut fine = ScanSpec::new(two_by_two(C64::new(1.0, 0.0)), 0, square(1.0, 3)).unwrap();
    let mut coarse = fine.clone();
    fine.divergence_threshold = 1e8;
    coarse.divergence_threshold = 1e4;
    for k in 0..40 {
        let eps = C64::new(1.3 + 0.05 * k as f64, 0.0);
        if let Classification::Diverged(slow) = classify_point(&fine, eps).classification {
            match classify_point(&coarse, eps).classification {
                Classification::Diverged(fast) => assert!(fast <= slow),
                other => panic!("{eps}: {other:?}"),
            }
        }
    }
}

#[test]
fn continuation_dominates_plain_iteration() {
    let plain = ScanSpec::new(three_by_three(C64::new(1.0, 0.0)), 1, square(1.0, 41)).unwrap();
    let mut cont = plain.clone();
    cont.continuation = Some(0.9);
    let (a, b) = (scan_grid(&plain).unwrap(), scan_grid(&cont).unwrap());
    let mut gained = 0;
    for (x, y) in a.cells.iter().zip(&b.cells) {
        if x.classification.is_converged() {
            assert!(y.classification.is_converged(), "{}", x.eps);
        } else if y.classification.is_converged() {
            gained += 1;
        }
    }
    assert!(gained > 0);
}

#[test]
fn continuation_recovers_eroded_point() {
    let p = three_by_three(C64::new(0.75, 0.0));
    let g = InverseGaps::new(&p).unwrap();
    let cfg = IterationConfig::default();
    assert_eq!(solve_single(&p, &g, 1, &cfg).unwrap().status, Status::Diverged);
    let r = solve_single_continuation(&p, &g, 1, &cfg, 0.9).unwrap();
    assert_eq!(r.status, Status::Converged);
    assert!(r.residual <= 1e-8);
}

#[test]
fn tiny_continuation_factor_is_plain_iteration() {
    let p = three_by_three(C64::new(0.2, 0.1));
    let g = InverseGaps::new(&p).unwrap();
    let cfg = IterationConfig::default();
    let a = solve_single(&p, &g, 1, &cfg).unwrap();
    let b = solve_single_continuation(&p, &g, 1, &cfg, 0.0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn anderson_beats_plain_on_sparse_symmetric() {
    let m = gen_fci_like(2048, 50.0 / 2048.0, 0.5, 3).unwrap();
    let p = partition(&m).unwrap();
    let g = InverseGaps::new(&p).unwrap();
    let cfg = IterationConfig::default();
    let plain = solve_single(&p, &g, 0, &cfg).unwrap();
    let acc = solve_single_accelerated(&p, &g, 0, &cfg, 5).unwrap();
    assert_eq!(acc.status, Status::Converged);
    assert!(acc.residual <= 1e-8);
    assert_eq!(acc.matvecs, acc.iterations);
    assert!(acc.matvecs < plain.matvecs, "{} vs {}", acc.matvecs, plain.matvecs);
    // A symmetric residual of r moves the eigenvalue by about r²/gap.
    let tight = IterationConfig { residual_tolerance: 1e-12, ..cfg };
    let reference = solve_single_accelerated(&p, &g, 0, &tight, 5).unwrap();
    assert_eq!(reference.status, Status::Converged);
    assert!((acc.eigenvalue - reference.eigenvalue).norm() <= 1e-10);
}
