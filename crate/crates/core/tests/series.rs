use ipt_core::rspt::{balance_residuals, containment_check, log_grid, rs_coefficients, rs_partial_sum};
use ipt_core::testgen::{three_by_three, two_by_two};
use ipt_core::*;

/// `diag(1..n) + Δ₀` with a random `Δ₀` of unit spectral norm.
fn unit_family(n: usize, seed: u64) -> Partition {
    let kind = FamilyKind::NearDiagonal {
        n,
        eps: 1.0,
        symmetric: false,
        sparse_density: None,
        include_diagonal: false,
    };
    // The generated diagonal carries noise; keep only the off-diagonal part.
    let r = partition(&FamilySpec::new(kind, seed).generate().unwrap()).unwrap();
    let norm = spectral_norm(r.delta(), 1e-12, 10_000);
    assert!(!norm.conservative);
    let d = (1..=n).map(|k| C64::new(k as f64, 0.0)).collect();
    Partition::new(d, r.delta().scaled(C64::new(1.0 / norm.value, 0.0))).unwrap()
}

#[test]
fn recursion_balances_every_order() {
    for (n, seed) in [(4, 1), (9, 2), (16, 3)] {
        let p = unit_family(n, seed);
        let g = InverseGaps::new(&p).unwrap();
        let exp = rs_coefficients(&p, &g, 5).unwrap();
        for (l, r) in balance_residuals(&p, &exp).iter().enumerate() {
            assert!(*r <= 1e-12, "n {n} order {}: {r}", l + 1);
        }
    }
}

#[test]
fn intermediate_normalization_holds() {
    let p = three_by_three(C64::new(1.0, 0.0));
    let g = InverseGaps::new(&p).unwrap();
    let exp = rs_coefficients(&p, &g, 6).unwrap();
    assert_eq!(exp.coefficients[0], DenseMatrix::identity(3));
    assert_eq!(exp.eigenvalue_coefficients[0], p.diagonal());
    for z in &exp.coefficients[1..] {
        assert!(z.diagonal().iter().all(|x| *x == C64::new(0.0, 0.0)));
    }
}

#[test]
fn first_order_eigenvalues_are_diagonal_of_delta() {
    // With diagonal noise kept in Δ the first-order shift is Δ_ii.
    let m = FamilySpec::new(
        FamilyKind::NearDiagonal { n: 6, eps: 1.0, symmetric: false, sparse_density: None, include_diagonal: false },
        5,
    )
    .generate()
    .unwrap();
    let d: Vec<C64> = (1..=6).map(|k| C64::new(k as f64, 0.0)).collect();
    let dense = m.to_dense();
    let mut delta = dense.clone();
    for k in 0..6 {
        delta[(k, k)] -= d[k];
    }
    let p = Partition::new(d, delta.clone().into()).unwrap();
    let g = InverseGaps::new(&p).unwrap();
    let exp = rs_coefficients(&p, &g, 1).unwrap();
    assert_eq!(exp.eigenvalue_coefficients[1], delta.diagonal());
}

#[test]
fn two_by_two_partial_sum() {
    let p = two_by_two(C64::new(1.0, 0.0));
    let g = InverseGaps::new(&p).unwrap();
    let exp = rs_coefficients(&p, &g, 3).unwrap();
    let s = rs_partial_sum(&exp, C64::new(0.1, 0.0), 1).unwrap();
    assert_eq!(s, DenseMatrix::from_real(2, 2, &[1.0, 0.1, -0.1, 1.0]).unwrap());
    for k in 0..=3 {
        assert_eq!(rs_partial_sum(&exp, C64::new(0.0, 0.0), k).unwrap(), DenseMatrix::identity(2));
    }
    assert!(rs_partial_sum(&exp, C64::new(0.1, 0.0), 4).is_err());
}

#[test]
fn containment_on_small_grid() {
    let p = two_by_two(C64::new(1.0, 0.0));
    let g = InverseGaps::new(&p).unwrap();
    let report = containment_check(&p, &g, 1, &log_grid(1e-3, 1e-2, 6)).unwrap();
    // Both orders agree exactly: Z^(0) = I and Z^(1) = F(I) is linear in ε.
    for fit in &report.fits {
        assert!(fit.errors.iter().all(|e| *e < 1e-15), "{fit:?}");
        assert!(fit.satisfies(fit.k as f64 + 0.9));
    }
}

#[test]
fn containment_on_random_certified_family() {
    let p = unit_family(4, 11);
    let g = InverseGaps::new(&p).unwrap();
    let cert = certify(&p, &g);
    let top = 0.9 * CERTIFICATE_BOUND / cert.product;
    let report = containment_check(&p, &g, 3, &log_grid(top / 8.0, top, 8)).unwrap();
    let fit = &report.fits[3];
    assert!(fit.used >= 6, "{fit:?}");
    assert!(fit.satisfies(3.9), "{fit:?}");
}
