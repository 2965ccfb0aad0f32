//! Seeded matrix families.
//!
//! All randomness comes from ChaCha8 seeded with the family's 64-bit seed. Each
//! kind of draw reads its own ChaCha stream so that, for example, changing the
//! sparsity pattern never shifts the values of an unrelated dense draw:
//!
//! | stream | use                                   |
//! |--------|---------------------------------------|
//! | 0      | entries of the random perturbation `R` |
//! | 1      | sparse positions of `R`                |
//! | 2      | Gaussian matrix orthogonalized into `Q` |
//! | 3      | couplings of the sparse symmetric family |
//! | 4      | positions of those couplings           |
//!
//! Standard normal draws use the ziggurat sampler from `rand_distr`, which is
//! a deterministic transform of the uniform stream.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{ComplexMatrix, CsrMatrix, DenseMatrix, Partition, C64};
use crate::{Error, Result};

const STREAM_VALUES: u64 = 0;
const STREAM_POSITIONS: u64 = 1;
const STREAM_ORTHOGONAL: u64 = 2;
const STREAM_COUPLINGS: u64 = 3;
const STREAM_COUPLING_POSITIONS: u64 = 4;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FamilyKind {
    /// `diag(1..N) + εR` with `R` standard normal, optionally symmetrized
    /// as `(R + Rᵀ)/2` and optionally sparse.
    NearDiagonal {
        n: usize,
        eps: f64,
        symmetric: bool,
        sparse_density: Option<f64>,
        /// Whether sparse sampling may hit the diagonal.
        include_diagonal: bool,
    },
    /// `Qᵀ diag(10^{-αk/N}) Q` with a random orthogonal `Q`.
    IllConditioned { n: usize, alpha: f64 },
    /// Sparse symmetric matrix with an increasing diagonal.
    FciLike { n: usize, density: f64, gap_scale: f64 },
    /// `[[0, ε], [ε, 1]]`.
    Explicit2x2 { eps: C64 },
    /// `diag(0, 1, 3) + ε [[0,1,2],[1,0,3],[2,3,0]]`.
    Explicit3x3 { eps: C64 },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub seed: u64,
}

impl FamilySpec {
    pub fn new(kind: FamilyKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let density_ok = |d: f64| d > 0.0 && d <= 1.0;
        match self.kind {
            FamilyKind::NearDiagonal {
                n, eps, sparse_density, ..
            } => {
                if n < 2 {
                    return Err(Error::InvalidArgument("family dimension must be at least 2"));
                }
                if !eps.is_finite() {
                    return Err(Error::InvalidArgument("eps must be finite"));
                }
                if sparse_density.is_some_and(|d| !density_ok(d)) {
                    return Err(Error::InvalidArgument("density must lie in (0, 1]"));
                }
            }
            FamilyKind::IllConditioned { n, alpha } => {
                if n < 2 {
                    return Err(Error::InvalidArgument("family dimension must be at least 2"));
                }
                if !(alpha >= 0.0) || !alpha.is_finite() {
                    return Err(Error::InvalidArgument("alpha must be finite and nonnegative"));
                }
            }
            FamilyKind::FciLike { n, density, gap_scale } => {
                if n < 2 {
                    return Err(Error::InvalidArgument("family dimension must be at least 2"));
                }
                if !(0.0..=1.0).contains(&density) {
                    return Err(Error::InvalidArgument("density must lie in [0, 1]"));
                }
                if !(gap_scale > 0.0) {
                    return Err(Error::InvalidArgument("gap scale must be positive"));
                }
            }
            FamilyKind::Explicit2x2 { eps } | FamilyKind::Explicit3x3 { eps } => {
                if !(eps.re.is_finite() && eps.im.is_finite()) {
                    return Err(Error::InvalidArgument("eps must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<ComplexMatrix> {
        self.validate()?;
        Ok(match self.kind {
            FamilyKind::NearDiagonal { .. } => gen_near_diagonal(self)?,
            FamilyKind::IllConditioned { .. } => gen_ill_conditioned(self)?,
            FamilyKind::FciLike { n, density, gap_scale } => gen_fci_like(n, density, gap_scale, self.seed)?,
            FamilyKind::Explicit2x2 { .. } | FamilyKind::Explicit3x3 { .. } => explicit_families(self)?.reconstruct(),
        })
    }
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

/// Samples `count` distinct flat indices of an `n × n` matrix.
fn sample_positions(r: &mut ChaCha8Rng, n: usize, count: usize, include_diagonal: bool) -> Vec<(usize, usize)> {
    let available = if include_diagonal { n * n } else { n * n - n };
    let count = count.min(available);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let flat = r.random_range(0..n * n);
        let (i, j) = (flat / n, flat % n);
        if (!include_diagonal && i == j) || !seen.insert(flat) {
            continue;
        }
        out.push((i, j));
    }
    out
}

/// Near-diagonal family `diag(1..N) + εR`.
pub fn gen_near_diagonal(spec: &FamilySpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let FamilyKind::NearDiagonal {
        n,
        eps,
        symmetric,
        sparse_density,
        include_diagonal,
    } = spec.kind
    else {
        return Err(Error::InvalidArgument("not a near-diagonal family"));
    };
    let mut values = rng(spec.seed, STREAM_VALUES);
    let base = |i: usize| C64::new((i + 1) as f64, 0.0);

    match sparse_density {
        None => {
            let mut r: Vec<f64> = (0..n * n).map(|_| normal(&mut values)).collect();
            if symmetric {
                for i in 0..n {
                    for j in i + 1..n {
                        let s = (r[i * n + j] + r[j * n + i]) / 2.0;
                        r[i * n + j] = s;
                        r[j * n + i] = s;
                    }
                }
            }
            let m = DenseMatrix::from_fn(n, n, |i, j| {
                let off = C64::new(eps * r[i * n + j], 0.0);
                if i == j {
                    base(i) + off
                } else {
                    off
                }
            });
            Ok(ComplexMatrix::Dense(m))
        }
        Some(density) => {
            let mut positions = rng(spec.seed, STREAM_POSITIONS);
            // For symmetric output the density counts nonzeros after symmetrization.
            let target = density * (n * n) as f64;
            let raw = if symmetric { target / 2.0 } else { target };
            let pos = sample_positions(&mut positions, n, raw.round() as usize, include_diagonal);
            let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            for (i, j) in pos {
                let v = normal(&mut values);
                if symmetric {
                    *entries.entry((i, j)).or_insert(0.0) += v / 2.0;
                    *entries.entry((j, i)).or_insert(0.0) += v / 2.0;
                } else {
                    entries.insert((i, j), v);
                }
            }
            let mut diag = vec![0.0; n];
            let mut t = Vec::with_capacity(entries.len() + n);
            for ((i, j), v) in entries {
                if i == j {
                    diag[i] = v;
                } else {
                    t.push((i, j, C64::new(eps * v, 0.0)));
                }
            }
            t.extend(diag.iter().enumerate().map(|(i, &v)| (i, i, base(i) + C64::new(eps * v, 0.0))));
            Ok(ComplexMatrix::Sparse(CsrMatrix::from_triplets(n, n, t)?))
        }
    }
}

/// Random orthogonal matrix from Gram–Schmidt (applied twice) on a Gaussian
/// matrix, which is the QR factor with a positive `R` diagonal.
pub fn random_orthogonal(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed, STREAM_ORTHOGONAL);
    // Column-major storage of the Gaussian columns.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| normal(&mut r)).collect()).collect();
    for j in 0..n {
        let (done, rest) = cols.split_at_mut(j);
        let col = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let dot: f64 = q.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                col.iter_mut().zip(q).for_each(|(x, qk)| *x -= dot * qk);
            }
        }
        let nrm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|x| *x /= nrm);
    }
    // Row-major Q with Q[i][j] = cols[j][i].
    let mut q = vec![0.0; n * n];
    for (j, c) in cols.iter().enumerate() {
        for (i, &v) in c.iter().enumerate() {
            q[i * n + j] = v;
        }
    }
    q
}

/// Eigenvalues `10^{-αk/N}`, `k = 1..N`, of the ill-conditioned family.
pub fn ill_conditioned_spectrum(n: usize, alpha: f64) -> Vec<f64> {
    (1..=n).map(|k| 10f64.powf(-alpha * k as f64 / n as f64)).collect()
}

/// `Qᵀ D_α Q`, exactly symmetric.
pub fn gen_ill_conditioned(spec: &FamilySpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let FamilyKind::IllConditioned { n, alpha } = spec.kind else {
        return Err(Error::InvalidArgument("not an ill-conditioned family"));
    };
    let q = random_orthogonal(n, spec.seed);
    let d = ill_conditioned_spectrum(n, alpha);
    // dq = D Q, then J = Qᵀ (D Q).
    let mut dq = q.clone();
    for (i, row) in dq.chunks_mut(n).enumerate() {
        row.iter_mut().for_each(|x| *x *= d[i]);
    }
    let mut j = vec![0.0; n * n];
    // SAFETY: buffers hold n*n f64 values; Qᵀ is read from row-major Q with
    // swapped strides.
    unsafe {
        matrixmultiply::dgemm(
            n,
            n,
            n,
            1.0,
            q.as_ptr(),
            1,
            n as isize,
            dq.as_ptr(),
            n as isize,
            1,
            0.0,
            j.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    for a in 0..n {
        for b in a + 1..n {
            let s = 0.5 * (j[a * n + b] + j[b * n + a]);
            j[a * n + b] = s;
            j[b * n + a] = s;
        }
    }
    Ok(ComplexMatrix::Dense(DenseMatrix::from_real(n, n, &j)?))
}

/// Sparse symmetric near-diagonal matrix mimicking a configuration-interaction
/// Hamiltonian: diagonal `gap_scale · (k + √k)` and symmetric standard-normal
/// couplings at roughly `density · n²` off-diagonal positions.
pub fn gen_fci_like(n: usize, density: f64, gap_scale: f64, seed: u64) -> Result<ComplexMatrix> {
    if n < 2 || !(0.0..=1.0).contains(&density) || !(gap_scale > 0.0) {
        return Err(Error::InvalidArgument("invalid sparse symmetric family"));
    }
    let mut values = rng(seed, STREAM_COUPLINGS);
    let mut positions = rng(seed, STREAM_COUPLING_POSITIONS);
    let pairs = (density * (n * n) as f64 / 2.0).round() as usize;
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, j) in sample_positions(&mut positions, n, pairs, false) {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        *entries.entry((a, b)).or_insert(0.0) += normal(&mut values);
    }
    let mut t = Vec::with_capacity(2 * entries.len() + n);
    for ((i, j), v) in entries {
        t.push((i, j, C64::new(v, 0.0)));
        t.push((j, i, C64::new(v, 0.0)));
    }
    t.extend((0..n).map(|k| {
        let k = k as f64;
        (k as usize, k as usize, C64::new(gap_scale * (k + k.sqrt()), 0.0))
    }));
    Ok(ComplexMatrix::Sparse(CsrMatrix::from_triplets(n, n, t)?))
}

/// The explicit two- and three-dimensional examples, as partitions.
pub fn explicit_families(spec: &FamilySpec) -> Result<Partition> {
    spec.validate()?;
    match spec.kind {
        FamilyKind::Explicit2x2 { eps } => Ok(two_by_two(eps)),
        FamilyKind::Explicit3x3 { eps } => Ok(three_by_three(eps)),
        _ => Err(Error::InvalidArgument("not an explicit family")),
    }
}

/// `[[0, ε], [ε, 1]]` split into `d = (0, 1)` and `Δ = ε[[0,1],[1,0]]`.
pub fn two_by_two(eps: C64) -> Partition {
    let z = C64::zero();
    let delta = DenseMatrix::from_vec(2, 2, vec![z, eps, eps, z]).expect("2x2");
    Partition::new(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], delta.into()).expect("2x2")
}

/// `diag(0, 1, 3) + ε [[0,1,2],[1,0,3],[2,3,0]]`.
pub fn three_by_three(eps: C64) -> Partition {
    let unit = [0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0];
    let delta = DenseMatrix::from_vec(3, 3, unit.iter().map(|&x| eps * x).collect()).expect("3x3");
    let d = [0.0, 1.0, 3.0].iter().map(|&x| C64::new(x, 0.0)).collect();
    Partition::new(d, delta.into()).expect("3x3")
}
