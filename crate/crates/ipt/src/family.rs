//! Textual family specs such as `near-diagonal:N=256,eps=0.01`.
//!
//! | name             | keys                                                      |
//! |------------------|-----------------------------------------------------------|
//! | `near-diagonal`  | `N`, `eps`, `symmetric`, `density`, `include-diagonal`     |
//! | `ill-conditioned`| `N`, `alpha`                                              |
//! | `fci`            | `N`, `density` (default `50/N`), `gap` (default 1)         |
//! | `2x2`, `3x3`     | `eps` (default 1), `eps-im` (default 0)                    |
//!
//! Every family also takes `seed`, overriding the command-line seed.

use std::collections::BTreeMap;

use ipt_core::testgen::explicit_families;
use ipt_core::{partition, FamilyKind, FamilySpec, Partition, C64};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedFamily {
    pub spec: FamilySpec,
    /// Original text, echoed in reports.
    pub text: String,
}

impl ParsedFamily {
    pub fn partition(&self) -> Result<Partition> {
        Ok(match self.spec.kind {
            FamilyKind::Explicit2x2 { .. } | FamilyKind::Explicit3x3 { .. } => explicit_families(&self.spec)?,
            _ => partition(&self.spec.generate()?)?,
        })
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self.spec.kind, FamilyKind::Explicit2x2 { .. } | FamilyKind::Explicit3x3 { .. })
    }
}

pub fn parse_family(text: &str, default_seed: u64) -> Result<ParsedFamily> {
    let fail = |message: String| Error::Family { spec: text.to_string(), message };
    let (name, rest) = text.split_once(':').unwrap_or((text, ""));
    let mut keys = BTreeMap::new();
    for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| fail(format!("expected key=value, found `{item}`")))?;
        if keys.insert(k.trim().to_ascii_lowercase(), v.trim().to_string()).is_some() {
            return Err(fail(format!("key `{k}` given twice")));
        }
    }
    let mut take = |key: &str| keys.remove(key);
    let num = |v: Option<String>, key: &str| -> Result<Option<f64>> {
        v.map(|s| parse_number(&s).ok_or_else(|| fail(format!("`{key}` must be a number, found `{s}`"))))
            .transpose()
    };
    let int = |v: Option<String>, key: &str| -> Result<Option<usize>> {
        v.map(|s| s.parse().map_err(|_| fail(format!("`{key}` must be a nonnegative integer, found `{s}`"))))
            .transpose()
    };
    let flag = |v: Option<String>, key: &str| -> Result<bool> {
        match v.as_deref() {
            None | Some("false") | Some("0") => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some(s) => Err(fail(format!("`{key}` must be true or false, found `{s}`"))),
        }
    };
    let seed = match take("seed") {
        Some(s) => s.parse().map_err(|_| fail(format!("`seed` must be an integer, found `{s}`")))?,
        None => default_seed,
    };
    let required = |v: Option<usize>, key: &str| v.ok_or_else(|| fail(format!("missing `{key}`")));

    let kind = match name.trim().to_ascii_lowercase().as_str() {
        "near-diagonal" | "near_diagonal" => FamilyKind::NearDiagonal {
            n: required(int(take("n"), "N")?, "N")?,
            eps: num(take("eps"), "eps")?.ok_or_else(|| fail("missing `eps`".into()))?,
            symmetric: flag(take("symmetric"), "symmetric")?,
            sparse_density: num(take("density"), "density")?,
            include_diagonal: flag(take("include-diagonal"), "include-diagonal")?,
        },
        "ill-conditioned" | "ill_conditioned" | "j-alpha" => FamilyKind::IllConditioned {
            n: required(int(take("n"), "N")?, "N")?,
            alpha: num(take("alpha"), "alpha")?.ok_or_else(|| fail("missing `alpha`".into()))?,
        },
        "fci" | "fci-like" => {
            let n = required(int(take("n"), "N")?, "N")?;
            FamilyKind::FciLike {
                n,
                density: num(take("density"), "density")?.unwrap_or(50.0 / n.max(1) as f64),
                gap_scale: num(take("gap"), "gap")?.unwrap_or(1.0),
            }
        }
        "2x2" | "3x3" => {
            let eps = C64::new(
                num(take("eps"), "eps")?.unwrap_or(1.0),
                num(take("eps-im"), "eps-im")?.unwrap_or(0.0),
            );
            if name.trim() == "2x2" {
                FamilyKind::Explicit2x2 { eps }
            } else {
                FamilyKind::Explicit3x3 { eps }
            }
        }
        other => return Err(fail(format!("unknown family `{other}`"))),
    };
    if let Some(k) = keys.keys().next() {
        return Err(fail(format!("unknown key `{k}`")));
    }
    let spec = FamilySpec::new(kind, seed);
    spec.validate().map_err(|e| fail(e.to_string()))?;
    Ok(ParsedFamily { spec, text: text.to_string() })
}

/// A decimal number or a ratio `a/b`.
fn parse_number(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => s.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_diagonal() {
        let f = parse_family("near-diagonal:N=256,eps=0.01", 7).unwrap();
        assert_eq!(
            f.spec,
            FamilySpec::new(
                FamilyKind::NearDiagonal { n: 256, eps: 0.01, symmetric: false, sparse_density: None, include_diagonal: false },
                7
            )
        );
    }

    #[test]
    fn fci_density_ratio_and_seed() {
        let f = parse_family("fci:N=4096,density=50/4096,gap=0.5,seed=3", 0).unwrap();
        assert_eq!(f.spec, FamilySpec::new(FamilyKind::FciLike { n: 4096, density: 50.0 / 4096.0, gap_scale: 0.5 }, 3));
    }

    #[test]
    fn explicit_defaults_to_unit_coupling() {
        let f = parse_family("2x2", 0).unwrap();
        assert_eq!(f.spec.kind, FamilyKind::Explicit2x2 { eps: C64::new(1.0, 0.0) });
        let p = parse_family("3x3:eps=0.05,eps-im=0.01", 0).unwrap().partition().unwrap();
        assert_eq!(p.dim(), 3);
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in ["near-diagonal:N=10", "nope", "2x2:eps=abc", "ill-conditioned:N=8,alpha=1,extra=2", "near-diagonal:N=1,eps=0.1", "2x2:eps"] {
            assert!(parse_family(bad, 0).is_err(), "{bad}");
        }
    }
}
