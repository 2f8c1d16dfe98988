//! Probability vectors, observed count vectors, and the entropy functional.
//!
//! Entropies are in nats. The convention `0 * ln(1/0) = 0` applies throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `sum(p) == 1`.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A probability vector over `S >= 1` symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::validation("distribution must have at least one symbol"));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(Error::validation(format!(
                "probability {i} is {p}; entries must be finite and non-negative"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::validation(format!(
                "probabilities sum to {total}, expected 1 within {SUM_TOLERANCE:e}"
            )));
        }
        Ok(Distribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Distribution::new(probs)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

/// An observed multinomial count vector with `n = sum(counts) >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct Counts {
    counts: Vec<u64>,
    n: u64,
}

impl Counts {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::validation("count vector must have at least one symbol"));
        }
        let n = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::validation("total count overflows u64"))?;
        if n == 0 {
            return Err(Error::validation("n = 0 invalid: at least one sample is required"));
        }
        Ok(Counts { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    /// The empirical distribution `X_i / n`.
    pub fn empirical(&self) -> Distribution {
        let n = self.n as f64;
        Distribution {
            probs: self.counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }
}

impl TryFrom<Vec<u64>> for Counts {
    type Error = Error;

    fn try_from(counts: Vec<u64>) -> Result<Self> {
        Counts::new(counts)
    }
}

impl From<Counts> for Vec<u64> {
    fn from(c: Counts) -> Self {
        c.counts
    }
}

/// `-p ln p`, extended by continuity to `0` at `p = 0`.
#[inline]
pub fn neg_xlogx(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// Shannon entropy `sum p_i ln(1/p_i)` in nats.
///
/// Terms are accumulated in order of descending probability so that the
/// large contributions are summed first.
pub fn entropy(dist: &Distribution) -> f64 {
    entropy_of(dist.probs())
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    let mut sorted = probs.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    sorted.into_iter().map(neg_xlogx).sum()
}

fn check_same_support(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.support_size() != q.support_size() {
        return Err(Error::validation(format!(
            "support sizes differ: {} vs {}",
            p.support_size(),
            q.support_size()
        )));
    }
    Ok(())
}

pub fn l1_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_same_support(p, q)?;
    Ok(p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum())
}

/// `D(P || Q) = sum p_i ln(p_i / q_i)`.
///
/// Fails with a domain error when some `q_i = 0` while `p_i > 0`.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_same_support(p, q)?;
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.probs.iter().zip(&q.probs).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::domain(format!(
                "P is not absolutely continuous w.r.t. Q at symbol {i}"
            )));
        }
        total += pi * (pi / qi).ln();
    }
    // Rounding can push a true zero slightly negative.
    Ok(total.max(0.0))
}

pub fn make_point_mass(s: usize) -> Result<Distribution> {
    if s == 0 {
        return Err(Error::validation("support size must be at least 1"));
    }
    let mut probs = vec![0.0; s];
    probs[0] = 1.0;
    Ok(Distribution { probs })
}

pub fn make_uniform(s: usize) -> Result<Distribution> {
    if s == 0 {
        return Err(Error::validation("support size must be at least 1"));
    }
    Ok(Distribution {
        probs: vec![1.0 / s as f64; s],
    })
}

/// One atom of mass `heavy_mass`, the remainder spread evenly over the
/// other `S - 1` symbols.
pub fn make_two_level(s: usize, heavy_mass: f64) -> Result<Distribution> {
    if s < 2 {
        return Err(Error::validation("two-level family needs S >= 2"));
    }
    let floor = 1.0 / s as f64;
    // Allow a rounding-level shortfall at the uniform end.
    if !(heavy_mass.is_finite() && heavy_mass >= floor - 1e-15 && heavy_mass <= 1.0) {
        return Err(Error::validation(format!(
            "heavy_mass {heavy_mass} outside [1/S, 1] = [{floor}, 1]"
        )));
    }
    let heavy = heavy_mass.max(floor);
    let light = (1.0 - heavy) / (s - 1) as f64;
    let mut probs = vec![light; s];
    probs[0] = heavy;
    Distribution::new(probs)
}
