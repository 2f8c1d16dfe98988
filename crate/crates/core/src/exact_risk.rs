//! Exact risk computation.
//!
//! Two independent routes:
//!
//! * [`exact_bias_separable`] uses the fact that each count `X_i` is
//!   marginally `Binomial(n, p_i)` and every estimator is a constant plus a
//!   sum of per-symbol terms, so `E[H_hat]` is a sum of `S` binomial
//!   expectations (`O(nS)`).
//! * [`exact_risk_enumeration`] walks every composition of `n` into `S`
//!   parts and weights each by its multinomial probability. It gives the
//!   full bias/variance/MSE and serves as the oracle for the first route.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::{ln_binomial, ln_factorial};

use crate::distributions::{entropy, Distribution};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, SeparableForm, TabulatedEstimator};

/// Largest number of multinomial outcomes the enumeration will visit.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMethod {
    ExactSeparable,
    ExactEnumeration,
    MonteCarlo,
}

impl RiskMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            RiskMethod::ExactSeparable => "exact_separable",
            RiskMethod::ExactEnumeration => "exact_enumeration",
            RiskMethod::MonteCarlo => "monte_carlo",
        }
    }
}

/// Bias, variance and mean squared error of one estimator at one `(P, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub method: RiskMethod,
    /// Standard error of `mse`; only present for Monte Carlo estimates.
    pub std_error: Option<f64>,
}

/// `ln[C(n, j) p^j (1 - p)^(n - j)]`.
///
/// `p = 0` and `p = 1` are handled exactly: the forced outcome has
/// log-probability `0`, every other outcome `-inf`.
pub fn log_binomial_pmf(n: u64, p: f64, j: u64) -> Result<f64> {
    if j > n {
        return Err(Error::validation(format!("outcome {j} outside 0..={n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::validation(format!("success probability {p} outside [0, 1]")));
    }
    Ok(log_binomial_pmf_unchecked(n, p, j))
}

fn log_binomial_pmf_unchecked(n: u64, p: f64, j: u64) -> f64 {
    if p == 0.0 {
        return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return if j == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let (jf, rest) = (j as f64, (n - j) as f64);
    ln_binomial(n, j) + jf * p.ln() + rest * (-p).ln_1p()
}

/// Binomial(n, p) probabilities for `j = 0..=n`.
fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    (0..=n).map(|j| log_binomial_pmf_unchecked(n, p, j).exp()).collect()
}

/// `E_P[H_hat] - H(P)` computed from per-symbol binomial marginals.
pub fn exact_bias_separable(kind: EstimatorKind, p: &Distribution, n: u64) -> Result<f64> {
    let form = SeparableForm::new(kind, n, p.support_size())?;
    let table = form.table();

    // Symbols with equal probability contribute equally.
    let mut groups: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
    for &pi in p.probs() {
        groups.entry(pi.to_bits()).or_insert((pi, 0)).1 += 1;
    }
    let mut expected = 0.0;
    for (pi, mult) in groups.into_values() {
        let e: f64 = binomial_pmf(n, pi)
            .iter()
            .zip(&table)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, t)| w * t)
            .sum();
        expected += mult as f64 * e;
    }
    Ok(form.constant() + expected - entropy(p))
}

/// Number of compositions of `n` into `s` non-negative parts,
/// `C(n + s - 1, s - 1)`, or `None` once it exceeds `cap`.
pub fn composition_count(n: u64, s: usize, cap: u128) -> Option<u128> {
    if s == 0 {
        return Some(0);
    }
    let k = ((s - 1) as u128).min(n as u128);
    let m = n as u128 + s as u128 - 1;
    let mut c: u128 = 1;
    for i in 1..=k {
        c = c * (m - k + i) / i;
        if c > cap {
            return None;
        }
    }
    Some(c)
}

pub fn enumeration_feasible(n: u64, s: usize) -> bool {
    composition_count(n, s, ENUMERATION_LIMIT).is_some()
}

/// Exact bias, variance and MSE by summing over every multinomial outcome.
pub fn exact_risk_enumeration(kind: EstimatorKind, p: &Distribution, n: u64) -> Result<RiskReport> {
    let s = p.support_size();
    if composition_count(n, s, ENUMERATION_LIMIT).is_none() {
        return Err(Error::Resource(format!(
            "C(n+S-1, S-1) exceeds {ENUMERATION_LIMIT} outcomes for n={n}, S={s}; use Monte Carlo"
        )));
    }
    let estimator = TabulatedEstimator::new(kind, n, s)?;
    let truth = entropy(p);
    let walker = Walker::new(p, n, &estimator);

    // Pass 1: mean. Pass 2: central second moment and squared error.
    let first = walker.accumulate(|e| [1.0, e]);
    let total_weight = first[0];
    let mean = first[1] / total_weight;
    let second = walker.accumulate(|e| [(e - mean).powi(2), (e - truth).powi(2)]);

    Ok(RiskReport {
        bias: mean - truth,
        variance: (second[0] / total_weight).max(0.0),
        mse: second[1] / total_weight,
        method: RiskMethod::ExactEnumeration,
        std_error: None,
    })
}

struct Walker<'a> {
    n: u64,
    ln_p: Vec<f64>,
    ln_fact: Vec<f64>,
    estimator: &'a TabulatedEstimator,
}

impl<'a> Walker<'a> {
    fn new(p: &Distribution, n: u64, estimator: &'a TabulatedEstimator) -> Self {
        Walker {
            n,
            ln_p: p.probs().iter().map(|&x| x.ln()).collect(),
            ln_fact: (0..=n).map(ln_factorial).collect(),
            estimator,
        }
    }

    /// Sum of `weight * f(estimate)` over all outcomes, partitioned by the
    /// first coordinate and reduced in ascending order of it.
    fn accumulate<F>(&self, f: F) -> [f64; 2]
    where
        F: Fn(f64) -> [f64; 2] + Sync,
    {
        let partials: Vec<[f64; 2]> = (0..=self.n)
            .into_par_iter()
            .map(|x0| {
                let mut acc = [0.0; 2];
                let mut counts = vec![0u64; self.ln_p.len()];
                let mut scratch = Vec::new();
                if let Some(lw) = self.coordinate_weight(0, x0) {
                    counts[0] = x0;
                    let base = self.ln_fact[self.n as usize] + lw;
                    self.walk(1, self.n - x0, base, &mut counts, &mut scratch, &f, &mut acc);
                }
                acc
            })
            .collect();
        partials.iter().fold([0.0; 2], |acc, p| [acc[0] + p[0], acc[1] + p[1]])
    }

    /// `x ln p_i - ln x!`, or `None` when the outcome is impossible.
    fn coordinate_weight(&self, i: usize, x: u64) -> Option<f64> {
        let lp = self.ln_p[i];
        if x == 0 {
            Some(0.0)
        } else if lp == f64::NEG_INFINITY {
            None
        } else {
            Some(x as f64 * lp - self.ln_fact[x as usize])
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn walk<F>(
        &self,
        i: usize,
        remaining: u64,
        log_weight: f64,
        counts: &mut [u64],
        scratch: &mut Vec<u64>,
        f: &F,
        acc: &mut [f64; 2],
    ) where
        F: Fn(f64) -> [f64; 2],
    {
        let s = counts.len();
        if i == s {
            if remaining != 0 {
                return;
            }
            let w = log_weight.exp();
            if w > 0.0 {
                let e = self.estimator.evaluate_with(counts, scratch);
                let v = f(e);
                acc[0] += w * v[0];
                acc[1] += w * v[1];
            }
            return;
        }
        if i == s - 1 {
            if let Some(lw) = self.coordinate_weight(i, remaining) {
                counts[i] = remaining;
                self.walk(s, 0, log_weight + lw, counts, scratch, f, acc);
            }
            return;
        }
        for x in 0..=remaining {
            let Some(lw) = self.coordinate_weight(i, x) else {
                break;
            };
            counts[i] = x;
            self.walk(i + 1, remaining - x, log_weight + lw, counts, scratch, f, acc);
        }
        counts[i] = 0;
    }
}
