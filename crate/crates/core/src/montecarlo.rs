//! Monte Carlo risk estimation and worst-case search over witness families.
//!
//! Trial `t` under seed `s` draws from a ChaCha8 stream seeded with
//! [`SeedSpec::subseed`]`(t)`, which is the SplitMix64 output
//! `mix64(s + (t + 1) * 0x9E3779B97F4A7C15)`. Trials therefore depend only
//! on `(seed, trial)` and results are identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{entropy, make_point_mass, make_two_level, make_uniform, Counts, Distribution};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, TabulatedEstimator};
use crate::exact_risk::{enumeration_feasible, exact_risk_enumeration, RiskMethod, RiskReport};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub seed: u64,
}

impl SeedSpec {
    pub fn new(seed: u64) -> Self {
        SeedSpec { seed }
    }

    pub fn subseed(&self, trial: u64) -> u64 {
        mix64(self.seed.wrapping_add(trial.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    fn rng(&self, trial: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.subseed(trial))
    }
}

/// How a risk value is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodPolicy {
    /// Exact enumeration when feasible, Monte Carlo otherwise.
    #[default]
    Auto,
    ForceMc,
    ForceEnum,
}

/// Multinomial sampler using the conditional-binomial method: symbol `i`
/// receives `Binomial(remaining, p_i / sum_{j >= i} p_j)`.
struct MultinomialSampler {
    probs: Vec<f64>,
    /// `tail[i] = sum_{j >= i} p_j`.
    tail: Vec<f64>,
    n: u64,
}

impl MultinomialSampler {
    fn new(p: &Distribution, n: u64) -> Self {
        let probs = p.probs().to_vec();
        let mut tail = vec![0.0; probs.len()];
        let mut acc = 0.0;
        for i in (0..probs.len()).rev() {
            acc += probs[i];
            tail[i] = acc;
        }
        MultinomialSampler { probs, tail, n }
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [u64]) {
        let s = self.probs.len();
        let mut remaining = self.n;
        for (i, slot) in out.iter_mut().enumerate() {
            if remaining == 0 {
                *slot = 0;
                continue;
            }
            if i == s - 1 {
                *slot = remaining;
                break;
            }
            let p = self.probs[i];
            let q = if self.tail[i] > 0.0 {
                (p / self.tail[i]).min(1.0)
            } else {
                1.0
            };
            let x = if p <= 0.0 {
                0
            } else if q >= 1.0 {
                remaining
            } else {
                Binomial::new(remaining, q).expect("q in (0, 1)").sample(rng)
            };
            *slot = x;
            remaining -= x;
        }
    }
}

/// One multinomial draw of `n` samples from `p`, determined by `(seed, trial)`.
pub fn sample_counts(p: &Distribution, n: u64, seed: SeedSpec, trial: u64) -> Result<Counts> {
    if n == 0 {
        return Err(Error::validation("n must be at least 1"));
    }
    let sampler = MultinomialSampler::new(p, n);
    let mut out = vec![0; p.support_size()];
    sampler.sample_into(&mut seed.rng(trial), &mut out);
    Counts::new(out)
}

/// Sum in a fixed binary tree over index order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (l, r) = xs.split_at(xs.len() / 2);
        pairwise_sum(l) + pairwise_sum(r)
    }
}

/// Mean computed about the first element so that constant inputs come
/// back bit-exact.
fn shifted_mean(xs: &[f64]) -> f64 {
    let c = xs[0];
    let dev: Vec<f64> = xs.iter().map(|x| x - c).collect();
    c + pairwise_sum(&dev) / xs.len() as f64
}

fn sample_variance(xs: &[f64], mean: f64) -> f64 {
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    pairwise_sum(&sq) / (xs.len() - 1) as f64
}

/// Monte Carlo estimate of bias, variance and MSE over `trials` draws.
pub fn mc_risk(kind: EstimatorKind, p: &Distribution, n: u64, trials: u64, seed: SeedSpec) -> Result<RiskReport> {
    if trials < 2 {
        return Err(Error::validation("Monte Carlo needs at least 2 trials"));
    }
    let s = p.support_size();
    let estimator = TabulatedEstimator::new(kind, n, s)?;
    let sampler = MultinomialSampler::new(p, n);
    let truth = entropy(p);

    let estimates: Vec<f64> = (0..trials)
        .into_par_iter()
        .map_init(
            || (vec![0u64; s], Vec::new()),
            |(counts, scratch), t| {
                sampler.sample_into(&mut seed.rng(t), counts);
                estimator.evaluate_with(counts, scratch)
            },
        )
        .collect();

    let mean = shifted_mean(&estimates);
    let variance = sample_variance(&estimates, mean);
    let sq_err: Vec<f64> = estimates.iter().map(|e| (e - truth).powi(2)).collect();
    let mse = shifted_mean(&sq_err);
    let std_error = (sample_variance(&sq_err, mse) / trials as f64).sqrt();

    Ok(RiskReport {
        bias: mean - truth,
        variance,
        mse,
        method: RiskMethod::MonteCarlo,
        std_error: Some(std_error),
    })
}

/// Risk at one `(P, n)` using the requested method.
pub fn evaluate_risk(
    kind: EstimatorKind,
    p: &Distribution,
    n: u64,
    policy: MethodPolicy,
    trials: u64,
    seed: SeedSpec,
) -> Result<RiskReport> {
    match policy {
        MethodPolicy::ForceEnum => exact_risk_enumeration(kind, p, n),
        MethodPolicy::ForceMc => mc_risk(kind, p, n, trials, seed),
        MethodPolicy::Auto if enumeration_feasible(n, p.support_size()) => exact_risk_enumeration(kind, p, n),
        MethodPolicy::Auto => mc_risk(kind, p, n, trials, seed),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessFamily {
    PointMass,
    Uniform,
    TwoLevel,
}

impl WitnessFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            WitnessFamily::PointMass => "point_mass",
            WitnessFamily::Uniform => "uniform",
            WitnessFamily::TwoLevel => "two_level",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxRiskReport {
    pub worst_distribution: Distribution,
    pub worst_risk: f64,
    pub family: WitnessFamily,
    /// Heavy-atom mass of the maximizer when it is a two-level distribution.
    pub heavy_mass: Option<f64>,
    /// Number of candidate distributions whose risk was evaluated.
    pub evaluations: usize,
    /// Full risk report at the maximizer.
    pub report: RiskReport,
}

/// Interior points of the two-level log grid.
pub const TWO_LEVEL_GRID_POINTS: usize = 32;

/// Upper bound on the number of candidates one search evaluates: point
/// mass, uniform, the two-level grid, and two refinement points.
pub const WITNESS_CANDIDATES: usize = TWO_LEVEL_GRID_POINTS + 4;

/// Witness at position `t` in `[0, 1]`: heavy mass `S^(t - 1)`, so `t = 0`
/// is uniform and `t = 1` is the point mass.
fn witness_at(s: usize, t: f64) -> Result<(WitnessFamily, Option<f64>, Distribution)> {
    if t <= 0.0 {
        return Ok((WitnessFamily::Uniform, None, make_uniform(s)?));
    }
    if t >= 1.0 {
        return Ok((WitnessFamily::PointMass, None, make_point_mass(s)?));
    }
    let heavy = ((t - 1.0) * (s as f64).ln()).exp();
    Ok((WitnessFamily::TwoLevel, Some(heavy), make_two_level(s, heavy)?))
}

/// Search the point-mass, uniform and two-level witness families for the
/// distribution with the largest MSE.
///
/// `budget` is the total Monte Carlo trial budget, split evenly across
/// [`WITNESS_CANDIDATES`] evaluations. Every candidate reuses the same
/// seed.
pub fn max_risk_search(
    kind: EstimatorKind,
    n: u64,
    s: usize,
    budget: u64,
    seed: SeedSpec,
    policy: MethodPolicy,
) -> Result<MaxRiskReport> {
    if budget < WITNESS_CANDIDATES as u64 {
        return Err(Error::validation(format!(
            "budget {budget} is below the {WITNESS_CANDIDATES} witness candidates"
        )));
    }
    if s == 0 {
        return Err(Error::validation("support size must be at least 1"));
    }
    let trials = (budget / WITNESS_CANDIDATES as u64).max(2);

    let evaluate = |t: f64| -> Result<(f64, MaxRiskReport)> {
        let (family, heavy_mass, dist) = witness_at(s, t)?;
        let report = evaluate_risk(kind, &dist, n, policy, trials, seed)?;
        Ok((
            t,
            MaxRiskReport {
                worst_distribution: dist,
                worst_risk: report.mse,
                family,
                heavy_mass,
                evaluations: 0,
                report,
            },
        ))
    };

    let grid: Vec<f64> = if s == 1 {
        vec![1.0]
    } else {
        let steps = (TWO_LEVEL_GRID_POINTS + 1) as f64;
        (0..=TWO_LEVEL_GRID_POINTS + 1).map(|k| k as f64 / steps).collect()
    };
    let mut evaluated: Vec<(f64, MaxRiskReport)> = Vec::with_capacity(WITNESS_CANDIDATES);
    for &t in &grid {
        evaluated.push(evaluate(t)?);
    }

    // One halving pass between the best grid point and its neighbours.
    let best = argmax(&evaluated);
    if grid.len() > 1 {
        let mut extra = Vec::new();
        if best > 0 {
            extra.push(0.5 * (grid[best - 1] + grid[best]));
        }
        if best + 1 < grid.len() {
            extra.push(0.5 * (grid[best] + grid[best + 1]));
        }
        for t in extra {
            evaluated.push(evaluate(t)?);
        }
    }

    let evaluations = evaluated.len();
    let best = argmax(&evaluated);
    let mut report = evaluated.swap_remove(best).1;
    report.evaluations = evaluations;
    Ok(report)
}

/// First index of the largest risk.
fn argmax(candidates: &[(f64, MaxRiskReport)]) -> usize {
    let mut best = 0;
    for (i, (_, r)) in candidates.iter().enumerate() {
        if r.worst_risk > candidates[best].1.worst_risk {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_risk::exact_risk_enumeration;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn point_mass_samples_are_degenerate() {
        let p = make_point_mass(5).unwrap();
        for t in 0..50 {
            assert_eq!(
                sample_counts(&p, 17, SeedSpec::new(3), t).unwrap().counts(),
                &[17, 0, 0, 0, 0]
            );
        }
    }

    #[test]
    fn zero_mass_symbols_never_drawn() {
        let p = dist(&[0.0, 0.5, 0.0, 0.5, 0.0]);
        for t in 0..200 {
            let c = sample_counts(&p, 9, SeedSpec::new(11), t).unwrap();
            let c = c.counts();
            assert_eq!(c[0] + c[2] + c[4], 0);
            assert_eq!(c[1] + c[3], 9);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = dist(&[0.1, 0.2, 0.3, 0.4]);
        let seed = SeedSpec::new(0xDEADBEEF);
        let a = sample_counts(&p, 100, seed, 42).unwrap();
        let b = sample_counts(&p, 100, seed, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(seed.subseed(0), seed.subseed(1));
        assert_ne!(SeedSpec::new(1).subseed(0), SeedSpec::new(2).subseed(0));
    }

    #[test]
    fn binomial_marginal_mean() {
        // counts[0] ~ Binomial(n, p1): mean n p1, sd sqrt(n p1 (1 - p1) / trials).
        let (n, p1, trials) = (20u64, 0.3, 100_000u64);
        let p = dist(&[p1, 1.0 - p1]);
        let seed = SeedSpec::new(7);
        let total: u64 = (0..trials)
            .map(|t| sample_counts(&p, n, seed, t).unwrap().counts()[0])
            .sum();
        let mean = total as f64 / trials as f64;
        let sd = (n as f64 * p1 * (1.0 - p1) / trials as f64).sqrt();
        assert!((mean - n as f64 * p1).abs() < 4.0 * sd, "mean {mean}");
    }

    #[test]
    fn constant_estimator_reports_zero_variance() {
        let (n, s, a) = (30u64, 8usize, 1.0);
        let p = make_point_mass(s).unwrap();
        let r = mc_risk(EstimatorKind::DirichletPlugin { a }, &p, n, 1000, SeedSpec::new(1)).unwrap();
        let (nf, sf) = (n as f64, s as f64);
        let t = nf + sf * a;
        let closed = -((sf - 1.0) * a / t) * (a / t).ln() - ((nf + a) / t) * ((nf + a) / t).ln();
        let exact = TabulatedEstimator::new(EstimatorKind::DirichletPlugin { a }, n, s)
            .unwrap()
            .evaluate(&{
                let mut v = vec![0; s];
                v[0] = n;
                v
            });
        assert_eq!(r.variance, 0.0);
        assert_eq!(r.std_error, Some(0.0));
        assert_eq!(r.mse, exact * exact);
        assert!((r.mse - closed * closed).abs() < 1e-14);
    }

    #[test]
    fn agrees_with_enumeration() {
        let p = dist(&[0.5, 0.5]);
        let exact = exact_risk_enumeration(EstimatorKind::Mle, &p, 10).unwrap();
        let mc = mc_risk(EstimatorKind::Mle, &p, 10, 200_000, SeedSpec::new(5)).unwrap();
        let se = mc.std_error.unwrap();
        assert!(
            (mc.mse - exact.mse).abs() < 5.0 * se,
            "{} vs {} (se {se})",
            mc.mse,
            exact.mse
        );
    }

    #[test]
    fn std_error_scales_with_sqrt_trials() {
        let p = dist(&[0.6, 0.3, 0.1]);
        let seed = SeedSpec::new(99);
        let a = mc_risk(EstimatorKind::Mle, &p, 15, 20_000, seed).unwrap();
        let b = mc_risk(EstimatorKind::Mle, &p, 15, 80_000, seed).unwrap();
        let ratio = a.std_error.unwrap() / b.std_error.unwrap();
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn rejects_single_trial() {
        let p = make_uniform(3).unwrap();
        assert!(mc_risk(EstimatorKind::Mle, &p, 5, 1, SeedSpec::new(0)).is_err());
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let p = dist(&[0.4, 0.3, 0.2, 0.1]);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_risk(EstimatorKind::DirichletBayes { a: 0.5 }, &p, 40, 5000, SeedSpec::new(8)).unwrap())
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one.mse.to_bits(), four.mse.to_bits());
        assert_eq!(one.variance.to_bits(), four.variance.to_bits());
        assert_eq!(one.bias.to_bits(), four.bias.to_bits());
    }

    #[test]
    fn search_reports_reproducible_maximizer() {
        let kind = EstimatorKind::DirichletPlugin { a: 1.0 };
        let seed = SeedSpec::new(21);
        let r = max_risk_search(kind, 20, 6, 36 * 500, seed, MethodPolicy::ForceMc).unwrap();
        assert!(r.evaluations >= 34 && r.evaluations <= WITNESS_CANDIDATES);
        let again = mc_risk(kind, &r.worst_distribution, 20, 500, seed).unwrap();
        assert_eq!(again.mse, r.worst_risk);
        let exact = max_risk_search(kind, 20, 6, 36, seed, MethodPolicy::Auto).unwrap();
        assert_eq!(exact.report.method, RiskMethod::ExactEnumeration);
        assert!(max_risk_search(kind, 20, 6, 10, seed, MethodPolicy::Auto).is_err());
    }

    #[test]
    fn search_on_single_symbol() {
        let r = max_risk_search(EstimatorKind::Mle, 5, 1, 100, SeedSpec::new(0), MethodPolicy::Auto).unwrap();
        assert_eq!(r.family, WitnessFamily::PointMass);
        assert_eq!(r.worst_risk, 0.0);
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn plugin_below_sa_is_large_at_point_mass() {
        // n < Sa regime: max risk >= (ln S)^2 / 16.
        let (n, s, a) = (5u64, 100usize, 1.0);
        let r = max_risk_search(
            EstimatorKind::DirichletPlugin { a },
            n,
            s,
            36 * 200,
            SeedSpec::new(4),
            MethodPolicy::ForceMc,
        )
        .unwrap();
        assert!(r.worst_risk >= (s as f64).ln().powi(2) / 16.0);
    }
}
