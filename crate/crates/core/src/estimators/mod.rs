//! Entropy estimators: the plug-in MLE, Miller–Madow, the Dirichlet-smoothed
//! plug-in, and the Bayes estimator under a symmetric Dirichlet prior.
//!
//! Every estimator here is *separable*: for a fixed sample size `n` and
//! alphabet size `S` it can be written as
//!
//! ```text
//! H_hat(X) = c(n, S) + sum_i t(X_i)
//! ```
//!
//! for a constant `c` and a per-symbol term `t` that depends only on the
//! count of that symbol. [`SeparableForm`] exposes exactly that split; the
//! exact-risk and Monte Carlo code build on it.

mod digamma;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use self::digamma::digamma;
pub(crate) use self::digamma::psi;

use crate::distributions::{neg_xlogx, Counts, Distribution};
use crate::error::{Error, Result};

/// Which estimator to apply, with the Dirichlet concentration where relevant.
///
/// A Dirichlet kind with `a = 0` is the `alpha -> 0` limit and evaluates
/// exactly as [`EstimatorKind::Mle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKind", into = "RawKind")]
pub enum EstimatorKind {
    Mle,
    MillerMadow,
    DirichletPlugin { a: f64 },
    DirichletBayes { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindTag {
    Mle,
    MillerMadow,
    DirichletPlugin,
    DirichletBayes,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKind {
    kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
}

impl TryFrom<RawKind> for EstimatorKind {
    type Error = Error;

    fn try_from(raw: RawKind) -> Result<Self> {
        let kind = match (raw.kind, raw.a) {
            (KindTag::Mle, None) => EstimatorKind::Mle,
            (KindTag::MillerMadow, None) => EstimatorKind::MillerMadow,
            (KindTag::Mle | KindTag::MillerMadow, Some(_)) => {
                return Err(Error::validation("field \"a\" only applies to Dirichlet estimators"))
            }
            (KindTag::DirichletPlugin, Some(a)) => EstimatorKind::DirichletPlugin { a },
            (KindTag::DirichletBayes, Some(a)) => EstimatorKind::DirichletBayes { a },
            (KindTag::DirichletPlugin | KindTag::DirichletBayes, None) => {
                return Err(Error::validation("Dirichlet estimators need field \"a\""))
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl From<EstimatorKind> for RawKind {
    fn from(kind: EstimatorKind) -> Self {
        match kind {
            EstimatorKind::Mle => RawKind {
                kind: KindTag::Mle,
                a: None,
            },
            EstimatorKind::MillerMadow => RawKind {
                kind: KindTag::MillerMadow,
                a: None,
            },
            EstimatorKind::DirichletPlugin { a } => RawKind {
                kind: KindTag::DirichletPlugin,
                a: Some(a),
            },
            EstimatorKind::DirichletBayes { a } => RawKind {
                kind: KindTag::DirichletBayes,
                a: Some(a),
            },
        }
    }
}

impl EstimatorKind {
    pub const TAGS: [&'static str; 4] = ["mle", "miller_madow", "dirichlet_plugin", "dirichlet_bayes"];

    /// Build a kind from its tag. `a` is required for the Dirichlet kinds
    /// and ignored otherwise.
    pub fn from_tag(tag: &str, a: Option<f64>) -> Result<Self> {
        let need_a = || a.ok_or_else(|| Error::validation(format!("estimator {tag} needs a value for a")));
        let kind = match tag {
            "mle" => EstimatorKind::Mle,
            "miller_madow" => EstimatorKind::MillerMadow,
            "dirichlet_plugin" => EstimatorKind::DirichletPlugin { a: need_a()? },
            "dirichlet_bayes" => EstimatorKind::DirichletBayes { a: need_a()? },
            other => {
                return Err(Error::validation(format!(
                    "unknown estimator {other:?}; expected one of {}",
                    Self::TAGS.join(", ")
                )))
            }
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn tag(&self) -> &'static str {
        match self {
            EstimatorKind::Mle => "mle",
            EstimatorKind::MillerMadow => "miller_madow",
            EstimatorKind::DirichletPlugin { .. } => "dirichlet_plugin",
            EstimatorKind::DirichletBayes { .. } => "dirichlet_bayes",
        }
    }

    /// The Dirichlet concentration, `0` for the non-Dirichlet kinds.
    pub fn a(&self) -> f64 {
        match *self {
            EstimatorKind::DirichletPlugin { a } | EstimatorKind::DirichletBayes { a } => a,
            _ => 0.0,
        }
    }

    /// Same estimator family with a different concentration. No-op for
    /// MLE and Miller–Madow.
    pub fn with_a(self, a: f64) -> Self {
        match self {
            EstimatorKind::DirichletPlugin { .. } => EstimatorKind::DirichletPlugin { a },
            EstimatorKind::DirichletBayes { .. } => EstimatorKind::DirichletBayes { a },
            other => other,
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(
            self,
            EstimatorKind::DirichletPlugin { .. } | EstimatorKind::DirichletBayes { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.a();
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::validation(format!(
                "Dirichlet concentration must be finite and >= 0, got {a}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// `P_hat_B = w P_n + (1 - w) Uniform(S)` with `w = n / (n + S a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedDistribution {
    pub distribution: Distribution,
    pub weight: f64,
}

/// Posterior-mean distribution `(X_i + a) / (n + S a)`.
pub fn smooth(counts: &Counts, a: f64) -> Result<SmoothedDistribution> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::validation(format!("a must be finite and >= 0, got {a}")));
    }
    let s = counts.support_size() as f64;
    let n = counts.n() as f64;
    let total = n + s * a;
    let probs = counts.counts().iter().map(|&x| (x as f64 + a) / total).collect();
    Ok(SmoothedDistribution {
        distribution: Distribution::new(probs)?,
        weight: n / total,
    })
}

/// Deterministic analogue of [`smooth`]: `(n p_i + a) / (n + S a)`.
pub fn smooth_distribution(p: &Distribution, n: u64, a: f64) -> Result<SmoothedDistribution> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::validation(format!("a must be finite and >= 0, got {a}")));
    }
    let s = p.support_size() as f64;
    let n = n as f64;
    let total = n + s * a;
    let probs = p.probs().iter().map(|&pi| (n * pi + a) / total).collect();
    Ok(SmoothedDistribution {
        distribution: Distribution::new(probs)?,
        weight: n / total,
    })
}

/// The `c(n, S) + sum_i t(X_i)` decomposition of an estimator at fixed
/// `(n, S)`.
#[derive(Debug, Clone, Copy)]
pub struct SeparableForm {
    rule: TermRule,
    n: u64,
    constant: f64,
}

#[derive(Debug, Clone, Copy)]
enum TermRule {
    /// `-q ln q` with `q = (k + a) / denom`.
    PlugIn { a: f64, denom: f64 },
    /// `-(a + k) / denom * psi(a + k + 1)`.
    Bayes { a: f64, denom: f64 },
}

impl SeparableForm {
    pub fn new(kind: EstimatorKind, n: u64, s: usize) -> Result<Self> {
        kind.validate()?;
        if n == 0 {
            return Err(Error::validation("n = 0 invalid: at least one sample is required"));
        }
        if s == 0 {
            return Err(Error::validation("support size must be at least 1"));
        }
        let nf = n as f64;
        let sf = s as f64;
        let plug_mle = TermRule::PlugIn { a: 0.0, denom: nf };
        let (rule, constant) = match kind {
            EstimatorKind::Mle => (plug_mle, 0.0),
            EstimatorKind::MillerMadow => (plug_mle, (sf - 1.0) / (2.0 * nf)),
            EstimatorKind::DirichletPlugin { a } | EstimatorKind::DirichletBayes { a } if a == 0.0 => (plug_mle, 0.0),
            EstimatorKind::DirichletPlugin { a } => (TermRule::PlugIn { a, denom: nf + sf * a }, 0.0),
            EstimatorKind::DirichletBayes { a } => {
                let denom = nf + sf * a;
                (TermRule::Bayes { a, denom }, psi(denom + 1.0))
            }
        };
        Ok(SeparableForm { rule, n, constant })
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Per-symbol contribution of a symbol observed `k` times.
    #[inline]
    pub fn term(&self, k: u64) -> f64 {
        let k = k as f64;
        match self.rule {
            TermRule::PlugIn { a, denom } => neg_xlogx((k + a) / denom),
            TermRule::Bayes { a, denom } => -(a + k) / denom * psi(a + k + 1.0),
        }
    }

    /// `t(k)` for every `k` in `0..=n`.
    pub fn table(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.term(k)).collect()
    }

    /// Evaluate the estimator on a count vector whose entries sum to `n`.
    ///
    /// Symbols are grouped by count and accumulated from the largest count
    /// down, so the result does not depend on the order of `counts`.
    pub fn evaluate(&self, counts: &[u64]) -> f64 {
        let mut multiplicity: BTreeMap<u64, u64> = BTreeMap::new();
        for &k in counts {
            *multiplicity.entry(k).or_default() += 1;
        }
        let sum: f64 = multiplicity.iter().rev().map(|(&k, &m)| m as f64 * self.term(k)).sum();
        self.constant + sum
    }
}

/// [`SeparableForm`] with the per-count terms precomputed, for evaluating
/// the same estimator on many count vectors.
#[derive(Debug, Clone)]
pub struct TabulatedEstimator {
    constant: f64,
    table: Vec<f64>,
}

impl TabulatedEstimator {
    pub fn new(kind: EstimatorKind, n: u64, s: usize) -> Result<Self> {
        let form = SeparableForm::new(kind, n, s)?;
        Ok(TabulatedEstimator {
            constant: form.constant,
            table: form.table(),
        })
    }

    /// Same result as [`SeparableForm::evaluate`], using `scratch` as a
    /// reusable histogram buffer.
    pub fn evaluate_with(&self, counts: &[u64], scratch: &mut Vec<u64>) -> f64 {
        scratch.clear();
        scratch.resize(self.table.len(), 0);
        for &k in counts {
            scratch[k as usize] += 1;
        }
        let sum: f64 = scratch
            .iter()
            .zip(&self.table)
            .rev()
            .filter(|(&m, _)| m > 0)
            .map(|(&m, &t)| m as f64 * t)
            .sum();
        self.constant + sum
    }

    pub fn evaluate(&self, counts: &[u64]) -> f64 {
        self.evaluate_with(counts, &mut Vec::new())
    }
}

/// Apply an estimator to observed counts. The alphabet size is the length
/// of the count vector. Result in nats.
pub fn estimate(kind: EstimatorKind, counts: &Counts) -> Result<f64> {
    let form = SeparableForm::new(kind, counts.n(), counts.support_size())?;
    Ok(form.evaluate(counts.counts()))
}
