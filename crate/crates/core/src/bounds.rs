//! Closed-form bias, variance and maximum-risk bounds for the
//! Dirichlet-smoothed plug-in estimator `H(P_hat_B)`, the MLE, and the
//! Dirichlet-Bayes estimator.
//!
//! Each evaluator checks the regime its bound is stated for. Preconditions
//! written with `>=` are inclusive. The unknown universal constant `c` in
//! the `c ln^2 S / n` lower-bound term is never given a value: evaluators
//! return its coefficient `ln^2 S / n` separately.

use std::f64::consts::E;
use std::fmt;

use serde::Serialize;

use crate::approx::thm4_bias_bound;
use crate::error::{Error, Result};

fn check_inputs(n: u64, s: usize, a: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::validation("n must be at least 1"));
    }
    if s == 0 {
        return Err(Error::validation("S must be at least 1"));
    }
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::validation(format!("a must be finite and >= 0, got {a}")));
    }
    Ok(())
}

/// `(2 S a / (n + S a)) ln((n + S a) / (2 a))`, with its `a -> 0` limit `0`.
pub(crate) fn smoothing_gap_term(n: f64, s: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let t = n + s * a;
    2.0 * s * a / t * (t / (2.0 * a)).ln()
}

/// `((S - 3) a / (4 (n + S a))) ln((n + S a) / a)`, with its `a -> 0` limit `0`.
fn point_mass_term(n: f64, s: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let t = n + s * a;
    (s - 3.0) * a / (4.0 * t) * (t / a).ln()
}

fn require_n_ge_sa(n: u64, s: usize, a: f64, what: &str) -> Result<()> {
    if (n as f64) < s as f64 * a {
        return Err(Error::regime(format!(
            "{what} requires n >= S a; got n = {n}, S a = {}",
            s as f64 * a
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thm1Bound {
    pub bias: f64,
    pub variance: f64,
    /// `bias^2 + variance`.
    pub total: f64,
}

/// Upper bound on the maximum L2 risk of `H(P_hat_B)`. Requires `n >= S a`.
pub fn thm1_upper(n: u64, s: usize, a: f64) -> Result<Thm1Bound> {
    let bias = appendix_bias_upper(n, s, a)?;
    let variance = variance_upper(n, s, a)?;
    Ok(Thm1Bound {
        bias,
        variance,
        total: bias * bias + variance,
    })
}

/// `sup_P E|H(P_hat_B) - H(P)| <= ln(1 + (S-1)/(n+Sa)) + (2Sa/(n+Sa)) ln((n+Sa)/(2a))`.
pub fn appendix_bias_upper(n: u64, s: usize, a: f64) -> Result<f64> {
    check_inputs(n, s, a)?;
    require_n_ge_sa(n, s, a, "the bias upper bound")?;
    let (nf, sf) = (n as f64, s as f64);
    Ok(((sf - 1.0) / (nf + sf * a)).ln_1p() + smoothing_gap_term(nf, sf, a))
}

/// `Var(H(P_hat_B)) <= 2n/(n+Sa)^2 [3 + ln(min((n+Sa)/(a+1), S))]^2`; holds for all `(n, S, a)`.
pub fn variance_upper(n: u64, s: usize, a: f64) -> Result<f64> {
    check_inputs(n, s, a)?;
    let (nf, sf) = (n as f64, s as f64);
    let t = nf + sf * a;
    let log_arg = (t / (a + 1.0)).min(sf);
    Ok(2.0 * nf / (t * t) * (3.0 + log_arg.ln()).powi(2))
}

/// Computable part of the `n >= max(15S, Sa)` lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thm2Main {
    /// `1/2 [ (S-3)a/(4(n+Sa)) ln((n+Sa)/a) + (S-1)/(8n) + S^2/(80n^2) - 1/(48n^2) ]^2`.
    pub value: f64,
    /// Coefficient `ln^2 S / n` of the unknown constant `c`.
    pub c_coefficient: f64,
}

/// Lower bounds on the maximum L2 risk of `H(P_hat_B)`, one per regime.
/// A regime whose precondition fails is `None`; several may apply at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thm2Lower {
    /// `n >= max(15S, Sa)`: the bound is `main.value + c * main.c_coefficient`.
    pub main: Option<Thm2Main>,
    /// `n < Sa`: `ln^2 S / 16`.
    pub below_sa: Option<f64>,
    /// `n < 15S`: `[( (S-3)a/(4(n+Sa)) ln((n+Sa)/a) + floor(n/15)/(8n) - 1/(16n) )_+]^2`.
    pub below_15s: Option<f64>,
}

pub fn thm2_lower(n: u64, s: usize, a: f64) -> Result<Thm2Lower> {
    check_inputs(n, s, a)?;
    let (nf, sf) = (n as f64, s as f64);
    let flags = RegimeFlags::new(n, s, a);
    let pm = point_mass_term(nf, sf, a);

    let main = flags.n_ge_max_15s_sa.then(|| {
        let inner = pm + (sf - 1.0) / (8.0 * nf) + sf * sf / (80.0 * nf * nf) - 1.0 / (48.0 * nf * nf);
        Thm2Main {
            value: 0.5 * inner * inner,
            c_coefficient: sf.ln().powi(2) / nf,
        }
    });
    let below_sa = flags.n_lt_sa.then(|| sf.ln().powi(2) / 16.0);
    let below_15s = flags.n_lt_15s.then(|| {
        let inner = pm + (n / 15) as f64 / (8.0 * nf) - 1.0 / (16.0 * nf);
        inner.max(0.0).powi(2)
    });
    Ok(Thm2Lower {
        main,
        below_sa,
        below_15s,
    })
}

/// Lower bound on the maximum L2 risk of the Dirichlet-Bayes estimator.
///
/// * `S >= e(2n+1)` and `n >= Sa`: `(ln(S / (e(2n+1))))^2`
/// * `n < Sa`: `[(ln((Sa+n) / (e(a+n+1))))_+]^2`
pub fn thm3_bayes_lower(n: u64, s: usize, a: f64) -> Result<f64> {
    check_inputs(n, s, a)?;
    let (nf, sf) = (n as f64, s as f64);
    let flags = RegimeFlags::new(n, s, a);
    if flags.s_ge_e_2n_plus_1 && flags.n_ge_sa {
        Ok((sf / (E * (2.0 * nf + 1.0))).ln().powi(2))
    } else if flags.n_lt_sa {
        Ok(((sf * a + nf) / (E * (a + nf + 1.0))).ln().max(0.0).powi(2))
    } else {
        Err(Error::regime(format!(
            "Bayes lower bound needs S >= e(2n+1) with n >= Sa, or n < Sa; got n = {n}, S = {s}, a = {a}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MleBounds {
    /// `(ln(1 + (S-1)/n))^2 + min((ln n)^2/n, 2(ln S + 2)^2/n)`, valid for all n.
    pub upper: f64,
    /// `1/2 ((S-1)/(2n) + S^2/(20n^2) - 1/(12n^2))^2` when `n >= 15S`.
    pub lower_main: Option<f64>,
    /// Coefficient `ln^2 S / n` of the unknown constant `c`.
    pub c_coefficient: f64,
}

pub fn mle_bounds(n: u64, s: usize) -> Result<MleBounds> {
    check_inputs(n, s, 0.0)?;
    let (nf, sf) = (n as f64, s as f64);
    let bias = ((sf - 1.0) / nf).ln_1p();
    let var = (nf.ln().powi(2) / nf).min(2.0 * (sf.ln() + 2.0).powi(2) / nf);
    let lower_main = (nf >= 15.0 * sf).then(|| {
        let inner = (sf - 1.0) / (2.0 * nf) + sf * sf / (20.0 * nf * nf) - 1.0 / (12.0 * nf * nf);
        0.5 * inner * inner
    });
    Ok(MleBounds {
        upper: bias * bias + var,
        lower_main,
        c_coefficient: sf.ln().powi(2) / nf,
    })
}

/// Which bound preconditions hold at `(n, S, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegimeFlags {
    pub n_ge_sa: bool,
    pub n_ge_15s: bool,
    pub n_ge_max_15s_sa: bool,
    pub s_ge_e_2n_plus_1: bool,
    pub n_lt_sa: bool,
    pub n_lt_15s: bool,
}

impl RegimeFlags {
    pub fn new(n: u64, s: usize, a: f64) -> Self {
        let (nf, sf) = (n as f64, s as f64);
        let n_ge_sa = nf >= sf * a;
        let n_ge_15s = nf >= 15.0 * sf;
        RegimeFlags {
            n_ge_sa,
            n_ge_15s,
            n_ge_max_15s_sa: n_ge_sa && n_ge_15s,
            s_ge_e_2n_plus_1: sf >= E * (2.0 * nf + 1.0),
            n_lt_sa: !n_ge_sa,
            n_lt_15s: !n_ge_15s,
        }
    }

    /// Names of the satisfied preconditions.
    pub fn names(&self) -> Vec<&'static str> {
        [
            (self.n_ge_sa, "n>=Sa"),
            (self.n_ge_15s, "n>=15S"),
            (self.n_ge_max_15s_sa, "n>=max(15S,Sa)"),
            (self.s_ge_e_2n_plus_1, "S>=e(2n+1)"),
            (self.n_lt_sa, "n<Sa"),
            (self.n_lt_15s, "n<15S"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect()
    }
}

impl fmt::Display for RegimeFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names().join(";"))
    }
}

/// Every bound evaluated at one `(n, S, a)`; inapplicable entries are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundProfile {
    pub n: u64,
    #[serde(rename = "S")]
    pub s: usize,
    pub a: f64,
    pub thm1_bias: Option<f64>,
    pub thm1_var: Option<f64>,
    pub thm1_total: Option<f64>,
    pub thm2_lower_main: Option<f64>,
    pub thm2_c_term_coefficient: Option<f64>,
    pub thm2_small_n_value: Option<f64>,
    pub thm2_below_15s_value: Option<f64>,
    pub thm3_lower: Option<f64>,
    pub mle_upper: f64,
    pub mle_lower_main: Option<f64>,
    pub var_upper: f64,
    pub appendix_bias_upper: Option<f64>,
    pub thm4_bias: Option<f64>,
    pub regime_flags: RegimeFlags,
}

impl BoundProfile {
    pub const CSV_HEADER: [&'static str; 17] = [
        "n",
        "S",
        "a",
        "thm1_bias",
        "thm1_var",
        "thm1_total",
        "thm2_lower_main",
        "thm2_c_term_coefficient",
        "thm2_small_n_value",
        "thm2_below_15s_value",
        "thm3_lower",
        "mle_upper",
        "mle_lower_main",
        "var_upper",
        "appendix_bias_upper",
        "thm4_bias",
        "regime_flags",
    ];

    pub fn evaluate(n: u64, s: usize, a: f64) -> Result<Self> {
        check_inputs(n, s, a)?;
        let thm1 = thm1_upper(n, s, a).ok();
        let thm2 = thm2_lower(n, s, a)?;
        let mle = mle_bounds(n, s)?;
        Ok(BoundProfile {
            n,
            s,
            a,
            thm1_bias: thm1.map(|b| b.bias),
            thm1_var: thm1.map(|b| b.variance),
            thm1_total: thm1.map(|b| b.total),
            thm2_lower_main: thm2.main.map(|m| m.value),
            thm2_c_term_coefficient: thm2.main.map(|m| m.c_coefficient),
            thm2_small_n_value: thm2.below_sa,
            thm2_below_15s_value: thm2.below_15s,
            thm3_lower: thm3_bayes_lower(n, s, a).ok(),
            mle_upper: mle.upper,
            mle_lower_main: mle.lower_main,
            var_upper: variance_upper(n, s, a)?,
            appendix_bias_upper: appendix_bias_upper(n, s, a).ok(),
            thm4_bias: thm4_bias_bound(n, s, a).ok(),
            regime_flags: RegimeFlags::new(n, s, a),
        })
    }

    /// Cell values matching [`BoundProfile::CSV_HEADER`]; `None` becomes an empty cell.
    pub fn csv_cells(&self) -> Vec<String> {
        use crate::sweep::{fmt_f64, fmt_opt};
        vec![
            self.n.to_string(),
            self.s.to_string(),
            fmt_f64(self.a),
            fmt_opt(self.thm1_bias),
            fmt_opt(self.thm1_var),
            fmt_opt(self.thm1_total),
            fmt_opt(self.thm2_lower_main),
            fmt_opt(self.thm2_c_term_coefficient),
            fmt_opt(self.thm2_small_n_value),
            fmt_opt(self.thm2_below_15s_value),
            fmt_opt(self.thm3_lower),
            fmt_f64(self.mle_upper),
            fmt_opt(self.mle_lower_main),
            fmt_f64(self.var_upper),
            fmt_opt(self.appendix_bias_upper),
            fmt_opt(self.thm4_bias),
            self.regime_flags.to_string(),
        ]
    }
}
