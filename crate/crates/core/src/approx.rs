//! Positive linear functionals on `C[0, 1]` and the bias bounds built on them.
//!
//! A plug-in estimator `f(X_hat)` has expectation `F(f)` for the positive
//! linear functional `F` whose point masses are the law of `X_hat`, so the
//! plug-in bias at `x` is the approximation error `F(f) - f(x)`. This module
//! represents such functionals by finitely many point masses, computes the
//! moments and moduli of smoothness that control the error, and evaluates
//! two error bounds:
//!
//! * [`lemma1_bound`]: `B_F(x)/(2 h1 phi(x)) * w1_phi(f, 2 h1) + 5/2 w2_phi(f, h1)`
//! * [`lemma3_bound`]: `w1(f, B_F(x); x) + 5/2 w2_phi(f, h2)`
//!
//! with `phi(x) = sqrt(x (1 - x))`, `h1 = sqrt(F((e1 - x)^2)) / phi(x)` and
//! `h2 = sqrt(V_F) / phi(x)`.
//!
//! Moduli of general functions are found by grid search over the
//! constraint set and are lower approximations of the supremum. For
//! `f(t) = -t ln t` the pointwise first modulus and the second
//! Ditzian–Totik modulus have exact expressions and those are used instead.

use rayon::prelude::*;

use crate::bounds::smoothing_gap_term;
use crate::distributions::{neg_xlogx, Distribution};
use crate::error::{Error, Result};
use crate::exact_risk::log_binomial_pmf;

/// A real function on `[0, 1]`.
pub trait UnitFunction: Sync {
    fn eval(&self, t: f64) -> f64;

    /// `true` only for `t -> -t ln t`, which unlocks exact moduli.
    fn is_neg_entropy(&self) -> bool {
        false
    }
}

/// `f(t) = -t ln t`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NegEntropy;

impl UnitFunction for NegEntropy {
    fn eval(&self, t: f64) -> f64 {
        neg_xlogx(t)
    }

    fn is_neg_entropy(&self) -> bool {
        true
    }
}

/// `f(t) = t^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Square;

impl UnitFunction for Square {
    fn eval(&self, t: f64) -> f64 {
        t * t
    }
}

/// Wraps a closure as a [`UnitFunction`].
pub struct FnOnUnit<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> UnitFunction for FnOnUnit<F> {
    fn eval(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// `F(f) = sum_k w_k f(t_k)` with nodes `t_k` in `[0, 1]` and `sum w_k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunctional {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteFunctional {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::validation(
                "nodes and weights must be non-empty and of equal length",
            ));
        }
        if nodes.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::validation("functional nodes must lie in [0, 1]"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::validation("functional weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::validation(format!("weights sum to {total}, expected F(e0) = 1")));
        }
        Ok(DiscreteFunctional { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&self, f: &dyn UnitFunction) -> f64 {
        self.apply_fn(|t| f.eval(t))
    }

    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Binomial(n, p) weights on `node(k)`, renormalized to sum to one.
fn binomial_functional(n: u64, p: f64, node: impl Fn(u64) -> f64) -> Result<DiscreteFunctional> {
    if n == 0 {
        return Err(Error::validation("n must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::validation(format!("evaluation point {p} outside [0, 1]")));
    }
    let mut weights = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        weights.push(log_binomial_pmf(n, p, k)?.exp());
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let nodes = (0..=n).map(|k| node(k).clamp(0.0, 1.0)).collect();
    DiscreteFunctional::new(nodes, weights)
}

/// The Bernstein functional `B_n(f)(x) = sum_j f(j/n) C(n,j) x^j (1-x)^(n-j)`.
pub fn bernstein_functional(n: u64, x: f64) -> Result<DiscreteFunctional> {
    let nf = n as f64;
    binomial_functional(n, x, |j| j as f64 / nf)
}

/// Expectation functional of the smoothed plug-in for one symbol:
/// `F(f) = sum_k f((k + a)/(n + S a)) C(n,k) p^k (1-p)^(n-k)`.
pub fn dirichlet_functional(n: u64, s: usize, a: f64, p: f64) -> Result<DiscreteFunctional> {
    if s == 0 {
        return Err(Error::validation("S must be at least 1"));
    }
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::validation(format!("a must be finite and >= 0, got {a}")));
    }
    let denom = n as f64 + s as f64 * a;
    binomial_functional(n, p, |k| (k as f64 + a) / denom)
}

/// `sqrt(x (1 - x))`.
pub fn phi(x: f64) -> f64 {
    (x * (1.0 - x)).max(0.0).sqrt()
}

/// First two moments of a functional relative to an evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalStats {
    pub x: f64,
    /// `B_F(x) = |F(e1) - x F(e0)|`.
    pub bias_b: f64,
    /// `V_F = F((e1 - F(e1) e0)^2)`.
    pub var_v: f64,
    /// `F((e1 - x e0)^2)`, computed directly.
    pub second_moment: f64,
    /// `sqrt(V_F + B_F(x)^2) / phi(x)`.
    pub h1: f64,
    /// `sqrt(V_F) / phi(x)`.
    pub h2: f64,
}

pub fn functional_stats(f: &DiscreteFunctional, x: f64) -> Result<FunctionalStats> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain(format!("phi vanishes at x = {x}; need 0 < x < 1")));
    }
    let m0 = f.apply_fn(|_| 1.0);
    let m1 = f.apply_fn(|t| t);
    let bias_b = (m1 - x * m0).abs();
    let var_v = f.apply_fn(|t| (t - m1).powi(2));
    let second_moment = f.apply_fn(|t| (t - x).powi(2));
    let ph = phi(x);
    Ok(FunctionalStats {
        x,
        bias_b,
        var_v,
        second_moment,
        h1: (var_v + bias_b * bias_b).sqrt() / ph,
        h2: var_v.sqrt() / ph,
    })
}

/// Pointwise modulus `w1(f, h; x) = sup{|f(u) - f(x)| : u in [0,1], |u - x| <= h}`.
///
/// Exact for [`NegEntropy`]; otherwise a 1e-6 grid over the window followed
/// by one local refinement.
pub fn omega1_pointwise(f: &dyn UnitFunction, h: f64, x: f64) -> Result<f64> {
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::validation(format!("h must be finite and >= 0, got {h}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::validation(format!("x = {x} outside [0, 1]")));
    }
    let lo = (x - h).max(0.0);
    let hi = (x + h).min(1.0);
    let fx = f.eval(x);
    if f.is_neg_entropy() {
        // -t ln t is concave, increasing on [0, 1/e] and decreasing after.
        let (flo, fhi) = (neg_xlogx(lo), neg_xlogx(hi));
        let peak = std::f64::consts::E.recip();
        let fmax = if lo <= peak && peak <= hi {
            neg_xlogx(peak)
        } else {
            flo.max(fhi)
        };
        let fmin = flo.min(fhi);
        return Ok((fmax - fx).max(fx - fmin).max(0.0));
    }
    if hi <= lo {
        return Ok(0.0);
    }
    const STEP: f64 = 1e-6;
    let steps = ((hi - lo) / STEP).ceil().max(1.0) as usize;
    let at = |i: usize| lo + (hi - lo) * i as f64 / steps as f64;
    let (best_i, best) = (0..=steps)
        .into_par_iter()
        .map(|i| (i, (f.eval(at(i)) - fx).abs()))
        .reduce(|| (0, f64::NEG_INFINITY), max_by_value);
    let a = at(best_i.saturating_sub(1));
    let b = at((best_i + 1).min(steps));
    let refined = (0..=1000)
        .map(|k| (f.eval(a + (b - a) * k as f64 / 1000.0) - fx).abs())
        .fold(best, f64::max);
    Ok(refined)
}

/// Deterministic max-reduction: larger value wins, ties go to the lower index.
fn max_by_value(p: (usize, f64), q: (usize, f64)) -> (usize, f64) {
    if q.1 > p.1 || (q.1 == p.1 && q.0 < p.0) {
        q
    } else {
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModulusOrder {
    First,
    Second,
}

const DT_GRID: usize = 1000;
const DT_REFINE: usize = 200;

/// Grid search over the Ditzian–Totik constraint set
/// `{u, v in [0,1] : |u - v| <= 2 h phi((u + v)/2)}`, parametrized by the
/// midpoint `m` and half-gap `d <= min(h phi(m), m, 1 - m)`.
fn dt_search(f: &dyn UnitFunction, h: f64, order: ModulusOrder) -> f64 {
    let half_gap = |m: f64| (h * phi(m)).min(m).min(1.0 - m).max(0.0);
    let value = |m: f64, frac: f64| {
        let d = half_gap(m) * frac;
        let u = (m - d).max(0.0);
        let v = (m + d).min(1.0);
        match order {
            ModulusOrder::First => (f.eval(v) - f.eval(u)).abs(),
            ModulusOrder::Second => (f.eval(u) - 2.0 * f.eval(m) + f.eval(v)).abs(),
        }
    };
    let grid = |i: usize| i as f64 / DT_GRID as f64;

    let (best_idx, coarse) = (0..=DT_GRID)
        .into_par_iter()
        .map(|i| {
            let m = grid(i);
            (0..=DT_GRID)
                .map(|j| (i * (DT_GRID + 1) + j, value(m, grid(j))))
                .fold((0, f64::NEG_INFINITY), max_by_value)
        })
        .reduce(|| (0, f64::NEG_INFINITY), max_by_value);

    let (bi, bj) = (best_idx / (DT_GRID + 1), best_idx % (DT_GRID + 1));
    let m_lo = grid(bi.saturating_sub(1));
    let m_hi = grid((bi + 1).min(DT_GRID));
    let f_lo = grid(bj.saturating_sub(1));
    let f_hi = grid((bj + 1).min(DT_GRID));
    let refined = (0..=DT_REFINE)
        .into_par_iter()
        .map(|i| {
            let m = m_lo + (m_hi - m_lo) * i as f64 / DT_REFINE as f64;
            (0..=DT_REFINE)
                .map(|j| value(m, f_lo + (f_hi - f_lo) * j as f64 / DT_REFINE as f64))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    coarse.max(refined).max(0.0)
}

fn check_step(h: f64) -> Result<()> {
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::validation(format!("step h must be finite and >= 0, got {h}")));
    }
    Ok(())
}

/// First-order Ditzian–Totik modulus over the step-`h` constraint set:
/// `sup{|f(u) - f(v)| : |u - v| <= 2 h phi((u+v)/2)}`, i.e. `w1_phi(f, 2h)`.
/// Computed by grid search.
pub fn omega1_dt(f: &dyn UnitFunction, h: f64) -> Result<f64> {
    check_step(h)?;
    Ok(dt_search(f, h, ModulusOrder::First))
}

/// `w2_phi(-t ln t, h) = h^2 ln 4 / (1 + h^2)` for `0 <= h <= 1`.
pub fn entropy_omega2_closed_form(h: f64) -> Result<f64> {
    check_step(h)?;
    if h > 1.0 {
        return Err(Error::domain(format!(
            "closed form for the entropy modulus holds only for h <= 1, got {h}"
        )));
    }
    let h2 = h * h;
    Ok(h2 * 4f64.ln() / (1.0 + h2))
}

/// Second-order Ditzian–Totik modulus
/// `sup{|f(u) - 2 f((u+v)/2) + f(v)| : |u - v| <= 2 h phi((u+v)/2)}`.
///
/// Uses the closed form for [`NegEntropy`] (and rejects `h > 1` there),
/// grid search otherwise.
pub fn omega2_dt(f: &dyn UnitFunction, h: f64) -> Result<f64> {
    if f.is_neg_entropy() {
        return entropy_omega2_closed_form(h);
    }
    omega2_dt_numeric(f, h)
}

/// Grid-search value of the second-order modulus, for any `f`.
pub fn omega2_dt_numeric(f: &dyn UnitFunction, h: f64) -> Result<f64> {
    check_step(h)?;
    Ok(dt_search(f, h, ModulusOrder::Second))
}

/// Right-hand side of the first-order/second-order functional error bound
/// at step `h1`. Requires `0 < h1 <= 1/2`.
pub fn lemma1_bound(functional: &DiscreteFunctional, f: &dyn UnitFunction, x: f64) -> Result<f64> {
    let st = functional_stats(functional, x)?;
    if !(st.h1 > 0.0 && st.h1 <= 0.5) {
        return Err(Error::regime(format!("h1 = {} does not satisfy 0 < h1 <= 1/2", st.h1)));
    }
    let first = st.bias_b / (2.0 * st.h1 * phi(x)) * omega1_dt(f, st.h1)?;
    Ok(first + 2.5 * omega2_dt(f, st.h1)?)
}

/// Right-hand side of the pointwise error bound `w1(f, B_F(x); x) + 5/2 w2_phi(f, h2)`.
/// Requires `0 < h2 <= 1/2`.
pub fn lemma3_bound(functional: &DiscreteFunctional, f: &dyn UnitFunction, x: f64) -> Result<f64> {
    let st = functional_stats(functional, x)?;
    if !(st.h2 > 0.0 && st.h2 <= 0.5) {
        return Err(Error::regime(format!("h2 = {} does not satisfy 0 < h2 <= 1/2", st.h2)));
    }
    Ok(omega1_pointwise(f, st.bias_b, x)? + 2.5 * omega2_dt(f, st.h2)?)
}

/// `sup_P E|H(P_hat_B) - H(P)| <= 5 n S ln 2 / (n + S a)^2 + (2 S a/(n + S a)) ln((n + S a)/(2a))`,
/// valid for `n >= max(S a, 4)`.
pub fn thm4_bias_bound(n: u64, s: usize, a: f64) -> Result<f64> {
    if s == 0 || !(a.is_finite() && a >= 0.0) {
        return Err(Error::validation("need S >= 1 and finite a >= 0"));
    }
    let (nf, sf) = (n as f64, s as f64);
    if nf < (sf * a).max(4.0) {
        return Err(Error::regime(format!(
            "bias bound requires n >= max(S a, 4); got n = {n}, S a = {}",
            sf * a
        )));
    }
    let t = nf + sf * a;
    Ok(5.0 * nf * sf * 2f64.ln() / (t * t) + smoothing_gap_term(nf, sf, a))
}

/// Sum over symbols of the per-symbol pointwise bound on
/// `|E f(p_hat_B,i) - f(p_i)|` for `f = -t ln t`. Dominates the absolute
/// bias of the smoothed plug-in at `P` and is itself dominated by
/// [`thm4_bias_bound`]. Requires `n >= max(S a, 4)`.
pub fn per_symbol_bias_bound(p: &Distribution, n: u64, a: f64) -> Result<f64> {
    let s = p.support_size();
    thm4_bias_bound(n, s, a)?;
    let denom = n as f64 + s as f64 * a;
    let mut total = 0.0;
    for &pi in p.probs() {
        let b = (1.0 - pi * s as f64).abs() * a / denom;
        total += if pi > 0.0 && pi < 1.0 {
            lemma3_bound(&dirichlet_functional(n, s, a, pi)?, &NegEntropy, pi)?
        } else {
            // The functional is a point mass at the endpoint's image: only
            // the first-order term survives.
            omega1_pointwise(&NegEntropy, b, pi)?
        };
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{make_point_mass, make_uniform};
    use crate::estimators::EstimatorKind;
    use crate::exact_risk::exact_bias_separable;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn functional_validation() {
        assert!(DiscreteFunctional::new(vec![0.5], vec![1.0]).is_ok());
        assert!(DiscreteFunctional::new(vec![0.5, 1.5], vec![0.5, 0.5]).is_err());
        assert!(DiscreteFunctional::new(vec![0.5, 0.2], vec![0.5, 0.6]).is_err());
        assert!(DiscreteFunctional::new(vec![0.5, 0.2], vec![1.5, -0.5]).is_err());
        assert!(DiscreteFunctional::new(vec![0.5], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn bernstein_moments() {
        let (n, x) = (25u64, 0.3);
        let b = bernstein_functional(n, x).unwrap();
        assert_abs_diff_eq!(b.apply_fn(|_| 1.0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.apply_fn(|t| t), x, epsilon = 1e-14);
        assert_abs_diff_eq!(b.apply(&Square), x * x + x * (1.0 - x) / n as f64, epsilon = 1e-14);
    }

    #[test]
    fn bernstein_endpoints_are_point_masses() {
        let zero = bernstein_functional(10, 0.0).unwrap();
        assert_eq!(zero.weights()[0], 1.0);
        assert_eq!(zero.apply(&NegEntropy), 0.0);
        let one = bernstein_functional(10, 1.0).unwrap();
        assert_eq!(one.weights()[10], 1.0);
    }

    #[test]
    fn bernstein_error_is_plugin_bias() {
        // Two-symbol MLE: H_hat = f(X/n) + f(1 - X/n), so its bias is the sum of
        // the Bernstein errors at p and 1 - p.
        let (n, p) = (40u64, 0.15);
        let err = |x: f64| bernstein_functional(n, x).unwrap().apply(&NegEntropy) - neg_xlogx(x);
        let dist = Distribution::new(vec![p, 1.0 - p]).unwrap();
        let bias = exact_bias_separable(EstimatorKind::Mle, &dist, n).unwrap();
        assert_abs_diff_eq!(err(p) + err(1.0 - p), bias, epsilon = 1e-13);
    }

    #[test]
    fn bernstein_uniform_approximation_improves() {
        let sup_err = |n: u64| {
            (1..200)
                .map(|i| {
                    let x = i as f64 / 200.0;
                    (bernstein_functional(n, x).unwrap().apply(&NegEntropy) - neg_xlogx(x)).abs()
                })
                .fold(0.0, f64::max)
        };
        let e = [sup_err(100), sup_err(1000), sup_err(10_000)];
        assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
    }

    #[test]
    fn dirichlet_functional_stats_match_closed_forms() {
        for &(n, s, a, p) in &[(50u64, 10usize, 1.0, 0.03), (200, 4, 0.5, 0.6), (10, 30, 2.0, 0.001)] {
            let f = dirichlet_functional(n, s, a, p).unwrap();
            let st = functional_stats(&f, p).unwrap();
            let t = n as f64 + s as f64 * a;
            assert_abs_diff_eq!(st.bias_b, (1.0 - p * s as f64).abs() * a / t, epsilon = 1e-14);
            assert_abs_diff_eq!(st.var_v, n as f64 * p * (1.0 - p) / (t * t), epsilon = 1e-14);
            assert_abs_diff_eq!(st.second_moment, st.var_v + st.bias_b.powi(2), epsilon = 1e-12);
            assert!(st.h2 <= st.h1);
            assert_abs_diff_eq!(st.h2, (n as f64).sqrt() / t, epsilon = 1e-12);
        }
    }

    #[test]
    fn dirichlet_with_zero_a_is_bernstein() {
        let d = dirichlet_functional(12, 5, 0.0, 0.4).unwrap();
        let b = bernstein_functional(12, 0.4).unwrap();
        assert_eq!(d, b);
    }

    #[test]
    fn stats_edge_cases() {
        let b = bernstein_functional(16, 0.25).unwrap();
        let st = functional_stats(&b, 0.25).unwrap();
        assert!(st.bias_b < 1e-15);
        assert_abs_diff_eq!(st.h1, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(st.h2, 0.25, epsilon = 1e-12);
        assert!(matches!(functional_stats(&b, 0.0), Err(Error::Domain(_))));
        assert!(matches!(functional_stats(&b, 1.0), Err(Error::Domain(_))));

        let d = dirichlet_functional(100, 10, 1.0, 0.1).unwrap();
        assert!(functional_stats(&d, 0.1).unwrap().bias_b < 1e-15);

        // B_F / phi blows up as p -> 0.
        let ratios: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&p| {
                let st = functional_stats(&dirichlet_functional(100, 10, 1.0, p).unwrap(), p).unwrap();
                assert!(st.h1 >= st.bias_b / phi(p));
                st.bias_b / phi(p)
            })
            .collect();
        assert!(ratios[0] < ratios[1] && ratios[1] < ratios[2] && ratios[2] > 0.5);
    }

    #[test]
    fn omega1_pointwise_cases() {
        assert_eq!(omega1_pointwise(&NegEntropy, 0.0, 0.3).unwrap(), 0.0);
        assert_eq!(omega1_pointwise(&Square, 0.0, 0.3).unwrap(), 0.0);
        for &h in &[0.01, 0.1, 0.3] {
            assert_abs_diff_eq!(
                omega1_pointwise(&NegEntropy, h, 0.0).unwrap(),
                neg_xlogx(h),
                epsilon = 1e-15
            );
        }
        // Exact path agrees with the grid path for the same function.
        let generic = FnOnUnit(neg_xlogx);
        for &(h, x) in &[(0.05, 0.2), (0.3, 0.5), (0.2, 0.9), (0.4, 0.01)] {
            let exact = omega1_pointwise(&NegEntropy, h, x).unwrap();
            let grid = omega1_pointwise(&generic, h, x).unwrap();
            assert!(grid <= exact + 1e-12 && exact - grid < 1e-9, "h={h} x={x}");
        }
        let mut last = 0.0;
        for k in 0..20 {
            let v = omega1_pointwise(&NegEntropy, k as f64 * 0.03, 0.2).unwrap();
            assert!(v >= last);
            last = v;
        }
        assert_abs_diff_eq!(
            omega1_pointwise(&Square, 0.2, 0.5).unwrap(),
            0.49 - 0.25,
            epsilon = 1e-10
        );
    }

    #[test]
    fn entropy_second_modulus_closed_form() {
        assert_abs_diff_eq!(omega2_dt(&NegEntropy, 1.0).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(omega2_dt(&NegEntropy, 0.5).unwrap(), 4f64.ln() / 5.0, epsilon = 1e-15);
        assert!(matches!(omega2_dt(&NegEntropy, 1.5), Err(Error::Domain(_))));
        for &h in &[0.1, 0.5, 1.0] {
            let closed = entropy_omega2_closed_form(h).unwrap();
            let numeric = omega2_dt_numeric(&NegEntropy, h).unwrap();
            assert!(
                numeric <= closed + 1e-6 && numeric >= closed - 1e-3,
                "h={h}: {numeric} vs {closed}"
            );
        }
    }

    #[test]
    fn square_second_modulus() {
        // |u^2 - 2m^2 + v^2| = 2 d^2, maximized at m = 1/2 with d = h/2.
        for &h in &[0.1, 0.4, 1.0] {
            let numeric = omega2_dt(&Square, h).unwrap();
            assert_abs_diff_eq!(numeric, h * h / 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn entropy_first_modulus_scales_linearly() {
        for &h in &[0.01, 0.05, 0.1, 0.25, 0.5] {
            let ratio = omega1_dt(&NegEntropy, h).unwrap() / h;
            assert!((0.1..=10.0).contains(&ratio), "h={h}: ratio {ratio}");
        }
    }

    #[test]
    fn lemma_bounds_on_bernstein() {
        let (n, x) = (64u64, 0.3);
        let b = bernstein_functional(n, x).unwrap();
        let err = (b.apply(&NegEntropy) - neg_xlogx(x)).abs();
        let l1 = lemma1_bound(&b, &NegEntropy, x).unwrap();
        let l3 = lemma3_bound(&b, &NegEntropy, x).unwrap();
        let h = 1.0 / (n as f64).sqrt();
        // B_F = 0 up to rounding: both reduce to 5/2 w2(f, 1/sqrt(n)).
        assert_abs_diff_eq!(l1, 2.5 * entropy_omega2_closed_form(h).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(l3, l1, epsilon = 1e-12);
        assert!(l1 >= err && l3 >= err);
    }

    #[test]
    fn lemma1_fails_where_lemma3_applies() {
        let (n, s, a, p) = (100u64, 10usize, 1.0, 1e-6);
        let d = dirichlet_functional(n, s, a, p).unwrap();
        assert!(matches!(lemma1_bound(&d, &NegEntropy, p), Err(Error::Regime(_))));
        let b = lemma3_bound(&d, &NegEntropy, p).unwrap();
        assert!(b >= (d.apply(&NegEntropy) - neg_xlogx(p)).abs());
    }

    #[test]
    fn lemma3_regime_error_for_tiny_n() {
        // h2 = sqrt(n)/(n + Sa) > 1/2 for n = 1, S a small.
        let d = dirichlet_functional(1, 2, 0.1, 0.5).unwrap();
        assert!(matches!(lemma3_bound(&d, &NegEntropy, 0.5), Err(Error::Regime(_))));
    }

    #[test]
    fn thm4_values() {
        let v = thm4_bias_bound(100, 10, 1.0).unwrap();
        let expected = 5.0 * 1000.0 * 2f64.ln() / 12100.0 + 20.0 / 110.0 * 55f64.ln();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 1.0150, epsilon = 1e-4);
        assert_abs_diff_eq!(
            thm4_bias_bound(100, 10, 0.0).unwrap(),
            50.0 * 2f64.ln() / 100.0,
            epsilon = 1e-15
        );
        assert!(matches!(thm4_bias_bound(3, 1, 0.0), Err(Error::Regime(_))));
        assert!(matches!(thm4_bias_bound(9, 10, 1.0), Err(Error::Regime(_))));
    }

    #[test]
    fn per_symbol_assembly_sits_between_bias_and_thm4() {
        for &(n, s, a) in &[(20u64, 4usize, 1.0), (50, 10, 0.5), (8, 2, 2.0)] {
            for p in [
                make_uniform(s).unwrap(),
                make_point_mass(s).unwrap(),
                crate::distributions::make_two_level(s, 0.6).unwrap(),
            ] {
                let assembled = per_symbol_bias_bound(&p, n, a).unwrap();
                let bias = exact_bias_separable(EstimatorKind::DirichletPlugin { a }, &p, n).unwrap();
                assert!(bias.abs() <= assembled + 1e-12, "n={n} S={s} a={a}");
                assert!(assembled <= thm4_bias_bound(n, s, a).unwrap() + 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn h2_never_exceeds_h1(n in 1u64..300, s in 1usize..50, a in 0.0f64..3.0, p in 1e-6f64..0.999_999) {
            let st = functional_stats(&dirichlet_functional(n, s, a, p).unwrap(), p).unwrap();
            prop_assert!(st.h2 <= st.h1);
            prop_assert!((st.second_moment - st.var_v - st.bias_b.powi(2)).abs() <= 1e-12);
        }

        #[test]
        fn lemma3_is_sound_for_entropy(n in 4u64..300, s in 1usize..40, a in 0.0f64..2.0, lp in -6.0f64..-0.01) {
            let p = 10f64.powf(lp);
            let d = dirichlet_functional(n, s, a, p).unwrap();
            if let Ok(bound) = lemma3_bound(&d, &NegEntropy, p) {
                prop_assert!((d.apply(&NegEntropy) - neg_xlogx(p)).abs() <= bound + 1e-12);
            }
        }
    }
}
