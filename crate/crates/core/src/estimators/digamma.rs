use crate::error::{Error, Result};

/// Arguments below this are shifted up with `psi(x) = psi(x + 1) - 1/x`
/// before the asymptotic series is applied.
const SERIES_THRESHOLD: f64 = 10.0;

/// The digamma function `psi(x) = Gamma'(x) / Gamma(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::domain(format!(
            "digamma is only supported for finite x > 0, got {x}"
        )));
    }
    Ok(psi(x))
}

/// Unchecked digamma for hot loops. The caller guarantees `x > 0`.
pub(crate) fn psi(mut x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut shift = 0.0;
    while x < SERIES_THRESHOLD {
        shift -= x.recip();
        x += 1.0;
    }
    // ln x - 1/(2x) - sum_{k=1}^{6} B_{2k} / (2k x^{2k})
    let inv = x.recip();
    let inv2 = inv * inv;
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    shift + (x.ln() - 0.5 * inv - tail)
}
