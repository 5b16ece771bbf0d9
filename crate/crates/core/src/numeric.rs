//! Special functions and scalar root finding.

use crate::error::{Error, Result};

/// Standard normal CDF, `0.5 * erfc(-x / sqrt 2)`.
///
/// `erfc` comes from libm (the musl/FreeBSD implementation), which is
/// accurate to about one ulp in relative terms including the far tail.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `ln Phi(x)`, finite even where `Phi(x)` underflows.
pub fn ln_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return normal_cdf(x).ln();
    }
    // Mills-ratio asymptotic series; the truncation error at |x| >= 30 is
    // below 1e-10 relative
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `sqrt(2 e pi)`, the denominator shared by every G0 expression.
pub fn sqrt_2e_pi() -> f64 {
    (2.0 * std::f64::consts::E * std::f64::consts::PI).sqrt()
}

/// Bisection for an increasing function on `[lo, hi]` with `f(lo) <= 0 <= f(hi)`.
///
/// Stops once the bracket is narrower than `rel_tol * max(|mid|, tiny)` or
/// after the bracket can no longer shrink in floating point.
pub fn bisect_increasing<F>(mut f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let flo = f(lo);
    let fhi = f(hi);
    if !(flo <= 0.0 && fhi >= 0.0) {
        return Err(Error::OutOfRange(format!("root not bracketed on [{lo}, {hi}] (f = {flo}, {fhi})")));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * mid.abs().max(1e-300) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Generalized inverse of a continuous CDF: the smallest `x` in `[lo, hi]`
/// with `cdf(x) >= q`, located by bisection until the bracket collapses to
/// adjacent floats.
pub fn invert_cdf<F>(cdf: F, q: f64, mut lo: f64, mut hi: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    for _ in 0..2000 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) >= q {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (mean, ss / (n - 1.0))
}
