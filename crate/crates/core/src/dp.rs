//! Privacy budgets, additive noise mechanisms, GDP conversion and composition.

use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, positive, Error, Result};
use crate::numeric::{bisect_increasing, ln_normal_cdf, normal_cdf};

/// A privacy-loss specification under one of three accounting notions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "notion", rename_all = "snake_case")]
pub enum PrivacyBudget {
    PureEps { epsilon: f64 },
    ApproxDp { epsilon: f64, delta: f64 },
    Gdp { mu: f64 },
}

impl PrivacyBudget {
    pub fn pure(epsilon: f64) -> Result<Self> {
        positive("epsilon", epsilon)?;
        Ok(PrivacyBudget::PureEps { epsilon })
    }

    pub fn approx(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(invalid(format!("epsilon must be nonnegative, got {epsilon}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(invalid(format!("delta must lie in [0, 1], got {delta}")));
        }
        Ok(PrivacyBudget::ApproxDp { epsilon, delta })
    }

    pub fn gdp(mu: f64) -> Result<Self> {
        positive("mu", mu)?;
        Ok(PrivacyBudget::Gdp { mu })
    }

    /// Re-checks the invariants, for values that arrived through serde.
    pub fn validate(&self) -> Result<()> {
        match *self {
            PrivacyBudget::PureEps { epsilon } => Self::pure(epsilon).map(|_| ()),
            PrivacyBudget::ApproxDp { epsilon, delta } => Self::approx(epsilon, delta).map(|_| ()),
            PrivacyBudget::Gdp { mu } => Self::gdp(mu).map(|_| ()),
        }
    }

    pub fn notion(&self) -> &'static str {
        match self {
            PrivacyBudget::PureEps { .. } => "eps",
            PrivacyBudget::ApproxDp { .. } => "eps_delta",
            PrivacyBudget::Gdp { .. } => "mu",
        }
    }

    /// The headline parameter: epsilon for pure/approximate DP, mu for GDP.
    pub fn primary(&self) -> f64 {
        match *self {
            PrivacyBudget::PureEps { epsilon } | PrivacyBudget::ApproxDp { epsilon, .. } => epsilon,
            PrivacyBudget::Gdp { mu } => mu,
        }
    }

    /// Noise calibration for a statistic with the given sensitivity.
    pub fn noise_scale(&self, sensitivity: f64) -> Result<NoiseScale> {
        positive("sensitivity", sensitivity)?;
        match *self {
            PrivacyBudget::PureEps { epsilon } => Ok(NoiseScale {
                kind: NoiseKind::Laplace,
                sensitivity,
                scale: sensitivity / epsilon,
            }),
            PrivacyBudget::Gdp { mu } => Ok(NoiseScale {
                kind: NoiseKind::Gaussian,
                sensitivity,
                scale: sensitivity / mu,
            }),
            PrivacyBudget::ApproxDp { .. } => Err(Error::Unsupported(
                "additive noise needs a pure-epsilon or mu-GDP budget; convert (epsilon, delta) with mu_from_eps_delta first"
                    .into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseKind {
    Laplace,
    Gaussian,
}

/// Sensitivity together with the derived Laplace `b` or Gaussian `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseScale {
    pub kind: NoiseKind,
    pub sensitivity: f64,
    pub scale: f64,
}

impl NoiseScale {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            NoiseKind::Laplace => standard_laplace(rng) * self.scale,
            NoiseKind::Gaussian => standard_gaussian(rng) * self.scale,
        }
    }
}

/// Laplace(0, 1) by inversion of a uniform on the open unit interval.
fn standard_laplace<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    if u < 0.5 {
        (2.0 * u).ln()
    } else {
        -(2.0 * (1.0 - u)).ln()
    }
}

fn standard_gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// One draw from Laplace(0, `scale`).
pub fn laplace_noise<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    positive("scale", scale)?;
    Ok(standard_laplace(rng) * scale)
}

/// One draw from N(0, `scale`^2).
pub fn gaussian_noise<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    positive("scale", scale)?;
    Ok(standard_gaussian(rng) * scale)
}

/// The (epsilon, delta(epsilon)) curve implied by mu-GDP:
/// `delta = Phi(-eps/mu + mu/2) - e^eps * Phi(-eps/mu - mu/2)`, clamped to [0, 1].
pub fn gdp_to_delta(mu: f64, epsilon: f64) -> Result<f64> {
    positive("mu", mu)?;
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(invalid(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let a = normal_cdf(-epsilon / mu + mu / 2.0);
    // e^eps * Phi(..) in log space so neither factor over- or underflows
    let tail = (epsilon + ln_normal_cdf(-epsilon / mu - mu / 2.0)).exp();
    let delta = a - tail;
    Ok(if delta.is_nan() { 0.0 } else { delta.clamp(0.0, 1.0) })
}

/// Smallest mu-GDP parameter whose curve passes through (epsilon, delta).
pub fn mu_from_eps_delta(epsilon: f64, delta: f64) -> Result<f64> {
    positive("epsilon", epsilon)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    const LO: f64 = 1e-8;
    const HI: f64 = 100.0;
    let f = |mu: f64| gdp_to_delta(mu, epsilon).unwrap_or(f64::NAN) - delta;
    if !(f(LO) <= 0.0 && f(HI) >= 0.0) {
        return Err(Error::OutOfRange(format!("no mu in [{LO}, {HI}] reaches delta = {delta} at epsilon = {epsilon}")));
    }
    bisect_increasing(f, LO, HI, 1e-12)
}

/// Basic composition: additive for epsilon and delta, root-sum-square for mu.
pub fn compose(budgets: &[PrivacyBudget]) -> Result<PrivacyBudget> {
    let first = budgets.first().ok_or_else(|| invalid("cannot compose an empty sequence of budgets"))?;
    for b in budgets {
        b.validate()?;
        if std::mem::discriminant(b) != std::mem::discriminant(first) {
            return Err(invalid(format!(
                "cannot compose {} with {}; convert to a common notion first",
                first.notion(),
                b.notion()
            )));
        }
    }
    Ok(match first {
        PrivacyBudget::PureEps { .. } => {
            PrivacyBudget::PureEps { epsilon: budgets.iter().map(PrivacyBudget::primary).sum() }
        }
        PrivacyBudget::ApproxDp { .. } => {
            let (mut eps, mut delta) = (0.0, 0.0);
            for b in budgets {
                if let PrivacyBudget::ApproxDp { epsilon, delta: d } = *b {
                    eps += epsilon;
                    delta += d;
                }
            }
            PrivacyBudget::ApproxDp { epsilon: eps, delta: delta.min(1.0) }
        }
        PrivacyBudget::Gdp { .. } => {
            PrivacyBudget::Gdp { mu: budgets.iter().map(|b| b.primary().powi(2)).sum::<f64>().sqrt() }
        }
    })
}
