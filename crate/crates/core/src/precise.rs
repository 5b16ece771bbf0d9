//! Quantile and interval release from a sanitized histogram.
//!
//! Nothing here sees posterior samples: every release is a function of the
//! [`SanitizedHistogram`] and a random stream only.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dp::PrivacyBudget;
use crate::error::{invalid, probability_open, Result};
use crate::histogram::{HistogramVariant, SanitizedHistogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreciseVariant {
    PlusMstar,
    PlusM,
    MinusMstar,
    MinusM,
}

impl PreciseVariant {
    pub const ALL: [PreciseVariant; 4] =
        [PreciseVariant::PlusMstar, PreciseVariant::PlusM, PreciseVariant::MinusMstar, PreciseVariant::MinusM];

    pub fn histogram_variant(self) -> HistogramVariant {
        match self {
            PreciseVariant::PlusMstar | PreciseVariant::PlusM => HistogramVariant::Plus,
            PreciseVariant::MinusMstar | PreciseVariant::MinusM => HistogramVariant::Minus,
        }
    }

    pub fn normalizer(self) -> Normalizer {
        match self {
            PreciseVariant::PlusMstar | PreciseVariant::MinusMstar => Normalizer::Mstar,
            PreciseVariant::PlusM | PreciseVariant::MinusM => Normalizer::M,
        }
    }

    /// Short label as used in tables: `+m*`, `+m`, `-m*`, `-m`.
    pub fn label(self) -> &'static str {
        match self {
            PreciseVariant::PlusMstar => "+m*",
            PreciseVariant::PlusM => "+m",
            PreciseVariant::MinusMstar => "-m*",
            PreciseVariant::MinusM => "-m",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "+m*" | "plus-mstar" | "plus_mstar" => PreciseVariant::PlusMstar,
            "+m" | "plus-m" | "plus_m" => PreciseVariant::PlusM,
            "-m*" | "minus-mstar" | "minus_mstar" => PreciseVariant::MinusMstar,
            "-m" | "minus-m" | "minus_m" => PreciseVariant::MinusM,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Accumulate counts from the left.
    Lower,
    /// Accumulate counts from the right.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    /// Total of the sanitized counts.
    Mstar,
    /// The number of posterior samples.
    M,
}

impl Normalizer {
    pub fn total(self, hist: &SanitizedHistogram) -> f64 {
        match self {
            Normalizer::Mstar => hist.mstar(),
            Normalizer::M => hist.m as f64,
        }
    }
}

/// Smallest `b` minimizing `|S_b - target|`, where `S_b` is the prefix sum
/// through `b` (lower side) or the suffix sum from `b` (upper side).
pub fn select_bin_index(hist: &SanitizedHistogram, target_mass: f64, side: Side) -> usize {
    let k = hist.counts.len();
    let mut sums = vec![0.0; k];
    match side {
        Side::Lower => {
            let mut acc = 0.0;
            for (b, c) in hist.counts.iter().enumerate() {
                acc += c;
                sums[b] = acc;
            }
        }
        Side::Upper => {
            let mut acc = 0.0;
            for (b, c) in hist.counts.iter().enumerate().rev() {
                acc += c;
                sums[b] = acc;
            }
        }
    }
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (b, s) in sums.iter().enumerate() {
        let gap = (s - target_mass).abs();
        if gap < best_gap {
            best = b;
            best_gap = gap;
        }
    }
    best
}

fn draw_in_bin<R: Rng + ?Sized>(hist: &SanitizedHistogram, b: usize, rng: &mut R) -> f64 {
    let (a, z) = (hist.edges[b], hist.edges[b + 1]);
    if z <= a {
        return a;
    }
    let v = a + rng.random::<f64>() * (z - a);
    // rounding can land exactly on the open right edge
    if v < z {
        v
    } else {
        a
    }
}

fn has_collapsed_tails(hist: &SanitizedHistogram) -> bool {
    let e = &hist.edges;
    e[0] < e[1] || e[e.len() - 2] < e[e.len() - 1]
}

/// A released quantile and the bin it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileRelease {
    pub value: f64,
    pub bin: usize,
    pub mstar_nonpositive: bool,
    /// Set when `q` is in an extreme tail and some bins were collapsed, so the
    /// release may be far from the true quantile.
    pub tail_warning: bool,
}

pub fn release_quantile_detailed<R: Rng + ?Sized>(
    hist: &SanitizedHistogram,
    q: f64,
    normalizer: Normalizer,
    rng: &mut R,
) -> Result<QuantileRelease> {
    probability_open("q", q)?;
    hist.validate()?;
    let total = normalizer.total(hist);
    let bin = if q <= 0.5 {
        select_bin_index(hist, q * total, Side::Lower)
    } else {
        select_bin_index(hist, (1.0 - q) * total, Side::Upper)
    };
    Ok(QuantileRelease {
        value: draw_in_bin(hist, bin, rng),
        bin,
        mstar_nonpositive: hist.mstar() <= 0.0,
        tail_warning: has_collapsed_tails(hist) && !(0.02..=0.98).contains(&q),
    })
}

/// Private estimate of the posterior `q`-quantile.
pub fn release_quantile<R: Rng + ?Sized>(
    hist: &SanitizedHistogram,
    q: f64,
    normalizer: Normalizer,
    rng: &mut R,
) -> Result<f64> {
    release_quantile_detailed(hist, q, normalizer, rng).map(|r| r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IntervalDiagnostics {
    /// The endpoint draws came out in the wrong order and were swapped.
    pub crossed: bool,
    pub mstar_nonpositive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub variant: PreciseVariant,
    pub notion: String,
    pub epsilon_or_mu: f64,
    pub diagnostics: IntervalDiagnostics,
}

impl IntervalEstimate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.lower <= theta && theta <= self.upper
    }

    pub fn budget(&self) -> Result<PrivacyBudget> {
        match self.notion.as_str() {
            "eps" => PrivacyBudget::pure(self.epsilon_or_mu),
            "mu" => PrivacyBudget::gdp(self.epsilon_or_mu),
            other => Err(invalid(format!("unknown notion {other}"))),
        }
    }
}

/// `(1 - alpha)` interval from the `alpha/2` and `1 - alpha/2` releases.
pub fn release_interval<R: Rng + ?Sized>(
    hist: &SanitizedHistogram,
    alpha: f64,
    variant: PreciseVariant,
    rng: &mut R,
) -> Result<IntervalEstimate> {
    probability_open("alpha", alpha)?;
    if hist.variant != variant.histogram_variant() {
        return Err(invalid(format!(
            "variant {} needs a {:?} histogram",
            variant.label(),
            variant.histogram_variant()
        )));
    }
    let lo = release_quantile_detailed(hist, alpha / 2.0, variant.normalizer(), rng)?;
    let hi = release_quantile_detailed(hist, 1.0 - alpha / 2.0, variant.normalizer(), rng)?;
    let crossed = lo.value > hi.value;
    let (lower, upper) = if crossed { (hi.value, lo.value) } else { (lo.value, hi.value) };
    Ok(IntervalEstimate {
        lower,
        upper,
        level: 1.0 - alpha,
        variant,
        notion: hist.budget.notion().to_string(),
        epsilon_or_mu: hist.budget.primary(),
        diagnostics: IntervalDiagnostics { crossed, mstar_nonpositive: lo.mstar_nonpositive },
    })
}
