//! Sanitized posterior histograms.
//!
//! Posterior draws are binned on a fixed grid over `(l, u)`, sparse tails are
//! merged into two super-bins, and every remaining count (super-bins
//! included) receives Laplace or Gaussian noise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dp::PrivacyBudget;
use crate::error::{invalid, Error, Result};
use crate::posterior::PosteriorModel;
use crate::sensitivity::HistogramBudget;

pub const HISTOGRAM_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseMode {
    /// Collapse from each end until a bin count exceeds the threshold.
    CountThreshold,
    /// Collapse a fixed fraction of bins from each end.
    ProportionThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramVariant {
    /// Sanitized counts are clamped at zero.
    Plus,
    Minus,
}

/// Bins `[l + b h, l + (b + 1) h)` for `b = 0..bins`; the last bin is closed
/// at `u` and absorbs any remainder when `(u - l) / h` is not an integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinLayout {
    pub l: f64,
    pub u: f64,
    pub h: f64,
    pub bins: usize,
}

impl BinLayout {
    pub fn new(l: f64, u: f64, h: f64) -> Result<Self> {
        if !(l.is_finite() && u.is_finite() && l < u) {
            return Err(Error::InvalidBounds(format!("need l < u, got ({l}, {u})")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("bin width must be positive, got {h}")));
        }
        let ratio = (u - l) / h;
        if ratio > 1e9 {
            return Err(invalid(format!("{ratio:.3e} bins is too many")));
        }
        // treat ratios within rounding of an integer as exact
        let nearest = ratio.round();
        let bins = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { ratio.ceil() };
        Ok(BinLayout { l, u, h, bins: (bins as usize).max(1) })
    }

    /// Left edge of bin `b`; `edge(bins) == u`.
    pub fn edge(&self, b: usize) -> f64 {
        if b >= self.bins {
            self.u
        } else {
            self.l + b as f64 * self.h
        }
    }

    /// Bin holding `x` after clamping into `[l, u]`.
    pub fn index(&self, x: f64) -> usize {
        let x = x.clamp(self.l, self.u);
        let mut b = (((x - self.l) / self.h).floor() as usize).min(self.bins - 1);
        // reconcile the division with the edges actually used
        while b > 0 && x < self.edge(b) {
            b -= 1;
        }
        while b + 1 < self.bins && x >= self.edge(b + 1) {
            b += 1;
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub l: f64,
    pub u: f64,
    pub h: f64,
    pub collapse_mode: CollapseMode,
    pub tau_l: f64,
    pub tau_u: f64,
    pub variant: HistogramVariant,
    pub budget: PrivacyBudget,
}

impl HistogramSpec {
    pub fn layout(&self) -> Result<BinLayout> {
        BinLayout::new(self.l, self.u, self.h)
    }

    pub fn validate(&self) -> Result<()> {
        let layout = self.layout()?;
        if layout.bins < 3 {
            return Err(invalid(format!("need at least 3 bins, got {}", layout.bins)));
        }
        for (name, tau) in [("tau_l", self.tau_l), ("tau_u", self.tau_u)] {
            let ok = match self.collapse_mode {
                CollapseMode::CountThreshold => tau >= 0.0 && tau.fract() == 0.0 && tau.is_finite(),
                CollapseMode::ProportionThreshold => (0.0..1.0).contains(&tau),
            };
            if !ok {
                return Err(invalid(format!("{name} = {tau} is not valid for {:?}", self.collapse_mode)));
            }
        }
        self.budget.validate()
    }
}

/// Raw bin counts. Only the window between the first and last nonempty bin
/// is stored; every bin outside it is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct RawHistogram {
    pub layout: BinLayout,
    offset: usize,
    window: Vec<u64>,
    total: u64,
}

impl RawHistogram {
    pub fn count(&self, b: usize) -> u64 {
        if b < self.offset {
            0
        } else {
            self.window.get(b - self.offset).copied().unwrap_or(0)
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn dense_counts(&self) -> Vec<u64> {
        (0..self.layout.bins).map(|b| self.count(b)).collect()
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.layout.bins).map(|b| self.layout.edge(b)).collect()
    }

    /// Sum of counts over bins `a..b`.
    fn range_sum(&self, a: usize, b: usize) -> u64 {
        let lo = a.max(self.offset);
        let hi = b.min(self.offset + self.window.len());
        if lo >= hi {
            0
        } else {
            self.window[lo - self.offset..hi - self.offset].iter().sum()
        }
    }
}

/// Bins the samples, clamping anything outside `[l, u]` onto the bounds.
pub fn build_histogram(samples: &[f64], layout: &BinLayout) -> Result<RawHistogram> {
    if samples.is_empty() {
        return Err(invalid("no samples to bin"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(invalid("samples contain NaN"));
    }
    let idx: Vec<usize> = samples.iter().map(|&x| layout.index(x)).collect();
    let lo = *idx.iter().min().expect("nonempty");
    let hi = *idx.iter().max().expect("nonempty");
    let mut window = vec![0u64; hi - lo + 1];
    for b in idx {
        window[b - lo] += 1;
    }
    Ok(RawHistogram { layout: *layout, offset: lo, window, total: samples.len() as u64 })
}

/// Interior bins `b_l..=b_u` plus the two merged tails.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedHistogram {
    /// `B' + 3` edges: `l`, the interior edges, `u`. The first and last
    /// intervals are the tail super-bins and may have zero width.
    pub edges: Vec<f64>,
    /// `B' + 2` counts, tail super-bins first and last.
    pub counts: Vec<u64>,
    /// First and last interior bin, as indices into the raw layout.
    pub b_l: usize,
    pub b_u: usize,
    pub m: u64,
}

/// Number of bins a proportion threshold removes from one end.
fn proportion_bins(tau: f64, bins: usize) -> usize {
    (tau * bins as f64 + 1e-9).floor() as usize
}

pub fn collapse_tails(raw: &RawHistogram, spec: &HistogramSpec) -> Result<CollapsedHistogram> {
    let bins = raw.layout.bins;
    let (b_l, b_u) = match spec.collapse_mode {
        CollapseMode::CountThreshold => {
            let above = |tau: f64| move |&(_, &c): &(usize, &u64)| c as f64 > tau;
            let first = raw.window.iter().enumerate().find(above(spec.tau_l));
            let last = raw.window.iter().enumerate().rev().find(above(spec.tau_u));
            match (first, last) {
                (Some((a, _)), Some((b, _))) => (raw.offset + a, raw.offset + b),
                _ => return Err(Error::AllCollapsed),
            }
        }
        CollapseMode::ProportionThreshold => {
            let left = proportion_bins(spec.tau_l, bins);
            let right = proportion_bins(spec.tau_u, bins);
            if left + right >= bins {
                return Err(Error::AllCollapsed);
            }
            (left, bins - 1 - right)
        }
    };
    if b_l > b_u {
        return Err(Error::AllCollapsed);
    }
    let layout = &raw.layout;
    let mut edges = Vec::with_capacity(b_u - b_l + 4);
    edges.push(layout.l);
    edges.extend((b_l..=b_u + 1).map(|b| layout.edge(b)));
    edges.push(layout.u);
    let mut counts = Vec::with_capacity(b_u - b_l + 3);
    counts.push(raw.range_sum(0, b_l));
    counts.extend((b_l..=b_u).map(|b| raw.count(b)));
    counts.push(raw.range_sum(b_u + 1, bins));
    Ok(CollapsedHistogram { edges, counts, b_l, b_u, m: raw.total })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanitizedHistogram {
    pub version: u32,
    pub edges: Vec<f64>,
    pub counts: Vec<f64>,
    pub m: u64,
    pub variant: HistogramVariant,
    pub b_l: usize,
    pub b_u: usize,
    pub budget: PrivacyBudget,
}

impl SanitizedHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Sum of sanitized counts, `m*`.
    pub fn mstar(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != HISTOGRAM_VERSION {
            return Err(invalid(format!("unsupported histogram version {}", self.version)));
        }
        if self.counts.len() < 3 || self.edges.len() != self.counts.len() + 1 {
            return Err(invalid("edges must have one more entry than counts, with at least 3 bins"));
        }
        if self.edges.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(invalid("edges must be nondecreasing"));
        }
        // only the two tail super-bins may be empty intervals
        let last = self.edges.len() - 2;
        if self.edges[1..=last].windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("interior edges must be strictly increasing"));
        }
        if self.counts.iter().any(|c| !c.is_finite()) {
            return Err(invalid("counts must be finite"));
        }
        if self.variant == HistogramVariant::Plus && self.counts.iter().any(|&c| c < 0.0) {
            return Err(invalid("plus histogram has a negative count"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| invalid(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let h: SanitizedHistogram = serde_json::from_str(s).map_err(|e| invalid(e.to_string()))?;
        h.validate()?;
        Ok(h)
    }
}

/// Adds independent noise of scale `delta_h / eps` (Laplace) or
/// `delta_h / mu` (Gaussian) to every bin.
pub fn sanitize<R: Rng + ?Sized>(
    collapsed: &CollapsedHistogram,
    spec: &HistogramSpec,
    budget: &HistogramBudget,
    rng: &mut R,
) -> Result<SanitizedHistogram> {
    let noise = spec.budget.noise_scale(budget.delta_h).map_err(|e| match e {
        Error::Unsupported(msg) => invalid(msg),
        other => other,
    })?;
    let counts = collapsed
        .counts
        .iter()
        .map(|&c| {
            let v = c as f64 + noise.sample(rng);
            match spec.variant {
                HistogramVariant::Plus => v.max(0.0),
                HistogramVariant::Minus => v,
            }
        })
        .collect();
    Ok(SanitizedHistogram {
        version: HISTOGRAM_VERSION,
        edges: collapsed.edges.clone(),
        counts,
        m: collapsed.m,
        variant: spec.variant,
        b_l: collapsed.b_l,
        b_u: collapsed.b_u,
        budget: spec.budget,
    })
}

/// Draws `budget.m` posterior samples, then bins, collapses and sanitizes.
///
/// Sampling and noise use separate generators so that the same posterior
/// draws can be reused across privacy budgets.
pub fn p3_histogram<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    model: &PosteriorModel,
    spec: &HistogramSpec,
    budget: &HistogramBudget,
    sample_rng: &mut R1,
    noise_rng: &mut R2,
) -> Result<SanitizedHistogram> {
    spec.validate()?;
    let samples = model.sample_posterior(budget.m as usize, sample_rng)?;
    let raw = build_histogram(&samples, &spec.layout()?)?;
    let collapsed = collapse_tails(&raw, spec)?;
    sanitize(&collapsed, spec, budget, noise_rng)
}

/// Result of checking the tail-density regularity condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub left_sum: f64,
    pub right_sum: f64,
    pub g: f64,
}

impl TailCheck {
    pub fn holds(&self) -> bool {
        self.left_sum <= self.g && self.right_sum <= self.g
    }

    pub fn warning(&self) -> Option<String> {
        (!self.holds()).then(|| {
            format!(
                "tail density sums ({:.4}, {:.4}) exceed G = {:.4}; the DP guarantee assumes they do not",
                self.left_sum, self.right_sum, self.g
            )
        })
    }
}

/// Sums the posterior density at bin midpoints over bins `0..=b_l` and
/// `b_u..` and compares each sum with `g`.
pub fn check_tail_assumption(
    model: &PosteriorModel,
    layout: &BinLayout,
    b_l: usize,
    b_u: usize,
    g: f64,
) -> Result<TailCheck> {
    if b_l > b_u || b_u >= layout.bins {
        return Err(invalid(format!("bad interior range {b_l}..={b_u} for {} bins", layout.bins)));
    }
    let mid = |b: usize| 0.5 * (layout.edge(b) + layout.edge(b + 1));
    let mut left_sum = 0.0;
    for b in 0..=b_l {
        left_sum += model.posterior_pdf(mid(b))?;
    }
    let mut right_sum = 0.0;
    for b in b_u..layout.bins {
        right_sum += model.posterior_pdf(mid(b))?;
    }
    Ok(TailCheck { left_sum, right_sum, g })
}
