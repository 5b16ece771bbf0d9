//! Posterior global sensitivity `G(n)` and the histogram budget built on it.
//!
//! `G(n)` is the largest change in posterior density caused by substituting
//! one record. Three routes are offered: a Monte Carlo lower estimate
//! ([`gn_numeric`]), the large-sample value `G0 = C I / sqrt(2 e pi)`
//! ([`g0_analytic`]) and a conservative bound over the parameter range
//! ([`g0_upper_bound`]).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, positive, Error, Result};
use crate::exec::{map_indices, ExecutionMode};
use crate::numeric::sqrt_2e_pi;
use crate::posterior::{DataBounds, Dataset, PosteriorModel, Priors, Task};
use crate::rng::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityMethod {
    Numeric,
    AnalyticG0,
    UpperBoundG0bar,
}

/// A resolved value of `G` together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySpec {
    pub method: SensitivityMethod,
    pub value: f64,
    pub note: String,
}

/// Settings for the Gaussian-row upper bounds: data bounds are taken to be
/// `mu +/- k sigma` and `sigma` is floored at `sigma_floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundConfig {
    pub k: f64,
    pub sigma_floor: f64,
}

impl Default for UpperBoundConfig {
    fn default() -> Self {
        UpperBoundConfig { k: 5.0, sigma_floor: 0.25 }
    }
}

/// `G0 = C * I(theta0) / sqrt(2 e pi)` at the task's true parameter.
pub fn g0_analytic(task: &Task, bounds: &DataBounds) -> Result<f64> {
    let c = task.c_constant_bound(bounds)?;
    let info = task.fisher_information()?;
    Ok(c * info / sqrt_2e_pi())
}

/// Conservative bound on `G0` over the whole parameter range `(l, u)`.
pub fn g0_upper_bound(task: &Task, bounds: &DataBounds, cfg: &UpperBoundConfig) -> Result<f64> {
    bounds.validate()?;
    let s = sqrt_2e_pi();
    let (l, u) = (bounds.l, bounds.u);
    match task {
        Task::Bernoulli { .. } => {
            let v = (l * (1.0 - l)).min(u * (1.0 - u));
            if !(v > 0.0) {
                return Err(Error::InvalidBounds(format!("need 0 < l < u < 1, got ({l}, {u})")));
            }
            Ok(1.0 / (s * v))
        }
        Task::Poisson { .. } => {
            if !(l > 0.0) {
                return Err(Error::InvalidBounds(format!("poisson lower bound must be positive, got {l}")));
            }
            Ok((bounds.ux - bounds.lx) / (s * l))
        }
        Task::GaussianMean { .. } => {
            positive("k", cfg.k)?;
            positive("sigma_floor", cfg.sigma_floor)?;
            Ok(std::f64::consts::SQRT_2 * cfg.k
                / ((std::f64::consts::E * std::f64::consts::PI).sqrt() * cfg.sigma_floor))
        }
        Task::GaussianVariance { .. } => {
            positive("k", cfg.k)?;
            if !(l > 0.0) {
                return Err(Error::InvalidBounds(format!("variance lower bound must be positive, got {l}")));
            }
            Ok(cfg.k * cfg.k / (2.0 * s * l))
        }
        Task::RegressionSlope { .. } => {
            Err(Error::Unsupported("no closed-form upper bound for the regression slope".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnConfig {
    pub pairs: usize,
    pub grid: usize,
    pub priors: Priors,
    pub mode: ExecutionMode,
}

impl Default for GnConfig {
    fn default() -> Self {
        GnConfig { pairs: 50, grid: 2000, priors: Priors::default(), mode: ExecutionMode::Parallel }
    }
}

fn linspace(a: f64, b: f64, k: usize) -> impl Iterator<Item = f64> {
    let step = (b - a) / (k - 1) as f64;
    (0..k).map(move |i| if i + 1 == k { b } else { a + step * i as f64 })
}

/// Records whose substitution is most likely to move the posterior: the
/// smallest, the largest and the one closest to the centre.
fn candidate_indices(keys: &[f64]) -> Vec<usize> {
    let mean = keys.iter().sum::<f64>() / keys.len() as f64;
    let by =
        |f: &dyn Fn(f64) -> f64| (0..keys.len()).min_by(|&a, &b| f(keys[a]).total_cmp(&f(keys[b]))).expect("nonempty");
    let mut idx = vec![by(&|x| x), by(&|x| -x), by(&|x| (x - mean).abs())];
    idx.sort_unstable();
    idx.dedup();
    idx
}

fn neighbours(data: &Dataset, bounds: &DataBounds) -> Vec<Dataset> {
    let (lx, ux) = (bounds.lx, bounds.ux);
    let mut out = Vec::new();
    match data {
        Dataset::Univariate(x) => {
            for i in candidate_indices(x) {
                for v in [lx, ux] {
                    if x[i] != v {
                        let mut y = x.clone();
                        y[i] = v;
                        out.push(Dataset::Univariate(y));
                    }
                }
            }
        }
        Dataset::Paired(p) => {
            let z: Vec<f64> = p.iter().map(|q| q.0).collect();
            for i in candidate_indices(&z) {
                for v in [(lx, lx), (lx, ux), (ux, lx), (ux, ux)] {
                    let mut y = p.clone();
                    y[i] = v;
                    out.push(Dataset::Paired(y));
                }
            }
        }
    }
    out
}

/// Monte Carlo estimate of `G(n)` from below.
///
/// Each of `cfg.pairs` simulated datasets is compared with neighbours built
/// by substituting an extreme or central record with `lx` or `ux`. The
/// density difference is maximized over a uniform grid on `(l, u)` plus a
/// grid of the same size over the central `1 - 2e-6` mass of the original
/// posterior, which resolves the peaks once the posterior is much narrower
/// than `(l, u)`. Pair `i` always uses substream `i` of `stream`.
pub fn gn_numeric(task: &Task, n: usize, bounds: &DataBounds, cfg: &GnConfig, stream: SeedStream) -> Result<f64> {
    if cfg.pairs == 0 {
        return Err(invalid("pairs must be at least 1"));
    }
    if cfg.grid < 10 {
        return Err(invalid(format!("grid must be at least 10, got {}", cfg.grid)));
    }
    task.validate()?;
    bounds.validate()?;
    let per_pair = map_indices(cfg.pairs, cfg.mode, |i| -> Result<f64> {
        let mut rng = stream.child(i as u64).rng();
        let data = task.generate(n, bounds, &mut rng)?;
        let base = task.fit(&data, &cfg.priors)?;
        let lo = base.posterior_quantile(1e-6)?.max(bounds.l);
        let hi = base.posterior_quantile(1.0 - 1e-6)?.min(bounds.u);
        let mut grid: Vec<f64> = linspace(bounds.l, bounds.u, cfg.grid).collect();
        if lo < hi {
            grid.extend(linspace(lo, hi, cfg.grid));
        }
        let f0 = grid.iter().map(|&t| base.posterior_pdf(t)).collect::<Result<Vec<_>>>()?;
        let mut best = 0.0f64;
        for nb in neighbours(&data, bounds) {
            let model: PosteriorModel = match task.fit(&nb, &cfg.priors) {
                Ok(m) if m.validate().is_ok() => m,
                _ => continue,
            };
            for (t, a) in grid.iter().zip(&f0) {
                best = best.max((model.posterior_pdf(*t)? - a).abs());
            }
        }
        Ok(best)
    });
    let mut best = 0.0f64;
    for v in per_pair {
        best = best.max(v?);
    }
    Ok(best)
}

/// Resolves `G` by the requested route.
pub fn resolve_sensitivity(
    method: SensitivityMethod,
    task: &Task,
    n: usize,
    bounds: &DataBounds,
    upper: &UpperBoundConfig,
    gn: &GnConfig,
    stream: SeedStream,
) -> Result<SensitivitySpec> {
    let (value, note) = match method {
        SensitivityMethod::AnalyticG0 => {
            (g0_analytic(task, bounds)?, "C I / sqrt(2 e pi) at the true parameter".to_string())
        }
        SensitivityMethod::UpperBoundG0bar => {
            (g0_upper_bound(task, bounds, upper)?, format!("upper bound, k = {}", upper.k))
        }
        SensitivityMethod::Numeric => {
            (gn_numeric(task, n, bounds, gn, stream)?, format!("numeric, {} pairs, grid {}", gn.pairs, gn.grid))
        }
    };
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::DegeneratePosterior(format!("sensitivity resolved to {value}")));
    }
    Ok(SensitivitySpec { method, value, note })
}

/// `m = floor(1 / (2 h g))`, the largest posterior sample size that keeps
/// the histogram sensitivity `2 m h g` at or below one.
///
/// Consistency of the released quantiles also needs `m` to grow slower than
/// `exp(eps sqrt(n) / 2) n^(1/4) eps^(1/2)`; that is an asymptotic rate and
/// is not checked here.
pub fn back_calculate_m(g: f64, h: f64) -> Result<u64> {
    positive("g", g)?;
    positive("h", h)?;
    let ratio = 1.0 / (2.0 * h * g);
    if ratio < 1.0 {
        return Err(Error::BinWidthTooCoarse { h, g, ratio });
    }
    let mut m = ratio.floor();
    // guard the floor against rounding in 2hg
    if delta_h(m as u64, h, g) > 1.0 {
        m -= 1.0;
    }
    Ok(m as u64)
}

/// Histogram sensitivity `2 m h g`.
pub fn delta_h(m: u64, h: f64, g: f64) -> f64 {
    2.0 * m as f64 * h * g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBudget {
    pub g: f64,
    pub h: f64,
    pub m: u64,
    pub delta_h: f64,
}

impl HistogramBudget {
    /// `m` chosen so that the histogram sensitivity is at most one.
    pub fn back_calculated(g: f64, h: f64) -> Result<Self> {
        let m = back_calculate_m(g, h)?;
        Ok(HistogramBudget { g, h, m, delta_h: 1.0 })
    }

    /// A caller-chosen `m`; the noise is then scaled by `2 m h g`.
    pub fn with_m(g: f64, h: f64, m: u64) -> Result<Self> {
        positive("g", g)?;
        positive("h", h)?;
        if m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        Ok(HistogramBudget { g, h, m, delta_h: delta_h(m, h, g) })
    }
}
