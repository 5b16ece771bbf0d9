//! Conjugate posteriors for the five supported inference tasks.
//!
//! A [`PosteriorModel`] holds only sufficient statistics. Its posterior is one
//! of four closed-form families (location-scale Student t, inverse gamma,
//! beta, gamma), which provide sampling, density, CDF and quantiles.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{invalid, probability_open, Error, Result};
use crate::numeric::{invert_cdf, mean_var};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum PosteriorModel {
    /// Posterior t_{n-1}(xbar, s2/n) under the prior 1/sigma^2.
    GaussianMean { n: u64, xbar: f64, s2: f64 },
    /// Posterior IG((n-1)/2, (n-1) s2 / 2).
    GaussianVariance { n: u64, s2: f64 },
    /// Posterior Beta(a + k, b + n - k).
    BernoulliProportion { n: u64, k: u64, prior_a: f64, prior_b: f64 },
    /// Posterior Gamma(shape + sum_x, rate + n).
    PoissonMean { n: u64, sum_x: f64, prior_shape: f64, prior_rate: f64 },
    /// Posterior t_{n-2}(beta1_hat, sigma2_hat / sxx).
    RegressionSlope { n: u64, beta1_hat: f64, sxx: f64, sigma2_hat: f64 },
}

/// Bounds on the data (`lx`, `ux`) and on the parameter (`l`, `u`).
///
/// For the regression task the data bounds apply to both the covariate and
/// the response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataBounds {
    pub lx: f64,
    pub ux: f64,
    pub l: f64,
    pub u: f64,
}

impl DataBounds {
    pub fn new(lx: f64, ux: f64, l: f64, u: f64) -> Result<Self> {
        let b = DataBounds { lx, ux, l, u };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |a: f64, b: f64| a.is_finite() && b.is_finite() && a < b;
        if !ok(self.lx, self.ux) {
            return Err(Error::InvalidBounds(format!("data bounds need lx < ux, got ({}, {})", self.lx, self.ux)));
        }
        if !ok(self.l, self.u) {
            return Err(Error::InvalidBounds(format!("parameter bounds need l < u, got ({}, {})", self.l, self.u)));
        }
        Ok(())
    }

    pub fn clamp_data(&self, x: f64) -> f64 {
        x.clamp(self.lx, self.ux)
    }
}

/// Hyperparameters of the conjugate priors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub beta_a: f64,
    pub beta_b: f64,
    pub gamma_shape: f64,
    pub gamma_rate: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Priors { beta_a: 1.0, beta_b: 1.0, gamma_shape: 0.1, gamma_rate: 0.1 }
    }
}

/// Closed-form posterior families.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Closed {
    StudentT { df: f64, loc: f64, scale: f64 },
    InvGamma { shape: f64, scale: f64 },
    Beta { a: f64, b: f64 },
    Gamma { shape: f64, rate: f64 },
}

fn student_t_cdf(df: f64, t: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let t2 = t * t;
    if t2 < df {
        // near the centre: 1/2 +/- I_{t^2/(df+t^2)}(1/2, df/2) / 2 keeps full
        // precision where df/(df+t^2) would round towards 1
        let half = 0.5 * beta_reg(0.5, df / 2.0, t2 / (df + t2));
        if t < 0.0 {
            0.5 - half
        } else {
            0.5 + half
        }
    } else {
        let tail = 0.5 * beta_reg(df / 2.0, 0.5, df / (df + t2));
        if t < 0.0 {
            tail
        } else {
            1.0 - tail
        }
    }
}

impl Closed {
    fn support(&self) -> (f64, f64) {
        match self {
            Closed::StudentT { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Closed::Beta { .. } => (0.0, 1.0),
            Closed::InvGamma { .. } | Closed::Gamma { .. } => (0.0, f64::INFINITY),
        }
    }

    /// A central point and spread used to bracket quantile searches.
    fn center_spread(&self) -> (f64, f64) {
        match *self {
            Closed::StudentT { loc, scale, .. } => (loc, scale),
            Closed::InvGamma { shape, scale } => {
                let mode = scale / (shape + 1.0);
                (mode, mode / shape.sqrt().max(0.5))
            }
            Closed::Beta { a, b } => {
                let s = a + b;
                (a / s, (a * b / (s * s * (s + 1.0))).sqrt())
            }
            Closed::Gamma { shape, rate } => (shape / rate, shape.sqrt() / rate),
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match *self {
            Closed::StudentT { df, loc, scale } => student_t_cdf(df, (x - loc) / scale),
            Closed::InvGamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    gamma_ur(shape, scale / x)
                }
            }
            Closed::Beta { a, b } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_reg(a, b, x)
                }
            }
            Closed::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    gamma_lr(shape, rate * x)
                }
            }
        }
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            Closed::StudentT { df, loc, scale } => {
                let t = (x - loc) / scale;
                ln_gamma((df + 1.0) / 2.0)
                    - ln_gamma(df / 2.0)
                    - 0.5 * (df * std::f64::consts::PI).ln()
                    - (df + 1.0) / 2.0 * (t * t / df).ln_1p()
                    - scale.ln()
            }
            Closed::InvGamma { shape, scale } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
            }
            Closed::Beta { a, b } => {
                if x <= 0.0 || x >= 1.0 {
                    return f64::NEG_INFINITY;
                }
                ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p()
            }
            Closed::Gamma { shape, rate } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
        }
    }

    fn quantile(&self, q: f64) -> f64 {
        let (lo_s, hi_s) = self.support();
        let (c, w) = self.center_spread();
        let mut w = w.max(1e-300);
        let mut lo = (c - w).max(lo_s);
        while self.cdf(lo) >= q && lo > lo_s {
            w *= 2.0;
            lo = (c - w).max(lo_s);
        }
        let mut w = w.max(1e-300);
        let mut hi = (c + w).min(hi_s);
        while self.cdf(hi) < q {
            w *= 2.0;
            hi = (c + w).min(hi_s);
        }
        invert_cdf(|x| self.cdf(x), q, lo, hi)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Closed::StudentT { df, loc, scale } => {
                let z: f64 = StandardNormal.sample(rng);
                let chi2 = Gamma::new(df / 2.0, 2.0).expect("df > 0").sample(rng);
                loc + scale * z / (chi2 / df).sqrt()
            }
            Closed::InvGamma { shape, scale } => {
                let g = Gamma::new(shape, 1.0).expect("shape > 0").sample(rng);
                scale / g
            }
            Closed::Beta { a, b } => {
                let x = Gamma::new(a, 1.0).expect("a > 0").sample(rng);
                let y = Gamma::new(b, 1.0).expect("b > 0").sample(rng);
                x / (x + y)
            }
            Closed::Gamma { shape, rate } => Gamma::new(shape, 1.0).expect("shape > 0").sample(rng) / rate,
        }
    }
}

impl PosteriorModel {
    pub fn n(&self) -> u64 {
        match *self {
            PosteriorModel::GaussianMean { n, .. }
            | PosteriorModel::GaussianVariance { n, .. }
            | PosteriorModel::BernoulliProportion { n, .. }
            | PosteriorModel::PoissonMean { n, .. }
            | PosteriorModel::RegressionSlope { n, .. } => n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PosteriorModel::GaussianMean { .. } => "gaussian_mean",
            PosteriorModel::GaussianVariance { .. } => "gaussian_variance",
            PosteriorModel::BernoulliProportion { .. } => "bernoulli",
            PosteriorModel::PoissonMean { .. } => "poisson",
            PosteriorModel::RegressionSlope { .. } => "regression_slope",
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.closed().map(|_| ())
    }

    fn closed(&self) -> Result<Closed> {
        let degenerate = |msg: String| Err(Error::DegeneratePosterior(msg));
        match *self {
            PosteriorModel::GaussianMean { n, xbar, s2 } => {
                if n < 3 {
                    return Err(invalid(format!("gaussian mean needs n >= 3, got {n}")));
                }
                if !xbar.is_finite() || !s2.is_finite() || s2 < 0.0 {
                    return Err(invalid(format!("bad statistics xbar={xbar}, s2={s2}")));
                }
                if s2 == 0.0 {
                    return degenerate("sample variance is zero".into());
                }
                let nf = n as f64;
                Ok(Closed::StudentT { df: nf - 1.0, loc: xbar, scale: (s2 / nf).sqrt() })
            }
            PosteriorModel::GaussianVariance { n, s2 } => {
                if n < 3 {
                    return Err(invalid(format!("gaussian variance needs n >= 3, got {n}")));
                }
                if !s2.is_finite() || s2 < 0.0 {
                    return Err(invalid(format!("bad sample variance {s2}")));
                }
                if s2 == 0.0 {
                    return degenerate("sample variance is zero".into());
                }
                let a = (n as f64 - 1.0) / 2.0;
                Ok(Closed::InvGamma { shape: a, scale: a * s2 })
            }
            PosteriorModel::BernoulliProportion { n, k, prior_a, prior_b } => {
                if k > n {
                    return Err(invalid(format!("k = {k} exceeds n = {n}")));
                }
                if !(prior_a > 0.0 && prior_b > 0.0 && prior_a.is_finite() && prior_b.is_finite()) {
                    return Err(invalid("beta prior parameters must be positive"));
                }
                Ok(Closed::Beta { a: prior_a + k as f64, b: prior_b + (n - k) as f64 })
            }
            PosteriorModel::PoissonMean { n, sum_x, prior_shape, prior_rate } => {
                if !(sum_x.is_finite() && sum_x >= 0.0) {
                    return Err(invalid(format!("sum_x must be nonnegative, got {sum_x}")));
                }
                if !(prior_shape > 0.0 && prior_rate > 0.0 && prior_shape.is_finite() && prior_rate.is_finite()) {
                    return Err(invalid("gamma prior parameters must be positive"));
                }
                Ok(Closed::Gamma { shape: prior_shape + sum_x, rate: prior_rate + n as f64 })
            }
            PosteriorModel::RegressionSlope { n, beta1_hat, sxx, sigma2_hat } => {
                if n < 4 {
                    return Err(invalid(format!("regression slope needs n >= 4, got {n}")));
                }
                if !(beta1_hat.is_finite() && sxx.is_finite() && sigma2_hat.is_finite()) || sigma2_hat < 0.0 {
                    return Err(invalid("bad regression statistics"));
                }
                if sxx <= 0.0 {
                    return degenerate("covariate has zero spread".into());
                }
                if sigma2_hat == 0.0 {
                    return degenerate("residual variance is zero".into());
                }
                Ok(Closed::StudentT { df: n as f64 - 2.0, loc: beta1_hat, scale: (sigma2_hat / sxx).sqrt() })
            }
        }
    }

    /// `m` independent posterior draws.
    pub fn sample_posterior<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<Vec<f64>> {
        if m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        let dist = self.closed()?;
        Ok((0..m).map(|_| dist.sample(rng)).collect())
    }

    pub fn posterior_cdf(&self, theta: f64) -> Result<f64> {
        Ok(self.closed()?.cdf(theta))
    }

    pub fn posterior_pdf(&self, theta: f64) -> Result<f64> {
        Ok(self.closed()?.ln_pdf(theta).exp())
    }

    pub fn posterior_quantile(&self, q: f64) -> Result<f64> {
        probability_open("q", q)?;
        Ok(self.closed()?.quantile(q))
    }

    /// Central `(1 - alpha)` posterior interval.
    pub fn central_interval(&self, alpha: f64) -> Result<(f64, f64)> {
        probability_open("alpha", alpha)?;
        Ok((self.posterior_quantile(alpha / 2.0)?, self.posterior_quantile(1.0 - alpha / 2.0)?))
    }
}

/// A data-generating process with known true parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Task {
    GaussianMean {
        mu: f64,
        sigma: f64,
    },
    GaussianVariance {
        mu: f64,
        sigma: f64,
    },
    Bernoulli {
        p: f64,
    },
    Poisson {
        lambda: f64,
    },
    /// `y = beta0 + beta1 z + N(0, sigma^2)` with `z ~ N(0, 1)`.
    RegressionSlope {
        beta0: f64,
        beta1: f64,
        sigma: f64,
    },
}

/// Raw observations.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Univariate(Vec<f64>),
    /// `(z, y)` covariate/response pairs.
    Paired(Vec<(f64, f64)>),
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Univariate(v) => v.len(),
            Dataset::Paired(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A simulated dataset reduced to its posterior, plus the truth it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub model: PosteriorModel,
    pub truth: f64,
}

impl Task {
    /// The experiment settings used throughout the benchmarks.
    pub fn default_for(name: &str) -> Option<Task> {
        Some(match name {
            "gaussian_mean" => Task::GaussianMean { mu: 0.0, sigma: 1.0 },
            "gaussian_variance" => Task::GaussianVariance { mu: 0.0, sigma: 1.0 },
            "bernoulli" => Task::Bernoulli { p: 0.3 },
            "poisson" => Task::Poisson { lambda: 10.0 },
            "regression_slope" => Task::RegressionSlope { beta0: 1.0, beta1: 0.5, sigma: 0.25 },
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::GaussianMean { .. } => "gaussian_mean",
            Task::GaussianVariance { .. } => "gaussian_variance",
            Task::Bernoulli { .. } => "bernoulli",
            Task::Poisson { .. } => "poisson",
            Task::RegressionSlope { .. } => "regression_slope",
        }
    }

    /// The parameter of interest.
    pub fn truth(&self) -> f64 {
        match *self {
            Task::GaussianMean { mu, .. } => mu,
            Task::GaussianVariance { sigma, .. } => sigma * sigma,
            Task::Bernoulli { p } => p,
            Task::Poisson { lambda } => lambda,
            Task::RegressionSlope { beta1, .. } => beta1,
        }
    }

    /// Default data and parameter bounds.
    pub fn default_bounds(&self) -> DataBounds {
        match *self {
            Task::GaussianMean { mu, sigma } => {
                let w = 5.0 * sigma;
                DataBounds { lx: mu - w, ux: mu + w, l: mu - w, u: mu + w }
            }
            Task::GaussianVariance { mu, sigma } => {
                let w = 5.0 * sigma;
                DataBounds { lx: mu - w, ux: mu + w, l: 0.25, u: 25.0 }
            }
            Task::Bernoulli { .. } => DataBounds { lx: 0.0, ux: 1.0, l: 0.03, u: 0.97 },
            Task::Poisson { .. } => DataBounds { lx: 0.0, ux: 35.0, l: 3.0, u: 35.0 },
            Task::RegressionSlope { .. } => DataBounds { lx: -4.0, ux: 4.0, l: -0.5, u: 1.5 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Task::GaussianMean { mu, sigma } | Task::GaussianVariance { mu, sigma } => mu.is_finite() && sigma > 0.0,
            Task::Bernoulli { p } => (0.0..=1.0).contains(&p),
            Task::Poisson { lambda } => lambda.is_finite() && lambda >= 0.0,
            Task::RegressionSlope { beta0, beta1, sigma } => beta0.is_finite() && beta1.is_finite() && sigma > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid task parameters {self:?}")))
        }
    }

    /// Draws `n` observations and clamps them into the data bounds.
    pub fn generate<R: Rng + ?Sized>(&self, n: usize, bounds: &DataBounds, rng: &mut R) -> Result<Dataset> {
        self.validate()?;
        bounds.validate()?;
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        Ok(match *self {
            Task::GaussianMean { mu, sigma } | Task::GaussianVariance { mu, sigma } => {
                let d = Normal::new(mu, sigma).map_err(|e| invalid(e.to_string()))?;
                Dataset::Univariate((0..n).map(|_| bounds.clamp_data(d.sample(rng))).collect())
            }
            Task::Bernoulli { p } => Dataset::Univariate(
                (0..n).map(|_| bounds.clamp_data(if rng.random::<f64>() < p { 1.0 } else { 0.0 })).collect(),
            ),
            Task::Poisson { lambda } => {
                if lambda == 0.0 {
                    Dataset::Univariate(vec![bounds.clamp_data(0.0); n])
                } else {
                    let d = Poisson::new(lambda).map_err(|e| invalid(e.to_string()))?;
                    Dataset::Univariate((0..n).map(|_| bounds.clamp_data(d.sample(rng))).collect())
                }
            }
            Task::RegressionSlope { beta0, beta1, sigma } => Dataset::Paired(
                (0..n)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        let e: f64 = StandardNormal.sample(rng);
                        let y = beta0 + beta1 * z + sigma * e;
                        (bounds.clamp_data(z), bounds.clamp_data(y))
                    })
                    .collect(),
            ),
        })
    }

    /// Reduces a dataset to the posterior of this task's parameter.
    pub fn fit(&self, data: &Dataset, priors: &Priors) -> Result<PosteriorModel> {
        let n = data.len() as u64;
        match (self, data) {
            (Task::GaussianMean { .. }, Dataset::Univariate(x)) => {
                let (xbar, s2) = mean_var(x);
                Ok(PosteriorModel::GaussianMean { n, xbar, s2 })
            }
            (Task::GaussianVariance { .. }, Dataset::Univariate(x)) => {
                let (_, s2) = mean_var(x);
                Ok(PosteriorModel::GaussianVariance { n, s2 })
            }
            (Task::Bernoulli { .. }, Dataset::Univariate(x)) => {
                if x.iter().any(|&v| v != 0.0 && v != 1.0) {
                    return Err(invalid("bernoulli data must be 0 or 1"));
                }
                let k = x.iter().filter(|&&v| v == 1.0).count() as u64;
                Ok(PosteriorModel::BernoulliProportion { n, k, prior_a: priors.beta_a, prior_b: priors.beta_b })
            }
            (Task::Poisson { .. }, Dataset::Univariate(x)) => {
                if x.iter().any(|&v| !(v >= 0.0)) {
                    return Err(invalid("poisson data must be nonnegative"));
                }
                Ok(PosteriorModel::PoissonMean {
                    n,
                    sum_x: x.iter().sum(),
                    prior_shape: priors.gamma_shape,
                    prior_rate: priors.gamma_rate,
                })
            }
            (Task::RegressionSlope { .. }, Dataset::Paired(pairs)) => Ok(fit_slope(pairs)),
            _ => Err(invalid(format!("dataset shape does not match task {}", self.name()))),
        }
    }

    /// Generates a dataset and returns its posterior along with the truth.
    pub fn simulate_dataset<R: Rng + ?Sized>(
        &self,
        n: usize,
        bounds: &DataBounds,
        priors: &Priors,
        rng: &mut R,
    ) -> Result<SimulatedData> {
        let data = self.generate(n, bounds, rng)?;
        Ok(SimulatedData { model: self.fit(&data, priors)?, truth: self.truth() })
    }

    /// Fisher information of one observation, evaluated at the true parameter.
    pub fn fisher_information(&self) -> Result<f64> {
        let singular = |msg: &str| Err(Error::SingularInformation(msg.into()));
        match *self {
            Task::GaussianMean { sigma, .. } => Ok(1.0 / (sigma * sigma)),
            Task::GaussianVariance { sigma, .. } => {
                let s2 = sigma * sigma;
                if s2 == 0.0 {
                    return singular("sigma^2 = 0");
                }
                Ok(1.0 / (2.0 * s2 * s2))
            }
            Task::Bernoulli { p } => {
                if p <= 0.0 || p >= 1.0 {
                    return singular("p on the boundary of [0, 1]");
                }
                Ok(1.0 / (p * (1.0 - p)))
            }
            Task::Poisson { lambda } => {
                if lambda <= 0.0 {
                    return singular("lambda = 0");
                }
                Ok(1.0 / lambda)
            }
            // E[z^2] = 1 for the standard normal covariate
            Task::RegressionSlope { sigma, .. } => Ok(1.0 / (sigma * sigma)),
        }
    }

    /// Worst-case `C = n * |theta_hat' - theta_hat|` over one-record
    /// substitutions within the data bounds.
    ///
    /// Mean-type estimators give the data range. The variance estimator uses
    /// `((ux - lx) / 2)^2`, i.e. `(k sigma)^2` when the bounds are
    /// `mu +/- k sigma`. The regression slope uses the conservative bound
    /// `(6 + 8 |beta|_max) B^2 / E[z^2]` with `B = max(|lx|, |ux|)` and
    /// `|beta|_max = max(|l|, |u|)`.
    pub fn c_constant_bound(&self, bounds: &DataBounds) -> Result<f64> {
        bounds.validate()?;
        let range = bounds.ux - bounds.lx;
        Ok(match self {
            Task::GaussianMean { .. } | Task::Bernoulli { .. } | Task::Poisson { .. } => range,
            Task::GaussianVariance { .. } => (range / 2.0).powi(2),
            Task::RegressionSlope { .. } => {
                let b = bounds.lx.abs().max(bounds.ux.abs());
                let beta_max = bounds.l.abs().max(bounds.u.abs());
                (6.0 + 8.0 * beta_max) * b * b
            }
        })
    }
}

fn fit_slope(pairs: &[(f64, f64)]) -> PosteriorModel {
    let n = pairs.len();
    let nf = n as f64;
    let zbar = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let ybar = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(z, y) in pairs {
        sxx += (z - zbar) * (z - zbar);
        sxy += (z - zbar) * (y - ybar);
        syy += (y - ybar) * (y - ybar);
    }
    let beta1_hat = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rss = (syy - beta1_hat * sxy).max(0.0);
    let sigma2_hat = if n > 2 { rss / (nf - 2.0) } else { 0.0 };
    PosteriorModel::RegressionSlope { n: n as u64, beta1_hat, sxx, sigma2_hat }
}
