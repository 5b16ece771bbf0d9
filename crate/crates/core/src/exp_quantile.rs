//! Quantile release by the exponential mechanism.
//!
//! [`ppquantile`] runs the mechanism over posterior draws, scoring each gap
//! by its distance in rank from the draw nearest the true posterior
//! quantile. [`private_quantile`] is the classical version over the raw data.
//! Both sample the gap index from log-space weights, since the scores can
//! span hundreds of orders of magnitude.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, probability_open, Error, Result};
use crate::posterior::PosteriorModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileRequest {
    pub q: f64,
    pub epsilon: f64,
    pub l: f64,
    pub u: f64,
    /// Number of posterior draws for [`ppquantile`]; ignored by
    /// [`private_quantile`], which uses the data length.
    pub m: usize,
}

impl QuantileRequest {
    pub fn validate(&self) -> Result<()> {
        probability_open("q", self.q)?;
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(invalid(format!("epsilon must be finite and nonnegative, got {}", self.epsilon)));
        }
        if !(self.l.is_finite() && self.u.is_finite() && self.l < self.u) {
            return Err(Error::InvalidBounds(format!("need l < u, got ({}, {})", self.l, self.u)));
        }
        Ok(())
    }
}

/// Clamps into `[l, u]`, sorts and adds `l` and `u` as sentinels.
pub fn sorted_with_sentinels(values: &[f64], l: f64, u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() + 2);
    out.push(l);
    out.extend(values.iter().map(|v| v.clamp(l, u)));
    out[1..].sort_by(f64::total_cmp);
    out.push(u);
    out
}

/// Smallest `j` minimizing `|points[j] - target|`.
pub fn nearest_order_index(points: &[f64], target: f64) -> usize {
    let mut best = 0;
    let mut gap = f64::INFINITY;
    for (j, p) in points.iter().enumerate() {
        let d = (p - target).abs();
        if d < gap {
            best = j;
            gap = d;
        }
    }
    best
}

/// `ln y_j = ln(points[j+1] - points[j]) - rate |j - center|` for every gap.
/// Empty gaps get `-inf`.
pub fn selection_log_weights(points: &[f64], center: f64, rate: f64) -> Vec<f64> {
    points
        .windows(2)
        .enumerate()
        .map(|(j, w)| {
            let gap = w[1] - w[0];
            if gap > 0.0 {
                gap.ln() - rate * (j as f64 - center).abs()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

/// Normalized selection probabilities `y_j / sum y`.
pub fn selection_probabilities(points: &[f64], center: f64, rate: f64) -> Result<Vec<f64>> {
    let lw = selection_log_weights(points, center, rate);
    let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateSample);
    }
    let w: Vec<f64> = lw.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

/// Index drawn with probability proportional to `exp(log_weights)`.
fn sample_index<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> Result<usize> {
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateSample);
    }
    let mut cum = Vec::with_capacity(log_weights.len());
    let mut acc = 0.0;
    for v in log_weights {
        acc += (v - max).exp();
        cum.push(acc);
    }
    let target = rng.random::<f64>() * acc;
    let j = cum.partition_point(|&c| c <= target);
    // never land on a zero-weight gap at the end through rounding
    let j = j.min(cum.len() - 1);
    Ok(if log_weights[j] == f64::NEG_INFINITY {
        (0..=j).rev().find(|&i| log_weights[i] > f64::NEG_INFINITY).expect("some weight is positive")
    } else {
        j
    })
}

/// One exponential-mechanism release.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpRelease {
    pub value: f64,
    /// Selected gap `j*`.
    pub index: usize,
}

fn release_over<R: Rng + ?Sized>(points: &[f64], center: f64, rate: f64, rng: &mut R) -> Result<ExpRelease> {
    let lw = selection_log_weights(points, center, rate);
    let index = sample_index(&lw, rng)?;
    let (a, b) = (points[index], points[index + 1]);
    let v = a + rng.random::<f64>() * (b - a);
    Ok(ExpRelease { value: v.clamp(a, b), index })
}

/// Runs the mechanism on given posterior draws. `target` is the posterior
/// `q`-quantile, used only to locate the centre index `k`.
pub fn ppquantile_from_samples<R: Rng + ?Sized>(
    samples: &[f64],
    req: &QuantileRequest,
    target: f64,
    rng: &mut R,
) -> Result<ExpRelease> {
    req.validate()?;
    if samples.is_empty() {
        return Err(invalid("no posterior samples"));
    }
    let points = sorted_with_sentinels(samples, req.l, req.u);
    let k = nearest_order_index(&points, target);
    let m = samples.len() as f64;
    release_over(&points, k as f64, req.epsilon / (2.0 * (m + 1.0)), rng)
}

/// Private estimate of the posterior `q`-quantile from `req.m` fresh draws.
pub fn ppquantile<R: Rng + ?Sized>(model: &PosteriorModel, req: &QuantileRequest, rng: &mut R) -> Result<f64> {
    req.validate()?;
    let samples = model.sample_posterior(req.m, rng)?;
    let target = model.posterior_quantile(req.q)?;
    ppquantile_from_samples(&samples, req, target, rng).map(|r| r.value)
}

/// Private `q`-quantile of the data itself, with `(req.l, req.u)` as the
/// data bounds.
pub fn private_quantile_detailed<R: Rng + ?Sized>(
    data: &[f64],
    req: &QuantileRequest,
    rng: &mut R,
) -> Result<ExpRelease> {
    req.validate()?;
    if data.is_empty() {
        return Err(invalid("no data"));
    }
    let points = sorted_with_sentinels(data, req.l, req.u);
    let qn = req.q * data.len() as f64;
    release_over(&points, qn, req.epsilon / 2.0, rng)
}

pub fn private_quantile<R: Rng + ?Sized>(data: &[f64], req: &QuantileRequest, rng: &mut R) -> Result<f64> {
    private_quantile_detailed(data, req, rng).map(|r| r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityBoundParams {
    pub l: f64,
    pub u: f64,
    pub m: usize,
    pub epsilon: f64,
    pub q: f64,
    pub k: usize,
    /// Smallest gap between consecutive sorted draws.
    pub s: f64,
    pub p_min: f64,
    pub eta: f64,
    /// Deviation radius; the bound concerns `|theta* - theta_(k)| > 2 u_arg`.
    pub u_arg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityBound {
    /// Sum of the terms, clamped to `[0, 1]`.
    pub bound: f64,
    pub terms: [f64; 3],
    /// The second term is infinite because `u_arg = 0`.
    pub diverged: bool,
}

/// Upper bound on `P(|theta* - theta_(k)| > 2 u)` for [`ppquantile`].
pub fn ppquantile_utility_bound(p: &UtilityBoundParams) -> Result<UtilityBound> {
    probability_open("q", p.q)?;
    if !(p.l < p.u) {
        return Err(Error::InvalidBounds(format!("need l < u, got ({}, {})", p.l, p.u)));
    }
    if !(p.s > 0.0 && p.p_min > 0.0 && p.eta > 0.0 && p.epsilon >= 0.0) {
        return Err(invalid("s, p_min and eta must be positive and epsilon nonnegative"));
    }
    if !(0.0 <= p.u_arg && p.u_arg <= p.eta) {
        return Err(invalid(format!("need 0 <= u <= eta, got u = {}, eta = {}", p.u_arg, p.eta)));
    }
    if p.m == 0 || p.k > p.m + 1 {
        return Err(invalid(format!("need m >= 1 and k <= m + 1, got m = {}, k = {}", p.m, p.k)));
    }
    let m = p.m as f64;
    let k = p.k as f64;
    let x = p.epsilon / (2.0 * (m + 1.0));
    // 1 - xi and 1 + xi - xi^(k+1) - xi^(m-k+1), written to stay accurate as xi -> 1
    let one_minus_xi = -(-x).exp_m1();
    let denom = -(-(k + 1.0) * x).exp_m1() + (-x).exp() * -(-(m - k) * x).exp_m1();
    let ratio = if denom > 0.0 { one_minus_xi / denom } else { 1.0 / (m + 1.0).max(1.0) };
    let t1 = (p.u - p.l - 4.0 * p.u_arg) / p.s * ratio * (-p.epsilon * p.u_arg * p.p_min / 4.0).exp();
    let (t2, diverged) = if p.u_arg == 0.0 {
        (f64::INFINITY, true)
    } else {
        (2.0 * p.eta / p.u_arg * (-(m + 1.0) * p.u_arg * p.p_min / 8.0).exp(), false)
    };
    let t3 = 2.0 * (-m * p.eta * p.eta * p.p_min * p.p_min / (12.0 * (1.0 - p.q))).exp();
    let sum = t1 + t2 + t3;
    Ok(UtilityBound { bound: if sum.is_nan() { 1.0 } else { sum.clamp(0.0, 1.0) }, terms: [t1, t2, t3], diverged })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectIndexParams {
    /// `(U - theta_(m)) + (theta_(1) - L)`.
    pub boundary_slack: f64,
    pub min_gap_s: f64,
    /// `theta_(k+1) - theta_(k)` for the target index `k`.
    pub target_gap: f64,
    pub m: usize,
    pub epsilon: f64,
}

/// Upper bound on the probability of selecting the target gap.
pub fn correct_index_probability_bound(p: &CorrectIndexParams) -> Result<f64> {
    if !(p.target_gap > 0.0) {
        return Err(invalid(format!("target gap must be positive, got {}", p.target_gap)));
    }
    if p.m < 2 {
        return Err(invalid("need m >= 2"));
    }
    if !(p.boundary_slack >= 0.0 && p.min_gap_s >= 0.0 && p.epsilon >= 0.0) {
        return Err(invalid("slack, gap and epsilon must be nonnegative"));
    }
    let spread = p.boundary_slack + p.min_gap_s * (p.m as f64 - 2.0);
    Ok(1.0 / (1.0 + spread / p.target_gap * (-p.epsilon).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;

    fn req(q: f64, epsilon: f64, l: f64, u: f64, m: usize) -> QuantileRequest {
        QuantileRequest { q, epsilon, l, u, m }
    }

    #[test]
    fn sentinels_and_clamping() {
        let p = sorted_with_sentinels(&[0.5, -3.0, 0.2, 9.0], 0.0, 1.0);
        assert_eq!(p, vec![0.0, 0.0, 0.2, 0.5, 1.0, 1.0]);
        let lw = selection_log_weights(&p, 2.0, 1.0);
        assert_eq!(lw[0], f64::NEG_INFINITY);
        assert_eq!(lw[4], f64::NEG_INFINITY);
    }

    #[test]
    fn three_sample_probabilities_by_enumeration() {
        let samples = [0.2, 0.45, 0.7];
        let (l, u, eps) = (0.0, 1.0, 2.0);
        let points = sorted_with_sentinels(&samples, l, u);
        let k = nearest_order_index(&points, 0.5);
        assert_eq!(k, 2);
        let probs = selection_probabilities(&points, k as f64, eps / 8.0).unwrap();
        let gaps = [0.2, 0.25, 0.25, 0.3];
        let y: Vec<f64> = (0..4).map(|j| gaps[j] * (-eps * (j as f64 - 2.0).abs() / 8.0).exp()).collect();
        let total: f64 = y.iter().sum();
        for j in 0..4 {
            assert_abs_diff_eq!(probs[j], y[j] / total, epsilon = 1e-12);
        }
    }

    #[test]
    fn private_quantile_probabilities_by_enumeration() {
        let data = [2.0, -1.0, 0.5];
        let points = sorted_with_sentinels(&data, -4.0, 4.0);
        let eps = 1.3;
        let qn = 0.5 * 3.0;
        let probs = selection_probabilities(&points, qn, eps / 2.0).unwrap();
        let gaps = [3.0, 1.5, 1.5, 2.0];
        let y: Vec<f64> = (0..4).map(|i| gaps[i] * (-eps * (i as f64 - qn).abs() / 2.0).exp()).collect();
        let total: f64 = y.iter().sum();
        for i in 0..4 {
            assert_abs_diff_eq!(probs[i], y[i] / total, epsilon = 1e-12);
        }
    }

    #[test]
    fn huge_epsilon_selects_center() {
        let samples = [0.1, 0.3, 0.35, 0.6, 0.9];
        let r = req(0.5, 1e9, 0.0, 1.0, samples.len());
        let mut rng = seeded(1);
        for _ in 0..200 {
            let out = ppquantile_from_samples(&samples, &r, 0.36, &mut rng).unwrap();
            assert_eq!(out.index, 3);
            assert!(out.value >= 0.35 && out.value <= 0.6);
        }
        let data = [1.0, 2.0, 3.0, 4.0];
        let r = req(0.5, 1e9, 0.0, 5.0, 0);
        for _ in 0..200 {
            let out = private_quantile_detailed(&data, &r, &mut rng).unwrap();
            assert_eq!(out.index, 2);
            assert!(out.value >= 2.0 && out.value <= 3.0);
        }
    }

    #[test]
    fn zero_epsilon_is_uniform_on_bounds() {
        let samples = [0.1, 0.3, 0.35, 0.6, 0.9];
        let r = req(0.5, 0.0, 0.0, 1.0, samples.len());
        let mut rng = seeded(2);
        let n = 100_000;
        let mut v: Vec<f64> =
            (0..n).map(|_| ppquantile_from_samples(&samples, &r, 0.4, &mut rng).unwrap().value).collect();
        v.sort_by(f64::total_cmp);
        let ks = v
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - x).abs()))
            .fold(0.0, f64::max);
        // 1.36 / sqrt(n) is the 5% critical value
        assert!(ks < 1.63 / (n as f64).sqrt(), "ks {ks}");
    }

    #[test]
    fn degenerate_samples_error() {
        let same = [1.0, 1.0, 1.0, 1.0];
        assert_eq!(selection_probabilities(&same, 1.0, 1.0), Err(Error::DegenerateSample));
        let mut rng = seeded(0);
        assert_eq!(sample_index(&[f64::NEG_INFINITY; 3], &mut rng), Err(Error::DegenerateSample));
        // draws all clamped onto one bound still leave the opposite end gap
        let r = req(0.5, 1.0, 0.0, 1.0, 3);
        let out = ppquantile_from_samples(&[5.0, 6.0, 7.0], &r, 0.5, &mut rng).unwrap();
        assert_eq!(out.index, 0);
        assert!(private_quantile(&[], &r, &mut rng).is_err());
        assert!(ppquantile_from_samples(&[], &r, 0.5, &mut rng).is_err());
    }

    #[test]
    fn ppquantile_output_in_bounds() {
        let model = PosteriorModel::GaussianMean { n: 50, xbar: 0.4, s2: 4.0 };
        let r = req(0.3, 1.0, 0.0, 1.0, 200);
        let mut rng = seeded(3);
        for _ in 0..200 {
            let v = ppquantile(&model, &r, &mut rng).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }

    fn naive_utility(p: &UtilityBoundParams) -> [f64; 3] {
        let xi = (-p.epsilon / (2.0 * (p.m as f64 + 1.0))).exp();
        let k = p.k as i32;
        let m = p.m as i32;
        let t1 = (p.u - p.l - 4.0 * p.u_arg) / p.s * (1.0 - xi) / (1.0 + xi - xi.powi(k + 1) - xi.powi(m - k + 1))
            * (-p.epsilon * p.u_arg * p.p_min / 4.0).exp();
        let t2 = 2.0 * p.eta / p.u_arg * (-(p.m as f64 + 1.0) * p.u_arg * p.p_min / 8.0).exp();
        let t3 = 2.0 * (-(p.m as f64) * p.eta.powi(2) * p.p_min.powi(2) / (12.0 * (1.0 - p.q))).exp();
        [t1, t2, t3]
    }

    #[test]
    fn utility_bound_matches_direct_evaluation() {
        let p = UtilityBoundParams {
            l: -1.0,
            u: 1.0,
            m: 200,
            epsilon: 40.0,
            q: 0.5,
            k: 100,
            s: 1e-3,
            p_min: 2.0,
            eta: 0.3,
            u_arg: 0.1,
        };
        let b = ppquantile_utility_bound(&p).unwrap();
        let naive = naive_utility(&p);
        for (t, n) in b.terms.iter().zip(naive) {
            assert_abs_diff_eq!(*t, n, epsilon = 1e-12 * n.abs().max(1.0));
        }
        assert!(!b.diverged);
        assert_abs_diff_eq!(b.bound, naive.iter().sum::<f64>().clamp(0.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn utility_bound_limits() {
        let base = UtilityBoundParams {
            l: -1.0,
            u: 1.0,
            m: 200,
            epsilon: 40.0,
            q: 0.5,
            k: 100,
            s: 1e-3,
            p_min: 2.0,
            eta: 0.3,
            u_arg: 0.1,
        };
        let zero = ppquantile_utility_bound(&UtilityBoundParams { u_arg: 0.0, ..base }).unwrap();
        assert!(zero.diverged && zero.bound == 1.0);
        let big =
            ppquantile_utility_bound(&UtilityBoundParams { m: 1_000_000, epsilon: 1e9, k: 500_000, ..base }).unwrap();
        for t in big.terms {
            assert!(t < 1e-12, "{t}");
        }
        assert!(ppquantile_utility_bound(&UtilityBoundParams { u_arg: 0.5, ..base }).is_err());
        assert!(ppquantile_utility_bound(&UtilityBoundParams { s: 0.0, ..base }).is_err());
    }

    #[test]
    fn correct_index_bound_cases() {
        let p = CorrectIndexParams { boundary_slack: 0.4, min_gap_s: 0.01, target_gap: 0.05, m: 20, epsilon: 1.5 };
        let direct = 1.0 / (1.0 + (0.4 + 0.01 * 18.0) / 0.05 * (-1.5f64).exp());
        assert_abs_diff_eq!(correct_index_probability_bound(&p).unwrap(), direct, epsilon = 1e-12);
        let inf = correct_index_probability_bound(&CorrectIndexParams { epsilon: 800.0, ..p }).unwrap();
        assert_abs_diff_eq!(inf, 1.0, epsilon = 1e-12);
        let tight = CorrectIndexParams { boundary_slack: 0.0, min_gap_s: 0.0, ..p };
        assert_eq!(correct_index_probability_bound(&tight).unwrap(), 1.0);
        assert!(correct_index_probability_bound(&CorrectIndexParams { target_gap: 0.0, ..p }).is_err());
    }
}
