//! End-to-end release behaviour: noiseless limits, index-selection bounds
//! and consistency of the exponential-mechanism quantiles.

use precise::dp::PrivacyBudget;
use precise::exp_quantile::{
    correct_index_probability_bound, nearest_order_index, ppquantile_from_samples, private_quantile,
    private_quantile_detailed, sorted_with_sentinels, CorrectIndexParams, QuantileRequest,
};
use precise::histogram::{p3_histogram, CollapseMode, HistogramSpec};
use precise::posterior::PosteriorModel;
use precise::precise::{release_interval, release_quantile, PreciseVariant};
use precise::rng::SeedStream;
use precise::sensitivity::HistogramBudget;
use rand_distr::{Distribution, Normal};

const GAUSS: PosteriorModel = PosteriorModel::GaussianMean { n: 1000, xbar: 0.1, s2: 1.0 };

fn noiseless_spec(variant: PreciseVariant, h: f64) -> HistogramSpec {
    HistogramSpec {
        l: -1.0,
        u: 1.0,
        h,
        collapse_mode: CollapseMode::CountThreshold,
        tau_l: 0.0,
        tau_u: 0.0,
        variant: variant.histogram_variant(),
        budget: PrivacyBudget::PureEps { epsilon: 1e6 },
    }
}

#[test]
fn noiseless_median_is_within_two_bins() {
    let h = 1e-3;
    // many posterior draws so that Monte Carlo error sits well inside one bin
    let budget = HistogramBudget::with_m(1.0, h, 20_000).unwrap();
    let median = GAUSS.posterior_quantile(0.5).unwrap();
    for variant in PreciseVariant::ALL {
        let spec = noiseless_spec(variant, h);
        let reps = 1000;
        let mut close = 0;
        for t in 0..reps {
            let s = SeedStream::new(61).child(t);
            let hist = p3_histogram(&GAUSS, &spec, &budget, &mut s.child(0).rng(), &mut s.child(1).rng()).unwrap();
            let v = release_quantile(&hist, 0.5, variant.normalizer(), &mut s.child(2).rng()).unwrap();
            close += usize::from((v - median).abs() <= 2.0 * h);
        }
        assert!(close as f64 >= 0.95 * reps as f64, "{}: {close} of {reps}", variant.label());
    }
}

#[test]
fn noiseless_interval_matches_posterior_interval() {
    let h = 1e-3;
    let budget = HistogramBudget::with_m(1.0, h, 20_000).unwrap();
    let (lo, hi) = GAUSS.central_interval(0.05).unwrap();
    for variant in PreciseVariant::ALL {
        let s = SeedStream::new(62);
        let hist =
            p3_histogram(&GAUSS, &noiseless_spec(variant, h), &budget, &mut s.child(0).rng(), &mut s.child(1).rng())
                .unwrap();
        let iv = release_interval(&hist, 0.05, variant, &mut s.child(2).rng()).unwrap();
        assert!(
            (iv.lower - lo).abs() <= 2.0 * h && (iv.upper - hi).abs() <= 2.0 * h,
            "{}: {iv:?} vs ({lo}, {hi})",
            variant.label()
        );
        assert_eq!(iv.level, 0.95);
    }
}

fn correct_index_frequency(freq_hits: usize, reps: usize, bound: f64) {
    let p = freq_hits as f64 / reps as f64;
    let sd = (bound * (1.0 - bound) / reps as f64).sqrt();
    assert!(p <= bound + 3.0 * sd, "frequency {p} above bound {bound} (+3 SD {sd})");
}

#[test]
fn ppquantile_correct_index_never_beats_bound() {
    let (l, u) = (0.0, 1.0);
    let samples = [0.21, 0.34, 0.40, 0.47, 0.55, 0.61, 0.70, 0.83];
    let pts = sorted_with_sentinels(&samples, l, u);
    let target = 0.5;
    let k = nearest_order_index(&pts, target);
    let m = samples.len();
    let s = pts[1..=m].windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    for eps in [0.5, 2.0, 8.0] {
        let bound = correct_index_probability_bound(&CorrectIndexParams {
            boundary_slack: (u - pts[m]) + (pts[1] - l),
            min_gap_s: s,
            target_gap: pts[k + 1] - pts[k],
            m,
            epsilon: eps,
        })
        .unwrap();
        let req = QuantileRequest { q: 0.5, epsilon: eps, l, u, m };
        let mut rng = SeedStream::new(63).child(eps.to_bits()).rng();
        let reps = 100_000;
        let hits =
            (0..reps).filter(|_| ppquantile_from_samples(&samples, &req, target, &mut rng).unwrap().index == k).count();
        correct_index_frequency(hits, reps, bound);
    }
}

#[test]
fn private_quantile_correct_index_small_sample() {
    // with four points every index is within two of qn = 2, which keeps the
    // score ratio to the target gap at or above exp(-eps)
    let (l, u) = (0.0, 1.0);
    let data = [0.15, 0.38, 0.52, 0.9];
    let pts = sorted_with_sentinels(&data, l, u);
    let k = 2;
    for eps in [0.5, 1.0, 4.0] {
        let bound = correct_index_probability_bound(&CorrectIndexParams {
            boundary_slack: (u - pts[4]) + (pts[1] - l),
            min_gap_s: 0.14,
            target_gap: pts[k + 1] - pts[k],
            m: 4,
            epsilon: eps,
        })
        .unwrap();
        let req = QuantileRequest { q: 0.5, epsilon: eps, l, u, m: 4 };
        let mut rng = SeedStream::new(64).child(eps.to_bits()).rng();
        let reps = 100_000;
        let hits = (0..reps).filter(|_| private_quantile_detailed(&data, &req, &mut rng).unwrap().index == k).count();
        correct_index_frequency(hits, reps, bound);
    }
}

#[test]
fn zero_epsilon_ppquantile_is_uniform() {
    let samples = [0.1, 0.15, 0.6, 0.62, 0.9];
    let req = QuantileRequest { q: 0.3, epsilon: 0.0, l: 0.0, u: 1.0, m: 5 };
    let mut rng = SeedStream::new(65).rng();
    let n = 100_000;
    let mut xs: Vec<f64> =
        (0..n).map(|_| ppquantile_from_samples(&samples, &req, 0.2, &mut rng).unwrap().value).collect();
    xs.sort_by(f64::total_cmp);
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n as f64).abs().max((x - (i + 1) as f64 / n as f64).abs()))
        .fold(0.0, f64::max);
    assert!(d < 1.949 / (n as f64).sqrt(), "KS distance {d}");
}

#[test]
fn private_quantile_mse_falls_with_n() {
    // population median of N(0, 1) is 0
    let normal = Normal::new(0.0, 1.0).unwrap();
    let reps = 500;
    let mse: Vec<f64> = [100usize, 1000, 10_000]
        .iter()
        .map(|&n| {
            (0..reps)
                .map(|t| {
                    let s = SeedStream::new(66).path(&[n as u64, t]);
                    let mut rng = s.rng();
                    let data: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
                    let req = QuantileRequest { q: 0.5, epsilon: 1.0, l: -5.0, u: 5.0, m: n };
                    private_quantile(&data, &req, &mut rng).unwrap().powi(2)
                })
                .sum::<f64>()
                / reps as f64
        })
        .collect();
    assert!(mse[0] > mse[1] && mse[1] > mse[2], "{mse:?}");
}
