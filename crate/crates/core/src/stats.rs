//! Small-sample statistics used by the Monte Carlo experiments.

use crate::error::{Error, Result};
use crate::randomness::GaussianStream;
use serde::{Deserialize, Serialize};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard error of the sample variance, from the fourth central moment:
/// `Var(s²) ≈ (μ₄ − σ⁴)/n`.
pub fn variance_std_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    ((m4 - m2 * m2) / n).max(0.0).sqrt()
}

pub fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

/// Pearson correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse of the standard normal CDF.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}

/// A proportion estimate with a Wilson score interval.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Proportion {
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Proportion {
    /// Wilson interval at `z` standard deviations. With zero hits the point
    /// estimate is 0 and only `ci_hi` is informative (a one-sided bound).
    pub fn wilson(hits: u64, trials: u64, z: f64) -> Self {
        let n = trials as f64;
        let p = hits as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Self {
            hits,
            trials,
            estimate: p,
            ci_lo: (centre - half).max(0.0),
            ci_hi: (centre + half).min(1.0),
        }
    }

    pub fn is_one_sided(&self) -> bool {
        self.hits == 0
    }
}

/// Kolmogorov–Smirnov distance between the sample and `N(mean, sd²)` fitted
/// to it. Integer-valued samples are compared at their support points against
/// the continuity-corrected normal CDF, which is the relevant distance for a
/// normal approximation of a lattice law.
pub fn ks_to_fitted_normal(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let s = std_dev(xs);
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let lattice = v.iter().all(|x| (x - x.round()).abs() < 1e-9);
    let mut d: f64 = 0.0;
    if lattice {
        let mut i = 0;
        while i < v.len() {
            let mut j = i;
            while j < v.len() && v[j] == v[i] {
                j += 1;
            }
            let below = i as f64 / n;
            let upto = j as f64 / n;
            let f_below = normal_cdf((v[i] - 0.5 - m) / s);
            let f_upto = normal_cdf((v[i] + 0.5 - m) / s);
            d = d.max((below - f_below).abs()).max((upto - f_upto).abs());
            i = j;
        }
    } else {
        for (i, x) in v.iter().enumerate() {
            let f = normal_cdf((x - m) / s);
            d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
        }
    }
    d
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Critical value of the two-sample KS statistic at significance `alpha`.
pub fn ks_two_sample_critical(na: usize, nb: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c * ((na + nb) as f64 / (na as f64 * nb as f64)).sqrt()
}

/// A statistic with a bootstrap percentile interval.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Skewness, excess kurtosis and KS distance to the fitted normal.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct NormalityReport {
    pub samples: usize,
    pub skewness: Estimate,
    pub excess_kurtosis: Estimate,
    pub ks_distance: Estimate,
}

impl NormalityReport {
    /// The bands used throughout the acceptance suite.
    pub fn within_bands(&self, skew: f64, kurt: f64, ks: f64) -> bool {
        self.skewness.value.abs() < skew
            && self.excess_kurtosis.value.abs() < kurt
            && self.ks_distance.value < ks
    }
}

/// Normality diagnostics with 95% bootstrap intervals (`boot` resamples).
pub fn normality_diagnostics(xs: &[f64], boot: usize, seed: u64) -> Result<NormalityReport> {
    if xs.len() < 1000 {
        return Err(Error::Config(format!(
            "normality diagnostics need at least 1000 samples, got {}",
            xs.len()
        )));
    }
    let first = xs[0];
    if xs.iter().all(|x| *x == first) {
        return Err(Error::Degenerate("constant sample".into()));
    }
    let point = [skewness(xs), excess_kurtosis(xs), ks_to_fitted_normal(xs)];
    let mut stream = GaussianStream::new(seed, 0x5ca1_ab1e);
    let mut reps: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut buf = vec![0.0; xs.len()];
    for _ in 0..boot {
        for b in buf.iter_mut() {
            *b = xs[(stream.uniform() * xs.len() as f64) as usize % xs.len()];
        }
        reps[0].push(skewness(&buf));
        reps[1].push(excess_kurtosis(&buf));
        reps[2].push(ks_to_fitted_normal(&buf));
    }
    let mut est = |k: usize| {
        let r = &mut reps[k];
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| {
            if r.is_empty() {
                point[k]
            } else {
                r[((p * r.len() as f64) as usize).min(r.len() - 1)]
            }
        };
        Estimate {
            value: point[k],
            ci_lo: q(0.025),
            ci_hi: q(0.975),
        }
    };
    Ok(NormalityReport {
        samples: xs.len(),
        skewness: est(0),
        excess_kurtosis: est(1),
        ks_distance: est(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_and_quantile_agree() {
        for p in [1e-6, 0.01, 0.3, 0.5, 0.77, 0.999] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-10);
        }
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 2e-7);
    }

    #[test]
    fn wilson_contains_truth_and_handles_zero() {
        let p = Proportion::wilson(30, 1000, 1.96);
        assert!(p.ci_lo < 0.03 && p.ci_hi > 0.03);
        let z = Proportion::wilson(0, 1000, 1.96);
        assert_eq!(z.estimate, 0.0);
        assert!(z.is_one_sided() && z.ci_hi > 0.0 && z.ci_hi < 0.01);
    }

    #[test]
    fn synthetic_normals_pass_null_bands() {
        let mut s = GaussianStream::new(11, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| s.real()).collect();
        let r = normality_diagnostics(&xs, 50, 1).unwrap();
        assert!(r.within_bands(0.1, 0.2, 0.02), "{r:?}");
        assert!(r.skewness.ci_lo < r.skewness.value && r.skewness.value < r.skewness.ci_hi);
    }

    #[test]
    fn constant_sample_is_degenerate() {
        let xs = vec![2.0; 2000];
        assert!(matches!(normality_diagnostics(&xs, 10, 0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn lattice_ks_uses_continuity_correction() {
        // Rounded normals with sd 3: the continuity-corrected distance is small
        // while the plain distance would be dominated by the unit jumps.
        let mut s = GaussianStream::new(5, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| (3.0 * s.real()).round()).collect();
        assert!(ks_to_fitted_normal(&xs) < 0.02);
    }

    #[test]
    fn two_sample_ks_same_law() {
        let mut s = GaussianStream::new(6, 0);
        let a: Vec<f64> = (0..5000).map(|_| s.real()).collect();
        let b: Vec<f64> = (0..5000).map(|_| s.real()).collect();
        assert!(ks_two_sample(&a, &b) < ks_two_sample_critical(5000, 5000, 0.01));
    }

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (a, b) = linear_fit(&x, &y);
        assert!((a - 2.5).abs() < 1e-12 && (b + 1.0).abs() < 1e-12);
    }
}
