//! Moment statistics and normality tests for return series.
//!
//! Skewness is tested with D'Agostino's transformed-skewness statistic,
//! excess kurtosis with the Anscombe-Glynn transformation, and the omnibus
//! test combines both as `K^2 = Z_skew^2 + Z_kurt^2` against chi-square(2).
//! Moments use the biased (1/n) normalization.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{LrdError, Result};
use crate::ingest::ReturnSeries;

/// Below this the kurtosis test's normal approximation is not trusted.
pub const MIN_MOMENT_SAMPLE: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub z_skew: f64,
    pub z_kurt: f64,
    pub k2: f64,
    pub p_skew: f64,
    pub p_kurt: f64,
    pub p_omnibus: f64,
}

struct CentralMoments {
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

fn central_moments(x: &[f64]) -> CentralMoments {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    CentralMoments {
        mean,
        m2: m2 / n,
        m3: m3 / n,
        m4: m4 / n,
    }
}

fn std_normal() -> Normal {
    Normal::standard()
}

fn two_sided_p(z: f64) -> f64 {
    (2.0 * std_normal().sf(z.abs())).clamp(0.0, 1.0)
}

/// D'Agostino's Z for sample skewness `b1` (biased) at sample size `n`.
pub fn skew_z(b1: f64, n: usize) -> f64 {
    let n = n as f64;
    let y = b1 * ((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0))).sqrt();
    let beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0)
        / ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    let w2 = -1.0 + (2.0 * (beta2 - 1.0)).sqrt();
    let delta = 1.0 / (0.5 * w2.ln()).sqrt();
    let alpha = (2.0 / (w2 - 1.0)).sqrt();
    let ya = y / alpha;
    delta * (ya + (ya * ya + 1.0).sqrt()).ln()
}

/// Anscombe-Glynn Z for the (non-excess) sample kurtosis `b2` at sample size `n`.
pub fn kurtosis_z(b2: f64, n: usize) -> f64 {
    let n = n as f64;
    let e = 3.0 * (n - 1.0) / (n + 1.0);
    let var_b2 = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0).powi(2) * (n + 3.0) * (n + 5.0));
    let x = (b2 - e) / var_b2.sqrt();
    let sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0))
        * (6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0))).sqrt();
    let a = 6.0
        + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + (1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)).sqrt());
    let term1 = 1.0 - 2.0 / (9.0 * a);
    let denom = 1.0 + x * (2.0 / (a - 4.0)).sqrt();
    let term2 = denom.signum() * ((1.0 - 2.0 / a) / denom.abs()).cbrt();
    (term1 - term2) / (2.0 / (9.0 * a)).sqrt()
}

pub fn moments(returns: &ReturnSeries) -> Result<MomentReport> {
    moments_of(&returns.values)
}

pub fn moments_of(x: &[f64]) -> Result<MomentReport> {
    let n = x.len();
    if n < MIN_MOMENT_SAMPLE {
        return Err(LrdError::TooShort {
            needed: MIN_MOMENT_SAMPLE,
            got: n,
        });
    }
    let cm = central_moments(x);
    // Relative to the mean's magnitude, so a constant offset still counts as constant.
    let scale = cm.mean.abs().max(f64::MIN_POSITIVE);
    if cm.m2 <= (scale * f64::EPSILON).powi(2) * 16.0 {
        return Err(LrdError::ZeroVariance);
    }
    let skewness = cm.m3 / cm.m2.powf(1.5);
    let kurtosis = cm.m4 / (cm.m2 * cm.m2);
    let z_skew = skew_z(skewness, n);
    let z_kurt = kurtosis_z(kurtosis, n);
    let k2 = z_skew * z_skew + z_kurt * z_kurt;
    Ok(MomentReport {
        n,
        mean: cm.mean,
        std: cm.m2.sqrt(),
        skewness,
        excess_kurtosis: kurtosis - 3.0,
        z_skew,
        z_kurt,
        k2,
        p_skew: two_sided_p(z_skew),
        p_kurt: two_sided_p(z_kurt),
        // chi-square(2) survival function
        p_omnibus: (-0.5 * k2).exp().clamp(0.0, 1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Normal density with the sample mean and (1/n) standard deviation at bin centres.
    pub normal_density: Vec<f64>,
}

pub fn histogram(x: &[f64], bins: usize) -> Result<Histogram> {
    if x.is_empty() || bins == 0 {
        return Err(LrdError::InvalidArgument(
            "histogram needs data and at least one bin".into(),
        ));
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0usize; bins];
    for &v in x {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let cm = central_moments(x);
    let sd = cm.m2.sqrt();
    let normal_density = edges
        .windows(2)
        .map(|e| {
            let c = 0.5 * (e[0] + e[1]);
            if sd > 0.0 {
                let z = (c - cm.mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            } else {
                0.0
            }
        })
        .collect();
    Ok(Histogram {
        edges,
        counts,
        normal_density,
    })
}

/// `(theoretical, sample)` pairs: sorted sample against quantiles of the fitted
/// normal at plotting positions `(i + 0.5) / n`.
pub fn qq_pairs(x: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cm = central_moments(x);
    let sd = cm.m2.sqrt();
    let n = sorted.len() as f64;
    let norm = std_normal();
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let q = norm.inverse_cdf((i as f64 + 0.5) / n);
            (cm.mean + sd * q, v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Values from scipy.stats.skewtest / kurtosistest / normaltest on
    // x = [i^2 mod 17 for i in 0..40] (scipy 1.x).
    fn scipy_sample() -> Vec<f64> {
        (0..40).map(|i: u64| ((i * i) % 17) as f64).collect()
    }

    #[test]
    fn rejects_short_and_constant_series() {
        assert!(matches!(
            moments_of(&[1.0; 10]),
            Err(LrdError::TooShort { .. })
        ));
        assert!(matches!(
            moments_of(&[3.5; 30]),
            Err(LrdError::ZeroVariance)
        ));
    }

    #[test]
    fn symmetric_sample_has_zero_skew() {
        let x: Vec<f64> = (-20..=20).map(|i| i as f64).collect();
        let r = moments_of(&x).unwrap();
        assert!(r.skewness.abs() < 1e-12);
        assert!((r.p_skew - 1.0).abs() < 1e-9);
        // Uniform grid: excess kurtosis close to -1.2
        assert!((r.excess_kurtosis + 1.2).abs() < 0.01);
    }

    #[test]
    fn matches_scipy_reference_values() {
        let r = moments_of(&scipy_sample()).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-12);
        assert!(close(r.skewness, 0.13297116694114172));
        assert!(close(r.excess_kurtosis, -1.4404742107368107));
        assert!(close(r.z_skew, 0.3893813340867852));
        assert!(close(r.p_skew, 0.6969940779237662));
        assert!(close(r.z_kurt, -4.613435928284865));
        assert!(close(r.p_kurt, 3.960663946449186e-06));
        assert!(close(r.k2, 21.435408887724837));
        assert!(close(r.p_omnibus, 2.2149304890984402e-05));
    }

    #[test]
    fn omnibus_is_sum_of_squares() {
        let r = moments_of(&scipy_sample()).unwrap();
        assert_eq!(r.k2, r.z_skew * r.z_skew + r.z_kurt * r.z_kurt);
    }

    #[test]
    fn histogram_counts_every_point() {
        let x = scipy_sample();
        let h = histogram(&x, 7).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), x.len());
        assert_eq!(h.edges.len(), 8);
    }

    #[test]
    fn qq_pairs_are_sorted() {
        let q = qq_pairs(&scipy_sample());
        assert!(q.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
    }
}
