//! Shared machinery for the Hurst estimators: the dyadic scale schedule and
//! the log-log OLS fit with Student-t slope inference.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{LrdError, Result};

/// Smallest series length that yields at least three scales.
pub const MIN_SERIES_LEN: usize = 16;

/// Descending block lengths `floor(N / 2^p)` for `p = 0..=floor(log2(N/4))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub n_values: Vec<usize>,
}

impl ScaleSchedule {
    pub fn len(&self) -> usize {
        self.n_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_values.is_empty()
    }
}

pub fn make_schedule(n_total: usize) -> Result<ScaleSchedule> {
    if n_total < MIN_SERIES_LEN {
        return Err(LrdError::TooShort {
            needed: MIN_SERIES_LEN,
            got: n_total,
        });
    }
    let mut n_values = Vec::new();
    // largest p with 4 * 2^p <= N
    let mut p = 0u32;
    while 4usize << p <= n_total {
        let n = n_total >> p;
        if n_values.last() != Some(&n) {
            n_values.push(n);
        }
        p += 1;
    }
    Ok(ScaleSchedule { n_values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalePoint {
    pub ln_n: f64,
    pub ln_stat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFit {
    pub points: Vec<ScalePoint>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_se: f64,
    pub dof: usize,
}

impl ScaleFit {
    pub fn fitted(&self, ln_n: f64) -> f64 {
        self.intercept + self.slope * ln_n
    }

    /// Plot data with columns `ln_n,ln_stat,fitted`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ln_n,ln_stat,fitted\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{}\n",
                p.ln_n,
                p.ln_stat,
                self.fitted(p.ln_n)
            ));
        }
        out
    }
}

/// Ordinary least squares of `ln_stat` on `ln_n`.
pub fn fit_loglog(points: &[ScalePoint]) -> Result<ScaleFit> {
    if points.len() < 3 {
        return Err(LrdError::TooShort {
            needed: 3,
            got: points.len(),
        });
    }
    let k = points.len() as f64;
    let mean_x = points.iter().map(|p| p.ln_n).sum::<f64>() / k;
    let mean_y = points.iter().map(|p| p.ln_stat).sum::<f64>() / k;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let dx = p.ln_n - mean_x;
        let dy = p.ln_stat - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(LrdError::InvalidArgument(
            "all ln n values are identical".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = points
        .iter()
        .map(|p| {
            let e = p.ln_stat - (intercept + slope * p.ln_n);
            e * e
        })
        .sum();
    let dof = points.len() - 2;
    let r_squared = if syy > 0.0 {
        (1.0 - ssr / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let slope_se = (ssr / dof as f64 / sxx).sqrt();
    Ok(ScaleFit {
        points: points.to_vec(),
        slope,
        intercept,
        r_squared,
        slope_se,
        dof,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HurstMethod {
    Rs,
    Dfa,
}

impl std::str::FromStr for HurstMethod {
    type Err = LrdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rs" | "r/s" => Ok(HurstMethod::Rs),
            "dfa" => Ok(HurstMethod::Dfa),
            other => Err(LrdError::InvalidArgument(format!(
                "unknown method '{other}' (expected rs or dfa)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstEstimate {
    pub h: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// One-sided, H0: H = 0.5 against Ha: H > 0.5.
    pub p_value: f64,
    pub r_squared: f64,
    pub method: HurstMethod,
}

/// An estimate together with the regression it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstAnalysis {
    pub estimate: HurstEstimate,
    pub fit: ScaleFit,
}

/// t-test of the slope against 0.5 and a 95% two-sided interval, both with
/// `fit.dof` degrees of freedom.
pub fn infer_hurst(fit: &ScaleFit, method: HurstMethod) -> Result<HurstEstimate> {
    if fit.dof < 1 {
        return Err(LrdError::InvalidArgument(
            "slope inference needs at least one residual degree of freedom".into(),
        ));
    }
    let t_dist = StudentsT::new(0.0, 1.0, fit.dof as f64)
        .map_err(|e| LrdError::Numerical(format!("t distribution: {e}")))?;
    let excess = fit.slope - 0.5;
    let p_value = if fit.slope_se > 0.0 {
        t_dist.sf(excess / fit.slope_se)
    } else if excess > 0.0 {
        0.0
    } else if excess < 0.0 {
        1.0
    } else {
        0.5
    };
    let half_width = t_dist.inverse_cdf(0.975) * fit.slope_se;
    Ok(HurstEstimate {
        h: fit.slope,
        ci_low: fit.slope - half_width,
        ci_high: fit.slope + half_width,
        p_value: p_value.clamp(0.0, 1.0),
        r_squared: fit.r_squared,
        method,
    })
}

/// Build points from `(n, statistic)` pairs, merging duplicate scales.
pub(crate) fn points_from_scales(scale_stats: &[(usize, f64)]) -> Vec<ScalePoint> {
    let mut points: Vec<ScalePoint> = Vec::with_capacity(scale_stats.len());
    let mut last_n = None;
    for &(n, stat) in scale_stats {
        if last_n == Some(n) {
            continue;
        }
        last_n = Some(n);
        points.push(ScalePoint {
            ln_n: (n as f64).ln(),
            ln_stat: stat.ln(),
        });
    }
    points
}
