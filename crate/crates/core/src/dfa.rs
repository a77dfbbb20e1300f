//! Detrended fluctuation analysis (order 1).
//!
//! The mean-adjusted cumulative profile is cut into non-overlapping blocks
//! from the left, a least-squares line is removed from each block, and the
//! per-block RMS residuals are averaged (simple mean) into `F(n)`.

use rayon::prelude::*;

use crate::error::{LrdError, Result};
use crate::ingest::ReturnSeries;
use crate::scalefit::{
    fit_loglog, infer_hurst, make_schedule, points_from_scales, HurstAnalysis, HurstMethod,
    MIN_SERIES_LEN,
};

/// Linear detrending needs residual degrees of freedom.
pub const MIN_DFA_SCALE: usize = 4;

pub fn profile(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(LrdError::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut acc = 0.0;
    Ok(x.iter()
        .map(|&v| {
            acc += v - mean;
            acc
        })
        .collect())
}

/// Residuals of an OLS line fitted on local index `1..=n`.
pub fn linear_detrend(segment: &[f64]) -> Vec<f64> {
    let n = segment.len() as f64;
    // local index i = 1..n has mean (n+1)/2 and sum of squared deviations n(n^2-1)/12
    let i_mean = (n + 1.0) / 2.0;
    let sxx = n * (n * n - 1.0) / 12.0;
    let y_mean = segment.iter().sum::<f64>() / n;
    let sxy: f64 = segment
        .iter()
        .enumerate()
        .map(|(k, &y)| (k as f64 + 1.0 - i_mean) * (y - y_mean))
        .sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    segment
        .iter()
        .enumerate()
        .map(|(k, &y)| (y - y_mean) - slope * (k as f64 + 1.0 - i_mean))
        .collect()
}

/// Detrended RMS fluctuation `F_v(n)` of one profile segment.
pub fn block_fluctuation(segment: &[f64]) -> f64 {
    let ss: f64 = linear_detrend(segment).iter().map(|r| r * r).sum();
    (ss / segment.len() as f64).sqrt()
}

pub fn dfa_analysis(returns: &ReturnSeries) -> Result<HurstAnalysis> {
    dfa_analysis_of(&returns.values)
}

pub fn dfa_analysis_of(x: &[f64]) -> Result<HurstAnalysis> {
    if x.len() < MIN_SERIES_LEN {
        return Err(LrdError::TooShort {
            needed: MIN_SERIES_LEN,
            got: x.len(),
        });
    }
    let y = profile(x)?;
    let scales: Vec<usize> = make_schedule(x.len())?
        .n_values
        .into_iter()
        .filter(|&n| n >= MIN_DFA_SCALE)
        .collect();
    let per_scale: Vec<(usize, f64)> = scales
        .par_iter()
        .map(|&n| {
            let blocks: Vec<f64> = y.chunks_exact(n).map(block_fluctuation).collect();
            (n, blocks.iter().sum::<f64>() / blocks.len() as f64)
        })
        .collect();
    let mut kept = Vec::with_capacity(per_scale.len());
    for (n, f) in per_scale {
        if f > 0.0 && f.is_finite() {
            kept.push((n, f));
        } else {
            log::warn!("DFA: dropping scale n = {n} (zero fluctuation)");
        }
    }
    if kept.len() < 3 {
        return Err(LrdError::Numerical(format!(
            "DFA: only {} usable scales remain",
            kept.len()
        )));
    }
    let fit = fit_loglog(&points_from_scales(&kept))?;
    let estimate = infer_hurst(&fit, HurstMethod::Dfa)?;
    Ok(HurstAnalysis { estimate, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_examples() {
        assert_eq!(
            profile(&[1.0, -1.0, 1.0, -1.0]).unwrap(),
            vec![1.0, 0.0, 1.0, 0.0]
        );
        assert!(profile(&[3.0; 6]).unwrap().iter().all(|&v| v == 0.0));
        let p = profile(&[0.3, -1.2, 4.5, 0.01, 2.0]).unwrap();
        assert!(p.last().unwrap().abs() < 1e-12);
    }

    #[test]
    fn linear_segment_has_no_fluctuation() {
        assert!(block_fluctuation(&[2.0, 4.0, 6.0, 8.0]) < 1e-14);
    }

    #[test]
    fn zigzag_segment() {
        // line 0.2 i + 0 on i = 1..4; residuals (-0.2, 0.6, -0.6, 0.2)
        let f = block_fluctuation(&[0.0, 1.0, 0.0, 1.0]);
        assert!((f - 0.2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn residuals_are_orthogonal_to_regressors() {
        let seg: Vec<f64> = (0..50).map(|i| ((i * 7919) % 101) as f64 / 13.0).collect();
        let r = linear_detrend(&seg);
        let s0: f64 = r.iter().sum();
        let s1: f64 = r
            .iter()
            .enumerate()
            .map(|(i, v)| v * (i as f64 + 1.0))
            .sum();
        assert!(s0.abs() < 1e-9 && s1.abs() < 1e-9);
    }

    #[test]
    fn detrending_never_exceeds_centered_rms() {
        let seg: Vec<f64> = (0..32).map(|i| ((i * 37) % 11) as f64 * 0.3).collect();
        let m = seg.iter().sum::<f64>() / 32.0;
        let rms = (seg.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 32.0).sqrt();
        assert!(block_fluctuation(&seg) <= rms + 1e-12);
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            dfa_analysis_of(&[0.0; 15]),
            Err(LrdError::TooShort { .. })
        ));
    }

    #[test]
    fn all_linear_profile_fails() {
        // constant returns give a zero profile
        assert!(dfa_analysis_of(&[0.01; 64]).is_err());
    }
}
