//! Rescaled-range (R/S) analysis.

use rayon::prelude::*;

use crate::error::{LrdError, Result};
use crate::ingest::ReturnSeries;
use crate::scalefit::{
    fit_loglog, infer_hurst, make_schedule, points_from_scales, HurstAnalysis, HurstMethod,
    MIN_SERIES_LEN,
};

/// `R/S` of one block: range of the cumulative mean deviations over the
/// population standard deviation. Errors on a constant block.
pub fn rs_statistic(block: &[f64]) -> Result<f64> {
    if block.len() < 2 {
        return Err(LrdError::TooShort {
            needed: 2,
            got: block.len(),
        });
    }
    let n = block.len() as f64;
    let mean = block.iter().sum::<f64>() / n;
    let mut cum = 0.0;
    let mut ss = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in block {
        let d = x - mean;
        cum += d;
        ss += d * d;
        lo = lo.min(cum);
        hi = hi.max(cum);
    }
    let s = (ss / n).sqrt();
    if s == 0.0 || !s.is_finite() {
        return Err(LrdError::ZeroVariance);
    }
    Ok((hi - lo) / s)
}

/// Mean of block R/S over the non-constant blocks of length `n`, or `None`
/// when every block is constant.
fn mean_rs_at_scale(x: &[f64], n: usize) -> Option<f64> {
    let (sum, count) = x
        .chunks_exact(n)
        .filter_map(|b| rs_statistic(b).ok())
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

pub fn rs_analysis(returns: &ReturnSeries) -> Result<HurstAnalysis> {
    rs_analysis_of(&returns.values)
}

pub fn rs_analysis_of(x: &[f64]) -> Result<HurstAnalysis> {
    if x.len() < MIN_SERIES_LEN {
        return Err(LrdError::TooShort {
            needed: MIN_SERIES_LEN,
            got: x.len(),
        });
    }
    let schedule = make_schedule(x.len())?;
    let per_scale: Vec<(usize, Option<f64>)> = schedule
        .n_values
        .par_iter()
        .map(|&n| (n, mean_rs_at_scale(x, n)))
        .collect();
    let mut kept = Vec::with_capacity(per_scale.len());
    for (n, stat) in per_scale {
        match stat {
            Some(v) if v > 0.0 => kept.push((n, v)),
            _ => log::warn!("R/S: dropping scale n = {n} (all blocks constant or zero range)"),
        }
    }
    if kept.len() < 3 {
        return Err(LrdError::Numerical(format!(
            "R/S: only {} usable scales remain",
            kept.len()
        )));
    }
    let fit = fit_loglog(&points_from_scales(&kept))?;
    let estimate = infer_hurst(&fit, HurstMethod::Rs)?;
    Ok(HurstAnalysis { estimate, fit })
}
