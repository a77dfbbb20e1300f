//! Evaluation of generated log-price ensembles against an empirical series.
//!
//! Ensemble files hold one log-price path per row. CSV files may start with a
//! `# generator=<label> frequency=<f>` line; binary files start with the
//! magic `LMP1`, then little-endian `u32` path count and `u32` length,
//! followed by row-major little-endian `f64` values. The format is chosen by
//! extension: `.bin` and `.lmp` are binary, anything else is CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arfima_figarch::{fit, FitOptions, FitResult};
use crate::dfa::dfa_analysis_of;
use crate::diagnostics::{moments_of, MomentReport};
use crate::error::{LrdError, Result};
use crate::ingest::{log_returns, Frequency, PriceSeries, ReturnSeries};
use crate::rs::rs_analysis_of;
use crate::scalefit::{HurstEstimate, MIN_SERIES_LEN};

pub const BINARY_MAGIC: &[u8; 4] = b"LMP1";
pub const DEFAULT_SUPPLEMENTARY_PATHS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    paths: Vec<Vec<f64>>,
    frequency: Option<Frequency>,
    generator_label: String,
    length: usize,
}

impl PathEnsemble {
    /// Validates equal lengths (at least 16) and finite entries. Row and
    /// column indices in errors are zero-based.
    pub fn new(
        paths: Vec<Vec<f64>>,
        frequency: Option<Frequency>,
        generator_label: impl Into<String>,
    ) -> Result<Self> {
        let Some(first) = paths.first() else {
            return Err(LrdError::InvalidArgument(
                "ensemble contains no paths".into(),
            ));
        };
        let length = first.len();
        if length < MIN_SERIES_LEN {
            return Err(LrdError::TooShort {
                needed: MIN_SERIES_LEN,
                got: length,
            });
        }
        for (row, p) in paths.iter().enumerate() {
            if p.len() != length {
                return Err(LrdError::LengthMismatch {
                    expected: length,
                    got: p.len(),
                });
            }
            if let Some(column) = p.iter().position(|v| !v.is_finite()) {
                return Err(LrdError::NonFiniteEntry { row, column });
            }
        }
        Ok(PathEnsemble {
            paths,
            frequency,
            generator_label: generator_label.into(),
            length,
        })
    }

    pub fn paths(&self) -> &[Vec<f64>] {
        &self.paths
    }

    /// `None` when the file did not declare a frequency.
    pub fn frequency(&self) -> Option<Frequency> {
        self.frequency
    }

    pub fn generator_label(&self) -> &str {
        &self.generator_label
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn with_frequency(mut self, frequency: Frequency) -> Self {
        self.frequency = Some(frequency);
        self
    }

    /// Log-returns of one path.
    pub fn path_returns(&self, index: usize) -> ReturnSeries {
        let p = &self.paths[index];
        let values = p.windows(2).map(|w| w[1] - w[0]).collect();
        ReturnSeries::new(
            values,
            self.frequency.unwrap_or(Frequency::Daily),
            format!("{}#{index}", self.generator_label),
        )
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut label = String::from("unknown");
        let mut frequency = None;
        let mut paths = Vec::new();
        let mut expected = None;
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| LrdError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix('#') {
                if !paths.is_empty() {
                    return Err(LrdError::Malformed {
                        line: line_no,
                        message: "header after data rows".into(),
                    });
                }
                for token in header.split_whitespace() {
                    match token.split_once('=') {
                        Some(("generator", v)) => label = v.to_string(),
                        Some(("frequency", v)) => {
                            frequency =
                                Some(v.parse().map_err(|e: LrdError| LrdError::Malformed {
                                    line: line_no,
                                    message: e.to_string(),
                                })?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let row = paths.len();
            let mut path = Vec::with_capacity(expected.unwrap_or(0));
            for (column, field) in trimmed.split(',').enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| LrdError::Malformed {
                    line: line_no,
                    message: format!("cannot parse {:?} as a number", field.trim()),
                })?;
                if !v.is_finite() {
                    return Err(LrdError::NonFiniteEntry { row, column });
                }
                path.push(v);
            }
            match expected {
                None => expected = Some(path.len()),
                Some(n) if n != path.len() => {
                    return Err(LrdError::LengthMismatch {
                        expected: n,
                        got: path.len(),
                    })
                }
                _ => {}
            }
            paths.push(path);
        }
        PathEnsemble::new(paths, frequency, label)
    }

    pub fn read_binary<R: Read>(reader: R, label: impl Into<String>) -> Result<Self> {
        let mut reader = BufReader::new(reader);
        let bad = |message: &str| LrdError::Malformed {
            line: 0,
            message: message.into(),
        };
        let mut header = [0u8; 12];
        reader
            .read_exact(&mut header)
            .map_err(|_| bad("truncated binary header"))?;
        if &header[..4] != BINARY_MAGIC {
            return Err(bad("missing LMP1 magic"));
        }
        let count = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let length = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let mut paths = Vec::with_capacity(count);
        let mut buf = vec![0u8; length * 8];
        for row in 0..count {
            reader
                .read_exact(&mut buf)
                .map_err(|_| bad(&format!("truncated data in path {row}")))?;
            let path: Vec<f64> = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if let Some(column) = path.iter().position(|v| !v.is_finite()) {
                return Err(LrdError::NonFiniteEntry { row, column });
            }
            paths.push(path);
        }
        let mut extra = [0u8; 1];
        if reader.read(&mut extra).map_err(|_| bad("read failure"))? != 0 {
            return Err(bad("trailing bytes after declared paths"));
        }
        PathEnsemble::new(paths, None, label)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let io = |e| LrdError::io("<ensemble csv>", e);
        write!(w, "# generator={}", self.generator_label).map_err(io)?;
        if let Some(f) = self.frequency {
            write!(w, " frequency={f}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
        for p in &self.paths {
            let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn write_binary<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let io = |e| LrdError::io("<ensemble binary>", e);
        let count = u32::try_from(self.paths.len())
            .map_err(|_| LrdError::InvalidArgument("too many paths for binary format".into()))?;
        let length = u32::try_from(self.length)
            .map_err(|_| LrdError::InvalidArgument("paths too long for binary format".into()))?;
        w.write_all(BINARY_MAGIC).map_err(io)?;
        w.write_all(&count.to_le_bytes()).map_err(io)?;
        w.write_all(&length.to_le_bytes()).map_err(io)?;
        for p in &self.paths {
            for v in p {
                w.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }
}

fn is_binary_path(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("bin" | "lmp")
    )
}

pub fn load_ensemble(path: impl AsRef<Path>) -> Result<PathEnsemble> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| LrdError::io(path, e))?;
    if is_binary_path(path) {
        let label = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("unknown")
            .to_string();
        PathEnsemble::read_binary(file, label)
    } else {
        PathEnsemble::read_csv(file)
    }
}

pub fn save_ensemble(ensemble: &PathEnsemble, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| LrdError::io(path, e))?;
    if is_binary_path(path) {
        ensemble.write_binary(file)
    } else {
        ensemble.write_csv(file)
    }
}

/// Squared distance between real prices and a log path anchored at `p0`,
/// summed in index order.
fn anchored_squared_distance(real: &[f64], log_path: &[f64]) -> f64 {
    let p0 = real[0];
    let l0 = log_path[0];
    real.iter()
        .zip(log_path)
        .map(|(r, l)| {
            let diff = r - p0 * (l - l0).exp();
            diff * diff
        })
        .sum()
}

/// Index of the path closest to the empirical prices after anchoring each
/// path at the first empirical price, and its Euclidean distance. Ties go to
/// the lowest index.
pub fn select_nearest(ensemble: &PathEnsemble, empirical: &PriceSeries) -> Result<(usize, f64)> {
    if ensemble.length() != empirical.len() {
        return Err(LrdError::LengthMismatch {
            expected: empirical.len(),
            got: ensemble.length(),
        });
    }
    let real = empirical.closes();
    let distances: Vec<f64> = ensemble
        .paths()
        .par_iter()
        .map(|p| anchored_squared_distance(&real, p))
        .collect();
    let mut best = 0;
    for (i, d) in distances.iter().enumerate() {
        if d.total_cmp(&distances[best]).is_lt() {
            best = i;
        }
    }
    Ok((best, distances[best].sqrt()))
}

/// Result of one report section; failures are kept as messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok(T),
    Error(String),
}

impl<T> Outcome<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            Outcome::Ok(v) => Some(v),
            Outcome::Error(_) => None,
        }
    }
}

impl<T> From<Result<T>> for Outcome<T> {
    fn from(r: Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Error(e.to_string()),
        }
    }
}

/// Share of returns beyond the empirical 1st and 99th percentiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailMass {
    pub lower_threshold: f64,
    pub upper_threshold: f64,
    pub real_below: f64,
    pub real_above: f64,
    pub synthetic_below: f64,
    pub synthetic_above: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionComparison {
    pub real: MomentReport,
    pub synthetic: MomentReport,
    pub tails: TailMass,
}

/// Per-path DFA H over an evenly spaced subsample of the ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleHurstSummary {
    pub paths_used: usize,
    pub failures: usize,
    pub mean: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub generator_label: String,
    pub empirical_label: String,
    pub frequency: Frequency,
    pub ensemble_size: usize,
    pub path_length: usize,
    pub selected_index: usize,
    pub euclidean_distance: f64,
    pub distribution: Outcome<DistributionComparison>,
    pub rs: Outcome<HurstEstimate>,
    pub dfa: Outcome<HurstEstimate>,
    pub arfima_figarch: Outcome<FitResult>,
    pub ensemble_dfa: Outcome<EnsembleHurstSummary>,
}

impl EvaluationReport {
    /// True when some section failed or the model fit did not converge.
    pub fn has_numerical_failure(&self) -> bool {
        self.distribution.ok().is_none()
            || self.rs.ok().is_none()
            || self.dfa.ok().is_none()
            || self.arfima_figarch.ok().is_none_or(|f| !f.converged)
            || self.ensemble_dfa.ok().is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOptions {
    pub fit: FitOptions,
    pub supplementary_paths: usize,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        EvaluateOptions {
            fit: FitOptions::default(),
            supplementary_paths: DEFAULT_SUPPLEMENTARY_PATHS,
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn tail_mass(real: &[f64], synthetic: &[f64]) -> Result<TailMass> {
    if real.is_empty() || synthetic.is_empty() {
        return Err(LrdError::TooShort { needed: 1, got: 0 });
    }
    let s = sorted(real);
    let lower = quantile_sorted(&s, 0.01);
    let upper = quantile_sorted(&s, 0.99);
    let share = |x: &[f64], f: &dyn Fn(f64) -> bool| {
        x.iter().filter(|&&v| f(v)).count() as f64 / x.len() as f64
    };
    Ok(TailMass {
        lower_threshold: lower,
        upper_threshold: upper,
        real_below: share(real, &|v| v < lower),
        real_above: share(real, &|v| v > upper),
        synthetic_below: share(synthetic, &|v| v < lower),
        synthetic_above: share(synthetic, &|v| v > upper),
    })
}

/// Evenly spaced indices `floor(i * m / k)`.
fn subsample_indices(m: usize, k: usize) -> Vec<usize> {
    let k = k.min(m);
    (0..k).map(|i| i * m / k).collect()
}

pub fn ensemble_dfa_summary(
    ensemble: &PathEnsemble,
    max_paths: usize,
) -> Result<EnsembleHurstSummary> {
    let idx = subsample_indices(ensemble.len(), max_paths);
    if idx.is_empty() {
        return Err(LrdError::InvalidArgument("no paths selected".into()));
    }
    let hs: Vec<Option<f64>> = idx
        .par_iter()
        .map(|&i| {
            let r = ensemble.path_returns(i);
            dfa_analysis_of(&r.values).ok().map(|a| a.estimate.h)
        })
        .collect();
    let ok: Vec<f64> = hs.iter().flatten().copied().collect();
    if ok.is_empty() {
        return Err(LrdError::Numerical(
            "DFA failed on every sampled path".into(),
        ));
    }
    let s = sorted(&ok);
    Ok(EnsembleHurstSummary {
        paths_used: ok.len(),
        failures: hs.len() - ok.len(),
        mean: ok.iter().sum::<f64>() / ok.len() as f64,
        median: quantile_sorted(&s, 0.5),
        q05: quantile_sorted(&s, 0.05),
        q95: quantile_sorted(&s, 0.95),
    })
}

/// Select the nearest path and run the full battery on it.
///
/// Only incompatible inputs are errors; failures inside a section are
/// recorded in that section.
pub fn evaluate(
    ensemble: &PathEnsemble,
    empirical: &PriceSeries,
    options: &EvaluateOptions,
) -> Result<EvaluationReport> {
    if let Some(f) = ensemble.frequency() {
        if f != empirical.frequency() {
            return Err(LrdError::InvalidArgument(format!(
                "ensemble frequency {f} does not match empirical frequency {}",
                empirical.frequency()
            )));
        }
    }
    let (selected_index, euclidean_distance) = select_nearest(ensemble, empirical)?;
    let real = log_returns(empirical)?;
    let mut synthetic = ensemble.path_returns(selected_index);
    synthetic.frequency = empirical.frequency();

    let distribution = (|| {
        Ok(DistributionComparison {
            real: moments_of(&real.values)?,
            synthetic: moments_of(&synthetic.values)?,
            tails: tail_mass(&real.values, &synthetic.values)?,
        })
    })()
    .into();
    let rs = rs_analysis_of(&synthetic.values).map(|a| a.estimate).into();
    let dfa = dfa_analysis_of(&synthetic.values)
        .map(|a| a.estimate)
        .into();
    let arfima_figarch = fit(&synthetic, None, &options.fit).into();
    let ensemble_dfa = ensemble_dfa_summary(ensemble, options.supplementary_paths).into();

    Ok(EvaluationReport {
        generator_label: ensemble.generator_label().to_string(),
        empirical_label: empirical.label().to_string(),
        frequency: empirical.frequency(),
        ensemble_size: ensemble.len(),
        path_length: ensemble.length(),
        selected_index,
        euclidean_distance,
        distribution,
        rs,
        dfa,
        arfima_figarch,
        ensemble_dfa,
    })
}
