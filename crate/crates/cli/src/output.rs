use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lrdlab::arfima_figarch::{FitResult, PARAM_NAMES};
use lrdlab::diagnostics::{Histogram, MomentReport};
use lrdlab::HurstEstimate;
use serde::Serialize;

use crate::Format;

pub struct Output {
    dir: PathBuf,
    pub format: Format,
}

impl Output {
    pub fn new(dir: PathBuf, format: Format) -> Result<Output> {
        fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Output { dir, format })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<String> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write(name, &text)?;
        Ok(text)
    }

    /// Print the JSON summary or the CSV row, depending on `--format`.
    pub fn print(&self, json: &str, row: &Row) {
        match self.format {
            Format::Json => print!("{json}"),
            Format::Csv => print!("{}", row.to_csv()),
        }
    }
}

/// A single-row table assembled column by column.
#[derive(Default)]
pub struct Row {
    cols: Vec<(String, String)>,
}

fn num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Row {
    pub fn text(mut self, name: &str, value: impl Into<String>) -> Self {
        self.cols.push((name.to_string(), value.into()));
        self
    }

    pub fn number(mut self, name: &str, value: f64) -> Self {
        self.cols.push((name.to_string(), num(value)));
        self
    }

    fn prefixed(prefix: &str, name: &str) -> String {
        if prefix.is_empty() {
            name.to_string()
        } else {
            format!("{prefix}_{name}")
        }
    }

    pub fn moments(mut self, prefix: &str, m: &MomentReport) -> Self {
        self.cols
            .push((Self::prefixed(prefix, "n"), m.n.to_string()));
        for (name, v) in [
            ("mean", m.mean),
            ("std", m.std),
            ("skewness", m.skewness),
            ("excess_kurtosis", m.excess_kurtosis),
            ("z_skew", m.z_skew),
            ("p_skew", m.p_skew),
            ("z_kurt", m.z_kurt),
            ("p_kurt", m.p_kurt),
            ("k2", m.k2),
            ("p_omnibus", m.p_omnibus),
        ] {
            self.cols.push((Self::prefixed(prefix, name), num(v)));
        }
        self
    }

    pub fn hurst(mut self, prefix: &str, h: &HurstEstimate) -> Self {
        for (name, v) in [
            ("h", h.h),
            ("ci_low", h.ci_low),
            ("ci_high", h.ci_high),
            ("p_value", h.p_value),
            ("r_squared", h.r_squared),
        ] {
            self.cols.push((Self::prefixed(prefix, name), num(v)));
        }
        self
    }

    pub fn fit(mut self, prefix: &str, f: &FitResult) -> Self {
        let est = f.params.to_array();
        let se = f.standard_errors.map(|s| s.to_array());
        for (i, name) in PARAM_NAMES.iter().enumerate() {
            self.cols.push((Self::prefixed(prefix, name), num(est[i])));
            self.cols.push((
                Self::prefixed(prefix, &format!("{name}_se")),
                opt(se.map(|s| s[i])),
            ));
        }
        let pairs = [
            ("p_dm", f.p_dm),
            ("ci_dm_low", f.ci_dm.map(|c| c.low)),
            ("ci_dm_high", f.ci_dm.map(|c| c.high)),
            ("p_dv", f.p_dv),
            ("ci_dv_low", f.ci_dv.map(|c| c.low)),
            ("ci_dv_high", f.ci_dv.map(|c| c.high)),
            ("log_likelihood", Some(f.log_likelihood)),
        ];
        for (name, v) in pairs {
            self.cols.push((Self::prefixed(prefix, name), opt(v)));
        }
        self.cols
            .push((Self::prefixed(prefix, "converged"), f.converged.to_string()));
        self
    }

    pub fn to_csv(&self) -> String {
        let header: Vec<String> = self.cols.iter().map(|(k, _)| quote(k)).collect();
        let values: Vec<String> = self.cols.iter().map(|(_, v)| quote(v)).collect();
        format!("{}\n{}\n", header.join(","), values.join(","))
    }
}

pub fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::from("bin_low,bin_high,count,normal_density\n");
    for i in 0..h.counts.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            h.edges[i],
            h.edges[i + 1],
            h.counts[i],
            h.normal_density[i]
        ));
    }
    out
}

pub fn qq_csv(pairs: &[(f64, f64)]) -> String {
    let mut out = String::from("theoretical,sample\n");
    for (t, s) in pairs {
        out.push_str(&format!("{t},{s}\n"));
    }
    out
}

pub fn trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("iteration,objective\n");
    for (i, v) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("series")
        .to_string()
}
