//! Price series ingestion: CSV loading, calendar downsampling and log-returns.
//!
//! The input format is a UTF-8 CSV with a `date,close` header, ISO-8601 dates
//! and `.` as decimal separator. Rows may appear in any order; they are sorted
//! on load. Missing trading days are simply absent and never interpolated.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{LrdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Daily,
    Weekly,
    Monthly,
}

impl Frequency {
    pub fn as_str(self) -> &'static str {
        match self {
            Frequency::Daily => "daily",
            Frequency::Weekly => "weekly",
            Frequency::Monthly => "monthly",
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Frequency {
    type Err = LrdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "daily" | "d" => Ok(Frequency::Daily),
            "weekly" | "w" => Ok(Frequency::Weekly),
            "monthly" | "m" => Ok(Frequency::Monthly),
            other => Err(LrdError::InvalidArgument(format!(
                "unknown frequency '{other}' (expected daily, weekly or monthly)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub date: NaiveDate,
    pub close: f64,
}

/// Closing prices at a declared frequency.
///
/// Construction goes through [`PriceSeries::new`], which enforces strictly
/// increasing dates, positive finite closes and date spacing consistent with
/// the frequency tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    observations: Vec<Observation>,
    frequency: Frequency,
    label: String,
}

impl PriceSeries {
    pub fn new(
        observations: Vec<Observation>,
        frequency: Frequency,
        label: impl Into<String>,
    ) -> Result<Self> {
        for (i, obs) in observations.iter().enumerate() {
            if !(obs.close.is_finite() && obs.close > 0.0) {
                return Err(LrdError::NonPositivePrice {
                    line: i + 1,
                    value: obs.close,
                });
            }
        }
        for pair in observations.windows(2) {
            let (a, b) = (pair[0].date, pair[1].date);
            if b == a {
                return Err(LrdError::DuplicateDate { date: a });
            }
            if b < a {
                return Err(LrdError::InvalidArgument(format!(
                    "dates not increasing: {a} followed by {b}"
                )));
            }
            match frequency {
                Frequency::Daily => {}
                Frequency::Weekly => {
                    if a.iso_week() == b.iso_week() {
                        return Err(LrdError::InvalidArgument(format!(
                            "weekly series has two observations in the week of {a}"
                        )));
                    }
                }
                Frequency::Monthly => {
                    if (a.year(), a.month()) == (b.year(), b.month()) {
                        return Err(LrdError::InvalidArgument(format!(
                            "monthly series has two observations in {}-{:02}",
                            a.year(),
                            a.month()
                        )));
                    }
                }
            }
        }
        Ok(PriceSeries {
            observations,
            frequency,
            label: label.into(),
        })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.close).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.observations.iter().map(|o| o.date).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let to_err = |e: csv::Error| LrdError::InvalidArgument(format!("csv write failed: {e}"));
        w.write_record(["date", "close"]).map_err(to_err)?;
        for obs in &self.observations {
            w.write_record([obs.date.to_string(), obs.close.to_string()])
                .map_err(to_err)?;
        }
        w.flush().map_err(|e| LrdError::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Log-returns `ln P_t - ln P_{t-1}` derived from a [`PriceSeries`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub values: Vec<f64>,
    pub frequency: Frequency,
    pub source_label: String,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>, frequency: Frequency, source_label: impl Into<String>) -> Self {
        ReturnSeries {
            values,
            frequency,
            source_label: source_label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One `return` column with a header line.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        let io = |e| LrdError::io("<returns writer>", e);
        writeln!(writer, "return").map_err(io)?;
        for v in &self.values {
            writeln!(writer, "{v}").map_err(io)?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(
        mut reader: R,
        frequency: Frequency,
        label: impl Into<String>,
    ) -> Result<Self> {
        let mut text = String::new();
        reader
            .read_to_string(&mut text)
            .map_err(|e| LrdError::io("<returns reader>", e))?;
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.eq_ignore_ascii_case("return")) {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| LrdError::Malformed {
                line: i + 1,
                message: format!("cannot parse return '{line}'"),
            })?;
            if !v.is_finite() {
                return Err(LrdError::Malformed {
                    line: i + 1,
                    message: "non-finite return".into(),
                });
            }
            values.push(v);
        }
        Ok(ReturnSeries::new(values, frequency, label))
    }
}

/// Load a daily `date,close` CSV file.
pub fn load_prices(path: impl AsRef<Path>, label: &str) -> Result<PriceSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| LrdError::io(path, e))?;
    let series = read_prices(file, label)?;
    log::info!("loaded {} rows from {}", series.len(), path.display());
    Ok(series)
}

/// Parse a daily `date,close` CSV from any reader. See [`load_prices`].
pub fn read_prices<R: Read>(reader: R, label: &str) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut rows: Vec<(usize, Observation)> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| LrdError::Malformed {
            line,
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != 2 {
            return Err(LrdError::Malformed {
                line,
                message: format!("expected 2 columns (date,close), found {}", record.len()),
            });
        }
        let (date_field, close_field) = (&record[0], &record[1]);
        if rows.is_empty() && idx == 0 {
            let looks_like_header = NaiveDate::parse_from_str(date_field, "%Y-%m-%d").is_err()
                && close_field.parse::<f64>().is_err();
            if looks_like_header {
                if date_field.eq_ignore_ascii_case("date")
                    && close_field.eq_ignore_ascii_case("close")
                {
                    continue;
                }
                return Err(LrdError::Malformed {
                    line,
                    message: format!(
                        "expected header 'date,close', found '{date_field},{close_field}'"
                    ),
                });
            }
            log::warn!("no 'date,close' header found; treating first row as data");
        }
        let date =
            NaiveDate::parse_from_str(date_field, "%Y-%m-%d").map_err(|e| LrdError::Malformed {
                line,
                message: format!("bad date '{date_field}': {e}"),
            })?;
        let close: f64 = close_field.parse().map_err(|_| LrdError::Malformed {
            line,
            message: format!("bad close '{close_field}'"),
        })?;
        if !(close.is_finite() && close > 0.0) {
            return Err(LrdError::NonPositivePrice { line, value: close });
        }
        rows.push((line, Observation { date, close }));
    }

    rows.sort_by_key(|(_, o)| o.date);
    if let Some(pair) = rows.windows(2).find(|p| p[0].1.date == p[1].1.date) {
        return Err(LrdError::DuplicateDate {
            date: pair[0].1.date,
        });
    }
    let observations = rows.into_iter().map(|(_, o)| o).collect();
    PriceSeries::new(observations, Frequency::Daily, label)
}

/// Keep the last trading day of every ISO week (Mon-Sun) or calendar month.
pub fn downsample(prices: &PriceSeries, target: Frequency) -> Result<PriceSeries> {
    if prices.frequency() != Frequency::Daily {
        return Err(LrdError::InvalidArgument(format!(
            "downsampling requires a daily series, got {}",
            prices.frequency()
        )));
    }
    if target == Frequency::Daily {
        return Err(LrdError::InvalidArgument(
            "downsampling target must be weekly or monthly".into(),
        ));
    }
    let period_key = |d: NaiveDate| -> (i32, u32) {
        match target {
            Frequency::Weekly => {
                let w = d.iso_week();
                (w.year(), w.week())
            }
            Frequency::Monthly => (d.year(), d.month()),
            Frequency::Daily => unreachable!(),
        }
    };

    let mut out: Vec<Observation> = Vec::new();
    let mut current: Option<((i32, u32), Observation)> = None;
    for obs in prices.observations() {
        let key = period_key(obs.date);
        match current {
            Some((k, _)) if k == key => current = Some((key, *obs)),
            Some((_, last)) => {
                out.push(last);
                current = Some((key, *obs));
            }
            None => current = Some((key, *obs)),
        }
    }
    if let Some((_, last)) = current {
        out.push(last);
    }
    PriceSeries::new(out, target, prices.label())
}

pub fn log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(LrdError::TooShort {
            needed: 2,
            got: prices.len(),
        });
    }
    let logs: Vec<f64> = prices.observations().iter().map(|o| o.close.ln()).collect();
    let values = logs.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(ReturnSeries::new(
        values,
        prices.frequency(),
        prices.label(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn daily(rows: &[(&str, f64)]) -> PriceSeries {
        let obs = rows
            .iter()
            .map(|(d, c)| Observation {
                date: day(d),
                close: *c,
            })
            .collect();
        PriceSeries::new(obs, Frequency::Daily, "test").unwrap()
    }

    #[test]
    fn two_row_file_is_valid() {
        let s = read_prices(
            "date,close\n2020-01-02,1.0\n2020-01-03,1.0\n".as_bytes(),
            "x",
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.frequency(), Frequency::Daily);
    }

    #[test]
    fn negative_close_is_rejected() {
        let err = read_prices(
            "date,close\n2020-01-02,1.0\n2020-01-03,-3\n".as_bytes(),
            "x",
        )
        .unwrap_err();
        assert!(err.to_string().contains("non-positive price"), "{err}");
        assert!(matches!(err, LrdError::NonPositivePrice { line: 3, .. }));
    }

    #[test]
    fn unparsable_row_reports_line() {
        let err = read_prices(
            "date,close\n2020-01-02,1.0\n2020-01-03,abc\n".as_bytes(),
            "x",
        )
        .unwrap_err();
        assert!(matches!(err, LrdError::Malformed { line: 3, .. }), "{err}");
    }

    #[test]
    fn duplicate_date_is_rejected() {
        let err = read_prices(
            "date,close\n2020-01-02,1.0\n2020-01-02,2.0\n".as_bytes(),
            "x",
        )
        .unwrap_err();
        assert!(matches!(err, LrdError::DuplicateDate { .. }));
    }

    #[test]
    fn unsorted_rows_are_sorted_and_headerless_accepted() {
        let s = read_prices("2020-01-03,2.0\n2020-01-02,1.0\n".as_bytes(), "x").unwrap();
        assert_eq!(s.closes(), vec![1.0, 2.0]);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_prices("day,price\n2020-01-02,1.0\n".as_bytes(), "x").is_err());
    }

    #[test]
    fn one_iso_week_collapses_to_friday() {
        // 2024-01-08 is a Monday.
        let s = daily(&[
            ("2024-01-08", 1.0),
            ("2024-01-09", 2.0),
            ("2024-01-10", 3.0),
            ("2024-01-11", 4.0),
            ("2024-01-12", 5.0),
        ]);
        let w = downsample(&s, Frequency::Weekly).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.observations()[0].close, 5.0);
        assert_eq!(w.observations()[0].date, day("2024-01-12"));
    }

    #[test]
    fn holiday_friday_uses_last_trading_day() {
        let s = daily(&[
            ("2024-03-25", 1.0),
            ("2024-03-28", 2.0), // Good Friday 2024-03-29 closed
            ("2024-04-01", 3.0),
            ("2024-04-05", 4.0),
        ]);
        let w = downsample(&s, Frequency::Weekly).unwrap();
        assert_eq!(w.dates(), vec![day("2024-03-28"), day("2024-04-05")]);
    }

    #[test]
    fn iso_week_spans_year_boundary() {
        // 2024-12-30 (Mon) belongs to ISO week 2025-W01 together with 2025-01-03.
        let s = daily(&[
            ("2024-12-27", 1.0),
            ("2024-12-30", 2.0),
            ("2025-01-03", 3.0),
        ]);
        let w = downsample(&s, Frequency::Weekly).unwrap();
        assert_eq!(w.closes(), vec![1.0, 3.0]);
        let m = downsample(&s, Frequency::Monthly).unwrap();
        assert_eq!(m.closes(), vec![2.0, 3.0]);
    }

    #[test]
    fn downsample_rejects_daily_target_and_non_daily_input() {
        let s = daily(&[("2024-01-08", 1.0), ("2024-02-09", 2.0)]);
        assert!(downsample(&s, Frequency::Daily).is_err());
        let m = downsample(&s, Frequency::Monthly).unwrap();
        assert!(downsample(&m, Frequency::Monthly).is_err());
    }

    #[test]
    fn log_returns_of_exponentials() {
        let e = std::f64::consts::E;
        let s = daily(&[
            ("2024-01-08", 1.0),
            ("2024-01-09", e),
            ("2024-01-10", e * e),
        ]);
        let r = log_returns(&s).unwrap();
        assert_eq!(r.len(), 2);
        for v in &r.values {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_prices_give_zero_returns() {
        let s = daily(&[
            ("2024-01-08", 5.0),
            ("2024-01-09", 5.0),
            ("2024-01-10", 5.0),
        ]);
        assert_eq!(log_returns(&s).unwrap().values, vec![0.0, 0.0]);
    }

    #[test]
    fn log_returns_needs_two_points() {
        let s = daily(&[("2024-01-08", 5.0)]);
        assert!(matches!(log_returns(&s), Err(LrdError::TooShort { .. })));
    }

    #[test]
    fn weekly_needs_distinct_weeks() {
        let obs = vec![
            Observation {
                date: day("2024-01-01"),
                close: 1.0,
            },
            Observation {
                date: day("2024-01-07"),
                close: 1.0,
            },
        ];
        assert!(PriceSeries::new(obs, Frequency::Weekly, "x").is_err());
        let obs = vec![
            Observation {
                date: day("2024-01-05"),
                close: 1.0,
            },
            Observation {
                date: day("2024-01-09"),
                close: 1.0,
            },
            Observation {
                date: day("2024-01-30"),
                close: 1.0,
            },
        ];
        assert!(PriceSeries::new(obs, Frequency::Weekly, "x").is_ok());
    }

    #[test]
    fn returns_csv_roundtrip() {
        let r = ReturnSeries::new(vec![0.1, -0.25, 1e-9], Frequency::Weekly, "x");
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let back = ReturnSeries::read_csv(buf.as_slice(), Frequency::Weekly, "x").unwrap();
        assert_eq!(back, r);
    }
}
