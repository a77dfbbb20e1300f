//! Long-range dependence laboratory.
//!
//! Estimators for persistence in financial return series: rescaled-range
//! analysis ([`rs`]), detrended fluctuation analysis ([`dfa`]) and an
//! ARFIMA(1,d,1)-FIGARCH(1,d,1) model with Student-t innovations
//! ([`arfima_figarch`]). [`synth_eval`] runs the same battery on paths from a
//! generator and picks the path closest to an empirical series.

pub mod arfima_figarch;
pub mod dfa;
pub mod diagnostics;
pub mod error;
pub mod ingest;
pub mod rs;
pub mod scalefit;
pub mod synth_eval;

pub use error::{LrdError, Result};
pub use ingest::{Frequency, Observation, PriceSeries, ReturnSeries};
pub use scalefit::{HurstAnalysis, HurstEstimate, HurstMethod, ScaleFit};
