//! ARFIMA(1, d_m, 1)-FIGARCH(1, d_v, 1) with Student-t innovations:
//! fractional filters, likelihood, estimation and simulation.

mod fit;
mod kernel;
mod likelihood;
mod optimize;
mod params;
mod simulate;

pub use fit::{
    default_init, fit, standard_errors, FitOptions, FitResult, Interval, DEFAULT_TRUNCATION_LAG,
    MIN_FIT_LEN,
};
pub use kernel::{fracdiff_weights, hurst_from_d, FracDiffKernel};
pub use likelihood::{log_likelihood, log_likelihood_gradient};
pub use params::{arch_weights, ArfimaFigarchParams, NU_FLOOR, PARAM_COUNT, PARAM_NAMES};
pub use simulate::{simulate, standardized_t};
