use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StudentT};

use super::kernel::fracdiff_weights;
use super::likelihood::{causal_filter, dot};
use super::params::{arch_weights, ArfimaFigarchParams};
use crate::error::{LrdError, Result};
use crate::ingest::{Frequency, ReturnSeries};

/// Unit-variance Student-t draws, `t_nu * sqrt((nu - 2) / nu)`.
pub fn standardized_t(nu: f64, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let dist = StudentT::new(nu)
        .map_err(|e| LrdError::InvalidParameters(format!("student-t with nu = {nu}: {e}")))?;
    let scale = ((nu - 2.0) / nu).sqrt();
    Ok((0..n).map(|_| dist.sample(rng) * scale).collect())
}

/// Simulate `n` returns after discarding `burn_in` warm-up draws.
///
/// The variance follows the truncated ARCH(inf) recursion; the pre-sample
/// `eps^2` history is set to the stationary level of the truncated model.
/// The mean applies `(1 + theta L)`, then `(1 - phi L)^-1`, then the
/// truncated `(1 - L)^-d_m` filter, and adds `mu`.
pub fn simulate(
    params: &ArfimaFigarchParams,
    n: usize,
    burn_in: usize,
    seed: u64,
    lag: usize,
) -> Result<ReturnSeries> {
    if n == 0 {
        return Err(LrdError::InvalidArgument("n must be at least 1".into()));
    }
    if burn_in < lag {
        return Err(LrdError::InvalidArgument(format!(
            "burn-in {burn_in} must be at least the truncation lag {lag}"
        )));
    }
    params.validate(lag)?;

    let total = n + burn_in;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = standardized_t(params.nu, total, &mut rng)?;

    let lambda = arch_weights(params.alpha, params.beta, params.d_v, lag);
    let lambda_sum: f64 = lambda.iter().sum();
    let intercept = params.variance_intercept();
    let level = if lambda_sum < 1.0 {
        intercept / (1.0 - lambda_sum)
    } else {
        intercept
    };

    // e2 holds `lag` pre-sample values followed by the simulated eps^2.
    let rev: Vec<f64> = lambda[1..].iter().rev().copied().collect();
    let mut e2 = vec![level; lag];
    e2.reserve(total);
    let mut eps = Vec::with_capacity(total);
    for (t, &zt) in z.iter().enumerate() {
        let window = &e2[e2.len() - lag..];
        let s2 = intercept + dot(&rev, window);
        if !(s2.is_finite() && s2 > 0.0) {
            return Err(LrdError::NonFiniteState { t });
        }
        let e = s2.sqrt() * zt;
        eps.push(e);
        e2.push(e * e);
    }

    let mut arma = Vec::with_capacity(total);
    let (mut a_prev, mut e_prev) = (0.0, 0.0);
    for &e in &eps {
        let a = params.phi * a_prev + e + params.theta * e_prev;
        arma.push(a);
        a_prev = a;
        e_prev = e;
    }
    let psi = fracdiff_weights(-params.d_m, lag).weights;
    let x = causal_filter(&psi, &arma);

    let values: Vec<f64> = x[burn_in..].iter().map(|v| params.mu + v).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(LrdError::NonFiniteState { t: burn_in + i });
    }
    Ok(ReturnSeries::new(
        values,
        Frequency::Daily,
        "arfima-figarch",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn white_noise() -> ArfimaFigarchParams {
        ArfimaFigarchParams {
            mu: 0.3,
            phi: 0.0,
            theta: 0.0,
            d_m: 0.0,
            omega: 2.0,
            alpha: 0.0,
            beta: 0.0,
            d_v: 0.0,
            nu: 200.0,
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let p = ArfimaFigarchParams {
            d_m: 0.2,
            d_v: 0.4,
            alpha: 0.2,
            beta: 0.5,
            omega: 1e-6,
            nu: 6.0,
            ..white_noise()
        };
        let a = simulate(&p, 500, 200, 7, 200).unwrap();
        let b = simulate(&p, 500, 200, 7, 200).unwrap();
        assert_eq!(a.values, b.values);
        let c = simulate(&p, 500, 200, 8, 200).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn degenerate_model_is_white_noise() {
        let n = 100_000;
        let r = simulate(&white_noise(), n, 10, 11, 10).unwrap();
        let mean = r.values.iter().sum::<f64>() / n as f64;
        let var = r.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        // se(mean) = sqrt(2/1e5) ~ 0.0045; se(var) ~ 2 * sqrt(2/1e5) ~ 0.009
        assert!((mean - 0.3).abs() < 0.02, "mean {mean}");
        assert!((var - 2.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn standardized_draws_have_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = standardized_t(6.0, 1_000_000, &mut rng).unwrap();
        let var = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
        assert!((var - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn rejects_short_burn_in_and_bad_params() {
        assert!(simulate(&white_noise(), 10, 5, 1, 10).is_err());
        let mut p = white_noise();
        p.nu = 1.5;
        assert!(simulate(&p, 10, 10, 1, 10).is_err());
    }
}
