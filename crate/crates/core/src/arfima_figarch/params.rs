use serde::{Deserialize, Serialize};

use super::kernel::fracdiff_weights_with_derivative;
use crate::error::{LrdError, Result};

/// Lower bound on the Student-t degrees of freedom used by the optimizer.
pub const NU_FLOOR: f64 = 2.05;

pub const PARAM_COUNT: usize = 9;
pub const PARAM_NAMES: [&str; PARAM_COUNT] = [
    "mu", "phi", "theta", "d_m", "omega", "alpha", "beta", "d_v", "nu",
];

/// ARFIMA(1, d_m, 1)-FIGARCH(1, d_v, 1) parameters with Student-t innovations.
///
/// Mean: `(1 - phi L)(1 - L)^d_m (y_t - mu) = (1 + theta L) eps_t`.
/// Variance: `(1 - alpha L)(1 - L)^d_v eps_t^2 = omega + (1 - beta L) v_t`
/// with `v_t = eps_t^2 - sigma_t^2`, i.e. the ARCH(inf) form
/// `sigma_t^2 = omega / (1 - beta) + sum_k lambda_k eps_{t-k}^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArfimaFigarchParams {
    pub mu: f64,
    pub phi: f64,
    pub theta: f64,
    pub d_m: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub d_v: f64,
    pub nu: f64,
}

impl ArfimaFigarchParams {
    pub fn to_array(&self) -> [f64; PARAM_COUNT] {
        [
            self.mu, self.phi, self.theta, self.d_m, self.omega, self.alpha, self.beta, self.d_v,
            self.nu,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        ArfimaFigarchParams {
            mu: v[0],
            phi: v[1],
            theta: v[2],
            d_m: v[3],
            omega: v[4],
            alpha: v[5],
            beta: v[6],
            d_v: v[7],
            nu: v[8],
        }
    }

    /// Box constraints (not the lambda non-negativity check).
    pub fn check_domain(&self) -> Result<()> {
        let fail = |m: String| Err(LrdError::InvalidParameters(m));
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return fail("non-finite parameter".into());
        }
        if self.phi.abs() >= 1.0 {
            return fail(format!("|phi| = {} must be < 1", self.phi.abs()));
        }
        if self.theta.abs() >= 1.0 {
            return fail(format!("|theta| = {} must be < 1", self.theta.abs()));
        }
        if !(self.d_m > -0.5 && self.d_m < 0.5) {
            return fail(format!("d_m = {} outside (-0.5, 0.5)", self.d_m));
        }
        if self.omega <= 0.0 {
            return fail(format!("omega = {} must be > 0", self.omega));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return fail(format!("beta = {} outside [0, 1)", self.beta));
        }
        if !(0.0..1.0).contains(&self.d_v) {
            return fail(format!("d_v = {} outside [0, 1)", self.d_v));
        }
        if self.nu <= 2.0 {
            return fail(format!("nu = {} must be > 2", self.nu));
        }
        Ok(())
    }

    /// Domain check plus non-negative ARCH(inf) weights up to `lag`.
    pub fn validate(&self, lag: usize) -> Result<()> {
        self.check_domain()?;
        let w = arch_weights(self.alpha, self.beta, self.d_v, lag);
        if let Some(k) = (1..w.len()).find(|&k| w[k] < 0.0) {
            return Err(LrdError::InvalidParameters(format!(
                "negative ARCH weight lambda_{k} = {:e}",
                w[k]
            )));
        }
        Ok(())
    }

    pub fn variance_intercept(&self) -> f64 {
        self.omega / (1.0 - self.beta)
    }
}

/// `lambda_0 .. lambda_L` of `1 - (1 - alpha L)(1 - L)^d / (1 - beta L)`;
/// entry 0 is always zero.
pub fn arch_weights(alpha: f64, beta: f64, d: f64, lag: usize) -> Vec<f64> {
    arch_weights_with_derivatives(alpha, beta, d, lag).lambda
}

pub(crate) struct ArchWeights {
    pub lambda: Vec<f64>,
    pub d_alpha: Vec<f64>,
    pub d_beta: Vec<f64>,
    pub d_d: Vec<f64>,
}

pub(crate) fn arch_weights_with_derivatives(
    alpha: f64,
    beta: f64,
    d: f64,
    lag: usize,
) -> ArchWeights {
    let (pi, dpi) = fracdiff_weights_with_derivative(d, lag);
    let mut lambda = vec![0.0; lag + 1];
    let mut d_alpha = vec![0.0; lag + 1];
    let mut d_beta = vec![0.0; lag + 1];
    let mut d_d = vec![0.0; lag + 1];
    // c(L) = 1 - lambda(L) obeys c_k = beta c_{k-1} + pi_k - alpha pi_{k-1}, c_0 = 1
    let mut prev = -1.0;
    let (mut prev_a, mut prev_b, mut prev_d) = (0.0, 0.0, 0.0);
    for k in 1..=lag {
        let l = beta * prev - pi[k] + alpha * pi[k - 1];
        let la = beta * prev_a + pi[k - 1];
        let lb = prev + beta * prev_b;
        let ld = beta * prev_d - dpi[k] + alpha * dpi[k - 1];
        lambda[k] = l;
        d_alpha[k] = la;
        d_beta[k] = lb;
        d_d[k] = ld;
        prev = l;
        prev_a = la;
        prev_b = lb;
        prev_d = ld;
    }
    ArchWeights {
        lambda,
        d_alpha,
        d_beta,
        d_d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ArfimaFigarchParams {
        ArfimaFigarchParams {
            mu: 0.0,
            phi: 0.0,
            theta: 0.0,
            d_m: 0.0,
            omega: 1e-6,
            alpha: 0.2,
            beta: 0.5,
            d_v: 0.4,
            nu: 6.0,
        }
    }

    #[test]
    fn first_weight() {
        let w = arch_weights(0.2, 0.5, 0.4, 5);
        assert_eq!(w[0], 0.0);
        assert!((w[1] - 0.1).abs() < 1e-15);
        // beta * 0.1 - pi_2 + alpha * pi_1 = 0.05 + 0.12 - 0.08
        assert!((w[2] - 0.09).abs() < 1e-15);
    }

    #[test]
    fn reduces_to_garch_weights_without_fractional_part() {
        let (a, b) = (0.6, 0.35);
        let w = arch_weights(a, b, 0.0, 30);
        for k in 1..=30 {
            let expected = (a - b) * b.powi(k as i32 - 1);
            assert!((w[k] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn reduces_to_constant_variance() {
        let w = arch_weights(0.0, 0.0, 0.0, 30);
        assert!(w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weights_sum_below_one_and_approach_it() {
        let short: f64 = arch_weights(0.2, 0.5, 0.4, 100).iter().sum();
        let long: f64 = arch_weights(0.2, 0.5, 0.4, 1000).iter().sum();
        assert!(short < long && long < 1.0);
    }

    #[test]
    fn weight_derivatives_match_central_differences() {
        let (a, b, d) = (0.25, 0.45, 0.35);
        let h = 1e-6;
        let w = arch_weights_with_derivatives(a, b, d, 40);
        let fd = |f: &dyn Fn(f64) -> Vec<f64>, x: f64| -> Vec<f64> {
            let up = f(x + h);
            let dn = f(x - h);
            up.iter()
                .zip(dn)
                .map(|(u, v)| (u - v) / (2.0 * h))
                .collect()
        };
        let ga = fd(&|x| arch_weights(x, b, d, 40), a);
        let gb = fd(&|x| arch_weights(a, x, d, 40), b);
        let gd = fd(&|x| arch_weights(a, b, x, 40), d);
        for k in 0..=40 {
            assert!((ga[k] - w.d_alpha[k]).abs() < 1e-8);
            assert!((gb[k] - w.d_beta[k]).abs() < 1e-8);
            assert!((gd[k] - w.d_d[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn validation() {
        assert!(base().validate(1000).is_ok());
        let mut p = base();
        p.beta = 0.9; // lambda_1 = 0.4 + 0.2 - 0.9 < 0
        assert!(p.validate(1000).is_err());
        let mut p = base();
        p.nu = 2.0;
        assert!(p.validate(10).is_err());
        let mut p = base();
        p.d_m = 0.5;
        assert!(p.validate(10).is_err());
        let mut p = base();
        p.omega = 0.0;
        assert!(p.validate(10).is_err());
    }
}
