//! Student-t conditional log-likelihood of the ARFIMA-FIGARCH model and its
//! analytic gradient.
//!
//! Residuals come from the truncated fractional filter with zero pre-sample
//! values; the variance recursion uses the sample mean of the squared
//! residuals for every pre-sample `eps^2`.

use statrs::function::gamma::{digamma, ln_gamma};

use super::kernel::fracdiff_weights_with_derivative;
use super::params::{arch_weights_with_derivatives, ArfimaFigarchParams, PARAM_COUNT};
use crate::error::{LrdError, Result};

/// Dot product with a fixed summation order (eight interleaved partial sums).
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `out_t = sum_{k=0}^{min(t, L)} w_k x_{t-k}` with `L = w.len() - 1`.
pub(crate) fn causal_filter(w: &[f64], x: &[f64]) -> Vec<f64> {
    let lag = w.len() - 1;
    let rev: Vec<f64> = w.iter().rev().copied().collect();
    (0..x.len())
        .map(|t| {
            let m = t.min(lag);
            dot(&rev[lag - m..], &x[t - m..=t])
        })
        .collect()
}

/// Per-observation constant `ln G((nu+1)/2) - ln G(nu/2) - ln((nu-2) pi)/2`.
pub(crate) fn t_log_constant(nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * ((nu - 2.0) * std::f64::consts::PI).ln()
}

pub(crate) struct Evaluation {
    pub log_likelihood: f64,
    /// d logL / d params in natural coordinates, ordered as `PARAM_NAMES`.
    pub gradient: Option<[f64; PARAM_COUNT]>,
}

/// Total log-likelihood. Errors when the parameters are outside the model
/// domain or produce a non-positive variance.
pub fn log_likelihood(y: &[f64], params: &ArfimaFigarchParams, lag: usize) -> Result<f64> {
    params.validate(lag)?;
    evaluate(y, params, lag, false)
        .map(|e| e.log_likelihood)
        .ok_or_else(|| LrdError::Numerical("likelihood is not finite at these parameters".into()))
}

/// Total log-likelihood and its gradient with respect to the natural parameters.
pub fn log_likelihood_gradient(
    y: &[f64],
    params: &ArfimaFigarchParams,
    lag: usize,
) -> Result<(f64, [f64; PARAM_COUNT])> {
    params.validate(lag)?;
    evaluate(y, params, lag, true)
        .and_then(|e| e.gradient.map(|g| (e.log_likelihood, g)))
        .ok_or_else(|| LrdError::Numerical("likelihood is not finite at these parameters".into()))
}

/// `None` when the point is infeasible or numerically degenerate.
pub(crate) fn evaluate(
    y: &[f64],
    p: &ArfimaFigarchParams,
    lag: usize,
    want_gradient: bool,
) -> Option<Evaluation> {
    if p.check_domain().is_err() || y.is_empty() {
        return None;
    }
    let n = y.len();
    let weights = arch_weights_with_derivatives(p.alpha, p.beta, p.d_v, lag);
    let lambda = &weights.lambda;
    if lambda.iter().any(|&l| l < 0.0) {
        return None;
    }

    // Mean equation: u = (1 - L)^d (y - mu), eps_t = u_t - phi u_{t-1} - theta eps_{t-1}.
    let x: Vec<f64> = y.iter().map(|v| v - p.mu).collect();
    let (pi, dpi) = fracdiff_weights_with_derivative(p.d_m, lag);
    let u = causal_filter(&pi, &x);
    let mut eps = vec![0.0; n];
    {
        let (mut u_prev, mut e_prev) = (0.0, 0.0);
        for t in 0..n {
            let e = u[t] - p.phi * u_prev - p.theta * e_prev;
            eps[t] = e;
            u_prev = u[t];
            e_prev = e;
        }
    }

    let e2: Vec<f64> = eps.iter().map(|e| e * e).collect();
    let e2_mean = e2.iter().sum::<f64>() / n as f64;

    // tail_t = sum_{k=t+1}^{L} lambda_k, the weight carried by pre-sample eps^2.
    let mut tail = vec![0.0; lag.min(n) + 1];
    {
        let mut suffix = 0.0;
        let mut suffix_all = vec![0.0; lag + 2];
        for k in (1..=lag).rev() {
            suffix += lambda[k];
            suffix_all[k] = suffix;
        }
        for (t, slot) in tail.iter_mut().enumerate() {
            *slot = suffix_all[t + 1];
        }
    }
    let tail_at = |t: usize| if t < tail.len() { tail[t] } else { 0.0 };

    let intercept = p.variance_intercept();
    let conv = causal_filter(lambda, &e2);
    let sigma2: Vec<f64> = (0..n)
        .map(|t| intercept + conv[t] + e2_mean * tail_at(t))
        .collect();
    if sigma2.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return None;
    }

    let nu = p.nu;
    let c = t_log_constant(nu);
    let mut ll = 0.0;
    for t in 0..n {
        let q = e2[t] / ((nu - 2.0) * sigma2[t]);
        ll += c - 0.5 * sigma2[t].ln() - 0.5 * (nu + 1.0) * q.ln_1p();
    }
    if !ll.is_finite() {
        return None;
    }
    if !want_gradient {
        return Some(Evaluation {
            log_likelihood: ll,
            gradient: None,
        });
    }

    // dl_t/d sigma2_t, dl_t/d eps_t (direct), dl/dnu
    let mut g = vec![0.0; n];
    let mut h_eps = vec![0.0; n];
    let mut d_nu = 0.0;
    let dig = 0.5 * digamma(0.5 * (nu + 1.0)) - 0.5 * digamma(0.5 * nu) - 0.5 / (nu - 2.0);
    for t in 0..n {
        let s = sigma2[t];
        let denom = (nu - 2.0) * s + e2[t];
        g[t] = -0.5 / s + 0.5 * (nu + 1.0) * e2[t] / (s * denom);
        h_eps[t] = -(nu + 1.0) * eps[t] / denom;
        let q = e2[t] / ((nu - 2.0) * s);
        d_nu += dig - 0.5 * q.ln_1p() + 0.5 * (nu + 1.0) * q / ((1.0 + q) * (nu - 2.0));
    }

    let mut g_cum = vec![0.0; n];
    let mut acc = 0.0;
    for t in 0..n {
        acc += g[t];
        g_cum[t] = acc;
    }
    let g_cum_at = |j: usize| g_cum[j.min(n - 1)];

    // Sensitivity of the likelihood to the pre-sample level e2_mean.
    let gamma: f64 = (1..=lag).map(|k| lambda[k] * g_cum_at(k - 1)).sum();

    // adj_s = sum_k lambda_k g_{s+k}: how eps_s^2 feeds later variances.
    let adj: Vec<f64> = (0..n)
        .map(|s| {
            let m = lag.min(n - 1 - s);
            dot(&lambda[1..=m], &g[s + 1..=s + m])
        })
        .collect();
    let total_eps: Vec<f64> = (0..n)
        .map(|s| h_eps[s] + 2.0 * eps[s] * (adj[s] + gamma / n as f64))
        .collect();

    // Forward sensitivities of eps to (mu, phi, theta, d_m).
    let du_dd = causal_filter(&dpi, &x);
    let mut pi_prefix = Vec::with_capacity(lag + 1);
    let mut run = 0.0;
    for w in &pi {
        run += w;
        pi_prefix.push(run);
    }
    let mut grad_mean = [0.0f64; 4];
    {
        let mut prev_u = [0.0f64; 4]; // du/dmu, du/dd at t-1 (phi/theta slots unused)
        let mut prev_e = [0.0f64; 4];
        let (mut u_prev, mut e_prev) = (0.0, 0.0);
        for t in 0..n {
            let du_mu = -pi_prefix[t.min(lag)];
            let du_d = du_dd[t];
            let e_mu = du_mu - p.phi * prev_u[0] - p.theta * prev_e[0];
            let e_phi = -u_prev - p.theta * prev_e[1];
            let e_theta = -e_prev - p.theta * prev_e[2];
            let e_d = du_d - p.phi * prev_u[3] - p.theta * prev_e[3];
            let a = total_eps[t];
            grad_mean[0] += a * e_mu;
            grad_mean[1] += a * e_phi;
            grad_mean[2] += a * e_theta;
            grad_mean[3] += a * e_d;
            prev_u = [du_mu, 0.0, 0.0, du_d];
            prev_e = [e_mu, e_phi, e_theta, e_d];
            u_prev = u[t];
            e_prev = eps[t];
        }
    }

    // r_k = sum_t g_t E_{t-k}, with E = e2_mean before the sample.
    let mut grad_alpha = 0.0;
    let mut grad_beta = 0.0;
    let mut grad_dv = 0.0;
    for k in 1..=lag {
        let in_sample = if k < n {
            dot(&g[k..], &e2[..n - k])
        } else {
            0.0
        };
        let r = in_sample + e2_mean * g_cum_at(k - 1);
        grad_alpha += weights.d_alpha[k] * r;
        grad_beta += weights.d_beta[k] * r;
        grad_dv += weights.d_d[k] * r;
    }
    let g_sum = g_cum[n - 1];
    let one_minus_beta = 1.0 - p.beta;
    let grad_omega = g_sum / one_minus_beta;
    grad_beta += g_sum * p.omega / (one_minus_beta * one_minus_beta);

    let gradient = [
        grad_mean[0],
        grad_mean[1],
        grad_mean[2],
        grad_mean[3],
        grad_omega,
        grad_alpha,
        grad_beta,
        grad_dv,
        d_nu,
    ];
    if gradient.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(Evaluation {
        log_likelihood: ll,
        gradient: Some(gradient),
    })
}
