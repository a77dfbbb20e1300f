//! Maximum-likelihood fit of the ARFIMA-FIGARCH model.
//!
//! The optimizer works in an unconstrained coordinate system (tanh for the
//! ARMA coefficients and alpha, scaled logistic for `d_m`, `beta`, `d_v`, log
//! for `omega` and `nu - NU_FLOOR`). A Nelder-Mead pass provides a start for
//! BFGS on the per-observation negative log-likelihood. Standard errors come
//! from a finite-difference Hessian of the analytic gradient in natural
//! coordinates.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::likelihood::evaluate;
use super::optimize::{bfgs, nelder_mead, Objective, Pinned};
use super::params::{ArfimaFigarchParams, NU_FLOOR, PARAM_COUNT};
use crate::error::{LrdError, Result};
use crate::ingest::ReturnSeries;

pub const DEFAULT_TRUNCATION_LAG: usize = 1000;
pub const MIN_FIT_LEN: usize = 200;

const D_M_UPPER: f64 = 0.5;
/// Reported value for a fractional parameter pinned at its lower bound.
const BOUND_OFFSET: f64 = 1e-8;
const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub truncation_lag: usize,
    /// Total optimizer iterations (simplex plus quasi-Newton).
    pub max_iterations: usize,
    /// Gradient-norm threshold in the transformed space, per observation.
    pub gradient_tolerance: f64,
    pub simplex_iterations: usize,
    /// Lower bound for `d_m` during estimation.
    pub d_m_lower: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            truncation_lag: DEFAULT_TRUNCATION_LAG,
            max_iterations: 2000,
            gradient_tolerance: 1e-5,
            simplex_iterations: 600,
            d_m_lower: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ArfimaFigarchParams,
    pub log_likelihood: f64,
    /// `None` when the Hessian is not positive definite.
    pub standard_errors: Option<ArfimaFigarchParams>,
    /// One-sided, H0: d_m = 0 against Ha: d_m > 0.
    pub p_dm: Option<f64>,
    /// One-sided, H0: d_v = 0 against Ha: d_v > 0.
    pub p_dv: Option<f64>,
    pub ci_dm: Option<Interval>,
    pub ci_dv: Option<Interval>,
    pub d_m_at_bound: bool,
    pub d_v_at_bound: bool,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub n_obs: usize,
    pub truncation_lag: usize,
    /// Best per-observation negative log-likelihood after each accepted iteration.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

/// Maps between natural parameters and optimizer coordinates.
#[derive(Debug, Clone, Copy)]
struct Transform {
    mean: f64,
    sd: f64,
    var: f64,
    d_m_lower: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl Transform {
    fn to_natural(&self, z: &[f64]) -> ArfimaFigarchParams {
        let dm_span = D_M_UPPER - self.d_m_lower;
        ArfimaFigarchParams {
            mu: self.mean + self.sd * z[0],
            phi: z[1].tanh(),
            theta: z[2].tanh(),
            d_m: self.d_m_lower + dm_span * sigmoid(z[3]),
            omega: self.var * z[4].exp(),
            alpha: z[5].tanh(),
            beta: sigmoid(z[6]),
            d_v: sigmoid(z[7]),
            nu: NU_FLOOR + z[8].exp(),
        }
    }

    fn to_unconstrained(&self, p: &ArfimaFigarchParams) -> Vec<f64> {
        let dm_span = D_M_UPPER - self.d_m_lower;
        vec![
            (p.mu - self.mean) / self.sd,
            p.phi.atanh(),
            p.theta.atanh(),
            logit((p.d_m - self.d_m_lower) / dm_span),
            (p.omega / self.var).ln(),
            p.alpha.atanh(),
            logit(p.beta),
            logit(p.d_v),
            (p.nu - NU_FLOOR).ln(),
        ]
    }

    /// d natural / d unconstrained, coordinate-wise.
    fn jacobian(&self, z: &[f64]) -> [f64; PARAM_COUNT] {
        let dm_span = D_M_UPPER - self.d_m_lower;
        let ds = |v: f64| {
            let s = sigmoid(v);
            s * (1.0 - s)
        };
        let dt = |v: f64| 1.0 - v.tanh().powi(2);
        [
            self.sd,
            dt(z[1]),
            dt(z[2]),
            dm_span * ds(z[3]),
            self.var * z[4].exp(),
            dt(z[5]),
            ds(z[6]),
            ds(z[7]),
            z[8].exp(),
        ]
    }
}

struct FitObjective<'a> {
    y: &'a [f64],
    lag: usize,
    transform: Transform,
}

impl FitObjective<'_> {
    fn n(&self) -> f64 {
        self.y.len() as f64
    }
}

impl Objective for FitObjective<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        if z.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        let p = self.transform.to_natural(z);
        match evaluate(self.y, &p, self.lag, false) {
            Some(e) => -e.log_likelihood / self.n(),
            None => f64::INFINITY,
        }
    }

    fn value_gradient(&self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
        if z.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let p = self.transform.to_natural(z);
        let e = evaluate(self.y, &p, self.lag, true)?;
        let g = e.gradient?;
        let jac = self.transform.jacobian(z);
        let n = self.n();
        let grad = g.iter().zip(jac).map(|(gi, ji)| -gi * ji / n).collect();
        Some((-e.log_likelihood / n, grad))
    }
}

/// Default starting point, with `beta` shrunk until the ARCH weights are non-negative.
pub fn default_init(y: &[f64], lag: usize) -> ArfimaFigarchParams {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mut p = ArfimaFigarchParams {
        mu: mean,
        phi: 0.0,
        theta: 0.0,
        d_m: 0.1,
        omega: 0.1 * var,
        alpha: 0.1,
        beta: 0.5,
        d_v: 0.3,
        nu: 8.0,
    };
    while p.validate(lag).is_err() && p.beta > 1e-3 {
        p.beta *= 0.5;
    }
    p
}

/// Fit the model by maximum likelihood.
pub fn fit(
    returns: &ReturnSeries,
    init: Option<ArfimaFigarchParams>,
    options: &FitOptions,
) -> Result<FitResult> {
    let y = &returns.values;
    if y.len() < MIN_FIT_LEN {
        return Err(LrdError::TooShort {
            needed: MIN_FIT_LEN,
            got: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(LrdError::InvalidArgument(
            "returns contain non-finite values".into(),
        ));
    }
    if !(options.d_m_lower > -0.5 && options.d_m_lower < D_M_UPPER) {
        return Err(LrdError::InvalidArgument(format!(
            "d_m lower bound {} outside (-0.5, 0.5)",
            options.d_m_lower
        )));
    }
    let lag = options.truncation_lag;
    if lag == 0 {
        return Err(LrdError::InvalidArgument(
            "truncation lag must be positive".into(),
        ));
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(LrdError::ZeroVariance);
    }
    let transform = Transform {
        mean,
        sd: var.sqrt(),
        var,
        d_m_lower: options.d_m_lower,
    };

    let start = match init {
        Some(p) => {
            p.validate(lag)?;
            let mut p = p;
            // keep the start strictly inside the optimizer's open intervals
            let lo = options.d_m_lower;
            p.d_m = p.d_m.clamp(lo + 1e-6, D_M_UPPER - 1e-6);
            p.beta = p.beta.clamp(1e-6, 1.0 - 1e-6);
            p.d_v = p.d_v.clamp(1e-6, 1.0 - 1e-6);
            p.nu = p.nu.max(NU_FLOOR + 1e-3);
            p
        }
        None => {
            let mut p = default_init(y, lag);
            p.d_m = p.d_m.max(options.d_m_lower + 0.05);
            p
        }
    };
    let objective = FitObjective { y, lag, transform };
    let z0 = transform.to_unconstrained(&start);
    if !objective.value(&z0).is_finite() {
        return Err(LrdError::InvalidParameters(
            "likelihood is not finite at the starting point".into(),
        ));
    }

    let simplex_budget = options.simplex_iterations.min(options.max_iterations);
    let coarse = nelder_mead(&objective, &z0, 0.3, simplex_budget, 1e-10);
    let remaining = options.max_iterations - coarse.iterations;
    let polished = bfgs(&objective, &coarse.x, remaining, options.gradient_tolerance);
    let (mut z, mut best) = if polished.value <= coarse.value {
        (polished.x.clone(), polished.value)
    } else {
        (coarse.x.clone(), coarse.value)
    };
    let mut trace = coarse.trace;
    trace.extend(polished.trace.iter().copied().skip(1));

    // Snap fractional parameters that drift towards their lower bound.
    let mut d_m_at_bound = false;
    let mut d_v_at_bound = false;
    let snap_z = |bound_fraction: f64| logit(bound_fraction);
    for (idx, span, lower) in [
        (3usize, D_M_UPPER - options.d_m_lower, options.d_m_lower),
        (7usize, 1.0, 0.0),
    ] {
        let current = transform.to_natural(&z).to_array()[idx];
        if current - lower < 0.01 * span {
            let mut trial = z.clone();
            trial[idx] = snap_z(BOUND_OFFSET / span);
            let v = objective.value(&trial);
            if v <= best {
                z = trial;
                best = v;
                if idx == 3 {
                    d_m_at_bound = true;
                } else {
                    d_v_at_bound = true;
                }
            }
        }
    }
    if trace.last().is_some_and(|&last| best < last) {
        trace.push(best);
    }
    let mut iterations = coarse.iterations + polished.iterations;

    // Re-optimize the remaining coordinates with the snapped ones held fixed.
    if d_m_at_bound || d_v_at_bound {
        let pinned = Pinned {
            inner: &objective,
            base: z.clone(),
            free: (0..PARAM_COUNT)
                .filter(|&i| !(i == 3 && d_m_at_bound) && !(i == 7 && d_v_at_bound))
                .collect(),
        };
        let budget = options.max_iterations.saturating_sub(iterations);
        let refined = bfgs(
            &pinned,
            &pinned.restrict(&z),
            budget,
            options.gradient_tolerance,
        );
        if refined.value <= best {
            z = pinned.expand(&refined.x);
            best = refined.value;
            trace.extend(refined.trace.iter().copied().skip(1));
        }
        iterations += refined.iterations;
    }

    let (_, grad) = objective
        .value_gradient(&z)
        .ok_or_else(|| LrdError::Numerical("gradient undefined at the optimum".into()))?;
    let gradient_norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    let converged = gradient_norm < options.gradient_tolerance
        || ((d_m_at_bound || d_v_at_bound)
            && interior_gradient_norm(&grad, d_m_at_bound, d_v_at_bound)
                < options.gradient_tolerance);

    let params = transform.to_natural(&z);
    let log_likelihood = -best * n;
    let inference = standard_errors(y, &params, lag, var.sqrt());

    let normal = Normal::standard();
    let one_sided = |est: f64, se: f64, at_bound: bool| {
        if at_bound {
            0.5
        } else {
            normal.sf(est / se)
        }
    };
    let (p_dm, p_dv, ci_dm, ci_dv) = match &inference {
        Some(se) => (
            Some(one_sided(params.d_m, se.d_m, d_m_at_bound)),
            Some(one_sided(params.d_v, se.d_v, d_v_at_bound)),
            Some(Interval {
                low: params.d_m - Z95 * se.d_m,
                high: params.d_m + Z95 * se.d_m,
            }),
            Some(Interval {
                low: params.d_v - Z95 * se.d_v,
                high: params.d_v + Z95 * se.d_v,
            }),
        ),
        None => {
            log::warn!("Hessian is not positive definite; standard errors unavailable");
            let bound_p = |at_bound: bool| at_bound.then_some(0.5);
            (bound_p(d_m_at_bound), bound_p(d_v_at_bound), None, None)
        }
    };

    Ok(FitResult {
        params,
        log_likelihood,
        standard_errors: inference,
        p_dm,
        p_dv,
        ci_dm,
        ci_dv,
        d_m_at_bound,
        d_v_at_bound,
        converged,
        iterations,
        gradient_norm,
        n_obs: y.len(),
        truncation_lag: lag,
        objective_trace: trace,
    })
}

/// Gradient norm ignoring coordinates pinned at a bound.
fn interior_gradient_norm(grad: &[f64], d_m_pinned: bool, d_v_pinned: bool) -> f64 {
    grad.iter()
        .enumerate()
        .filter(|&(i, _)| !(i == 3 && d_m_pinned) && !(i == 7 && d_v_pinned))
        .map(|(_, v)| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Standard errors from the inverse of the finite-difference Hessian of the
/// negative log-likelihood, or `None` if it is not positive definite.
pub fn standard_errors(
    y: &[f64],
    params: &ArfimaFigarchParams,
    lag: usize,
    data_sd: f64,
) -> Option<ArfimaFigarchParams> {
    let theta = params.to_array();
    let steps: [f64; PARAM_COUNT] = [
        1e-3 * data_sd,
        1e-4,
        1e-4,
        1e-4,
        1e-4 * params.omega,
        1e-4,
        1e-4,
        1e-4,
        1e-4 * params.nu,
    ];
    let grad_at = |v: &[f64]| -> Option<[f64; PARAM_COUNT]> {
        evaluate(y, &ArfimaFigarchParams::from_slice(v), lag, true)?.gradient
    };
    let mut hess = [[0.0f64; PARAM_COUNT]; PARAM_COUNT];
    for j in 0..PARAM_COUNT {
        let h = steps[j];
        let mut up = theta;
        up[j] += h;
        let mut dn = theta;
        dn[j] -= h;
        let column: Vec<f64> = match (grad_at(&up), grad_at(&dn)) {
            (Some(a), Some(b)) => (0..PARAM_COUNT)
                .map(|i| -(a[i] - b[i]) / (2.0 * h))
                .collect(),
            (Some(a), None) => {
                let c = grad_at(&theta)?;
                (0..PARAM_COUNT).map(|i| -(a[i] - c[i]) / h).collect()
            }
            (None, Some(b)) => {
                let c = grad_at(&theta)?;
                (0..PARAM_COUNT).map(|i| -(c[i] - b[i]) / h).collect()
            }
            (None, None) => return None,
        };
        for i in 0..PARAM_COUNT {
            hess[i][j] = column[i];
        }
    }
    for i in 0..PARAM_COUNT {
        for j in 0..i {
            let m = 0.5 * (hess[i][j] + hess[j][i]);
            hess[i][j] = m;
            hess[j][i] = m;
        }
    }
    let cov = invert_spd(&hess)?;
    let se: Vec<f64> = (0..PARAM_COUNT).map(|i| cov[i][i].sqrt()).collect();
    se.iter()
        .all(|v| v.is_finite() && *v > 0.0)
        .then(|| ArfimaFigarchParams::from_slice(&se))
}

/// Inverse of a symmetric positive-definite matrix by Cholesky; `None` otherwise.
fn invert_spd<const N: usize>(a: &[[f64; N]; N]) -> Option<[[f64; N]; N]> {
    // Equilibrate so the factorization sees unit diagonal.
    let mut scale = [0.0f64; N];
    for i in 0..N {
        if !(a[i][i] > 0.0) {
            return None;
        }
        scale[i] = 1.0 / a[i][i].sqrt();
    }
    let mut l = [[0.0f64; N]; N];
    for i in 0..N {
        for j in 0..=i {
            let mut s = a[i][j] * scale[i] * scale[j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > 1e-14) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // inverse of L, then (L L^T)^-1 = L^-T L^-1
    let mut linv = [[0.0f64; N]; N];
    for i in 0..N {
        linv[i][i] = 1.0 / l[i][i];
        for j in 0..i {
            let mut s = 0.0;
            for k in j..i {
                s -= l[i][k] * linv[k][j];
            }
            linv[i][j] = s / l[i][i];
        }
    }
    let mut inv = [[0.0f64; N]; N];
    for i in 0..N {
        for j in 0..=i {
            let mut s = 0.0;
            for k in i..N {
                s += linv[k][i] * linv[k][j];
            }
            inv[i][j] = s * scale[i] * scale[j];
            inv[j][i] = inv[i][j];
        }
    }
    Some(inv)
}
