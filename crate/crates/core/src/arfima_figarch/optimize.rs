//! Unconstrained minimizers used by the maximum-likelihood fit: a
//! Nelder-Mead simplex for a derivative-free start and BFGS with a
//! backtracking line search for the polish.
//!
//! Both record the best objective after every accepted iteration, so the
//! trace is non-increasing.

pub(crate) trait Objective {
    /// `f64::INFINITY` for infeasible points.
    fn value(&self, x: &[f64]) -> f64;
    fn value_gradient(&self, x: &[f64]) -> Option<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

pub(crate) fn nelder_mead(
    f: &dyn Objective,
    start: &[f64],
    step: f64,
    max_iter: usize,
    f_tol: f64,
) -> Minimum {
    let dim = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), f.value(start)));
    for i in 0..dim {
        let mut x = start.to_vec();
        x[i] += step;
        let mut v = f.value(&x);
        if !v.is_finite() {
            x[i] = start[i] - step;
            v = f.value(&x);
        }
        simplex.push((x, v));
    }
    let by_value = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| a.1.total_cmp(&b.1);
    simplex.sort_by(by_value);

    // Adaptive coefficients for higher dimensions (Gao & Han).
    let d = dim as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / d, 0.75 - 1.0 / (2.0 * d), 1.0 - 1.0 / d);

    let mut trace = vec![simplex[0].1];
    let mut iterations = 0;
    while iterations < max_iter {
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if best.is_finite() && (worst - best).abs() <= f_tol * (best.abs() + f_tol) {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / d;
            }
        }
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = f.value(&xr);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = f.value(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[dim].1 {
                let xc = along(alpha * rho);
                let fc = f.value(&xc);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = f.value(&xc);
                (xc, fc)
            };
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&x0) {
                        *xi = bi + sigma * (*xi - bi);
                    }
                    *v = f.value(x);
                }
            }
        }
        simplex.sort_by(by_value);
        trace.push(simplex[0].1);
    }
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
        trace,
    }
}

/// `inner` over the `free` coordinates, with the others held at their values in `base`.
pub(crate) struct Pinned<'a> {
    pub inner: &'a dyn Objective,
    pub base: Vec<f64>,
    pub free: Vec<usize>,
}

impl Pinned<'_> {
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.base.clone();
        for (&i, &v) in self.free.iter().zip(x) {
            full[i] = v;
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }
}

impl Objective for Pinned<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&self.expand(x))
    }

    fn value_gradient(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (v, g) = self.inner.value_gradient(&self.expand(x))?;
        Some((v, self.restrict(&g)))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// BFGS on the inverse Hessian. Stops when the gradient norm drops below
/// `grad_tol`, after `max_iter` iterations, or when no descent step can be found.
/// Consecutive accepted steps without measurable decrease before giving up.
const STALL_LIMIT: usize = 50;

pub(crate) fn bfgs(f: &dyn Objective, start: &[f64], max_iter: usize, grad_tol: f64) -> Minimum {
    let dim = start.len();
    let mut x = start.to_vec();
    let Some((mut fx, mut g)) = f.value_gradient(&x) else {
        return Minimum {
            x,
            value: f64::INFINITY,
            iterations: 0,
            trace: vec![],
        };
    };
    let identity = |scale: f64| -> Vec<Vec<f64>> {
        (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { scale } else { 0.0 }).collect())
            .collect()
    };
    let mut h = identity(1.0);
    let mut trace = vec![fx];
    let mut iterations = 0;
    let mut fresh = true;
    let mut stalled = 0;

    while iterations < max_iter && norm(&g) >= grad_tol && stalled < STALL_LIMIT {
        let mut dir: Vec<f64> = (0..dim)
            .map(|i| -(0..dim).map(|j| h[i][j] * g[j]).sum::<f64>())
            .collect();
        let mut slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h = identity(1.0);
            dir = g.iter().map(|v| -v).collect();
            slope = -norm(&g).powi(2);
        }

        // Backtracking with the Armijo condition.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            let fv = f.value(&xn);
            if fv.is_finite() && fv <= fx + 1e-4 * step * slope {
                accepted = Some(xn);
                break;
            }
            step *= 0.5;
        }
        let Some(xn) = accepted else {
            if fresh {
                break;
            }
            h = identity(1.0);
            fresh = true;
            continue;
        };
        let Some((fn_, gn)) = f.value_gradient(&xn) else {
            break;
        };
        iterations += 1;
        fresh = false;
        if fx - fn_ <= 1e-15 * fx.abs().max(1.0) {
            stalled += 1;
        } else {
            stalled = 0;
        }

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        if iterations == 1 && sy > 0.0 {
            let yy: f64 = yv.iter().map(|v| v * v).sum();
            h = identity(sy / yy);
        }
        if sy > 1e-12 * norm(&s) * norm(&yv) {
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..dim)
                .map(|i| (0..dim).map(|j| h[i][j] * yv[j]).sum())
                .collect();
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..dim {
                for j in 0..dim {
                    h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        x = xn;
        fx = fn_;
        g = gn;
        trace.push(fx);
    }
    Minimum {
        x,
        value: fx,
        iterations,
        trace,
    }
}
