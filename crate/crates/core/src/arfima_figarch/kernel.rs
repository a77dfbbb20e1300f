use serde::{Deserialize, Serialize};

/// Binomial weights of `(1 - L)^d` up to lag `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FracDiffKernel {
    pub d: f64,
    pub weights: Vec<f64>,
}

impl FracDiffKernel {
    pub fn truncation_lag(&self) -> usize {
        self.weights.len() - 1
    }
}

/// `pi_0 = 1`, `pi_k = pi_{k-1} (k - 1 - d) / k`.
pub fn fracdiff_weights(d: f64, lag: usize) -> FracDiffKernel {
    let mut weights = Vec::with_capacity(lag + 1);
    weights.push(1.0);
    for k in 1..=lag {
        let prev = weights[k - 1];
        weights.push(prev * (k as f64 - 1.0 - d) / k as f64);
    }
    FracDiffKernel { d, weights }
}

/// Weights and their derivatives with respect to `d`.
pub(crate) fn fracdiff_weights_with_derivative(d: f64, lag: usize) -> (Vec<f64>, Vec<f64>) {
    let mut w = Vec::with_capacity(lag + 1);
    let mut dw = Vec::with_capacity(lag + 1);
    w.push(1.0);
    dw.push(0.0);
    for k in 1..=lag {
        let kf = k as f64;
        let ratio = (kf - 1.0 - d) / kf;
        w.push(w[k - 1] * ratio);
        dw.push(dw[k - 1] * ratio - w[k - 1] / kf);
    }
    (w, dw)
}

/// `H = d + 1/2`.
pub fn hurst_from_d(d: f64) -> f64 {
    d + 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_first_difference() {
        assert_eq!(
            fracdiff_weights(0.0, 4).weights,
            vec![1.0, 0.0, 0.0, 0.0, 0.0]
        );
        let w = fracdiff_weights(1.0, 4).weights;
        assert_eq!(w, vec![1.0, -1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn hand_recursion_at_point_four() {
        let w = fracdiff_weights(0.4, 3).weights;
        let expected = [1.0, -0.4, -0.12, -0.064];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn partial_sums_decrease_towards_zero() {
        for &d in &[0.05, 0.3, 0.45, 0.8] {
            let w = fracdiff_weights(d, 2000).weights;
            assert!(w[1..].iter().all(|&v| v < 0.0));
            let mut s = 0.0;
            let mut prev = f64::INFINITY;
            for v in &w {
                s += v;
                assert!(s > 0.0 && s <= 1.0 && s < prev);
                prev = s;
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-6;
        for &d in &[-0.3, 0.1, 0.4] {
            let (_, dw) = fracdiff_weights_with_derivative(d, 50);
            let up = fracdiff_weights(d + h, 50).weights;
            let dn = fracdiff_weights(d - h, 50).weights;
            for k in 0..=50 {
                let fd = (up[k] - dn[k]) / (2.0 * h);
                assert!((fd - dw[k]).abs() < 1e-7, "k={k}: {fd} vs {}", dw[k]);
            }
        }
    }

    #[test]
    fn hurst_mapping() {
        assert_eq!(hurst_from_d(0.0), 0.5);
        assert!((hurst_from_d(0.4) - 0.9).abs() < 1e-15);
        assert!((hurst_from_d(-0.1) - 0.4).abs() < 1e-15);
    }
}
