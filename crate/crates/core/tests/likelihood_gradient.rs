use lrdlab::arfima_figarch::{
    log_likelihood, log_likelihood_gradient, simulate, ArfimaFigarchParams, PARAM_NAMES,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LAG: usize = 200;

fn random_interior(rng: &mut ChaCha8Rng) -> ArfimaFigarchParams {
    loop {
        let p = ArfimaFigarchParams {
            mu: rng.random_range(-1e-3..1e-3),
            phi: rng.random_range(-0.6..0.6),
            theta: rng.random_range(-0.6..0.6),
            d_m: rng.random_range(0.02..0.4),
            omega: rng.random_range(2e-7..5e-6),
            alpha: rng.random_range(0.0..0.4),
            beta: rng.random_range(0.1..0.7),
            d_v: rng.random_range(0.1..0.7),
            nu: rng.random_range(3.0..12.0),
        };
        if p.validate(LAG).is_ok() {
            return p;
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let truth = ArfimaFigarchParams {
        mu: 5e-4,
        phi: 0.1,
        theta: -0.1,
        d_m: 0.1,
        omega: 1e-6,
        alpha: 0.2,
        beta: 0.5,
        d_v: 0.4,
        nu: 6.0,
    };
    let y = simulate(&truth, 1500, LAG, 99, LAG).unwrap().values;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10 {
        let p = random_interior(&mut rng);
        let (_, grad) = log_likelihood_gradient(&y, &p, LAG).unwrap();
        let base = p.to_array();
        for i in 0..base.len() {
            let h = 1e-5 * base[i].abs().max(if i == 4 { base[i] } else { 1e-3 });
            let mut up = base;
            up[i] += h;
            let mut dn = base;
            dn[i] -= h;
            let fu = log_likelihood(&y, &ArfimaFigarchParams::from_slice(&up), LAG).unwrap();
            let fd = log_likelihood(&y, &ArfimaFigarchParams::from_slice(&dn), LAG).unwrap();
            let numeric = (fu - fd) / (2.0 * h);
            let scale = grad[i].abs().max(numeric.abs()).max(1e-3);
            assert!(
                (grad[i] - numeric).abs() <= 1e-4 * scale,
                "{}: analytic {} numeric {} at {:?}",
                PARAM_NAMES[i],
                grad[i],
                numeric,
                p
            );
        }
    }
}
