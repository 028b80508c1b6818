//! Brute-force references shared by the oracle and acceptance suites.
#![allow(dead_code)]

use noisy_lasso::oracle::GaussianPair;
use noisy_lasso::theory::Model;

/// Dual objective written out independently of the library.
pub fn dual_value(sigma: f64, pair: &GaussianPair, x: &[f64], nu: f64, lambda: &[f64]) -> Option<f64> {
    let g2: f64 = pair.g.iter().map(|v| v * v).sum();
    let r2: f64 = pair.h.iter().zip(lambda).map(|(h, l)| (h + nu - l).powi(2)).sum();
    (r2 < g2).then(|| sigma * (g2 - r2).sqrt() - lambda.iter().zip(x).map(|(l, c)| l * c).sum::<f64>())
}

/// Maximum of the dual objective at fixed ν by coordinate compass search
/// over the λ box (the objective is concave in λ).
fn inner_maximum(sigma: f64, pair: &GaussianPair, x: &[f64], model: Model, nu: f64) -> Option<f64> {
    let hi = match model {
        Model::Unsigned => 2.0 * nu,
        Model::Signed => f64::INFINITY,
    };
    // start from the box point nearest h + ν, which minimizes the residual
    let mut lambda: Vec<f64> = pair.h.iter().map(|h| (h + nu).clamp(0.0, hi)).collect();
    let mut val = dual_value(sigma, pair, x, nu, &lambda)?;
    let mut step = if hi.is_finite() { hi.max(0.1) } else { 2.0 };
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..lambda.len() {
            for dir in [1.0, -1.0] {
                let old = lambda[i];
                lambda[i] = (old + dir * step).clamp(0.0, hi);
                match dual_value(sigma, pair, x, nu, &lambda) {
                    Some(v) if v > val => {
                        val = v;
                        improved = true;
                    }
                    _ => lambda[i] = old,
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Some(val)
}

/// Brute-force dual optimum: ν scanned on [0, 4] at resolution 1e-3, each
/// slice maximized over λ, then the best cell refined by golden section.
pub fn grid_maximum(sigma: f64, pair: &GaussianPair, x: &[f64], model: Model) -> Option<f64> {
    let value = |nu: f64| inner_maximum(sigma, pair, x, model, nu);
    let mut best: Option<(f64, f64)> = None;
    for i in 0..=4000 {
        let nu = i as f64 * 1e-3;
        if let Some(v) = value(nu) {
            if best.is_none_or(|b| v > b.0) {
                best = Some((v, nu));
            }
        }
    }
    let (mut top, centre) = best?;
    let (mut a, mut b) = ((centre - 1e-3).max(0.0), centre + 1e-3);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    while b - a > 1e-9 {
        let (c, d) = (b - ratio * (b - a), a + ratio * (b - a));
        let (fc, fd) = (value(c).unwrap_or(f64::NEG_INFINITY), value(d).unwrap_or(f64::NEG_INFINITY));
        top = top.max(fc).max(fd);
        if fc >= fd {
            b = d;
        } else {
            a = c;
        }
    }
    Some(top)
}
