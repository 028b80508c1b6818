//! Finite-sample evaluation of the random dual ("overwhelming") problems.
//!
//! For Gaussian vectors g ∈ ℝᵐ, h ∈ ℝⁿ and a nonnegative signal x̃ the
//! general problem is
//!
//! ```text
//! ξ_ov = max  σ √(‖g‖² − ‖h + ν·1 − λ‖²) − Σ λᵢ x̃ᵢ
//!        s.t. ν ≥ 0,  0 ≤ λᵢ ≤ 2ν   (unsigned)   or   λᵢ ≥ 0   (signed)
//! ```
//!
//! and the predicted LASSO error is ‖ŵ‖ = σ r / √(‖g‖² − r²) with
//! r = ‖h + ν̂·1 − λ̂‖ at the optimum.
//!
//! [`xi_ov_general`] solves it exactly through a one-parameter family: at the
//! optimum the KKT system coincides with that of
//! `min ½‖h + ν·1 − λ‖² + s·x̃ᵀλ` for s = √(‖g‖² − r²)/σ. For fixed s that
//! problem separates per coordinate once ν is fixed, and is a convex
//! piecewise-quadratic function of ν; s itself is the root of a monotone
//! scalar equation. [`xi_ov_general_pg`] and [`xi_d_objective`] use projected
//! gradient ascent on the original (ν, λ) variables instead.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Seed;
use crate::roots;
use crate::theory::Model;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dual problem is infeasible: min residual {residual} >= |g| = {g_norm} (above the l1 threshold)")]
    Divergent { residual: f64, g_norm: f64 },
    #[error("signal length {got} does not match n = {expected}")]
    Length { expected: usize, got: usize },
    #[error("signal entries must be finite and nonnegative (index {index}: {value})")]
    Signal { index: usize, value: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPair {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub seed: Seed,
}

impl GaussianPair {
    pub fn m(&self) -> usize {
        self.g.len()
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn g_norm(&self) -> f64 {
        norm(&self.g)
    }
}

/// g is drawn from `seed.child(0)`, h from `seed.child(1)`.
pub fn sample_pair(m: usize, n: usize, seed: Seed) -> GaussianPair {
    assert!(m >= 1 && n >= 1, "sample_pair needs m, n >= 1");
    GaussianPair {
        g: seed.child(0).normals().take_vec(m),
        h: seed.child(1).normals().take_vec(n),
        seed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSample {
    pub xi_ov: f64,
    pub nu_hat: f64,
    pub lambda_hat: Vec<f64>,
    /// ‖h + ν̂·1 − λ̂‖₂
    pub residual_norm: f64,
    pub g_norm: f64,
    /// Predicted ‖ŵ‖₂; `None` when the optimum is not strictly inside the
    /// square-root domain.
    pub w_hat_norm: Option<f64>,
    pub overwhelming: bool,
    /// Norm of the projected-gradient step at the returned point.
    pub pg_norm: f64,
    pub iterations: usize,
}

#[inline]
fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// How coordinate i enters the linear term.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Price {
    /// λᵢ pays s·cᵢ per unit (cᵢ = x̃ᵢ ≥ 0; zero off the support).
    Linear(f64),
    /// λᵢ pinned to zero (infinite-magnitude support entry).
    Pinned,
}

/// Per-coordinate minimizer of ½(a − λ)² + t·λ over the model's λ range, with
/// a = hᵢ + ν. Returns (λ, u = a − λ, d/dν of the reduced value).
#[inline]
fn coordinate(h: f64, nu: f64, price: Price, s: f64, model: Model) -> (f64, f64, f64) {
    let a = h + nu;
    let t = match price {
        Price::Pinned => return (0.0, a, a),
        Price::Linear(c) => s * c,
    };
    if a - t <= 0.0 {
        return (0.0, a, a);
    }
    match model {
        Model::Signed => (a - t, t, t),
        Model::Unsigned => {
            if a - t < 2.0 * nu {
                (a - t, t, t)
            } else {
                let u = h - nu;
                (2.0 * nu, u, 2.0 * t - u)
            }
        }
    }
}

/// Closed-form clamp used by the generic problem: the residual of the
/// best λᵢ for an off-support coordinate at fixed ν.
pub fn clamp_residual(h: f64, nu: f64, model: Model) -> f64 {
    coordinate(h, nu, Price::Linear(0.0), 0.0, model).1
}

struct Reduced {
    nu: f64,
    lambda: Vec<f64>,
    u_norm_sq: f64,
    linear: f64,
}

/// Solves min_{ν, λ} ½‖h + ν·1 − λ‖² + s·Σ pricedᵢ λᵢ exactly.
fn solve_reduced(h: &[f64], prices: &[Price], s: f64, model: Model) -> Reduced {
    let slope = |nu: f64| -> f64 {
        h.iter()
            .zip(prices)
            .map(|(&hi, &p)| coordinate(hi, nu, p, s, model).2)
            .sum()
    };
    let nu = if slope(0.0) >= 0.0 {
        0.0
    } else {
        let mut hi = 1.0;
        while slope(hi) < 0.0 {
            hi *= 2.0;
        }
        // smallest ν with nonnegative slope; the slope is continuous and
        // nondecreasing, so this is a minimizer
        let (mut a, mut b) = (0.0, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if slope(mid) < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        b
    };
    let mut lambda = Vec::with_capacity(h.len());
    let mut u_norm_sq = 0.0;
    let mut linear = 0.0;
    for (&hi, &p) in h.iter().zip(prices) {
        let (l, u, _) = coordinate(hi, nu, p, s, model);
        lambda.push(l);
        u_norm_sq += u * u;
        if let Price::Linear(c) = p {
            linear += c * l;
        }
    }
    Reduced { nu, lambda, u_norm_sq, linear }
}

fn prices_for(x_tilde: &[f64], n: usize) -> Result<Vec<Price>, OracleError> {
    if x_tilde.len() != n {
        return Err(OracleError::Length { expected: n, got: x_tilde.len() });
    }
    x_tilde
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if value.is_finite() && value >= 0.0 {
                Ok(Price::Linear(value))
            } else {
                Err(OracleError::Signal { index, value })
            }
        })
        .collect()
}

/// Value of the general objective; `None` outside the square-root domain.
pub fn ov_objective(sigma: f64, pair: &GaussianPair, x_tilde: &[f64], nu: f64, lambda: &[f64]) -> Option<f64> {
    let g2 = pair.g.iter().map(|x| x * x).sum::<f64>();
    let (u2, lin) = residual_and_cost(&pair.h, x_tilde, nu, lambda);
    (u2 < g2).then(|| sigma * (g2 - u2).sqrt() - lin)
}

fn residual_and_cost(h: &[f64], x_tilde: &[f64], nu: f64, lambda: &[f64]) -> (f64, f64) {
    let mut u2 = 0.0;
    let mut lin = 0.0;
    for i in 0..h.len() {
        let u = h[i] + nu - lambda[i];
        u2 += u * u;
        lin += lambda[i] * x_tilde[i];
    }
    (u2, lin)
}

#[allow(clippy::too_many_arguments)]
fn finish(sigma: f64, g_norm: f64, nu: f64, lambda: Vec<f64>, u_norm_sq: f64, value: f64, pg_norm: f64, iterations: usize) -> OracleSample {
    let r = u_norm_sq.sqrt();
    let overwhelming = r < g_norm;
    let w = if overwhelming { Some(sigma * r / (g_norm * g_norm - u_norm_sq).sqrt()) } else { None };
    OracleSample {
        xi_ov: value,
        nu_hat: nu,
        lambda_hat: lambda,
        residual_norm: r,
        g_norm,
        w_hat_norm: w,
        overwhelming,
        pg_norm,
        iterations,
    }
}

/// General dual problem with a finite nonnegative signal x̃, both models.
pub fn xi_ov(sigma: f64, pair: &GaussianPair, x_tilde: &[f64], model: Model) -> Result<OracleSample, OracleError> {
    if !(sigma > 0.0) {
        return Err(OracleError::Argument(format!("sigma must be positive, got {sigma}")));
    }
    let prices = prices_for(x_tilde, pair.n())?;
    let g2 = pair.g.iter().map(|x| x * x).sum::<f64>();
    let g_norm = g2.sqrt();
    // φ(s) = σ²s² + ‖u(s)‖² − ‖g‖² is increasing; φ(0) = −‖g‖² since with no
    // price the residual can be driven to zero.
    let phi = |s: f64| sigma * sigma * s * s + solve_reduced(&pair.h, &prices, s, model).u_norm_sq - g2;
    let mut hi = g_norm / sigma;
    while phi(hi) < 0.0 {
        hi *= 2.0;
    }
    let s = roots::bisect(phi, 0.0, hi, 1e-15 * hi).map_err(|e| OracleError::Argument(e.to_string()))?;
    let red = solve_reduced(&pair.h, &prices, s, model);
    let value = sigma * (g2 - red.u_norm_sq).max(0.0).sqrt() - red.linear;
    let pg = ov_pg_norm(sigma, pair, x_tilde, red.nu, &red.lambda, model);
    Ok(finish(sigma, g_norm, red.nu, red.lambda, red.u_norm_sq, value, pg, 0))
}

pub fn xi_ov_general(sigma: f64, pair: &GaussianPair, x_tilde: &[f64]) -> Result<OracleSample, OracleError> {
    xi_ov(sigma, pair, x_tilde, Model::Unsigned)
}

pub fn xi_ov_signed_general(sigma: f64, pair: &GaussianPair, x_tilde: &[f64]) -> Result<OracleSample, OracleError> {
    xi_ov(sigma, pair, x_tilde, Model::Signed)
}

/// Generic (infinite-magnitude) problem: min_ν ‖h + ν·1 − λ(ν)‖ with λ
/// pinned to zero on the last k coordinates and clamped elsewhere.
/// Returns (ξ_gen, ν_gen). With k = 0 the residual reaches zero and the
/// smallest such ν is returned.
pub fn xi_ov_generic(pair: &GaussianPair, k: usize, model: Model) -> Result<(f64, f64), OracleError> {
    let n = pair.n();
    if k >= n {
        return Err(OracleError::Argument(format!("k = {k} must be < n = {n}")));
    }
    let prices: Vec<Price> = (0..n)
        .map(|i| if i >= n - k { Price::Pinned } else { Price::Linear(0.0) })
        .collect();
    let red = solve_reduced(&pair.h, &prices, 0.0, model);
    Ok((red.u_norm_sq.sqrt(), red.nu))
}

/// Full generic sample: ξ_gen, ν_gen and the predicted worst-case error norm.
pub fn generic_sample(sigma: f64, pair: &GaussianPair, k: usize, model: Model) -> Result<OracleSample, OracleError> {
    let n = pair.n();
    if k >= n {
        return Err(OracleError::Argument(format!("k = {k} must be < n = {n}")));
    }
    let prices: Vec<Price> = (0..n)
        .map(|i| if i >= n - k { Price::Pinned } else { Price::Linear(0.0) })
        .collect();
    let red = solve_reduced(&pair.h, &prices, 0.0, model);
    let g_norm = pair.g_norm();
    let value = sigma * (g_norm * g_norm - red.u_norm_sq).max(0.0).sqrt();
    let sample = finish(sigma, g_norm, red.nu, red.lambda, red.u_norm_sq, value, 0.0, 0);
    if !sample.overwhelming {
        return Err(OracleError::Divergent { residual: sample.residual_norm, g_norm });
    }
    Ok(sample)
}

/// ‖ŵ‖ = σ r / √(‖g‖² − r²) for the sample's residual r.
pub fn w_hat_norm(sigma: f64, pair: &GaussianPair, sample: &OracleSample) -> Result<f64, OracleError> {
    let g2 = pair.g.iter().map(|x| x * x).sum::<f64>();
    let r = sample.residual_norm;
    let denom = g2 - r * r;
    if !(denom > 0.0) {
        return Err(OracleError::Divergent { residual: r, g_norm: g2.sqrt() });
    }
    Ok(sigma * r / denom.sqrt())
}

// ---------------------------------------------------------------------------
// Projected gradient ascent on (ν, λ)

/// Euclidean projection onto {ν ≥ 0, 0 ≤ λᵢ ≤ 2ν} (unsigned) or
/// {ν ≥ 0, λᵢ ≥ 0} (signed), in place.
pub fn project_dual_set(nu: &mut f64, lambda: &mut [f64], model: Model) {
    match model {
        Model::Signed => {
            *nu = nu.max(0.0);
            for l in lambda.iter_mut() {
                *l = l.max(0.0);
            }
        }
        Model::Unsigned => {
            // For fixed ν each λᵢ clamps to [0, 2ν]; the remaining 1-D problem
            // in ν is convex with derivative
            //   2(ν − ν₀) − 4 Σ_{λᵢ⁰ > 2ν} (λᵢ⁰ − 2ν).
            let nu0 = *nu;
            let slope = |v: f64| -> f64 {
                2.0 * (v - nu0)
                    - 4.0 * lambda.iter().filter(|&&l| l > 2.0 * v).map(|&l| l - 2.0 * v).sum::<f64>()
            };
            let v = if slope(0.0) >= 0.0 {
                0.0
            } else {
                let mut hi = nu0.abs().max(1.0);
                for &l in lambda.iter() {
                    hi = hi.max(0.5 * l);
                }
                let (mut a, mut b) = (0.0, hi.max(nu0));
                while slope(b) < 0.0 {
                    b *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if slope(mid) < 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                0.5 * (a + b)
            };
            *nu = v;
            for l in lambda.iter_mut() {
                *l = l.clamp(0.0, 2.0 * v);
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AscentOptions {
    pub max_iter: usize,
    /// Stop when the projected-gradient step norm ≤ tol·(1 + |f|).
    pub tol: f64,
    pub armijo: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self { max_iter: 50_000, tol: 1e-8, armijo: 1e-4 }
    }
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub nu: f64,
    pub lambda: Vec<f64>,
    pub value: f64,
    pub pg_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes a concave `f` over the model's (ν, λ) set. `f` returns the value
/// and gradient, or `None` outside its domain (the step is then shortened).
pub fn projected_gradient_ascent<F>(
    mut f: F,
    nu0: f64,
    lambda0: Vec<f64>,
    model: Model,
    opts: AscentOptions,
) -> AscentResult
where
    F: FnMut(f64, &[f64]) -> Option<(f64, f64, Vec<f64>)>,
{
    let mut nu = nu0;
    let mut lambda = lambda0;
    project_dual_set(&mut nu, &mut lambda, model);
    let (mut val, mut gnu, mut glam) = f(nu, &lambda).expect("starting point outside the objective domain");
    let mut step = 1.0;
    let mut pg_norm = f64::INFINITY;
    for it in 0..opts.max_iter {
        // projected-gradient step at unit length, the stationarity measure
        let mut pn = nu + gnu;
        let mut pl: Vec<f64> = lambda.iter().zip(&glam).map(|(l, g)| l + g).collect();
        project_dual_set(&mut pn, &mut pl, model);
        pg_norm = ((pn - nu).powi(2) + pl.iter().zip(&lambda).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sqrt();
        if pg_norm <= opts.tol * (1.0 + val.abs()) {
            return AscentResult { nu, lambda, value: val, pg_norm, iterations: it, converged: true };
        }
        // Armijo backtracking, starting one doubling above the last accepted step
        let mut t = (2.0f64 * step).min(1.0e6);
        let mut accepted = None;
        for _ in 0..80 {
            let mut tn = nu + t * gnu;
            let mut tl: Vec<f64> = lambda.iter().zip(&glam).map(|(l, g)| l + t * g).collect();
            project_dual_set(&mut tn, &mut tl, model);
            if let Some((tv, tgn, tgl)) = f(tn, &tl) {
                let dir = gnu * (tn - nu) + glam.iter().zip(tl.iter().zip(&lambda)).map(|(g, (a, b))| g * (a - b)).sum::<f64>();
                if tv >= val + opts.armijo * dir {
                    accepted = Some((tn, tl, tv, tgn, tgl));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((tn, tl, tv, tgn, tgl)) => {
                step = t;
                let progress = tv - val;
                nu = tn;
                lambda = tl;
                val = tv;
                gnu = tgn;
                glam = tgl;
                if progress <= 0.0 && t < 1e-14 {
                    break;
                }
            }
            None => break,
        }
    }
    AscentResult { nu, lambda, value: val, pg_norm, iterations: opts.max_iter, converged: false }
}

/// Value and gradient of the general objective; `None` when
/// ‖u‖² ≥ 0.999999·‖g‖² (keeps the square root away from its kink).
fn ov_value_grad(sigma: f64, g2: f64, h: &[f64], x_tilde: &[f64], nu: f64, lambda: &[f64]) -> Option<(f64, f64, Vec<f64>)> {
    let (u2, lin) = residual_and_cost(h, x_tilde, nu, lambda);
    if u2 >= 0.999_999 * g2 {
        return None;
    }
    let root = (g2 - u2).sqrt();
    let scale = sigma / root;
    let mut gnu = 0.0;
    let glam = (0..h.len())
        .map(|i| {
            let u = h[i] + nu - lambda[i];
            gnu -= scale * u;
            scale * u - x_tilde[i]
        })
        .collect();
    Some((sigma * root - lin, gnu, glam))
}

fn ov_pg_norm(sigma: f64, pair: &GaussianPair, x_tilde: &[f64], nu: f64, lambda: &[f64], model: Model) -> f64 {
    let g2 = pair.g.iter().map(|x| x * x).sum::<f64>();
    let (u2, _) = residual_and_cost(&pair.h, x_tilde, nu, lambda);
    if u2 >= g2 {
        return f64::INFINITY;
    }
    let scale = sigma / (g2 - u2).sqrt();
    let mut gnu = 0.0;
    let mut pl: Vec<f64> = (0..pair.n())
        .map(|i| {
            let u = pair.h[i] + nu - lambda[i];
            gnu -= scale * u;
            lambda[i] + scale * u - x_tilde[i]
        })
        .collect();
    let mut pn = nu + gnu;
    project_dual_set(&mut pn, &mut pl, model);
    ((pn - nu).powi(2) + pl.iter().zip(lambda).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sqrt()
}

/// Projected-gradient route to the general problem. Starts from ν = 0,
/// λ = 0, which is always strictly feasible when ‖h‖ < ‖g‖; otherwise from
/// the closed-form zero-residual point ν = max|hᵢ|, λ = clamp(h + ν).
pub fn xi_ov_general_pg(
    sigma: f64,
    pair: &GaussianPair,
    x_tilde: &[f64],
    model: Model,
    opts: AscentOptions,
) -> Result<OracleSample, OracleError> {
    prices_for(x_tilde, pair.n())?;
    let g2 = pair.g.iter().map(|x| x * x).sum::<f64>();
    let h = &pair.h;
    let (nu0, lambda0) = if h.iter().map(|x| x * x).sum::<f64>() < 0.5 * g2 {
        (0.0, vec![0.0; h.len()])
    } else {
        let nu = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (nu, h.iter().map(|x| x + nu).collect())
    };
    let res = projected_gradient_ascent(
        |nu, lambda| ov_value_grad(sigma, g2, h, x_tilde, nu, lambda),
        nu0,
        lambda0,
        model,
        opts,
    );
    let (u2, _) = residual_and_cost(h, x_tilde, res.nu, &res.lambda);
    Ok(finish(sigma, g2.sqrt(), res.nu, res.lambda, u2, res.value, res.pg_norm, res.iterations))
}

/// ξ_d(d) = √(d² + σ²)‖g‖ − min_{ν, λ} (d‖h + ν·1 − λ‖ + Σ λᵢ x̃ᵢ).
///
/// Writing d‖u‖ = min_{t>0} d(‖u‖²/(2t) + t/2) turns the inner problem into
/// min_{s>0} R(s)/s + d²s/2, where R(s) is the optimal value of
/// ½‖u‖² + s·x̃ᵀλ. Its derivative in s is (d²s² − ‖u(s)‖²)/(2s²), so the
/// minimizing s solves ‖u(s)‖ = d·s.
pub fn xi_d_objective(d: f64, sigma: f64, pair: &GaussianPair, x_tilde: &[f64], model: Model) -> Result<f64, OracleError> {
    Ok(xi_d_inner(d, sigma, pair, x_tilde, model)?.0)
}

/// Returns (ξ_d(d), ‖u*‖) where u* is the inner optimal residual.
fn xi_d_inner(d: f64, sigma: f64, pair: &GaussianPair, x_tilde: &[f64], model: Model) -> Result<(f64, f64), OracleError> {
    if !(d >= 0.0) {
        return Err(OracleError::Argument(format!("d must be nonnegative, got {d}")));
    }
    let prices = prices_for(x_tilde, pair.n())?;
    let head = (d * d + sigma * sigma).sqrt() * pair.g_norm();
    if d == 0.0 {
        // the inner maximum drops to λ = 0
        let r = norm(&pair.h);
        return Ok((head, r));
    }
    let gap = |s: f64| {
        let red = solve_reduced(&pair.h, &prices, s, model);
        d * s - red.u_norm_sq.sqrt()
    };
    let mut hi = 1.0;
    while gap(hi) < 0.0 {
        hi *= 2.0;
    }
    // Both terms of the gap vanish at s = 0 and ‖u(s)‖ is only resolved to
    // the precision of ν, so stay well above rounding level.
    let lo = 1e-12 * hi;
    let s = if gap(lo) >= 0.0 {
        lo
    } else {
        roots::bisect(gap, lo, hi, 1e-16 * hi).map_err(|e| OracleError::Argument(e.to_string()))?
    };
    let red = solve_reduced(&pair.h, &prices, s, model);
    let r = red.u_norm_sq.sqrt();
    Ok((head - d * r - red.linear, r))
}

/// Projected-gradient evaluation of ξ_d, used to cross-check the reduction.
/// Converges slowly: the inner objective is flat along rays in u.
pub fn xi_d_objective_pg(
    d: f64,
    sigma: f64,
    pair: &GaussianPair,
    x_tilde: &[f64],
    model: Model,
    opts: AscentOptions,
) -> Result<f64, OracleError> {
    if !(d >= 0.0) {
        return Err(OracleError::Argument(format!("d must be nonnegative, got {d}")));
    }
    prices_for(x_tilde, pair.n())?;
    let head = (d * d + sigma * sigma).sqrt() * pair.g_norm();
    let h = &pair.h;
    let inner = |nu: f64, lambda: &[f64]| -> Option<(f64, f64, Vec<f64>)> {
        let mut u = Vec::with_capacity(h.len());
        let mut lin = 0.0;
        for i in 0..h.len() {
            u.push(h[i] + nu - lambda[i]);
            lin += lambda[i] * x_tilde[i];
        }
        let r = norm(&u);
        let scale = if r > 0.0 { d / r } else { 0.0 };
        let gnu = -scale * u.iter().sum::<f64>();
        let glam = u.iter().zip(x_tilde).map(|(ui, c)| scale * ui - c).collect();
        Some((-d * r - lin, gnu, glam))
    };
    let res = projected_gradient_ascent(inner, 0.0, vec![0.0; h.len()], model, opts);
    Ok(head + res.value)
}

/// min_d ξ_d(d). ξ_d is convex in d with derivative (Danskin)
/// d‖g‖/√(d² + σ²) − ‖u*(d)‖, which is bisected to 1e-12 relative.
/// Returns (d_opt, value).
pub fn min_over_d(sigma: f64, pair: &GaussianPair, x_tilde: &[f64], model: Model) -> Result<(f64, f64), OracleError> {
    prices_for(x_tilde, pair.n())?;
    let g_norm = pair.g_norm();
    let slope = |d: f64| -> f64 {
        match xi_d_inner(d, sigma, pair, x_tilde, model) {
            Ok((_, r)) => d * g_norm / (d * d + sigma * sigma).sqrt() - r,
            Err(_) => f64::NAN,
        }
    };
    if slope(0.0) >= 0.0 {
        return Ok((0.0, xi_d_objective(0.0, sigma, pair, x_tilde, model)?));
    }
    let mut hi = 1.0;
    let mut grown = 0;
    while slope(hi) < 0.0 {
        hi *= 2.0;
        grown += 1;
        if grown > 60 {
            return Err(OracleError::Divergent { residual: norm(&pair.h), g_norm });
        }
    }
    let d = roots::bisect(slope, 0.0, hi, 1e-12 * hi).map_err(|e| OracleError::Argument(e.to_string()))?;
    Ok((d, xi_d_objective(d, sigma, pair, x_tilde, model)?))
}

/// Aggregate of oracle samples drawn at one (m, n, k) configuration.
///
/// ξ_ov/√n is a difference of two noisy squared norms under a square root, so
/// its finite-n distribution is skewed. The pooled estimates plug the sample
/// means of ‖g‖₂ and of the residual norm into the ξ and ‖ŵ‖ formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub samples: usize,
    /// Samples whose optimum reached the square-root boundary.
    pub divergent: usize,
    pub mean_xi: f64,
    pub std_xi: f64,
    pub median_xi: f64,
    pub mean_nu: f64,
    pub std_nu: f64,
    /// Mean of per-sample ‖ŵ‖ over the non-divergent samples.
    pub mean_w: f64,
    /// σ√(ḡ² − r̄²) − mean Σλ̂ᵢx̃ᵢ, divided by √n.
    pub pooled_xi: f64,
    /// σ r̄ / √(ḡ² − r̄²).
    pub pooled_w: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Summarizes samples of an n-dimensional problem. ξ values are divided by √n.
pub fn summarize(sigma: f64, n: usize, samples: &[OracleSample]) -> OracleSummary {
    let sqrt_n = (n as f64).sqrt();
    let mut xi: Vec<f64> = samples.iter().map(|s| s.xi_ov / sqrt_n).collect();
    let nu: Vec<f64> = samples.iter().map(|s| s.nu_hat).collect();
    let w: Vec<f64> = samples.iter().filter_map(|s| s.w_hat_norm).collect();
    let (mean_xi, std_xi) = mean_std(&xi);
    let (mean_nu, std_nu) = mean_std(&nu);
    xi.sort_by(f64::total_cmp);
    let median_xi = match xi.len() {
        0 => f64::NAN,
        l if l % 2 == 1 => xi[l / 2],
        l => 0.5 * (xi[l / 2 - 1] + xi[l / 2]),
    };
    let count = samples.len() as f64;
    let r_bar = samples.iter().map(|s| s.residual_norm).sum::<f64>() / count;
    let g_bar = samples.iter().map(|s| s.g_norm).sum::<f64>() / count;
    // Linear term Σλ̂ᵢx̃ᵢ recovered from the optimal value.
    let paid = samples
        .iter()
        .map(|s| sigma * (s.g_norm.powi(2) - s.residual_norm.powi(2)).max(0.0).sqrt() - s.xi_ov)
        .sum::<f64>()
        / count;
    let gap = (g_bar * g_bar - r_bar * r_bar).max(0.0).sqrt();
    let (pooled_xi, pooled_w) = if gap > 0.0 {
        ((sigma * gap - paid) / sqrt_n, sigma * r_bar / gap)
    } else {
        (f64::NAN, f64::INFINITY)
    };
    OracleSummary {
        samples: samples.len(),
        divergent: samples.len() - w.len(),
        mean_xi,
        std_xi,
        median_xi,
        mean_nu,
        std_nu,
        mean_w: mean_std(&w).0,
        pooled_xi,
        pooled_w,
    }
}
