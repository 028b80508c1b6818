//! Asymptotic (n → ∞) characterization of the worst-case LASSO error.
//!
//! Everything here is a deterministic function of the ratios α = m/n and
//! β = k/n. Two independent routes lead to the effective width ratio α_w:
//!
//! * the ℓ1 weak-threshold equation in `erfinv`, solved for α at fixed β
//!   ([`l1_threshold_alpha`]);
//! * the per-coordinate scalarization of the generic dual problem,
//!   `min_ν q(β, ν)` ([`optimal_nu`]).
//!
//! Below the threshold the worst-case error norm is ρσ with
//! ρ = √(α_w / (α − α_w)) and the optimal residual is σ√(α − α_w)·√n.
//! All values are stored for σ = 1; every formula is linear in σ.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::roots::{self, RootError};
use crate::special::{erfinv, std_normal_pdf, std_normal_sf, DomainError};

/// Sign prior on the unknown vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Arbitrary signs.
    Unsigned,
    /// Nonzero entries known to be positive (x ≥ 0 constraint).
    Signed,
}

impl Model {
    pub fn from_signed(signed: bool) -> Self {
        if signed {
            Model::Signed
        } else {
            Model::Unsigned
        }
    }

    pub fn is_signed(self) -> bool {
        matches!(self, Model::Signed)
    }

    /// Number of Gaussian tails that contribute off the support.
    fn tails(self) -> f64 {
        match self {
            Model::Unsigned => 2.0,
            Model::Signed => 1.0,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Unsigned => "unsigned",
            Model::Signed => "signed",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("invalid ratios: alpha = {alpha}, beta = {beta} (need 0 < alpha <= 1, 0 <= beta < alpha)")]
    InvalidRatios { alpha: f64, beta: f64 },
    #[error("beta = {0} outside the admissible range")]
    InvalidBeta(f64),
    #[error("rho must be positive, got {0}")]
    InvalidRho(f64),
    #[error("threshold root-finding failed: {0}")]
    Root(#[from] RootError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// A point (α, β) of the linear regime together with the sign model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub alpha: f64,
    pub beta: f64,
    pub model: Model,
}

impl PhaseParams {
    pub fn new(alpha: f64, beta: f64, model: Model) -> Result<Self, TheoryError> {
        if !(alpha > 0.0 && alpha <= 1.0 && beta >= 0.0 && beta < alpha) {
            return Err(TheoryError::InvalidRatios { alpha, beta });
        }
        Ok(Self { alpha, beta, model })
    }
}

/// Optimal dual scalar ν*. For β = 0 the scalar objective decreases all the
/// way to zero and the minimizer escapes to infinity.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NuStar {
    Finite(f64),
    Unbounded(UnboundedTag),
}

/// Serialized form of [`NuStar::Unbounded`]: the string `"unbounded"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnboundedTag {
    Unbounded,
}

impl NuStar {
    pub const UNBOUNDED: NuStar = NuStar::Unbounded(UnboundedTag::Unbounded);

    pub fn finite(self) -> Option<f64> {
        match self {
            NuStar::Finite(v) => Some(v),
            NuStar::Unbounded(_) => None,
        }
    }
}

impl Serialize for NuStar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            NuStar::Finite(v) => s.serialize_f64(*v),
            NuStar::Unbounded(t) => t.serialize(s),
        }
    }
}

impl fmt::Display for NuStar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NuStar::Finite(v) => write!(f, "{v}"),
            NuStar::Unbounded(_) => f.write_str("unbounded"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualOptimum {
    pub nu_star: NuStar,
    pub q_min: f64,
}

/// Fully characterized phase point (σ = 1 normalization).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPoint {
    pub params: PhaseParams,
    pub alpha_w: f64,
    pub nu_star: NuStar,
    /// Worst-case ‖w‖₂/σ; `None` above the threshold (the error diverges).
    pub rho: Option<f64>,
    /// Predicted optimal residual ‖y − Ax̂‖₂/(σ√n); `None` above the threshold.
    pub zeta_over_sqrt_n: Option<f64>,
    pub below_threshold: bool,
}

impl TheoryPoint {
    pub fn error_norm(&self, sigma: f64) -> Option<f64> {
        self.rho.map(|r| r * sigma)
    }

    pub fn zeta_over_sqrt_n_at(&self, sigma: f64) -> Option<f64> {
        self.zeta_over_sqrt_n.map(|z| z * sigma)
    }
}

/// ∫_ν^∞ (t − ν)² φ(t) dt = (1 + ν²)(1 − Φ(ν)) − ν φ(ν).
pub fn tail_second_moment(nu: f64) -> f64 {
    let v = (1.0 + nu * nu) * std_normal_sf(nu) - nu * std_normal_pdf(nu);
    v.max(0.0)
}

/// Per-coordinate value of the generic dual problem at fixed ν:
/// β(1 + ν²) from the support plus the clipped Gaussian tails off it.
pub fn q_value(beta: f64, nu: f64, model: Model) -> f64 {
    beta * (1.0 + nu * nu) + model.tails() * (1.0 - beta) * tail_second_moment(nu)
}

pub fn q_unsigned(beta: f64, nu: f64) -> f64 {
    q_value(beta, nu, Model::Unsigned)
}

pub fn q_signed(beta: f64, nu: f64) -> f64 {
    q_value(beta, nu, Model::Signed)
}

/// (q'(ν), q''(ν)).
fn q_derivatives(beta: f64, nu: f64, model: Model) -> (f64, f64) {
    let c = model.tails() * (1.0 - beta);
    let sf = std_normal_sf(nu);
    let d1 = 2.0 * beta * nu + 2.0 * c * (nu * sf - std_normal_pdf(nu));
    let d2 = 2.0 * beta + 2.0 * c * sf;
    (d1, d2)
}

/// Minimizer of the strictly convex q(β, ·) over ν ≥ 0.
pub fn optimal_nu(beta: f64, model: Model) -> Result<DualOptimum, TheoryError> {
    if !(0.0..1.0).contains(&beta) {
        return Err(TheoryError::InvalidBeta(beta));
    }
    if beta == 0.0 {
        return Ok(DualOptimum { nu_star: NuStar::UNBOUNDED, q_min: 0.0 });
    }
    // q'(0) = −2c·φ(0) < 0; grow the bracket until q' turns positive.
    let mut hi = 1.0;
    while q_derivatives(beta, hi, model).0 <= 0.0 {
        hi *= 2.0;
    }
    let nu = roots::newton_bisect(|v| q_derivatives(beta, v, model), 0.0, hi, 1e-15, 1e-13)?;
    Ok(DualOptimum { nu_star: NuStar::Finite(nu), q_min: q_value(beta, nu, model) })
}

/// Residual of the ℓ1 weak-threshold equation at (α, β).
///
/// Unsigned: (1−β)√(2/π)·e^{−e²}/α − √2·e with e = erfinv((1−α)/(1−β)).
/// Signed:   (1−β)√(1/(2π))·e^{−e²}/α − √2·e with e = erfinv(2(1−α)/(1−β) − 1).
///
/// Returns `(f, df/dα)`.
pub fn threshold_residual(alpha: f64, beta: f64, model: Model) -> Result<(f64, f64), DomainError> {
    let (p, dp, k) = match model {
        Model::Unsigned => ((1.0 - alpha) / (1.0 - beta), -1.0 / (1.0 - beta), (2.0 / PI).sqrt()),
        Model::Signed => (
            2.0 * (1.0 - alpha) / (1.0 - beta) - 1.0,
            -2.0 / (1.0 - beta),
            (0.5 / PI).sqrt(),
        ),
    };
    let e = erfinv(p)?;
    let gauss = (-e * e).exp();
    // d erfinv(p)/dp = (√π/2)·e^{e²}, so gauss·de/dα = (√π/2)·dp/dα
    let de = 0.5 * PI.sqrt() * dp / gauss;
    let f = (1.0 - beta) * k * gauss / alpha - SQRT_2 * e;
    let df = (1.0 - beta) * k * (-2.0 * e * 0.5 * PI.sqrt() * dp / alpha - gauss / (alpha * alpha))
        - SQRT_2 * de;
    Ok((f, df))
}

/// Solves the ℓ1 weak-threshold equation for α_w at sparsity ratio β.
/// The root lies in (β, 1).
pub fn l1_threshold_alpha(beta: f64, model: Model) -> Result<f64, TheoryError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(TheoryError::InvalidBeta(beta));
    }
    // Bracket in terms of the erfinv argument p, kept strictly inside its domain.
    let alpha_of_p = |p: f64| match model {
        Model::Unsigned => 1.0 - p * (1.0 - beta),
        Model::Signed => 1.0 - 0.5 * (1.0 + p) * (1.0 - beta),
    };
    let p_low = match model {
        Model::Unsigned => 0.0,
        Model::Signed => -1.0 + 1e-12,
    };
    let hi = alpha_of_p(p_low);
    let mut lo = f64::NAN;
    for eps in [2f64.powi(-40), 2f64.powi(-52)] {
        let cand = alpha_of_p(1.0 - eps);
        if threshold_residual(cand, beta, model)?.0 < 0.0 {
            lo = cand;
            break;
        }
        lo = cand;
    }
    let f = |a: f64| threshold_residual(a, beta, model).unwrap_or((f64::NAN, f64::NAN));
    Ok(roots::newton_bisect(f, lo, hi, 1e-16, 1e-13)?)
}

/// Effective width ratio α_w(β); zero for β = 0.
pub fn effective_alpha(beta: f64, model: Model) -> Result<f64, TheoryError> {
    if beta == 0.0 {
        Ok(0.0)
    } else {
        l1_threshold_alpha(beta, model)
    }
}

/// ρ = √(α_w / (α − α_w)).
pub fn rho_from_alpha_w(alpha: f64, alpha_w: f64) -> f64 {
    (alpha_w / (alpha - alpha_w)).sqrt()
}

pub fn characterize(params: PhaseParams) -> Result<TheoryPoint, TheoryError> {
    let alpha_w = effective_alpha(params.beta, params.model)?;
    let nu_star = optimal_nu(params.beta, params.model)?.nu_star;
    let below = alpha_w < params.alpha;
    let (rho, zeta) = if below {
        (
            Some(rho_from_alpha_w(params.alpha, alpha_w)),
            Some((params.alpha - alpha_w).sqrt()),
        )
    } else {
        (None, None)
    };
    Ok(TheoryPoint {
        params,
        alpha_w,
        nu_star,
        rho,
        zeta_over_sqrt_n: zeta,
        below_threshold: below,
    })
}

/// Largest β with α_w(β) < α, i.e. the ℓ1 weak threshold at α.
pub fn weak_threshold_beta(alpha: f64, model: Model) -> Result<f64, TheoryError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TheoryError::InvalidRatios { alpha, beta: f64::NAN });
    }
    let g = |b: f64| l1_threshold_alpha(b, model).map(|a| a - alpha).unwrap_or(f64::NAN);
    Ok(roots::bisect(g, alpha * 1e-12, alpha, 1e-15)?)
}

/// β on the level set ρ(α, β) = `rho`, if one exists.
pub fn contour_beta(alpha: f64, rho: f64, model: Model) -> Result<f64, TheoryError> {
    if !(rho > 0.0) {
        return Err(TheoryError::InvalidRho(rho));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TheoryError::InvalidRatios { alpha, beta: f64::NAN });
    }
    let target = alpha * rho * rho / (1.0 + rho * rho);
    // α_w(β) > β, so the crossing lies in (0, target).
    let g = |b: f64| l1_threshold_alpha(b, model).map(|a| a - target).unwrap_or(f64::NAN);
    Ok(roots::bisect(g, target * 1e-12, target, 1e-16)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourCurve {
    pub rho: f64,
    pub model: Model,
    /// (α, β) pairs with α strictly increasing.
    pub points: Vec<(f64, f64)>,
    /// Grid values for which no admissible β was found.
    pub omitted: Vec<f64>,
}

/// Traces the level set of the worst-case error ρ over an α grid.
pub fn contour_curve(rho: f64, model: Model, alpha_grid: &[f64]) -> Result<ContourCurve, TheoryError> {
    if !(rho > 0.0) {
        return Err(TheoryError::InvalidRho(rho));
    }
    let mut grid: Vec<f64> = alpha_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut points = Vec::with_capacity(grid.len());
    let mut omitted = Vec::new();
    for alpha in grid {
        match contour_beta(alpha, rho, model) {
            Ok(beta) if beta > 0.0 && beta < alpha => points.push((alpha, beta)),
            _ => omitted.push(alpha),
        }
    }
    if !omitted.is_empty() {
        log::warn!("contour rho = {rho}: no admissible beta for alpha in {omitted:?}");
    }
    Ok(ContourCurve { rho, model, points, omitted })
}

/// Evenly spaced α grid on [lo, hi] with `count` points.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
