//! LASSO-type recovery algorithms for y = A x̃ + v.
//!
//! All three solvers share one engine: FISTA with adaptive restart on
//! ½‖y − Ax‖² + g(x), where g is either the indicator of an ℓ1 ball or a
//! weighted ℓ1 norm (each optionally restricted to x ≥ 0).
//!
//! * [`solve_constrained_lasso`]: min ‖y − Ax‖ over the ball, directly.
//! * [`solve_penalized_lasso`]: min ‖y − Ax‖ + λ‖x‖₁. Since
//!   ‖r‖ = min_{s>0} ‖r‖²/(2s) + s/2, the optimum is the squared LASSO with
//!   weight λs at the fixed point s = ρ(λs), ρ being that LASSO's residual
//!   norm. The fixed point is found by secant steps and regula falsi.
//! * [`solve_socp`]: min ‖x‖₁ s.t. ‖y − Ax‖ ≤ r, by root finding on the
//!   squared LASSO weight, whose residual is nondecreasing in the weight.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Seed;
use crate::roots;
use crate::theory::{self, Model, PhaseParams, TheoryError};

/// Residuals below this fraction of ‖y‖ count as vanished.
const DEGENERATE_RESIDUAL: f64 = 1e-12;

/// One sampled noisy system.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    /// m × n measurement matrix.
    pub a: Array2<f64>,
    pub x_tilde: Array1<f64>,
    pub v: Array1<f64>,
    /// y = A·x̃ + v
    pub y: Array1<f64>,
    pub sigma: f64,
    pub seed: Seed,
}

impl ProblemInstance {
    pub fn new(a: Array2<f64>, x_tilde: Array1<f64>, v: Array1<f64>, sigma: f64, seed: Seed) -> Self {
        assert_eq!(a.ncols(), x_tilde.len(), "x_tilde length must equal the column count");
        assert_eq!(a.nrows(), v.len(), "noise length must equal the row count");
        let y = a.dot(&x_tilde) + &v;
        Self { a, x_tilde, v, y, sigma, seed }
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn x_tilde_l1(&self) -> f64 {
        self.x_tilde.iter().map(|x| x.abs()).sum()
    }
}

/// Solver output. `kkt_residual` is solver specific:
/// * constrained: gradient-mapping norm of ½‖y − Ax‖² divided by ‖Aᵀy‖;
/// * penalized: largest distance of Aᵀ(y − Ax)/‖y − Ax‖ from λ∂‖x‖₁, over λ;
/// * socp: |‖y − Ax‖ − r| / r at the returned weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub x_hat: Vec<f64>,
    /// ‖x̂ − x̃‖₂
    pub w_norm: f64,
    /// ‖y − Ax̂‖₂
    pub zeta: f64,
    /// constrained: ‖y − Ax̂‖; penalized: ‖y − Ax̂‖ + λ(‖x̂‖₁ − ‖x̃‖₁);
    /// socp: ‖x̂‖₁.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

impl SolveReport {
    fn new(inst: &ProblemInstance, x: Array1<f64>, objective: f64, iterations: usize, converged: bool, kkt_residual: f64) -> Self {
        let w_norm = (&x - &inst.x_tilde).mapv(|d| d * d).sum().sqrt();
        let zeta = residual_norm(inst, &x);
        Self { x_hat: x.to_vec(), w_norm, zeta, objective, iterations, converged, kkt_residual }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("iteration limit reached (kkt residual {})", .0.kkt_residual)]
    MaxIterations(Box<SolveReport>),
    #[error("time limit reached (kkt residual {})", .0.kkt_residual)]
    TimeLimit(Box<SolveReport>),
    #[error("residual vanished (|y - Ax| = {}); the non-squared objective is not smooth there", .0.zeta)]
    DegenerateResidual(Box<SolveReport>),
    #[error("no x meets |y - Ax| <= {r_socp}; smallest residual found {min_residual}")]
    Infeasible { r_socp: f64, min_residual: f64 },
    #[error("(alpha, beta) = ({alpha}, {beta}) is above the l1 threshold")]
    AboveThreshold { alpha: f64, beta: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

impl SolverError {
    /// The best iterate carried by iteration-limit, time-limit and degenerate errors.
    pub fn report(&self) -> Option<&SolveReport> {
        match self {
            SolverError::MaxIterations(r) | SolverError::TimeLimit(r) | SolverError::DegenerateResidual(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Iteration cap for each FISTA run.
    pub max_iter: usize,
    /// Declared stationarity tolerance (see [`SolveReport::kkt_residual`]).
    pub tol: f64,
    /// Stop when the best objective improved by at most `stall_tol`
    /// (relative) over the last `stall_window` iterations.
    pub stall_window: usize,
    pub stall_tol: f64,
    /// Wall-clock budget per solve, checked between iterations.
    pub time_limit_secs: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iter: 20_000, tol: 1e-10, stall_window: 50, stall_tol: 1e-12, time_limit_secs: None }
    }
}

/// Error for an unconverged run: the time limit if it has passed, otherwise
/// the iteration cap.
fn unconverged(report: SolveReport, deadline: Option<Instant>) -> SolverError {
    if deadline.is_some_and(|d| Instant::now() > d) {
        SolverError::TimeLimit(Box::new(report))
    } else {
        SolverError::MaxIterations(Box::new(report))
    }
}

impl SolverOptions {
    fn deadline(&self) -> Option<Instant> {
        self.time_limit_secs
            .filter(|t| t.is_finite() && *t >= 0.0)
            .map(|t| Instant::now() + Duration::from_secs_f64(t))
    }
}

// ---------------------------------------------------------------------------
// ℓ1 projections

/// Threshold θ ≥ 0 with Σ (uᵢ − θ)₊ = radius for nonnegative `u` whose sum
/// exceeds the radius.
fn l1_threshold(u: &[f64], radius: f64) -> f64 {
    let mut sorted = u.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in sorted.iter().enumerate() {
        cum += uj;
        let t = (cum - radius) / (j + 1) as f64;
        if uj > t {
            theta = t;
        } else {
            break;
        }
    }
    theta.max(0.0)
}

fn project_in_place(x: &mut [f64], radius: f64, model: Model) {
    if model.is_signed() {
        for xi in x.iter_mut() {
            *xi = xi.max(0.0);
        }
    }
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return;
    }
    if radius == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let theta = l1_threshold(&mags, radius);
    for xi in x.iter_mut() {
        *xi = xi.signum() * (xi.abs() - theta).max(0.0);
    }
    // rounding in the cumulative sum can leave the result a few ulps outside
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 > radius {
        let scale = radius / l1;
        x.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Euclidean projection onto {z : ‖z‖₁ ≤ radius}.
pub fn project_l1_ball(x: &[f64], radius: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    project_in_place(&mut out, radius.max(0.0), Model::Unsigned);
    out
}

/// Euclidean projection onto {z ≥ 0 : Σ zᵢ ≤ radius}: clamp, then threshold
/// the clamped vector (zᵢ = (xᵢ − θ)₊ with θ ≥ 0 is the KKT form of the
/// joint projection).
pub fn project_l1_ball_nonneg(x: &[f64], radius: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    project_in_place(&mut out, radius.max(0.0), Model::Signed);
    out
}

/// Projection onto the model's feasible set of radius `radius`.
pub fn project_l1(x: &[f64], radius: f64, model: Model) -> Vec<f64> {
    let mut out = x.to_vec();
    project_in_place(&mut out, radius.max(0.0), model);
    out
}

// ---------------------------------------------------------------------------
// FISTA engine

#[derive(Debug, Clone, Copy)]
enum Reg {
    Ball { radius: f64, model: Model },
    L1 { weight: f64, model: Model },
}

impl Reg {
    fn prox(&self, z: &mut Array1<f64>, step: f64) {
        match *self {
            Reg::Ball { radius, model } => {
                project_in_place(z.as_slice_mut().expect("contiguous"), radius, model)
            }
            Reg::L1 { weight, model } => {
                let t = weight * step;
                match model {
                    Model::Unsigned => z.mapv_inplace(|v| v.signum() * (v.abs() - t).max(0.0)),
                    Model::Signed => z.mapv_inplace(|v| (v - t).max(0.0)),
                }
            }
        }
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        match *self {
            Reg::Ball { .. } => 0.0,
            Reg::L1 { weight, .. } => weight * l1_norm(x),
        }
    }
}

fn l1_norm(x: &Array1<f64>) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

fn norm2(x: &Array1<f64>) -> f64 {
    x.dot(x).sqrt()
}

fn residual_norm(inst: &ProblemInstance, x: &Array1<f64>) -> f64 {
    norm2(&(&inst.y - &inst.a.dot(x)))
}

struct Fista {
    x: Array1<f64>,
    iterations: usize,
    converged: bool,
}

/// Minimizes ½‖y − Ax‖² + reg(x) from `x0`. `lip` is a running estimate of
/// ‖A‖₂², doubled whenever the quadratic upper bound fails. Stops when the
/// gradient mapping at the extrapolated point is ≤ `tol_abs`, or when the
/// best objective stalls. Past `deadline` the run ends unconverged.
#[allow(clippy::too_many_arguments)]
fn fista(
    a: &Array2<f64>,
    y: &Array1<f64>,
    x0: Array1<f64>,
    reg: Reg,
    lip: &mut f64,
    tol_abs: f64,
    opts: &SolverOptions,
    deadline: Option<Instant>,
) -> Fista {
    let mut x = x0;
    reg.prox(&mut x, 0.0);
    let mut ax = a.dot(&x);
    let mut z = x.clone();
    let mut az = ax.clone();
    let mut t = 1.0f64;
    let mut best = f64::INFINITY;
    let mut history: Vec<f64> = Vec::new();
    for it in 1..=opts.max_iter {
        if it % 32 == 0 && deadline.is_some_and(|d| Instant::now() > d) {
            return Fista { x, iterations: it, converged: false };
        }
        let grad = a.t().dot(&(&az - y));
        let (xn, axn, fxn, d) = loop {
            let step = 1.0 / *lip;
            let mut xn = &z - &(&grad * step);
            reg.prox(&mut xn, step);
            let axn = a.dot(&xn);
            let d = &xn - &z;
            // for the quadratic loss the majorization test is ‖A d‖² ≤ L‖d‖²;
            // this form avoids cancelling against ‖y‖² near interpolation
            let ad = &axn - &az;
            if ad.dot(&ad) <= *lip * d.dot(&d) * (1.0 + 1e-10) || *lip > 1e300 {
                let rn = &axn - y;
                break (xn, axn, 0.5 * rn.dot(&rn), d);
            }
            *lip *= 2.0;
        };
        let gm = *lip * norm2(&d);
        let obj = fxn + reg.value(&xn);
        // gradient-based adaptive restart
        let restart = (&z - &xn).dot(&(&xn - &x)) > 0.0;
        let (t_next, momentum) = if restart {
            (1.0, 0.0)
        } else {
            let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            (tn, (t - 1.0) / tn)
        };
        z = &xn + &((&xn - &x) * momentum);
        az = &axn + &((&axn - &ax) * momentum);
        x = xn;
        ax = axn;
        t = t_next;
        if gm <= tol_abs {
            return Fista { x, iterations: it, converged: true };
        }
        best = best.min(obj);
        history.push(best);
        if history.len() > opts.stall_window {
            let old = history[history.len() - 1 - opts.stall_window];
            if old - best <= opts.stall_tol * best.abs().max(f64::MIN_POSITIVE) {
                return Fista { x, iterations: it, converged: true };
            }
        }
    }
    Fista { x, iterations: opts.max_iter, converged: false }
}

/// Power iteration for ‖A‖₂² (20 steps, 1e-6 relative), inflated slightly;
/// FISTA's backtracking corrects any remaining underestimate.
fn lipschitz_estimate(a: &Array2<f64>) -> f64 {
    let n = a.ncols();
    let mut v = Array1::from_iter((0..n).map(|i| 1.0 + (i % 7) as f64 * 0.1));
    let mut est = 0.0;
    for _ in 0..20 {
        let nv = norm2(&v);
        if nv == 0.0 {
            return 1.0;
        }
        v /= nv;
        let w = a.t().dot(&a.dot(&v));
        let next = norm2(&w);
        let done = (next - est).abs() <= 1e-6 * next;
        est = next;
        v = w;
        if done {
            break;
        }
    }
    (1.01 * est).max(f64::MIN_POSITIVE)
}

/// Gradient-mapping norm of ½‖y − Ax‖² + reg at x with step 1/lip.
fn gradient_mapping(a: &Array2<f64>, y: &Array1<f64>, x: &Array1<f64>, reg: Reg, lip: f64) -> f64 {
    let grad = a.t().dot(&(&a.dot(x) - y));
    let mut p = x - &(&grad / lip);
    reg.prox(&mut p, 1.0 / lip);
    lip * norm2(&(x - &p))
}

// ---------------------------------------------------------------------------
// Solvers

fn check_instance(inst: &ProblemInstance) -> Result<(), SolverError> {
    if inst.m() == 0 || inst.n() == 0 {
        return Err(SolverError::Argument("empty problem".into()));
    }
    Ok(())
}

/// min ‖y − Ax‖₂ s.t. ‖x‖₁ ≤ radius (and x ≥ 0 when signed).
pub fn solve_constrained_lasso(inst: &ProblemInstance, radius: f64, model: Model, opts: &SolverOptions) -> Result<SolveReport, SolverError> {
    check_instance(inst)?;
    if !(radius > 0.0) {
        return Err(SolverError::Argument(format!("radius must be positive, got {radius}")));
    }
    let scale = norm2(&inst.a.t().dot(&inst.y)).max(f64::MIN_POSITIVE);
    let reg = Reg::Ball { radius, model };
    let mut lip = lipschitz_estimate(&inst.a);
    let deadline = opts.deadline();
    let run = fista(&inst.a, &inst.y, Array1::zeros(inst.n()), reg, &mut lip, opts.tol * scale, opts, deadline);
    let kkt = gradient_mapping(&inst.a, &inst.y, &run.x, reg, lip) / scale;
    let zeta = residual_norm(inst, &run.x);
    let report = SolveReport::new(inst, run.x, zeta, run.iterations, run.converged, kkt);
    if run.converged {
        Ok(report)
    } else {
        Err(unconverged(report, deadline))
    }
}

/// max_i of the distance from gᵢ to λ·∂|xᵢ| (signed: to the subdifferential
/// of λxᵢ + indicator{xᵢ ≥ 0}), divided by λ.
fn subgradient_distance(g: &Array1<f64>, x: &Array1<f64>, lambda: f64, model: Model) -> f64 {
    g.iter()
        .zip(x.iter())
        .map(|(&gi, &xi)| {
            if xi > 0.0 {
                (gi - lambda).abs()
            } else if xi < 0.0 {
                (gi + lambda).abs()
            } else {
                match model {
                    Model::Unsigned => (gi.abs() - lambda).max(0.0),
                    Model::Signed => (gi - lambda).max(0.0),
                }
            }
        })
        .fold(0.0, f64::max)
        / lambda
}

/// Largest useful penalty: at or above it, x = 0 is optimal for the squared
/// LASSO with that weight.
fn zero_weight(inst: &ProblemInstance, model: Model) -> f64 {
    let c = inst.a.t().dot(&inst.y);
    match model {
        Model::Unsigned => c.iter().fold(0.0, |m, v| m.max(v.abs())),
        Model::Signed => c.iter().fold(0.0, |m, &v| m.max(v)),
    }
}

/// Squared-LASSO solutions min ½‖y − Ax‖² + μ‖x‖₁ along a sequence of
/// weights, each warm-started from the previous solution. Solves stop when
/// the gradient mapping is below `rel_tol·μ`.
struct WeightPath<'a> {
    inst: &'a ProblemInstance,
    model: Model,
    opts: &'a SolverOptions,
    rel_tol: f64,
    lip: f64,
    x: Array1<f64>,
    iterations: usize,
    all_converged: bool,
    deadline: Option<Instant>,
}

impl<'a> WeightPath<'a> {
    fn new(inst: &'a ProblemInstance, model: Model, opts: &'a SolverOptions, rel_tol: f64) -> Self {
        Self {
            inst,
            model,
            opts,
            rel_tol,
            lip: lipschitz_estimate(&inst.a),
            x: Array1::zeros(inst.n()),
            iterations: 0,
            all_converged: true,
            deadline: opts.deadline(),
        }
    }

    /// Returns the residual norm at weight `mu`; the solution is left in `self.x`.
    fn solve(&mut self, mu: f64) -> f64 {
        let reg = Reg::L1 { weight: mu, model: self.model };
        let start = std::mem::replace(&mut self.x, Array1::zeros(0));
        let run = fista(&self.inst.a, &self.inst.y, start, reg, &mut self.lip, self.rel_tol * mu, self.opts, self.deadline);
        self.iterations += run.iterations;
        self.all_converged &= run.converged;
        self.x = run.x;
        residual_norm(self.inst, &self.x)
    }
}

/// min ‖y − Ax‖₂ + λ‖x‖₁ (and x ≥ 0 when signed). The declared tolerance for
/// [`SolveReport::kkt_residual`] is `max(opts.tol, 1e-6)`.
///
/// The optimum is the squared-LASSO solution at weight λs where s solves
/// ρ(λs) = s, ρ being the squared-LASSO residual norm; s is found by secant
/// steps from s = ‖y‖ until bracketed, then by regula falsi.
pub fn solve_penalized_lasso(inst: &ProblemInstance, lambda: f64, model: Model, opts: &SolverOptions) -> Result<SolveReport, SolverError> {
    check_instance(inst)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SolverError::Argument(format!("lambda must be positive, got {lambda}")));
    }
    let y_norm = norm2(&inst.y);
    let shift = lambda * inst.x_tilde_l1();
    let tol = opts.tol.max(1e-6);
    if y_norm == 0.0 || zero_weight(inst, model) <= lambda * y_norm {
        let x = Array1::zeros(inst.n());
        return Ok(SolveReport::new(inst, x, y_norm - shift, 0, true, 0.0));
    }
    let mut path = WeightPath::new(inst, model, opts, 1e-3 * tol);
    // (|φ|/s, s, x) of the best evaluation
    let mut best: (f64, f64, Array1<f64>) = (f64::INFINITY, y_norm, Array1::zeros(inst.n()));
    let ftol = 0.05 * tol;
    let mut degenerate = false;
    {
        let mut phi = |s: f64| -> f64 {
            let rho = path.solve(lambda * s);
            let f = rho - s;
            if f.abs() / s < best.0 {
                best = (f.abs() / s, s, path.x.clone());
            }
            f
        };
        // ψ(s) = φ(s)/s is nonincreasing in s and ψ(‖y‖) ≤ 0. Search downward
        // in ln s: first the fixed-point update s ← ρ(λs), then secant steps.
        let t_floor = (DEGENERATE_RESIDUAL * y_norm).ln();
        let mut psi = |t: f64| {
            let s = t.exp();
            phi(s) / s
        };
        let t0 = y_norm.ln();
        let mut p = (t0, psi(t0));
        let mut q = ((t0 + (1.0 + p.1).max(1e-300).ln()).max(t_floor), 0.0);
        q.1 = psi(q.0);
        let mut bracket = None;
        for _ in 0..100 {
            if q.1.abs() <= ftol {
                break;
            }
            if q.1 > 0.0 {
                bracket = Some((p, q));
                break;
            }
            if q.0 <= t_floor {
                degenerate = true;
                break;
            }
            let mut c = q.0 - q.1 * (q.0 - p.0) / (q.1 - p.1);
            if !(c < q.0) || !c.is_finite() {
                c = q.0 + (1.0 + q.1).max(1e-300).ln();
            }
            // at most double the previous step so a flat ψ cannot jump to the floor
            c = c.max(q.0 - 2.0 * (p.0 - q.0).abs().max(std::f64::consts::LN_2));
            p = q;
            q = (c.max(t_floor), 0.0);
            q.1 = psi(q.0);
        }
        if let Some((neg, pos)) = bracket {
            roots::illinois(psi, pos, neg, 1e-15, ftol, 200);
        }
    }
    if degenerate {
        let x = path.x.clone();
        let r_norm = norm2(&(&inst.y - &inst.a.dot(&x)));
        let report = SolveReport::new(inst, x.clone(), r_norm + lambda * l1_norm(&x) - shift, path.iterations, false, f64::INFINITY);
        return Err(SolverError::DegenerateResidual(Box::new(report)));
    }
    let (_, mut s_best, mut x) = best;
    let kkt_of = |x: &Array1<f64>| -> (f64, f64) {
        let r = &inst.y - &inst.a.dot(x);
        let r_norm = norm2(&r);
        let g = inst.a.t().dot(&r) / r_norm;
        (r_norm, subgradient_distance(&g, x, lambda, model))
    };
    let (mut r_norm, mut kkt) = kkt_of(&x);
    // polish: fixed-point steps with tighter inner solves
    for _ in 0..6 {
        if kkt <= tol || r_norm < DEGENERATE_RESIDUAL * y_norm {
            break;
        }
        path.rel_tol *= 0.1;
        path.x = x.clone();
        s_best = 0.5 * (s_best + r_norm);
        path.solve(lambda * s_best);
        let (rn, k) = kkt_of(&path.x);
        if k < kkt {
            x = path.x.clone();
            r_norm = rn;
            kkt = k;
            s_best = rn;
        }
    }
    let obj = r_norm + lambda * l1_norm(&x) - shift;
    if r_norm < DEGENERATE_RESIDUAL * y_norm {
        let report = SolveReport::new(inst, x, obj, path.iterations, false, f64::INFINITY);
        return Err(SolverError::DegenerateResidual(Box::new(report)));
    }
    let converged = kkt <= tol;
    let report = SolveReport::new(inst, x, obj, path.iterations, converged, kkt);
    if converged {
        Ok(report)
    } else {
        Err(unconverged(report, path.deadline))
    }
}

/// min ‖x‖₁ s.t. ‖y − Ax‖₂ ≤ r_socp (and x ≥ 0 when signed). Returns the
/// squared-LASSO solution whose residual is within `max(opts.tol, 1e-6)`
/// (relative) of r_socp. The weight is bracketed by decreasing it from the
/// zero-solution level, then located by regula falsi in log μ.
pub fn solve_socp(inst: &ProblemInstance, r_socp: f64, model: Model, opts: &SolverOptions) -> Result<SolveReport, SolverError> {
    check_instance(inst)?;
    if !(r_socp > 0.0) {
        return Err(SolverError::Argument(format!("r_socp must be positive, got {r_socp}")));
    }
    let y_norm = norm2(&inst.y);
    if r_socp >= y_norm {
        let x = Array1::zeros(inst.n());
        return Ok(SolveReport::new(inst, x, 0.0, 0, true, 0.0));
    }
    let tol = opts.tol.max(1e-6);
    let mu_max = zero_weight(inst, model);
    if !(mu_max > 0.0) {
        // x = 0 already minimizes the residual over the feasible orthant
        return Err(SolverError::Infeasible { r_socp, min_residual: y_norm });
    }
    let mut path = WeightPath::new(inst, model, opts, 1e-4 * tol);
    let mut best: (f64, f64, Array1<f64>) = (f64::INFINITY, y_norm, Array1::zeros(inst.n()));
    let floor = (mu_max * 1e-12).ln();
    let infeasible;
    {
        let mut psi = |t: f64| -> f64 {
            let rho = path.solve(t.exp());
            let f = (rho - r_socp) / r_socp;
            // prefer the feasible side when two candidates are equally close
            let key = if f <= 0.0 { f.abs() } else { f + 1e-300 };
            if key < best.0 {
                best = (key, rho, path.x.clone());
            }
            f
        };
        let mut hi = (mu_max.ln(), (y_norm - r_socp) / r_socp);
        let mut lo = None;
        let mut t = hi.0;
        while t > floor {
            t -= 4f64.ln();
            let f = psi(t);
            if f <= 0.0 {
                lo = Some((t, f));
                break;
            }
            hi = (t, f);
        }
        infeasible = lo.is_none();
        if let Some(lo) = lo {
            roots::illinois(&mut psi, lo, hi, 1e-15, 0.5 * tol, 200);
        }
    }
    let (_, rho, x) = best;
    if infeasible {
        return Err(SolverError::Infeasible { r_socp, min_residual: rho });
    }
    let gap = (rho - r_socp).abs() / r_socp;
    let converged = path.all_converged && gap <= tol;
    let l1 = l1_norm(&x);
    let report = SolveReport::new(inst, x, l1, path.iterations, converged, gap);
    if converged {
        Ok(report)
    } else {
        Err(unconverged(report, path.deadline))
    }
}

/// Penalty weight λ = ν* from the scalar dual problem.
pub fn lambda_from_theory(params: PhaseParams) -> Result<f64, SolverError> {
    let point = theory::characterize(params)?;
    match (point.below_threshold, point.nu_star.finite()) {
        (true, Some(nu)) => Ok(nu),
        (true, None) => Err(SolverError::Argument("beta = 0 has no finite penalty weight".into())),
        (false, _) => Err(SolverError::AboveThreshold { alpha: params.alpha, beta: params.beta }),
    }
}

/// r = σ √(α − α_w) √n.
pub fn r_socp_from_theory(params: PhaseParams, sigma: f64, n: usize) -> Result<f64, SolverError> {
    let point = theory::characterize(params)?;
    match point.zeta_over_sqrt_n_at(sigma) {
        Some(z) => Ok(z * (n as f64).sqrt()),
        None => Err(SolverError::AboveThreshold { alpha: params.alpha, beta: params.beta }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_instance(m: usize, n: usize, k: usize, mag: f64, sigma: f64, seed: u64) -> ProblemInstance {
        let s = Seed(seed);
        let a = Array2::from_shape_vec((m, n), s.child(0).normals().take_vec(m * n)).unwrap();
        let x = Array1::from_iter((0..n).map(|i| if i >= n - k { mag } else { 0.0 }));
        let v = Array1::from(s.child(1).normals().take_vec(m)) * sigma;
        ProblemInstance::new(a, x, v, sigma, s)
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_l1_ball(&[0.2, -0.3], 1.0), vec![0.2, -0.3]);
        assert_eq!(project_l1_ball(&[3.0, 0.0], 1.0), vec![1.0, 0.0]);
        assert_eq!(project_l1_ball_nonneg(&[3.0, -5.0], 1.0), vec![1.0, 0.0]);
        assert_eq!(project_l1_ball(&[1.0, -2.0], 0.0), vec![0.0, 0.0]);
    }

    #[test]
    fn instance_is_consistent() {
        let inst = gaussian_instance(10, 20, 3, 2.0, 0.5, 4);
        assert_eq!(inst.y, inst.a.dot(&inst.x_tilde) + &inst.v);
        assert_eq!(inst.x_tilde_l1(), 6.0);
    }

    #[test]
    fn noiseless_constrained_recovers_signal() {
        let inst = gaussian_instance(60, 120, 6, 5.0, 0.0, 11);
        let rep = solve_constrained_lasso(&inst, inst.x_tilde_l1(), Model::Unsigned, &SolverOptions::default()).unwrap();
        assert!(rep.zeta <= 1e-8 * norm2(&inst.y), "zeta {} w {} it {} kkt {}", rep.zeta, rep.w_norm, rep.iterations, rep.kkt_residual);
        assert!(rep.w_norm <= 1e-6 * norm2(&inst.x_tilde), "{}", rep.w_norm);
    }

    #[test]
    fn penalized_large_lambda_gives_zero() {
        let inst = gaussian_instance(20, 40, 3, 1.0, 1.0, 5);
        let lam = 2.0 * zero_weight(&inst, Model::Unsigned) / norm2(&inst.y);
        let rep = solve_penalized_lasso(&inst, lam, Model::Unsigned, &SolverOptions::default()).unwrap();
        assert!(rep.x_hat.iter().all(|&v| v == 0.0));
        assert!((rep.objective + lam * inst.x_tilde_l1() - norm2(&inst.y)).abs() < 1e-12);
    }

    #[test]
    fn socp_loose_radius_gives_zero() {
        let inst = gaussian_instance(20, 40, 3, 1.0, 1.0, 6);
        let rep = solve_socp(&inst, 1.5 * norm2(&inst.y), Model::Signed, &SolverOptions::default()).unwrap();
        assert!(rep.x_hat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn theory_calibration() {
        let p = PhaseParams::new(0.5, 0.135, Model::Unsigned).unwrap();
        assert!((lambda_from_theory(p).unwrap() - 1.0227).abs() < 1e-3);
        let r = r_socp_from_theory(p, 1.0, 400).unwrap();
        assert!((r / 6.324 - 1.0).abs() < 1e-3, "{r}");
        let above = PhaseParams::new(0.5, 0.4, Model::Unsigned).unwrap();
        assert!(matches!(lambda_from_theory(above), Err(SolverError::AboveThreshold { .. })));
        assert!(matches!(r_socp_from_theory(above, 1.0, 10), Err(SolverError::AboveThreshold { .. })));
    }
}
