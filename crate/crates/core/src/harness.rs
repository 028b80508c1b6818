//! Seeded Monte Carlo experiments.
//!
//! Trial `t` of a run with master seed `S` uses the sub-seed `S.child(t)`;
//! within a trial, child 0 fills A (row-major), child 1 the noise and
//! child 2 the (g, h) pair of the dual oracle. Trials run on the rayon pool
//! and are reduced in trial order, so results do not depend on scheduling.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::oracle::{self, OracleSummary};
use crate::rng::Seed;
use crate::solvers::{self, ProblemInstance, SolverError, SolverOptions};
use crate::theory::{self, ContourCurve, Model, NuStar, PhaseParams, TheoryError, TheoryPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Constrained,
    Penalized,
    Socp,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Constrained, Algorithm::Penalized, Algorithm::Socp, Algorithm::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Constrained => "constrained",
            Algorithm::Penalized => "penalized",
            Algorithm::Socp => "socp",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown algorithm '{s}' (expected constrained, penalized, socp or oracle)"))
    }
}

fn default_sigma() -> f64 {
    1.0
}

fn default_trials() -> usize {
    100
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Constrained, Algorithm::Penalized]
}

fn default_timeout() -> f64 {
    120.0
}

/// One experiment. Missing optional fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Noise standard deviation (default 1).
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Amplitude of the nonzero entries (default 1000/√n).
    #[serde(default)]
    pub magnitude: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub signed: bool,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    /// Per-trial wall-clock budget in seconds, split across the trial's solves.
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{algorithm}: {failed} of {trials} trials failed (more than 10%)")]
    FailureThreshold { algorithm: Algorithm, failed: usize, trials: usize, summary: Box<TrialSummary> },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

/// Round half to even.
fn round_count(x: f64) -> usize {
    x.round_ties_even().max(0.0) as usize
}

impl ExperimentConfig {
    pub fn new(n: usize, alpha: f64, beta: f64, trials: usize, master_seed: u64, signed: bool, algorithms: Vec<Algorithm>) -> Self {
        Self { n, alpha, beta, sigma: 1.0, magnitude: None, trials, master_seed, signed, algorithms, timeout_secs: default_timeout() }
    }

    pub fn model(&self) -> Model {
        Model::from_signed(self.signed)
    }

    pub fn m(&self) -> usize {
        round_count(self.alpha * self.n as f64)
    }

    pub fn k(&self) -> usize {
        round_count(self.beta * self.n as f64)
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude.unwrap_or(1000.0 / (self.n as f64).sqrt())
    }

    /// Ratios actually simulated: (m/n, k/n).
    pub fn realized(&self) -> (f64, f64) {
        (self.m() as f64 / self.n as f64, self.k() as f64 / self.n as f64)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) || !(self.beta >= 0.0 && self.beta < self.alpha) {
            return bad(format!("need 0 < alpha <= 1 and 0 <= beta < alpha (alpha = {}, beta = {})", self.alpha, self.beta));
        }
        if self.m() < 1 {
            return bad(format!("round(alpha*n) = 0 for alpha = {}, n = {}", self.alpha, self.n));
        }
        if self.k() >= self.m() {
            return bad(format!("round(beta*n) = {} must be below round(alpha*n) = {}", self.k(), self.m()));
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.magnitude() > 0.0 && self.magnitude().is_finite()) {
            return bad(format!("magnitude must be positive, got {}", self.magnitude()));
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms requested".into());
        }
        if !(self.timeout_secs > 0.0) {
            return bad(format!("timeout must be positive, got {}", self.timeout_secs));
        }
        Ok(())
    }

    pub fn trial_seed(&self, trial_index: usize) -> Seed {
        Seed(self.master_seed).child(trial_index as u64)
    }

    pub fn x_tilde(&self) -> Array1<f64> {
        let (n, k, mag) = (self.n, self.k(), self.magnitude());
        Array1::from_iter((0..n).map(|i| if i >= n - k { mag } else { 0.0 }))
    }
}

/// m i.i.d. N(0, σ²) noise entries from a trial seed.
pub fn noise_vector(trial_seed: Seed, m: usize, sigma: f64) -> Array1<f64> {
    Array1::from(trial_seed.child(1).normals().take_vec(m)) * sigma
}

/// m × n standard normal matrix from a trial seed, filled row by row.
pub fn measurement_matrix(trial_seed: Seed, m: usize, n: usize) -> Array2<f64> {
    Array2::from_shape_vec((m, n), trial_seed.child(0).normals().take_vec(m * n)).expect("shape matches length")
}

pub fn generate_instance(config: &ExperimentConfig, trial_index: usize) -> ProblemInstance {
    let seed = config.trial_seed(trial_index);
    let (m, n) = (config.m(), config.n);
    let a = measurement_matrix(seed, m, n);
    let v = noise_vector(seed, m, config.sigma);
    ProblemInstance::new(a, config.x_tilde(), v, config.sigma, seed)
}

/// Mean and sample standard deviation over successful trials. The median and
/// maximum expose heavy tails from instances past their finite-size
/// transition, which dominate the mean at small n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmStats {
    pub algorithm: Algorithm,
    /// Trials included in the statistics.
    pub succeeded: usize,
    pub failed: usize,
    pub mean_w_norm: f64,
    pub std_w_norm: f64,
    pub median_w_norm: f64,
    pub max_w_norm: f64,
    /// ζ/√n; for the penalized solver the shifted objective ζ_conn/√n; for
    /// the oracle ξ_ov/√n.
    pub mean_zeta: f64,
    pub std_zeta: f64,
    /// Oracle runs only.
    pub oracle: Option<OracleSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub config: ExperimentConfig,
    pub m: usize,
    pub k: usize,
    /// Theory at the realized ratios (m/n, k/n).
    pub theory: TheoryPoint,
    /// Theory at a reference point (table rows: the exact contour point).
    pub reference: Option<TheoryPoint>,
    pub stats: Vec<AlgorithmStats>,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

/// Outcome of one algorithm on one trial: (w_norm, zeta/√n) or a failure.
type TrialOutcome = Result<(f64, f64, Option<oracle::OracleSample>), String>;

struct Calibration {
    lambda: Option<f64>,
    r_socp: Option<f64>,
}

fn run_trial(config: &ExperimentConfig, index: usize, cal: &Calibration) -> Vec<TrialOutcome> {
    let model = config.model();
    let sqrt_n = (config.n as f64).sqrt();
    let solver_count = config.algorithms.iter().filter(|a| **a != Algorithm::Oracle).count().max(1);
    let opts = SolverOptions { time_limit_secs: Some(config.timeout_secs / solver_count as f64), ..SolverOptions::default() };
    let needs_instance = config.algorithms.iter().any(|a| *a != Algorithm::Oracle);
    let inst = needs_instance.then(|| generate_instance(config, index));
    config
        .algorithms
        .iter()
        .map(|alg| -> TrialOutcome {
            let solved = match alg {
                Algorithm::Oracle => {
                    let pair = oracle::sample_pair(config.m(), config.n, config.trial_seed(index).child(2));
                    let x = config.x_tilde();
                    let s = oracle::xi_ov(config.sigma, &pair, x.as_slice().expect("contiguous"), model)
                        .map_err(|e| e.to_string())?;
                    let w = s.w_hat_norm.ok_or_else(|| "oracle optimum on the square-root boundary".to_string())?;
                    return Ok((w, s.xi_ov / sqrt_n, Some(s)));
                }
                Algorithm::Constrained => {
                    let inst = inst.as_ref().expect("instance generated");
                    solvers::solve_constrained_lasso(inst, inst.x_tilde_l1(), model, &opts)
                }
                Algorithm::Penalized => {
                    let inst = inst.as_ref().expect("instance generated");
                    solvers::solve_penalized_lasso(inst, cal.lambda.expect("calibrated"), model, &opts)
                }
                Algorithm::Socp => {
                    let inst = inst.as_ref().expect("instance generated");
                    solvers::solve_socp(inst, cal.r_socp.expect("calibrated"), model, &opts)
                }
            };
            let rep = solved.map_err(|e| e.to_string())?;
            let zeta = match alg {
                Algorithm::Penalized => rep.objective,
                _ => rep.zeta,
            };
            Ok((rep.w_norm, zeta / sqrt_n, None))
        })
        .collect()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, std)
}

fn median_max(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 { sorted[mid] } else { 0.5 * (sorted[mid - 1] + sorted[mid]) };
    (median, sorted[sorted.len() - 1])
}

/// Runs every trial and aggregates. Theory columns use the realized ratios;
/// the penalized weight and SOCP radius are calibrated from them too.
pub fn run_experiment(config: &ExperimentConfig) -> Result<TrialSummary, HarnessError> {
    run_experiment_with_reference(config, None)
}

pub fn run_experiment_with_reference(config: &ExperimentConfig, reference: Option<TheoryPoint>) -> Result<TrialSummary, HarnessError> {
    config.validate()?;
    let started = Instant::now();
    let model = config.model();
    let (alpha, beta) = config.realized();
    let params = PhaseParams::new(alpha, beta, model)?;
    let theory = theory::characterize(params)?;
    let wants = |a: Algorithm| config.algorithms.contains(&a);
    let cal = Calibration {
        lambda: if wants(Algorithm::Penalized) { Some(solvers::lambda_from_theory(params)?) } else { None },
        r_socp: if wants(Algorithm::Socp) { Some(solvers::r_socp_from_theory(params, config.sigma, config.n)?) } else { None },
    };
    log::info!(
        "experiment n={} m={} k={} model={} trials={} algorithms={:?}",
        config.n,
        config.m(),
        config.k(),
        model,
        config.trials,
        config.algorithms
    );
    let outcomes: Vec<Vec<TrialOutcome>> = (0..config.trials).into_par_iter().map(|t| run_trial(config, t, &cal)).collect();

    let mut stats = Vec::with_capacity(config.algorithms.len());
    let mut worst: Option<(Algorithm, usize)> = None;
    for (j, &alg) in config.algorithms.iter().enumerate() {
        let mut w = Vec::new();
        let mut z = Vec::new();
        let mut samples = Vec::new();
        let mut failed = 0;
        for (t, trial) in outcomes.iter().enumerate() {
            match &trial[j] {
                Ok((wn, zn, sample)) => {
                    w.push(*wn);
                    z.push(*zn);
                    if let Some(s) = sample {
                        samples.push(s.clone());
                    }
                }
                Err(msg) => {
                    failed += 1;
                    log::warn!("{alg} trial {t} failed: {msg}");
                }
            }
        }
        let (mean_w_norm, std_w_norm) = mean_std(&w);
        let (mean_zeta, std_zeta) = mean_std(&z);
        let (median_w_norm, max_w_norm) = median_max(&w);
        let oracle = (alg == Algorithm::Oracle).then(|| oracle::summarize(config.sigma, config.n, &samples));
        if failed * 10 > config.trials && worst.is_none_or(|(_, f)| failed > f) {
            worst = Some((alg, failed));
        }
        stats.push(AlgorithmStats { algorithm: alg, succeeded: w.len(), failed, mean_w_norm, std_w_norm, median_w_norm, max_w_norm, mean_zeta, std_zeta, oracle });
    }
    let summary = TrialSummary {
        config: config.clone(),
        m: config.m(),
        k: config.k(),
        theory,
        reference,
        stats,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    if let Some((algorithm, failed)) = worst {
        return Err(HarnessError::FailureThreshold { algorithm, failed, trials: config.trials, summary: Box::new(summary) });
    }
    Ok(summary)
}

/// One row of a published table: α, the reported β/α and the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub alpha: f64,
    pub beta_over_alpha: f64,
    pub n: usize,
}

/// Target error level and sign model of each table.
pub fn table_setting(which: u8) -> Result<(f64, Model), HarnessError> {
    match which {
        1 => Ok((2.0, Model::Unsigned)),
        2 => Ok((3.0, Model::Unsigned)),
        3 => Ok((2.0, Model::Signed)),
        4 => Ok((3.0, Model::Signed)),
        _ => Err(HarnessError::Config(format!("table must be 1, 2, 3 or 4, got {which}"))),
    }
}

pub fn table_rows(which: u8) -> Result<Vec<TableRow>, HarnessError> {
    let row = |alpha, beta_over_alpha, n| TableRow { alpha, beta_over_alpha, n };
    Ok(match which {
        1 => vec![row(0.3, 0.21, 2000), row(0.5, 0.27, 2000), row(0.7, 0.33, 2000)],
        2 => vec![row(0.3, 0.249, 3000), row(0.5, 0.325, 2000), row(0.7, 0.41, 2000)],
        3 => vec![row(0.3, 0.286, 2000), row(0.5, 0.3842, 2000), row(0.7, 0.4849, 1500)],
        4 => vec![row(0.3, 0.3423, 2000), row(0.5, 0.4672, 2000), row(0.7, 0.5971, 1500)],
        _ => return Err(HarnessError::Config(format!("table must be 1, 2, 3 or 4, got {which}"))),
    })
}

/// n and trial count after desk-scale shrinking.
pub fn scaled_size(n: usize, scale: f64) -> (usize, usize) {
    let n_scaled = ((scale * n as f64).round() as usize).max(200);
    let trials = ((scale * 100.0).round() as usize).max(20);
    (n_scaled, trials)
}

/// Experiment configurations for a table at the given scale (constrained and
/// penalized solvers, as in the published runs).
pub fn table_configs(which: u8, scale: f64, master_seed: u64) -> Result<Vec<ExperimentConfig>, HarnessError> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(HarnessError::Config(format!("scale must be in (0, 1], got {scale}")));
    }
    let (_, model) = table_setting(which)?;
    let rows = table_rows(which)?;
    Ok(rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let (n, trials) = scaled_size(row.n, scale);
            let seed = Seed(master_seed).child(10 * which as u64 + i as u64).0;
            ExperimentConfig::new(n, row.alpha, row.alpha * row.beta_over_alpha, trials, seed, model.is_signed(), default_algorithms())
        })
        .collect())
}

/// Theory at the exact contour point of a table row.
pub fn contour_reference(which: u8, alpha: f64) -> Result<TheoryPoint, HarnessError> {
    let (rho, model) = table_setting(which)?;
    let beta = theory::contour_beta(alpha, rho, model)?;
    Ok(theory::characterize(PhaseParams::new(alpha, beta, model)?)?)
}

pub fn reproduce_table(which: u8, scale: f64, master_seed: u64) -> Result<Vec<TrialSummary>, HarnessError> {
    run_table_configs(which, &table_configs(which, scale, master_seed)?)
}

/// Runs prepared table configurations, attaching contour references.
pub fn run_table_configs(which: u8, configs: &[ExperimentConfig]) -> Result<Vec<TrialSummary>, HarnessError> {
    configs
        .iter()
        .map(|c| run_experiment_with_reference(c, Some(contour_reference(which, c.alpha)?)))
        .collect()
}

// ---------------------------------------------------------------------------
// export

pub const RESULT_COLUMNS: [&str; 13] = [
    "alpha",
    "beta",
    "n",
    "trials",
    "algorithm",
    "mean_w_norm",
    "std_w_norm",
    "mean_zeta",
    "std_zeta",
    "theory_nu",
    "theory_zeta",
    "theory_rho",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            _ => Err(format!("unknown format '{s}' (expected csv or json)")),
        }
    }
}

fn nan_from_null<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Flat result record, one per (experiment, algorithm). α and β are the
/// realized ratios; `trials` counts the trials in the means; `seed` is the
/// master seed. Theory columns hold "unbounded" (ν) or are empty (ζ, ρ)
/// above the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub trials: usize,
    pub algorithm: Algorithm,
    #[serde(deserialize_with = "nan_from_null")]
    pub mean_w_norm: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub std_w_norm: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub mean_zeta: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub std_zeta: f64,
    pub theory_nu: NuStar,
    pub theory_zeta: Option<f64>,
    pub theory_rho: Option<f64>,
    pub seed: u64,
}

pub fn result_rows(summaries: &[TrialSummary]) -> Vec<ResultRow> {
    summaries
        .iter()
        .flat_map(|s| {
            let (alpha, beta) = s.config.realized();
            s.stats.iter().map(move |st| ResultRow {
                alpha,
                beta,
                n: s.config.n,
                trials: st.succeeded,
                algorithm: st.algorithm,
                mean_w_norm: st.mean_w_norm,
                std_w_norm: st.std_w_norm,
                mean_zeta: st.mean_zeta,
                std_zeta: st.std_zeta,
                theory_nu: s.theory.nu_star,
                theory_zeta: s.theory.zeta_over_sqrt_n_at(s.config.sigma),
                theory_rho: s.theory.error_norm(s.config.sigma),
                seed: s.config.master_seed,
            })
        })
        .collect()
}

/// 17 significant digits; "NaN"/"inf" for non-finite values.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn json_float(x: f64) -> String {
    if x.is_finite() {
        format_float(x)
    } else {
        "null".into()
    }
}

fn row_cells(r: &ResultRow) -> Vec<String> {
    vec![
        format_float(r.alpha),
        format_float(r.beta),
        r.n.to_string(),
        r.trials.to_string(),
        r.algorithm.to_string(),
        format_float(r.mean_w_norm),
        format_float(r.std_w_norm),
        format_float(r.mean_zeta),
        format_float(r.std_zeta),
        r.theory_nu.finite().map_or_else(|| "unbounded".to_string(), format_float),
        r.theory_zeta.map_or_else(String::new, format_float),
        r.theory_rho.map_or_else(String::new, format_float),
        r.seed.to_string(),
    ]
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULT_COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record(row_cells(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn rows_to_json(rows: &[ResultRow]) -> String {
    let objects: Vec<String> = rows
        .iter()
        .map(|r| {
            let nu = r.theory_nu.finite().map_or_else(|| "\"unbounded\"".to_string(), json_float);
            let opt = |v: Option<f64>| v.map_or_else(|| "null".to_string(), json_float);
            format!(
                "  {{\"alpha\": {}, \"beta\": {}, \"n\": {}, \"trials\": {}, \"algorithm\": \"{}\", \"mean_w_norm\": {}, \"std_w_norm\": {}, \"mean_zeta\": {}, \"std_zeta\": {}, \"theory_nu\": {}, \"theory_zeta\": {}, \"theory_rho\": {}, \"seed\": {}}}",
                json_float(r.alpha),
                json_float(r.beta),
                r.n,
                r.trials,
                r.algorithm,
                json_float(r.mean_w_norm),
                json_float(r.std_w_norm),
                json_float(r.mean_zeta),
                json_float(r.std_zeta),
                nu,
                opt(r.theory_zeta),
                opt(r.theory_rho),
                r.seed
            )
        })
        .collect();
    if objects.is_empty() {
        "[]\n".into()
    } else {
        format!("[\n{}\n]\n", objects.join(",\n"))
    }
}

/// Wide contour table: one α column, then one β column per curve; points a
/// curve omits are left empty.
pub fn curves_to_csv(curves: &[ContourCurve]) -> String {
    let mut alphas: Vec<f64> = curves.iter().flat_map(|c| c.points.iter().map(|p| p.0).chain(c.omitted.iter().copied())).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["alpha".to_string()];
    header.extend(curves.iter().map(|c| format!("beta_{}_rho_{}", c.model, c.rho)));
    w.write_record(&header).expect("in-memory write");
    for a in alphas {
        let mut rec = vec![format_float(a)];
        for c in curves {
            rec.push(c.points.iter().find(|p| p.0 == a).map_or_else(String::new, |p| format_float(p.1)));
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Two-column (α, β) listing of one curve.
pub fn curve_to_two_column_csv(curve: &ContourCurve) -> String {
    let mut out = String::from("alpha,beta\n");
    for (a, b) in &curve.points {
        out.push_str(&format!("{},{}\n", format_float(*a), format_float(*b)));
    }
    out
}

pub fn curves_to_json(curves: &[ContourCurve]) -> String {
    let body: Vec<String> = curves
        .iter()
        .map(|c| {
            let pts: Vec<String> = c.points.iter().map(|(a, b)| format!("[{}, {}]", json_float(*a), json_float(*b))).collect();
            let om: Vec<String> = c.omitted.iter().map(|a| json_float(*a)).collect();
            format!(
                "  {{\"rho\": {}, \"model\": \"{}\", \"points\": [{}], \"omitted\": [{}]}}",
                json_float(c.rho),
                c.model,
                pts.join(", "),
                om.join(", ")
            )
        })
        .collect();
    if body.is_empty() {
        "[]\n".into()
    } else {
        format!("[\n{}\n]\n", body.join(",\n"))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io { path: path.to_path_buf(), source };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)
}

/// Sibling path used for contour data: `<stem>.curves.<ext>`.
pub fn curves_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    let ext = path.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}.curves.{ext}"))
}

/// Writes the summaries to `path`; non-empty `curves` go to [`curves_path`].
pub fn export_results(summaries: &[TrialSummary], curves: &[ContourCurve], path: &Path, format: ExportFormat) -> Result<(), HarnessError> {
    let rows = result_rows(summaries);
    let (main, side) = match format {
        ExportFormat::Csv => (rows_to_csv(&rows), curves_to_csv(curves)),
        ExportFormat::Json => (rows_to_json(&rows), curves_to_json(curves)),
    };
    write_file(path, &main)?;
    if !curves.is_empty() {
        write_file(&curves_path(path), &side)?;
    }
    Ok(())
}

pub fn read_results(path: &Path, format: ExportFormat) -> Result<Vec<ResultRow>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    let fmt_err = |message: String| HarnessError::Format { path: path.to_path_buf(), message };
    match format {
        ExportFormat::Json => serde_json::from_str(&text).map_err(|e| fmt_err(e.to_string())),
        ExportFormat::Csv => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            let header: Vec<String> = r.headers().map_err(|e| fmt_err(e.to_string()))?.iter().map(String::from).collect();
            if header != RESULT_COLUMNS {
                return Err(fmt_err(format!("unexpected header {header:?}")));
            }
            r.deserialize().collect::<Result<Vec<ResultRow>, _>>().map_err(|e| fmt_err(e.to_string()))
        }
    }
}
