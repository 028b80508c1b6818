//! `nlasso`: theory queries, contour curves, oracle sampling, experiments and
//! table reproduction for the noisy LASSO error characterization.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use noisy_lasso::harness::{
    curve_to_two_column_csv, curves_to_csv, curves_to_json, export_results, reproduce_table, result_rows, rows_to_json, Algorithm,
    ExperimentConfig, ExportFormat, HarnessError, TrialSummary,
};
use noisy_lasso::oracle::{generic_sample, sample_pair, summarize, xi_ov, OracleSample};
use noisy_lasso::theory::{characterize, contour_beta, contour_curve, linear_grid, Model, NuStar, PhaseParams, TheoryPoint};
use serde_json::{json, Map, Value};

/// Fallible stdout writes, so a closed pipe ends the run instead of panicking.
macro_rules! outln {
    ($($t:tt)*) => { writeln!(io::stdout(), $($t)*)? };
}
macro_rules! out {
    ($($t:tt)*) => { write!(io::stdout(), $($t)*)? };
}

#[derive(Parser, Debug)]
#[command(name = "nlasso", version, about = "Error characterization of the noisy LASSO: theory, oracle and experiments")]
struct Cli {
    /// Emit machine-readable JSON on stdout (full precision).
    #[arg(long, global = true)]
    json: bool,
    /// Master seed; every subcommand is deterministic given it.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Log verbosity on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Asymptotic worst-case error at (alpha, beta), or at the point of a rho contour.
    Theory(TheoryArgs),
    /// Contour of constant worst-case error rho in the (alpha, beta) plane, as CSV.
    Curve(CurveArgs),
    /// Sample the Gaussian comparison problem and report its statistics.
    Oracle(OracleArgs),
    /// Run a LASSO experiment. Precedence: command-line flags > --config file > defaults.
    Simulate(SimulateArgs),
    /// Reproduce one of the four published simulation tables.
    Table(TableArgs),
}

#[derive(Args, Debug)]
struct TheoryArgs {
    /// Measurement ratio m/n, in (0, 1].
    #[arg(long)]
    alpha: f64,
    /// Sparsity ratio k/n, in [0, alpha).
    #[arg(long, required_unless_present = "rho", conflicts_with = "rho")]
    beta: Option<f64>,
    /// Solve for beta on the contour of this worst-case error instead.
    #[arg(long)]
    rho: Option<f64>,
    /// Nonnegative (signed) signal model.
    #[arg(long)]
    signed: bool,
    /// Noise standard deviation used to scale the error and residual.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

#[derive(Args, Debug)]
struct CurveArgs {
    /// Contour level(s); several values give a wide table with one beta column each.
    #[arg(long, required = true, value_delimiter = ',')]
    rho: Vec<f64>,
    #[arg(long)]
    signed: bool,
    /// Alpha grid: "lo:hi:count", a comma list, or "" for none.
    #[arg(long, default_value = "0.05:0.95:19")]
    grid: String,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Ambient dimension (at least 10).
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    /// Number of independent samples.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long)]
    signed: bool,
    /// Infinite-magnitude (generic) problem instead of a finite signal.
    #[arg(long)]
    generic: bool,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Nonzero signal magnitude (default 1000/sqrt(n)).
    #[arg(long)]
    magnitude: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// TOML or JSON file with experiment fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    magnitude: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    signed: bool,
    /// Comma list of constrained, penalized, socp, oracle.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    /// Per-trial time budget in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Results file (CSV unless the extension or --format says JSON).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<ExportFormat>,
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Table number: 1, 2 (unsigned, rho = 2, 3) or 3, 4 (signed, rho = 2, 3).
    #[arg(long)]
    which: u8,
    /// Shrinks n and the trial count; 0.2 gives a desk-scale run.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Results file (CSV unless the extension or --format says JSON).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<ExportFormat>,
}

/// Six significant digits for text output.
fn sig(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exponent) {
        format!("{:.*}", (5 - exponent).max(0) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn sig_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), sig)
}

fn nu_text(nu: NuStar) -> String {
    nu.finite().map_or_else(|| "unbounded".into(), sig)
}

fn print_json(value: &Value) -> Result<()> {
    outln!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn export_format(path: &Path, explicit: Option<ExportFormat>) -> ExportFormat {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => ExportFormat::Json,
        _ => ExportFormat::Csv,
    })
}

const ABOVE_THRESHOLD: &str = "above threshold: error diverges";

fn status(point: &TheoryPoint) -> &'static str {
    if point.below_threshold {
        "below threshold"
    } else {
        ABOVE_THRESHOLD
    }
}

fn cmd_theory(args: &TheoryArgs, as_json: bool) -> Result<()> {
    if !(args.sigma > 0.0 && args.sigma.is_finite()) {
        bail!("sigma must be positive, got {}", args.sigma);
    }
    let model = Model::from_signed(args.signed);
    let beta = match (args.beta, args.rho) {
        (Some(b), _) => b,
        (None, Some(rho)) => contour_beta(args.alpha, rho, model).with_context(|| format!("no contour point at alpha = {}", args.alpha))?,
        (None, None) => bail!("either --beta or --rho is required"),
    };
    let point = characterize(PhaseParams::new(args.alpha, beta, model)?)?;
    let (error, zeta) = (point.error_norm(args.sigma), point.zeta_over_sqrt_n_at(args.sigma));
    if as_json {
        return print_json(&json!({
            "model": model.to_string(),
            "alpha": args.alpha,
            "beta": beta,
            "sigma": args.sigma,
            "alpha_w": point.alpha_w,
            "nu_star": point.nu_star,
            "rho": point.rho,
            "error_norm": error,
            "zeta_over_sqrt_n": zeta,
            "below_threshold": point.below_threshold,
            "status": status(&point),
        }));
    }
    outln!("model         {model}");
    outln!("alpha         {}", sig(args.alpha));
    outln!("beta          {}", sig(beta));
    outln!("alpha_w       {}", sig(point.alpha_w));
    outln!("nu*           {}", nu_text(point.nu_star));
    outln!("rho*sigma     {}", sig_opt(error));
    outln!("zeta/sqrt(n)  {}", sig_opt(zeta));
    outln!("status        {}", status(&point));
    Ok(())
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [lo, hi, count] => {
            let (lo, hi): (f64, f64) = (lo.trim().parse()?, hi.trim().parse()?);
            let count: usize = count.trim().parse()?;
            if !(lo <= hi) {
                bail!("grid lower bound {lo} exceeds upper bound {hi}");
            }
            Ok(linear_grid(lo, hi, count))
        }
        [_] => text.split(',').map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("grid value '{s}': {e}"))).collect(),
        _ => bail!("grid must be 'lo:hi:count' or a comma list, got '{text}'"),
    }
}

fn cmd_curve(args: &CurveArgs, as_json: bool) -> Result<()> {
    let model = Model::from_signed(args.signed);
    let grid = parse_grid(&args.grid)?;
    let curves = args.rho.iter().map(|&rho| contour_curve(rho, model, &grid)).collect::<Result<Vec<_>, _>>()?;
    let csv = match curves.as_slice() {
        [one] => curve_to_two_column_csv(one),
        many => curves_to_csv(many),
    };
    if let Some(path) = &args.out {
        fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
    }
    if as_json {
        out!("{}", curves_to_json(&curves));
    } else if let Some(path) = &args.out {
        let points: usize = curves.iter().map(|c| c.points.len()).sum();
        outln!("wrote {points} contour points to {}", path.display());
    } else {
        out!("{csv}");
    }
    Ok(())
}

fn cmd_oracle(args: &OracleArgs, seed: u64, as_json: bool) -> Result<()> {
    if args.n < 10 {
        bail!("n must be at least 10, got {}", args.n);
    }
    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let mut config = ExperimentConfig::new(args.n, args.alpha, args.beta, args.seeds, seed, args.signed, vec![Algorithm::Oracle]);
    config.sigma = args.sigma;
    config.magnitude = args.magnitude;
    config.validate()?;
    let (model, m, k) = (config.model(), config.m(), config.k());
    let x = config.x_tilde().to_vec();
    let sqrt_n = (args.n as f64).sqrt();

    let mut samples: Vec<OracleSample> = Vec::new();
    let mut per_seed = Vec::new();
    for i in 0..args.seeds {
        // same stream as the oracle algorithm of `simulate`
        let pair = sample_pair(m, args.n, config.trial_seed(i).child(2));
        let drawn = if args.generic { generic_sample(args.sigma, &pair, k, model) } else { xi_ov(args.sigma, &pair, &x, model) };
        match drawn {
            Ok(s) => {
                per_seed.push(json!({
                    "index": i,
                    "xi_over_sqrt_n": s.xi_ov / sqrt_n,
                    "nu_hat": s.nu_hat,
                    "w_hat_norm": s.w_hat_norm,
                    "overwhelming": s.overwhelming,
                }));
                samples.push(s);
            }
            Err(e) => {
                log::warn!("sample {i}: {e}");
                per_seed.push(json!({ "index": i, "error": e.to_string() }));
            }
        }
    }
    let summary = summarize(args.sigma, args.n, &samples);
    let failed = args.seeds - samples.len();
    if as_json {
        return print_json(&json!({
            "n": args.n, "m": m, "k": k, "alpha": args.alpha, "beta": args.beta,
            "model": model.to_string(), "generic": args.generic, "sigma": args.sigma,
            "seed": seed, "samples": per_seed, "failed": failed, "summary": summary,
        }));
    }
    outln!("n = {}, m = {m}, k = {k}, {model}{}, seed {seed}", args.n, if args.generic { ", generic" } else { "" });
    outln!("{:>6}  {:>12}  {:>12}  {:>12}", "sample", "xi/sqrt(n)", "nu_hat", "|w_hat|");
    for v in &per_seed {
        let i = v["index"].as_u64().unwrap_or_default();
        if let Some(e) = v.get("error") {
            outln!("{i:>6}  failed: {}", e.as_str().unwrap_or_default());
            continue;
        }
        let f = |key: &str| v[key].as_f64().map_or_else(|| "diverges".to_string(), sig);
        outln!("{i:>6}  {:>12}  {:>12}  {:>12}", f("xi_over_sqrt_n"), f("nu_hat"), f("w_hat_norm"));
    }
    outln!("samples       {} ({} on the square-root boundary, {failed} failed)", summary.samples, summary.divergent);
    outln!("xi/sqrt(n)    mean {}  sd {}  median {}", sig(summary.mean_xi), sig(summary.std_xi), sig(summary.median_xi));
    outln!("nu_hat        mean {}  sd {}", sig(summary.mean_nu), sig(summary.std_nu));
    outln!("|w_hat|       mean {}  pooled {}", sig(summary.mean_w), sig(summary.pooled_w));
    Ok(())
}

/// Config file contents as a JSON object, whichever of TOML or JSON it is.
fn read_config_file(path: &Path) -> Result<Map<String, Value>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_json = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let value: Value = if is_json {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        serde_json::to_value(table)?
    };
    match value {
        Value::Object(map) => Ok(map),
        _ => bail!("{}: expected a table of experiment fields", path.display()),
    }
}

fn simulate_config(args: &SimulateArgs, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut fields = match &args.config {
        Some(path) => read_config_file(path)?,
        None => Map::new(),
    };
    let mut set = |key: &str, value: Value| {
        fields.insert(key.to_string(), value);
    };
    if let Some(v) = args.n {
        set("n", json!(v));
    }
    if let Some(v) = args.alpha {
        set("alpha", json!(v));
    }
    if let Some(v) = args.beta {
        set("beta", json!(v));
    }
    if let Some(v) = args.sigma {
        set("sigma", json!(v));
    }
    if let Some(v) = args.magnitude {
        set("magnitude", json!(v));
    }
    if let Some(v) = args.trials {
        set("trials", json!(v));
    }
    if args.signed {
        set("signed", json!(true));
    }
    if let Some(v) = &args.algorithms {
        set("algorithms", serde_json::to_value(v)?);
    }
    if let Some(v) = args.timeout {
        set("timeout_secs", json!(v));
    }
    if let Some(v) = seed {
        set("master_seed", json!(v));
    }
    let config: ExperimentConfig = serde_json::from_value(Value::Object(fields)).context("experiment configuration")?;
    config.validate()?;
    Ok(config)
}

fn print_summary_text(s: &TrialSummary) -> Result<()> {
    let c = &s.config;
    let (a, b) = c.realized();
    outln!(
        "n = {}, m = {}, k = {}, alpha = {}, beta = {}, {}, {} trials, seed {}",
        c.n,
        s.m,
        s.k,
        sig(a),
        sig(b),
        c.model(),
        c.trials,
        c.master_seed
    );
    outln!(
        "theory: nu* {}  rho {}  zeta/sqrt(n) {}  ({})",
        nu_text(s.theory.nu_star),
        sig_opt(s.theory.error_norm(c.sigma)),
        sig_opt(s.theory.zeta_over_sqrt_n_at(c.sigma)),
        status(&s.theory)
    );
    outln!(
        "{:<12} {:>9} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "algorithm", "ok/total", "mean |w|", "sd |w|", "median |w|", "mean zeta", "sd zeta"
    );
    for st in &s.stats {
        outln!(
            "{:<12} {:>9} {:>12} {:>12} {:>12} {:>12} {:>12}",
            st.algorithm.name(),
            format!("{}/{}", st.succeeded, st.succeeded + st.failed),
            sig(st.mean_w_norm),
            sig(st.std_w_norm),
            sig(st.median_w_norm),
            sig(st.mean_zeta),
            sig(st.std_zeta)
        );
    }
    Ok(())
}

/// Writes and prints whatever results exist; a failure threshold still
/// reports its partial summary before exiting with status 2.
fn finish_experiments(
    outcome: Result<Vec<TrialSummary>, HarnessError>,
    out: Option<&Path>,
    format: Option<ExportFormat>,
    as_json: bool,
    render: impl Fn(&[TrialSummary]) -> Result<()>,
) -> Result<ExitCode> {
    let (summaries, threshold) = match outcome {
        Ok(s) => (s, None),
        Err(HarnessError::FailureThreshold { algorithm, failed, trials, summary }) => {
            let msg = format!("{algorithm}: {failed} of {trials} trials failed (more than 10%)");
            (vec![*summary], Some(msg))
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = out {
        export_results(&summaries, &[], path, export_format(path, format))?;
    }
    if as_json {
        out!("{}", rows_to_json(&result_rows(&summaries)));
    } else {
        render(&summaries)?;
    }
    match threshold {
        Some(msg) => {
            eprintln!("error: {msg}");
            Ok(ExitCode::from(2))
        }
        None => Ok(ExitCode::SUCCESS),
    }
}

fn cmd_simulate(args: &SimulateArgs, seed: Option<u64>, as_json: bool) -> Result<ExitCode> {
    let config = simulate_config(args, seed)?;
    let outcome = noisy_lasso::harness::run_experiment(&config).map(|s| vec![s]);
    finish_experiments(outcome, args.out.as_deref(), args.format, as_json, |s| {
        s.iter().try_for_each(print_summary_text)
    })
}

fn print_table_text(which: u8, summaries: &[TrialSummary]) -> Result<()> {
    outln!("table {which}");
    outln!(
        "{:>8} {:>10} {:>6} {:>7} {:<12} {:>10} {:>8} {:>12} {:>12} {:>10}",
        "alpha", "beta/alpha", "n", "trials", "algorithm", "mean |w|", "rho", "mean zeta", "theory zeta", "theory nu"
    );
    for s in summaries {
        let theory = s.reference.as_ref().unwrap_or(&s.theory);
        for st in &s.stats {
            outln!(
                "{:>8} {:>10} {:>6} {:>7} {:<12} {:>10} {:>8} {:>12} {:>12} {:>10}",
                sig(s.config.alpha),
                sig(s.config.beta / s.config.alpha),
                s.config.n,
                st.succeeded,
                st.algorithm.name(),
                sig(st.mean_w_norm),
                sig_opt(theory.error_norm(s.config.sigma)),
                sig(st.mean_zeta),
                sig_opt(theory.zeta_over_sqrt_n_at(s.config.sigma)),
                nu_text(theory.nu_star)
            );
        }
    }
    Ok(())
}

fn cmd_table(args: &TableArgs, seed: Option<u64>, as_json: bool) -> Result<ExitCode> {
    let outcome = reproduce_table(args.which, args.scale, seed.unwrap_or(0));
    if let Err(e @ HarnessError::Config(_)) = &outcome {
        bail!("{e}");
    }
    finish_experiments(outcome, args.out.as_deref(), args.format, as_json, |s| {
        print_table_text(args.which, s)
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Theory(a) => cmd_theory(a, cli.json).map(|_| ExitCode::SUCCESS),
        Command::Curve(a) => cmd_curve(a, cli.json).map(|_| ExitCode::SUCCESS),
        Command::Oracle(a) => cmd_oracle(a, cli.seed.unwrap_or(0), cli.json).map(|_| ExitCode::SUCCESS),
        Command::Simulate(a) => cmd_simulate(a, cli.seed, cli.json),
        Command::Table(a) => cmd_table(a, cli.seed, cli.json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
