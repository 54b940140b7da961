//! JSON run configurations and the `minimax-infer` command-line front end.
//!
//! ```text
//! minimax-infer {solve|reduce|limit|value-deriv|validate|report}
//!     --config <path> [--out <dir>] [--threads T] [--force]
//! ```
//!
//! Exit codes: 0 success, 1 numerical or assumption failure, 2 usage or
//! configuration error. Each run writes into a fresh directory (replaced
//! only with `--force`), staged in a sibling temporary directory that is
//! renamed on success and removed on failure. Every run writes
//! `effective-config.json` (all defaults filled in) and `runlog.json`
//! (versions, seeds, thread count, timestamps); all other artifacts are
//! byte-identical across reruns and thread counts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limitdist::{
    gaussian_solution_limit, sample_solution_limit, sample_value_limit, sigma_solution,
    sigma_solution_xi_adjusted, value_limit_model, CovarianceInput, SolutionLimitModel,
    SolutionMode, ValueLimitModel,
};
use crate::linalg::MatrixJson;
use crate::montecarlo::{
    compare_distributions, project_errors, run_replications_at, ComparisonReport, Thresholds,
};
use crate::problem::{builtin, sample_dataset, PolyFunction, PolyProblemDef, PolyTerm, ProblemSpec, XiPoint, XiSet};
use crate::reduction::{reduce, value_dirderiv_formula, Certificates, FormulaDeriv, ReductionConfig, ReductionData};
use crate::solver::{
    solve_population, solve_sample, value_dirderiv_fd, DirDerivFd, MinimaxSolution, SolverConfig,
    DEFAULT_T_GRID,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Reduce,
    Limit,
    ValueDeriv,
    Validate,
    Report,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Reduce => "reduce",
            Command::Limit => "limit",
            Command::ValueDeriv => "value-deriv",
            Command::Validate => "validate",
            Command::Report => "report",
        }
    }
}

/// A built-in name or an inline polynomial problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemRef {
    Builtin(String),
    Inline(PolyProblemDef),
}

impl ProblemRef {
    pub fn build(&self) -> Result<ProblemSpec> {
        match self {
            ProblemRef::Builtin(name) => builtin(name),
            ProblemRef::Inline(def) => def.into_problem(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSourceCfg {
    Analytic,
    /// Sample covariance over `N` fresh draws (seed `limit_seed`) at `γ*`.
    Plugin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Txt,
    Csv,
}

fn default_r() -> usize {
    1000
}
fn default_s() -> usize {
    100_000
}
fn default_seed() -> u64 {
    1
}
fn default_limit_seed() -> u64 {
    2
}
fn default_t_grid() -> Vec<f64> {
    DEFAULT_T_GRID.to_vec()
}
fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Txt, Format::Csv]
}
fn default_sigma_source() -> SigmaSourceCfg {
    SigmaSourceCfg::Analytic
}

/// A run configuration. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must agree with the subcommand when present.
    #[serde(default)]
    pub command: Option<Command>,
    pub problem: ProblemRef,
    /// Sample size.
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
    /// Monte Carlo replications.
    #[serde(rename = "R", default = "default_r")]
    pub r: usize,
    /// Limit-law draws.
    #[serde(rename = "S", default = "default_s")]
    pub s: usize,
    /// Dataset seed (`solve`) or master replication seed (`validate`).
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Seed for limit-law draws and plug-in datasets.
    #[serde(default = "default_limit_seed")]
    pub limit_seed: u64,
    /// Overrides the ground-truth or solved `γ*`.
    #[serde(default)]
    pub gamma_star: Option<Vec<f64>>,
    #[serde(default)]
    pub theta_star: Option<f64>,
    /// Population minimizers for value laws and derivative formulas.
    #[serde(default)]
    pub minimizers: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_sigma_source")]
    pub sigma_source: SigmaSourceCfg,
    /// Perturbation `η(γ, ξ)` as polynomial terms; empty means `η ≡ 0`.
    #[serde(default)]
    pub eta: Vec<PolyTerm>,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub reduction: ReductionConfig,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out: Option<String>,
    /// Prior run directory rendered by `report`.
    #[serde(default)]
    pub input: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn json_pointer(path: &serde_path_to_error::Path, message: &str) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    let mut last: Option<String> = None;
    for seg in path.iter() {
        let piece = match seg {
            Segment::Seq { index } => index.to_string(),
            Segment::Map { key } => key.clone(),
            Segment::Enum { variant } => variant.clone(),
            Segment::Unknown => continue,
        };
        out.push('/');
        out.push_str(&piece.replace('~', "~0").replace('/', "~1"));
        last = Some(piece);
    }
    if let Some(rest) = message.strip_prefix("unknown field `") {
        if let Some(field) = rest.split('`').next() {
            if last.as_deref() != Some(field) {
                out.push('/');
                out.push_str(field);
            }
        }
    }
    if out.is_empty() {
        "/".to_string()
    } else {
        out
    }
}

fn parse_at<T: DeserializeOwned>(value: &serde_json::Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let message = e.inner().to_string();
        let ptr = json_pointer(e.path(), &message);
        let pointer = if ptr == "/" && !prefix.is_empty() {
            prefix.to_string()
        } else if ptr == "/" {
            ptr
        } else {
            format!("{prefix}{ptr}")
        };
        Error::Config { pointer, message }
    })
}

/// Parses and validates a configuration document.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config {
        pointer: "/".into(),
        message: format!("invalid JSON: {e}"),
    })?;
    // Inline problems are checked on their own so errors carry a precise path.
    if let Some(p) = value.get("problem") {
        if p.is_object() {
            parse_at::<PolyProblemDef>(p, "/problem")?;
        } else if !p.is_string() {
            return Err(Error::Config {
                pointer: "/problem".into(),
                message: "expected a built-in name or an inline problem object".into(),
            });
        }
    }
    let cfg: RunConfig = parse_at(&value, "")?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config {
        pointer: "/".into(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config_str(&text)
}

fn config_err(pointer: &str, message: impl Into<String>) -> Error {
    Error::Config {
        pointer: pointer.into(),
        message: message.into(),
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.n == Some(0) {
            return Err(config_err("/N", "N must be at least 1"));
        }
        if self.r == 0 {
            return Err(config_err("/R", "R must be at least 1"));
        }
        if self.s == 0 {
            return Err(config_err("/S", "S must be at least 1"));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(*t > 0.0)) || self.t_grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(config_err("/t_grid", "t_grid must be nonempty, positive and strictly decreasing"));
        }
        if self.formats.is_empty() {
            return Err(config_err("/formats", "at least one format is required"));
        }
        if !(self.thresholds.ks_max > 0.0 && self.thresholds.ks_max <= 1.0) {
            return Err(config_err("/thresholds/ks_max", "ks_max must lie in (0, 1]"));
        }
        Ok(())
    }

    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn build_problem(&self) -> Result<ProblemSpec> {
        self.problem.build().map_err(|e| match e {
            Error::InvalidArgument(m) => config_err("/problem", m),
            other => other,
        })
    }

    fn eta(&self, problem: &ProblemSpec) -> Result<PolyFunction> {
        let branches = match &problem.xi_set {
            XiSet::FiniteList(p) => Some(p.len()),
            XiSet::Box(_) => None,
        };
        PolyFunction::new(problem.n, problem.m, self.eta.clone(), 0, branches).map_err(|e| match e {
            Error::InvalidArgument(m) => config_err("/eta", m),
            other => other,
        })
    }
}

/// Process-level options from the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub force: bool,
}

struct Outputs<'a> {
    dir: PathBuf,
    cfg: &'a RunConfig,
}

impl Outputs<'_> {
    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        if self.cfg.wants(Format::Json) {
            self.raw_json(name, value)?;
        }
        Ok(())
    }

    fn raw_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        fs::write(self.dir.join(name), s)?;
        Ok(())
    }

    fn text(&self, name: &str, body: &str) -> Result<()> {
        if self.cfg.wants(Format::Txt) {
            fs::write(self.dir.join(name), body)?;
        }
        Ok(())
    }

    fn csv(&self, name: &str, body: &str) -> Result<()> {
        if self.cfg.wants(Format::Csv) {
            fs::write(self.dir.join(name), body)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct RunLog<'a> {
    package: &'a str,
    version: &'a str,
    command: &'a str,
    seed: u64,
    limit_seed: u64,
    threads: usize,
    os: &'a str,
    arch: &'a str,
    started_unix: u64,
    finished_unix: u64,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs one subcommand and returns the output directory.
pub fn run_command(command: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<PathBuf> {
    if let Some(c) = cfg.command {
        if c != command {
            return Err(config_err(
                "/command",
                format!("config is for `{}` but `{}` was requested", c.as_str(), command.as_str()),
            ));
        }
    }
    let out = opts
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(command.as_str()));
    if out.exists() && !opts.force {
        return Err(Error::InvalidArgument(format!(
            "output directory {} exists; pass --force to replace it",
            out.display()
        )));
    }
    let name = out
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("bad output path {}", out.display())))?
        .to_string_lossy()
        .to_string();
    let staging = out.with_file_name(format!(".{name}.partial-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;

    let started = unix_now();
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = opts.threads {
            b = b.num_threads(t);
        }
        b.build().map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
    };
    let threads = pool.current_num_threads();
    let outputs = Outputs {
        dir: staging.clone(),
        cfg,
    };
    let result = pool.install(|| -> Result<()> {
        outputs.raw_json("effective-config.json", cfg)?;
        dispatch(command, cfg, &outputs)?;
        outputs.raw_json(
            "runlog.json",
            &RunLog {
                package: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command: command.as_str(),
                seed: cfg.seed,
                limit_seed: cfg.limit_seed,
                threads,
                os: std::env::consts::OS,
                arch: std::env::consts::ARCH,
                started_unix: started,
                finished_unix: unix_now(),
            },
        )
    });
    match result {
        Ok(()) => {
            if out.exists() {
                fs::remove_dir_all(&out)?;
            }
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::rename(&staging, &out)?;
            Ok(out)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

fn dispatch(command: Command, cfg: &RunConfig, out: &Outputs<'_>) -> Result<()> {
    if command == Command::Report {
        return cmd_report(cfg, out);
    }
    let problem = cfg.build_problem()?;
    match command {
        Command::Solve => cmd_solve(&problem, cfg, out),
        Command::Reduce => cmd_reduce(&problem, cfg, out),
        Command::Limit => cmd_limit(&problem, cfg, out),
        Command::ValueDeriv => cmd_value_deriv(&problem, cfg, out),
        Command::Validate => cmd_validate(&problem, cfg, out),
        Command::Report => unreachable!(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub problem: String,
    pub population: Option<MinimaxSolution>,
    pub sample: Option<MinimaxSolution>,
}

fn render_solution(label: &str, s: &MinimaxSolution) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "[{label}]");
    let _ = writeln!(t, "  gamma_hat     {:?}", s.gamma_hat);
    let _ = writeln!(t, "  theta_hat     {:.12e}", s.theta_hat);
    let _ = writeln!(t, "  status        {}", s.status.as_str());
    let _ = writeln!(t, "  iterations    {}", s.iterations);
    let _ = writeln!(t, "  kkt_residual  {:.3e}", s.kkt_residual);
    for (m, w) in s.inner_maximizers.iter().zip(&s.multipliers) {
        let _ = writeln!(t, "  maximizer {:<12} value {:>14.6e}  weight {:.6}", m.xi.to_string(), m.value, w);
    }
    t
}

fn render_solve(o: &SolveOutput) -> String {
    let mut t = format!("problem {}\n", o.problem);
    if let Some(p) = &o.population {
        t.push_str(&render_solution("population", p));
    }
    if let Some(s) = &o.sample {
        t.push_str(&render_solution("sample", s));
    }
    t
}

fn cmd_solve(problem: &ProblemSpec, cfg: &RunConfig, out: &Outputs<'_>) -> Result<()> {
    let population = if problem.population.is_some() || problem.population_fallback.is_some() {
        Some(solve_population(problem, &cfg.solver)?)
    } else {
        None
    };
    let sample = match cfg.n {
        Some(n) => {
            let ds = sample_dataset(problem, n, cfg.seed)?;
            out.csv("dataset.csv", &ds.to_csv())?;
            Some(solve_sample(problem, &ds, &cfg.solver)?)
        }
        None => None,
    };
    let o = SolveOutput {
        problem: problem.name.clone(),
        population,
        sample,
    };
    out.json("solution.json", &o)?;
    out.text("solution.txt", &render_solve(&o))
}

/// `γ*` and `θ*`: config override, else ground truth, else a population solve.
fn truth(problem: &ProblemSpec, cfg: &RunConfig) -> Result<(Vec<f64>, f64)> {
    if let Some(g) = &cfg.gamma_star {
        if g.len() != problem.n {
            return Err(config_err("/gamma_star", format!("expected {} entries", problem.n)));
        }
        let theta = match cfg.theta_star {
            Some(t) => t,
            None => {
                let obj = problem.population_objective()?;
                crate::solver::inner_maximize(&obj, g, &problem.xi_set, &cfg.solver.inner).max_value()
            }
        };
        return Ok((g.clone(), theta));
    }
    if let Some(gt) = &problem.ground_truth {
        return Ok((gt.gamma_star.clone(), cfg.theta_star.unwrap_or(gt.theta_star)));
    }
    let sol = solve_population(problem, &cfg.solver)?;
    if sol.status != crate::solver::SolveStatus::Converged {
        return Err(Error::Solver(format!(
            "population solve ended with status {}",
            sol.status.as_str()
        )));
    }
    Ok((sol.gamma_hat, cfg.theta_star.unwrap_or(sol.theta_hat)))
}

fn cmd_reduce(problem: &ProblemSpec, cfg: &RunConfig, out: &Outputs<'_>) -> Result<()> {
    let (gamma, _) = truth(problem, cfg)?;
    let red = reduce(problem, &gamma, &cfg.reduction)?;
    out.json("reduction.json", &red)?;
    out.json("certificates.json", &red.certificates)?;
    out.text("certificates.txt", &red.certificates.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitOutput {
    pub problem: String,
    pub solution: SolutionLimitModel,
    pub value: ValueLimitModel,
    /// `S`, `limit_seed`.
    pub draws: usize,
    pub seed: u64,
}

fn covariance_input<'a>(cfg: &RunConfig, plugin: &'a Option<crate::problem::Dataset>) -> CovarianceInput<'a> {
    match (cfg.sigma_source, plugin) {
        (SigmaSourceCfg::Plugin, Some(ds)) => CovarianceInput::Plugin {
            dataset: ds,
            at_estimate: false,
        },
        _ => CovarianceInput::Analytic,
    }
}

fn plugin_dataset(problem: &ProblemSpec, cfg: &RunConfig) -> Result<Option<crate::problem::Dataset>> {
    match cfg.sigma_source {
        SigmaSourceCfg::Analytic => Ok(None),
        SigmaSourceCfg::Plugin => {
            let n = cfg.n.ok_or_else(|| config_err("/N", "plug-in covariance needs N"))?;
            Ok(Some(sample_dataset(problem, n, cfg.limit_seed)?))
        }
    }
}

fn build_models(problem: &ProblemSpec, cfg: &RunConfig, gamma: &[f64]) -> Result<(SolutionLimitModel, ValueLimitModel)> {
    let red = reduce(problem, gamma, &cfg.reduction)?;
    let plug = plugin_dataset(problem, cfg)?;
    let input = covariance_input(cfg, &plug);
    let pts: Vec<XiPoint> = red.active_points.iter().map(|p| p.xi.clone()).collect();
    let (sigma, src) = sigma_solution(problem, gamma, &pts, input)?;
    let sol = SolutionLimitModel::new(red, sigma, src)?;
    let mins = cfg.minimizers.clone().unwrap_or_else(|| vec![gamma.to_vec()]);
    let val = value_limit_model(problem, &mins, input, &cfg.reduction)?;
    Ok((sol, val))
}

fn draws_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::from("s");
    for j in 1..=m.ncols() {
        let _ = write!(s, ",eta{j}");
    }
    s.push('\n');
    for i in 0..m.nrows() {
        let _ = write!(s, "{i}");
        for j in 0..m.ncols() {
            let _ = write!(s, ",{:?}", m[(i, j)]);
        }
        s.push('\n');
    }
    s
}

fn value_csv(v: &[f64]) -> String {
    let mut s = String::from("s,value\n");
    for (i, x) in v.iter().enumerate() {
        let _ = writeln!(s, "{i},{x:?}");
    }
    s
}

fn render_matrix(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        s.push_str("    [");
        for j in 0..m.ncols() {
            let _ = write!(s, "{}{:>12.6}", if j > 0 { " " } else { "" }, m[(i, j)]);
        }
        s.push_str("]\n");
    }
    s
}

fn render_limit(o: &LimitOutput) -> String {
    let mut t = format!("problem {}\n", o.problem);
    let sm = &o.solution;
    let _ = writeln!(t, "solution limit mode   {:?}", sm.mode);
    let _ = writeln!(t, "Sigma ({}x{})", sm.sigma.nrows(), sm.sigma.ncols());
    t.push_str(&render_matrix(&sm.sigma));
    if let Some(c) = &sm.limit_cov {
        t.push_str("limit covariance\n");
        t.push_str(&render_matrix(c));
    }
    let _ = writeln!(t, "value limit mode      {:?}", o.value.mode);
    if let Some(s2) = o.value.sigma2 {
        let _ = writeln!(t, "sigma^2               {s2:.6}");
    }
    t.push_str("covF\n");
    t.push_str(&render_matrix(&o.value.cov_f));
    let _ = writeln!(t, "draws S={} seed={}", o.draws, o.seed);
    t
}

fn cmd_limit(problem: &ProblemSpec, cfg: &RunConfig, out: &Outputs<'_>) -> Result<()> {
    let (gamma, _) = truth(problem, cfg)?;
    let (sol, val) = build_models(problem, cfg, &gamma)?;
    let eta = sample_solution_limit(&sol, cfg.s, cfg.limit_seed)?;
    let vals = sample_value_limit(&val, cfg.s, cfg.limit_seed)?;
    out.csv("solution-draws.csv", &draws_csv(&eta))?;
    out.csv("value-draws.csv", &value_csv(&vals))?;
    let o = LimitOutput {
        problem: problem.name.clone(),
        solution: sol,
        value: val,
        draws: cfg.s,
        seed: cfg.limit_seed,
    };
    out.json("limit-model.json", &o)?;
    out.text("limit-model.txt", &render_limit(&o))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueDerivOutput {
    pub problem: String,
    pub formula: FormulaDeriv,
    pub finite_difference: DirDerivFd,
}

fn render_value_deriv(o: &ValueDerivOutput) -> String {
    let mut t = format!("problem {}\n", o.problem);
    let _ = writeln!(t, "{:<28} {:>14}", "quantity", "value");
    let _ = writeln!(t, "{:<28} {:>14.9}", "formula minsup", o.formula.minsup);
    match o.formula.weighted {
        Some(w) => {
            let _ = writeln!(t, "{:<28} {:>14.9}", "formula weighted", w);
        }
        None => {
            let _ = writeln!(t, "{:<28} {:>14}", "formula weighted", "n/a");
        }
    }
    for (tt, q) in &o.finite_difference.quotients {
        let _ = writeln!(t, "{:<28} {:>14.9}", format!("finite difference t={tt:e}"), q);
    }
    let _ = writeln!(t, "{:<28} {:>14.9}", "finite difference estimate", o.finite_difference.estimate);
    let _ = writeln!(t, "{:<28} {:>14}", "quotients monotone", o.finite_difference.monotone);
    t
}

fn cmd_value_deriv(problem: &ProblemSpec, cfg: &RunConfig, out: &Outputs<'_>) -> Result<()> {
    let eta = cfg.eta(problem)?;
    let (gamma, _) = truth(problem, cfg)?;
    let mins = cfg.minimizers.clone().unwrap_or_else(|| vec![gamma]);
    let formula = value_dirderiv_formula(problem, &mins, &eta, &cfg.reduction)?;
    let fd = value_dirderiv_fd(problem, &eta, &cfg.t_grid, &cfg.solver)?;
    let o = ValueDerivOutput {
        problem: problem.name.clone(),
        formula,
        finite_difference: fd,
    };
    out.json("value-deriv.json", &o)?;
    out.text("value-deriv.txt", &render_value_deriv(&o))
}

/// Outcome of a `validate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateReport {
    pub problem: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub master_seed: u64,
    pub limit_seed: u64,
    pub gamma_star: Vec<f64>,
    pub theta_star: f64,
    pub solution_mode: SolutionMode,
    pub limit_cov: Option<MatrixJson>,
    pub sigma2: Option<f64>,
    pub l_dim: usize,
    pub excluded: usize,
    pub exact_recovery_count: usize,
    /// Comparisons that decide `pass`: the 𝓛-projection of the solution
    /// errors (when `𝓛 ≠ {0}`) and the value errors (when the value law is
    /// not a point mass).
    pub gated: ComparisonReport,
    /// Raw coordinates, the component orthogonal to 𝓛, and ungated laws.
    pub diagnostics: ComparisonReport,
    /// Limit covariance implied by the γ-gradient noise corrected for the
    /// first-order response of interior sample maximizers.
    pub xi_adjusted_limit_cov: Option<MatrixJson>,
    pub pass: bool,
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.ncols()).map(|j| m.column(j).iter().copied().collect()).collect()
}

fn column_matrix(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let rows = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

fn cmd_validate(problem: &ProblemSpec, cfg: &RunConfig, out: &Outputs<'_>) -> Result<()> {
    let n = cfg.n.ok_or_else(|| config_err("/N", "validate needs N"))?;
    let (gamma, theta) = truth(problem, cfg)?;
    let (sol, val) = build_models(problem, cfg, &gamma)?;
    let red = &sol.reduction;
    let theo_eta = sample_solution_limit(&sol, cfg.s, cfg.limit_seed)?;
    let theo_val = sample_value_limit(&val, cfg.s, cfg.limit_seed)?;
    let set = run_replications_at(problem, n, cfg.r, cfg.seed, &gamma, theta, &cfg.solver)?;
    out.csv("replications.csv", &set.to_csv())?;

    let th = cfg.thresholds;
    let (emp_l, emp_perp) = project_errors(&set, &red.l_basis);
    let comp = crate::linalg::orthogonal_complement(&red.l_basis);
    let theo_l = &theo_eta * &red.l_basis;
    let theo_perp = &theo_eta * &comp;
    let names = |prefix: &str, k: usize| (1..=k).map(|j| format!("{prefix}{j}")).collect::<Vec<_>>();

    let mut gated_names = Vec::new();
    let mut gated_emp = Vec::new();
    let mut gated_theo = Vec::new();
    let mut diag_names = Vec::new();
    let mut diag_emp = Vec::new();
    let mut diag_theo = Vec::new();

    gated_names.extend(names("L_", emp_l.ncols()));
    gated_emp.extend(columns(&emp_l));
    gated_theo.extend(columns(&theo_l));

    let value_emp = set.value_errors();
    let value_degenerate = val.cov_f.amax() <= 1e-12;
    let (vn, ve, vt) = if value_degenerate {
        (&mut diag_names, &mut diag_emp, &mut diag_theo)
    } else {
        (&mut gated_names, &mut gated_emp, &mut gated_theo)
    };
    vn.push("value".to_string());
    ve.push(value_emp);
    vt.push(theo_val);

    diag_names.extend(names("Lperp_", emp_perp.ncols()));
    diag_emp.extend(columns(&emp_perp));
    diag_theo.extend(columns(&theo_perp));
    diag_names.extend(names("gamma_", problem.n));
    diag_emp.extend(columns(&set.gamma_errors()));
    diag_theo.extend(columns(&theo_eta));

    let report_of = |names: &[String], e: &[Vec<f64>], t: &[Vec<f64>]| -> Result<ComparisonReport> {
        if names.is_empty() {
            return Ok(ComparisonReport {
                thresholds: th,
                items: Vec::new(),
                pass: true,
            });
        }
        // Columns can differ in length only through exclusions, which apply to all.
        compare_distributions(names, &column_matrix(e), &column_matrix(t), &th)
    };
    let gated = report_of(&gated_names, &gated_emp, &gated_theo)?;
    let diagnostics = report_of(&diag_names, &diag_emp, &diag_theo)?;

    let xi_adjusted_limit_cov = if red.active_points.iter().any(|p| p.flag == crate::reduction::PointFlag::Interior)
        && sol.limit_cov.is_some()
    {
        let plug = plugin_dataset(problem, cfg)?;
        let adj = sigma_solution_xi_adjusted(problem, red, covariance_input(cfg, &plug))?;
        Some(MatrixJson::from(&gaussian_solution_limit(red, &adj)?))
    } else {
        None
    };

    let report = ValidateReport {
        problem: problem.name.clone(),
        n,
        r: cfg.r,
        s: cfg.s,
        master_seed: cfg.seed,
        limit_seed: cfg.limit_seed,
        gamma_star: gamma,
        theta_star: theta,
        solution_mode: sol.mode,
        limit_cov: sol.limit_cov.as_ref().map(MatrixJson::from),
        sigma2: val.sigma2,
        l_dim: red.l_basis.ncols(),
        excluded: set.excluded,
        exact_recovery_count: set.exact_recovery_count,
        pass: gated.pass,
        gated,
        diagnostics,
        xi_adjusted_limit_cov,
    };
    out.json("report.json", &report)?;
    out.text("report.txt", &render_validate(&report))
}

fn render_validate(r: &ValidateReport) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "problem {}  N={} R={} S={}  seeds {}/{}", r.problem, r.n, r.r, r.s, r.master_seed, r.limit_seed);
    let _ = writeln!(t, "gamma* {:?}  theta* {}", r.gamma_star, r.theta_star);
    let _ = writeln!(t, "solution mode {:?}, dim L = {}", r.solution_mode, r.l_dim);
    if let Some(c) = &r.limit_cov {
        let _ = writeln!(t, "limit covariance (row-major) {:?}", c.data);
    }
    if let Some(c) = &r.xi_adjusted_limit_cov {
        let _ = writeln!(t, "xi-adjusted limit covariance (row-major) {:?}", c.data);
    }
    if let Some(s2) = r.sigma2 {
        let _ = writeln!(t, "sigma^2 {s2:.6}");
    }
    let _ = writeln!(t, "excluded {}  exact recoveries {}", r.excluded, r.exact_recovery_count);
    t.push_str("\n[gated]\n");
    t.push_str(&r.gated.to_string());
    t.push_str("\n[diagnostics]\n");
    t.push_str(&r.diagnostics.to_string());
    let _ = writeln!(t, "\nresult: {}", if r.pass { "PASS" } else { "FAIL" });
    t
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path)?;
    Ok(Some(serde_json::from_str(&text)?))
}

fn cmd_report(cfg: &RunConfig, out: &Outputs<'_>) -> Result<()> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| config_err("/input", "report needs an input directory"))?;
    let dir = Path::new(input);
    if !dir.is_dir() {
        return Err(config_err("/input", format!("{input} is not a directory")));
    }
    let mut t = format!("report for {input}\n\n");
    let mut found = 0;
    if let Some(o) = read_json::<SolveOutput>(&dir.join("solution.json"))? {
        t.push_str(&render_solve(&o));
        t.push('\n');
        found += 1;
    }
    if let Some(r) = read_json::<ReductionData>(&dir.join("reduction.json"))? {
        let _ = writeln!(t, "reduction at gamma* {:?}, theta* {}", r.gamma_star, r.theta_star);
        let _ = writeln!(t, "active points {:?}", r.active_points.iter().map(|p| p.label.clone()).collect::<Vec<_>>());
        let _ = writeln!(t, "lambda* {:?}", r.lambda_star);
        t.push_str(&r.certificates.to_string());
        t.push('\n');
        found += 1;
    } else if let Some(c) = read_json::<Certificates>(&dir.join("certificates.json"))? {
        t.push_str(&c.to_string());
        t.push('\n');
        found += 1;
    }
    if let Some(o) = read_json::<LimitOutput>(&dir.join("limit-model.json"))? {
        t.push_str(&render_limit(&o));
        t.push('\n');
        found += 1;
    }
    if let Some(o) = read_json::<ValueDerivOutput>(&dir.join("value-deriv.json"))? {
        t.push_str(&render_value_deriv(&o));
        t.push('\n');
        found += 1;
    }
    if let Some(r) = read_json::<ValidateReport>(&dir.join("report.json"))? {
        t.push_str(&render_validate(&r));
        found += 1;
    }
    if found == 0 {
        return Err(config_err("/input", format!("no recognized artifacts in {input}")));
    }
    // The rendered report is the product of this command; write it regardless of formats.
    fs::write(out.dir.join("report.txt"), t)?;
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "minimax-infer", version, about = "Sample solves, limit laws and Monte Carlo validation for stochastic minimax problems")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, clap::Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Replace an existing output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Population and/or sample solve.
    Solve(CommonArgs),
    /// Reduction at the population minimizer and certificates.
    Reduce(CommonArgs),
    /// Limit-law models and draws.
    Limit(CommonArgs),
    /// Finite-difference vs closed-form value derivative.
    ValueDeriv(CommonArgs),
    /// Monte Carlo comparison against the limit laws.
    Validate(CommonArgs),
    /// Render a prior run directory as text.
    Report(CommonArgs),
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (command, a) = match cli.command {
        Sub::Solve(a) => (Command::Solve, a),
        Sub::Reduce(a) => (Command::Reduce, a),
        Sub::Limit(a) => (Command::Limit, a),
        Sub::ValueDeriv(a) => (Command::ValueDeriv, a),
        Sub::Validate(a) => (Command::Validate, a),
        Sub::Report(a) => (Command::Report, a),
    };
    if a.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return 2;
    }
    let opts = RunOptions {
        out: a.out,
        threads: a.threads,
        force: a.force,
    };
    let result = parse_config(&a.config).and_then(|cfg| run_command(command, &cfg, &opts));
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
