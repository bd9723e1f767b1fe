//! Monte Carlo estimates of `log(P_err)/n` and `log(P_cor)/n`.
//!
//! Trial `i` of a run with master seed `s` draws its instance from the stream `(s, i)`, so
//! counts do not depend on thread scheduling.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic_pt::{Model, ModelParams};
use crate::error::{Error, Result};
use crate::ldp::rate_function;
use crate::linalg_lp::{gen_instance_with, lp_failure, null_space_failure, InstanceDims, InteriorValues};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Solver tolerance used by both failure tests.
pub const TRIAL_TOL: f64 = 1e-9;

/// How many solver error messages a run keeps.
const ERROR_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LpCompare,
    NullSpace,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "lp" | "lpcompare" => Ok(Method::LpCompare),
            "ns" | "nullspace" => Ok(Method::NullSpace),
            _ => Err(Error::Domain(format!("unknown method '{s}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::LpCompare => "lp-compare",
            Method::NullSpace => "null-space",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialConfig {
    pub dims: InstanceDims,
    pub model: Model,
    pub mu: f64,
    pub trials: usize,
    pub seed: u64,
    pub method: Method,
    pub interior: InteriorValues,
}

impl TrialConfig {
    pub fn new(dims: InstanceDims, model: Model, mu: f64, trials: usize, seed: u64, method: Method) -> Self {
        Self { dims, model, mu, trials, seed, method, interior: InteriorValues::Uniform }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateEstimate {
    pub dims: InstanceDims,
    pub model: Model,
    pub mu: f64,
    pub method: Method,
    pub seed: u64,
    /// Trials requested.
    pub trials: usize,
    /// Trials whose solver reported an error; excluded from both counts.
    pub solver_errors: usize,
    pub failures: usize,
    pub successes: usize,
    /// `log(failures/completed)/n`, absent when no trial failed.
    pub i_err_hat: Option<f64>,
    /// `log(successes/completed)/n`, absent when every trial failed.
    pub i_cor_hat: Option<f64>,
    /// Wilson 95% interval on the failure proportion mapped through `log(.)/n`.
    /// The lower end is `-inf` when no trial failed.
    pub ci95: (f64, f64),
    /// The same interval for the success proportion.
    pub cor_ci95: (f64, f64),
    /// One-sided bound `log(1/completed)/n` reported for a censored side.
    pub censored_bound: Option<f64>,
    pub error_samples: Vec<String>,
    /// Closed-form rate at the nominal parameters, when attached.
    pub theory_rate: Option<f64>,
    /// Nominal `(alpha, beta)`; defaults to `(m/n, k/n)`.
    pub nominal: (f64, f64),
}

impl RateEstimate {
    pub fn completed(&self) -> usize {
        self.failures + self.successes
    }

    /// Attaches the closed-form rate at `(alpha, beta)`; solver failures leave it empty.
    pub fn with_theory(mut self, alpha: f64, beta: f64) -> Self {
        self.nominal = (alpha, beta);
        self.theory_rate = rate_function(&ModelParams::new(self.model, alpha, beta, self.mu)).ok();
        self
    }
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z95 * Z95;
    let den = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / den;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / den;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

enum Outcome {
    Failure,
    Success,
    SolverError(String),
}

fn one_trial(cfg: &TrialConfig, stream: u64) -> Outcome {
    let inst = gen_instance_with(cfg.dims, cfg.model, cfg.seed, stream, cfg.interior);
    let res = match cfg.method {
        Method::LpCompare => lp_failure(&inst, TRIAL_TOL),
        Method::NullSpace => null_space_failure(&inst, TRIAL_TOL),
    };
    match res {
        Ok(true) => Outcome::Failure,
        Ok(false) => Outcome::Success,
        Err(e) => Outcome::SolverError(format!("trial {stream}: {e}")),
    }
}

#[derive(Default)]
struct Tally {
    failures: usize,
    successes: usize,
    errors: usize,
    samples: Vec<(u64, String)>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.failures += other.failures;
        self.successes += other.successes;
        self.errors += other.errors;
        self.samples.extend(other.samples);
        self.samples.sort_by_key(|s| s.0);
        self.samples.truncate(ERROR_SAMPLES);
        self
    }
}

/// Runs `cfg.trials` independent trials on the current rayon pool.
pub fn run_trials(cfg: &TrialConfig) -> Result<RateEstimate> {
    if cfg.trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let tally = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut t = Tally::default();
            match one_trial(cfg, i) {
                Outcome::Failure => t.failures = 1,
                Outcome::Success => t.successes = 1,
                Outcome::SolverError(msg) => {
                    t.errors = 1;
                    t.samples.push((i, msg));
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);
    Ok(estimate_from_counts(cfg, tally))
}

fn estimate_from_counts(cfg: &TrialConfig, tally: Tally) -> RateEstimate {
    let n = cfg.dims.n as f64;
    let done = tally.failures + tally.successes;
    let log_rate = |count: usize| (count > 0 && done > 0).then(|| (count as f64 / done as f64).ln() / n);
    let (lo, hi) = wilson_interval(tally.failures, done);
    let to_rate = |p: f64| p.ln() / n;
    let censored = tally.failures == 0 || tally.successes == 0;
    RateEstimate {
        dims: cfg.dims,
        model: cfg.model,
        mu: cfg.mu,
        method: cfg.method,
        seed: cfg.seed,
        trials: cfg.trials,
        solver_errors: tally.errors,
        failures: tally.failures,
        successes: tally.successes,
        i_err_hat: log_rate(tally.failures),
        i_cor_hat: log_rate(tally.successes),
        ci95: (to_rate(lo), to_rate(hi)),
        cor_ci95: (to_rate(1.0 - hi), to_rate(1.0 - lo)),
        censored_bound: (censored && done > 0).then(|| (1.0 / done as f64).ln() / n),
        error_samples: tally.samples.into_iter().map(|s| s.1).collect(),
        theory_rate: None,
        nominal: (cfg.dims.alpha(), cfg.dims.beta()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Disagreement {
    pub stream: u64,
    pub lp_failure: bool,
    pub null_space_failure: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodAgreement {
    pub trials: usize,
    pub agree: usize,
    pub solver_errors: usize,
    pub disagreements: Vec<Disagreement>,
}

impl MethodAgreement {
    /// Agreement fraction over trials where both methods returned.
    pub fn rate(&self) -> f64 {
        let done = self.agree + self.disagreements.len();
        if done == 0 {
            return 0.0;
        }
        self.agree as f64 / done as f64
    }
}

/// Runs both failure tests on the same instances.
pub fn compare_methods(dims: InstanceDims, model: Model, trials: usize, seed: u64) -> MethodAgreement {
    let per: Vec<(u64, Result<(bool, bool)>)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let inst = gen_instance_with(dims, model, seed, i, InteriorValues::Uniform);
            let r = lp_failure(&inst, TRIAL_TOL).and_then(|a| Ok((a, null_space_failure(&inst, TRIAL_TOL)?)));
            (i, r)
        })
        .collect();
    let mut out = MethodAgreement { trials, agree: 0, solver_errors: 0, disagreements: Vec::new() };
    for (stream, r) in per {
        match r {
            Ok((a, b)) if a == b => out.agree += 1,
            Ok((a, b)) => out.disagreements.push(Disagreement { stream, lp_failure: a, null_space_failure: b }),
            Err(_) => out.solver_errors += 1,
        }
    }
    out
}

/// One column of a simulation table: nominal parameters plus instance sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationCell {
    pub model: Model,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub dims: InstanceDims,
}

impl SimulationCell {
    fn binary(alpha: f64, n: usize, m: usize, k: usize) -> Self {
        let dims = InstanceDims::binary(n, m, k).expect("preset dimensions are valid");
        Self { model: Model::Binary, alpha, beta: 0.22933, mu: 1.0, dims }
    }

    fn boxed(alpha: f64, n: usize, m: usize, k: usize) -> Self {
        let dims = InstanceDims::boxed(n, m, k, 0.85).expect("preset dimensions are valid");
        Self { model: Model::Box, alpha, beta: 0.18469, mu: 0.85, dims }
    }
}

/// Binary cells at `beta = 0.22933`.
pub fn table2_cells() -> Vec<SimulationCell> {
    vec![
        SimulationCell::binary(0.30, 140, 42, 32),
        SimulationCell::binary(0.35, 300, 105, 69),
        SimulationCell::binary(0.40, 300, 120, 69),
        SimulationCell::binary(0.45, 300, 135, 69),
        SimulationCell::binary(0.50, 140, 70, 32),
    ]
}

/// Box cells at `beta = 0.18469`, `mu = 0.85`.
pub fn table4_cells() -> Vec<SimulationCell> {
    vec![
        SimulationCell::boxed(0.40, 125, 50, 23),
        SimulationCell::boxed(0.45, 300, 135, 55),
        SimulationCell::boxed(0.50, 300, 150, 55),
        SimulationCell::boxed(0.55, 300, 165, 55),
        SimulationCell::boxed(0.60, 125, 75, 23),
    ]
}

/// Runs one cell and attaches the closed-form rate at its nominal parameters.
pub fn simulate_cell(cell: &SimulationCell, trials: usize, seed: u64, method: Method) -> Result<RateEstimate> {
    let cfg = TrialConfig::new(cell.dims, cell.model, cell.mu, trials, seed, method);
    Ok(run_trials(&cfg)?.with_theory(cell.alpha, cell.beta))
}

pub const CSV_HEADER: [&str; 18] = [
    "model",
    "alpha",
    "beta",
    "mu",
    "n",
    "m",
    "k",
    "trials",
    "failures",
    "solver_errors",
    "i_err_hat",
    "i_cor_hat",
    "ci_lo",
    "ci_hi",
    "cor_ci_lo",
    "cor_ci_hi",
    "censored_bound",
    "theory_rate",
];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

pub fn write_estimates_csv<W: Write>(out: W, rows: &[RateEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Domain(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.model.to_string(),
            format!("{}", r.nominal.0),
            format!("{}", r.nominal.1),
            format!("{}", r.mu),
            r.dims.n.to_string(),
            r.dims.m.to_string(),
            r.dims.k.to_string(),
            r.trials.to_string(),
            r.failures.to_string(),
            r.solver_errors.to_string(),
            opt(r.i_err_hat),
            opt(r.i_cor_hat),
            format!("{:.6}", r.ci95.0),
            format!("{:.6}", r.ci95.1),
            format!("{:.6}", r.cor_ci95.0),
            format!("{:.6}", r.cor_ci95.1),
            opt(r.censored_bound),
            opt(r.theory_rate),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Domain(format!("csv: {e}")))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub crate_version: &'static str,
    pub seed: u64,
    pub method: Method,
    pub trials: usize,
    pub tolerance: f64,
    pub interior: InteriorValues,
    pub threads: usize,
    pub rows: Vec<RateEstimate>,
}

impl RunManifest {
    pub fn new(seed: u64, method: Method, trials: usize, interior: InteriorValues, rows: Vec<RateEstimate>) -> Self {
        Self {
            schema_version: crate::cli::SCHEMA_VERSION,
            crate_version: env!("CARGO_PKG_VERSION"),
            seed,
            method,
            trials,
            tolerance: TRIAL_TOL,
            interior,
            threads: rayon::current_num_threads(),
            rows,
        }
    }
}
