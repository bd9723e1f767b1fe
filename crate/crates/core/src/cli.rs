//! Command-line surface: `pt`, `ldp`, `verify` and `simulate`.
//!
//! Each `cmd_*` function returns a [`Report`] holding the rendered output so the binary
//! only parses arguments and writes files.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytic_pt::{expected_width_gap, pt_alpha, pt_curve, Model, ModelParams};
use crate::error::{Error, Result};
use crate::ldp::{rate_curve, solve_ldp, ye_from_cone, LdpSolution};
use crate::linalg_lp::{InstanceDims, InteriorValues};
use crate::montecarlo::{
    run_trials, table2_cells, table4_cells, write_estimates_csv, Method, RateEstimate, RunManifest,
    SimulationCell, TrialConfig,
};
use crate::oracles::{minimize_zeta_prob, solve_geom};

/// Version of every JSON document the CLI writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Rate agreement required by `verify`.
pub const VERIFY_RATE_TOL: f64 = 1e-6;
/// Argmin agreement required by `verify`.
pub const VERIFY_ARG_TOL: f64 = 1e-4;

pub const TABLE1_BETA: f64 = 0.22933;
pub const TABLE3_BETA: f64 = 0.18469;
pub const TABLE3_MU: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Binary,
    Box,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Binary => Model::Binary,
            ModelArg::Box => Model::Box,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lp,
    NullSpace,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Lp => Method::LpCompare,
            MethodArg::NullSpace => Method::NullSpace,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "l1pt", version, about = "Phase transitions and LDP rates for binary and box l1 recovery")]
pub struct Cli {
    /// Master seed for simulations.
    #[arg(long, global = true, env = "L1PT_SEED", default_value_t = 2013)]
    pub seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "L1PT_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, env = "L1PT_FORMAT", value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; stdout when absent. Plot scripts are written next to it.
    #[arg(long, global = true, env = "L1PT_OUT")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weak phase-transition curve beta(alpha).
    Pt(PtArgs),
    /// Closed-form LDP solutions over an alpha grid.
    Ldp(LdpArgs),
    /// Closed form against both numeric oracles.
    Verify(VerifyArgs),
    /// Monte Carlo decay-rate estimates.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Explicit alpha values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Defaults to 0.025 (binary) or 0.05 (box).
    #[arg(long)]
    pub alpha_min: Option<f64>,
    /// Defaults to 0.475 (binary) or 0.95 (box).
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long, default_value_t = 19)]
    pub points: usize,
}

impl GridArgs {
    /// The binary curve saturates at `alpha = 1/2`, so its default range stops below it.
    pub fn grid(&self, model: Model) -> Result<Vec<f64>> {
        if let Some(a) = &self.alphas {
            return Ok(a.clone());
        }
        let (lo, hi) = match model {
            Model::Binary => (0.025, 0.475),
            Model::Box => (0.05, 0.95),
        };
        uniform_grid(self.alpha_min.unwrap_or(lo), self.alpha_max.unwrap_or(hi), self.points)
    }
}

/// `points` values from `lo` to `hi`, rounded to 12 decimals so that `0.4` prints as `0.4`.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !(lo <= hi) {
        return Err(Error::Domain(format!("bad grid [{lo}, {hi}] with {points} points")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| ((lo + step * i as f64) * 1e12).round() / 1e12).collect())
}

#[derive(Debug, Clone, Args)]
pub struct PtArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Binary)]
    pub model: ModelArg,
    #[arg(long, default_value_t = TABLE3_MU)]
    pub mu: f64,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct LdpArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Binary)]
    pub model: ModelArg,
    /// Defaults to 0.22933 (binary) or 0.18469 (box).
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = TABLE3_MU)]
    pub mu: f64,
    /// Binary preset: beta = 0.22933, alpha in {0.30, ..., 0.50}.
    #[arg(long, conflicts_with = "table3")]
    pub table1: bool,
    /// Box preset: beta = 0.18469, mu = 0.85, alpha in {0.40, ..., 0.60}.
    #[arg(long)]
    pub table3: bool,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Binary)]
    pub model: ModelArg,
    #[arg(long, default_value_t = TABLE3_MU)]
    pub mu: f64,
    /// Fixed beta for a custom grid; requires --alphas.
    #[arg(long, requires = "alphas")]
    pub beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Binary)]
    pub model: ModelArg,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = TABLE3_MU)]
    pub mu: f64,
    #[arg(long, env = "L1PT_TRIALS", default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Lp)]
    pub method: MethodArg,
    /// Use this constant for box interior entries instead of uniform(0, 1) draws.
    #[arg(long)]
    pub interior_constant: Option<f64>,
    /// The five binary configurations at beta = 0.22933.
    #[arg(long, conflicts_with_all = ["table4", "n", "m", "k"])]
    pub table2: bool,
    /// The five box configurations at beta = 0.18469, mu = 0.85.
    #[arg(long, conflicts_with_all = ["n", "m", "k"])]
    pub table4: bool,
}

/// Rendered command output.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub body: String,
    /// Gnuplot script for the data file, when the command has one.
    pub script: Option<String>,
    /// JSON manifest written beside CSV output.
    pub manifest: Option<String>,
    /// Per-point problems, reported on stderr.
    pub warnings: Vec<String>,
    pub success: bool,
}

#[derive(Serialize)]
struct JsonDoc<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    #[serde(flatten)]
    data: T,
}

fn to_json<T: Serialize>(command: &str, data: T) -> Result<String> {
    serde_json::to_string_pretty(&JsonDoc { schema_version: SCHEMA_VERSION, command, data })
        .map_err(|e| Error::Domain(format!("json: {e}")))
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Domain(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Domain(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn gnuplot(data_file: &str, title: &str, xlabel: &str, ylabel: &str, ycol: usize) -> String {
    format!(
        "set datafile separator ','\nset key off\nset grid\nset title '{title}'\n\
         set xlabel '{xlabel}'\nset ylabel '{ylabel}'\n\
         plot '{data_file}' every ::1 using 2:{ycol} with linespoints pt 7 ps 0.6\n"
    )
}

pub fn cmd_pt(args: &PtArgs, format: Format) -> Result<Report> {
    let model: Model = args.model.into();
    let mu = if model == Model::Binary { 1.0 } else { args.mu };
    let curve = pt_curve(model, mu, &args.grid.grid(model)?);
    let warnings = curve.skipped.iter().map(|s| format!("skipped alpha={}: {}", s.alpha, s.reason)).collect();
    let body = match format {
        Format::Csv => csv_string(
            &["model", "alpha", "beta", "mu"],
            curve
                .points
                .iter()
                .map(|p| vec![model.to_string(), p.alpha.to_string(), p.beta.to_string(), mu.to_string()])
                .collect(),
        )?,
        Format::Json => to_json("pt", serde_json::json!({ "model": model, "mu": mu, "curve": curve }))?,
    };
    Ok(Report {
        body,
        script: Some(gnuplot("DATA", &format!("{model} weak phase transition"), "alpha", "beta", 3)),
        warnings,
        success: true,
        ..Default::default()
    })
}

const LDP_HEADER: [&str; 14] =
    ["model", "alpha", "beta", "mu", "y1", "gamma_g", "a_cone", "y2", "nu", "a0", "c3", "gamma", "rate", "tail"];

fn ldp_row(s: &LdpSolution) -> Vec<String> {
    let p = &s.params;
    let tail = serde_json::to_value(s.tail).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
    let mut row = vec![p.model.to_string(), p.alpha.to_string(), p.beta.to_string(), p.mu.to_string()];
    row.extend([s.y1, s.gamma_g, s.a_cone, s.y2, s.nu, s.a0, s.c3, s.gamma, s.rate].iter().map(|v| format!("{v:.10}")));
    row.push(tail);
    row
}

/// Resolved `(model, beta, mu, alpha grid)` of an `ldp` invocation.
pub fn ldp_setup(args: &LdpArgs) -> Result<(Model, f64, f64, Vec<f64>)> {
    if args.table1 {
        return Ok((Model::Binary, TABLE1_BETA, 1.0, vec![0.30, 0.35, 0.40, 0.45, 0.50]));
    }
    if args.table3 {
        return Ok((Model::Box, TABLE3_BETA, TABLE3_MU, vec![0.40, 0.45, 0.50, 0.55, 0.60]));
    }
    let model: Model = args.model.into();
    let (beta, mu) = match model {
        Model::Binary => (args.beta.unwrap_or(TABLE1_BETA), 1.0),
        Model::Box => (args.beta.unwrap_or(TABLE3_BETA), args.mu),
    };
    let grid = match &args.grid.alphas {
        Some(a) => a.clone(),
        // Default sweep: alpha on a 0.01 grid above beta.
        None => uniform_grid(0.01, 0.99, 99)?.into_iter().filter(|&a| a > beta).collect(),
    };
    Ok((model, beta, mu, grid))
}

pub fn cmd_ldp(args: &LdpArgs, format: Format) -> Result<Report> {
    let (model, beta, mu, grid) = ldp_setup(args)?;
    let curve = rate_curve(beta, mu, model, &grid);
    let warnings = curve.failures.iter().map(|(a, e)| format!("skipped alpha={a}: {e}")).collect();
    let body = match format {
        Format::Csv => csv_string(&LDP_HEADER, curve.rows.iter().map(ldp_row).collect())?,
        Format::Json => to_json("ldp", serde_json::json!({ "model": model, "beta": beta, "mu": mu, "curve": curve }))?,
    };
    Ok(Report {
        body,
        script: Some(gnuplot("DATA", &format!("{model} LDP rate, beta = {beta}"), "alpha", "rate", 13)),
        warnings,
        success: true,
        ..Default::default()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyRow {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub closed_rate: Option<f64>,
    pub prob_rate: Option<f64>,
    pub geom_rate: Option<f64>,
    /// Largest rate discrepancy against the closed form.
    pub rate_err: Option<f64>,
    /// Largest argmin-coordinate discrepancy against the closed form.
    pub arg_err: Option<f64>,
    pub verdict: Verdict,
    pub note: String,
}

/// Closed form against both oracles at one point.
pub fn verify_point(params: &ModelParams) -> VerifyRow {
    let mut row = VerifyRow {
        alpha: params.alpha,
        beta: params.beta,
        mu: params.mu,
        closed_rate: None,
        prob_rate: None,
        geom_rate: None,
        rate_err: None,
        arg_err: None,
        verdict: Verdict::Skipped,
        note: String::new(),
    };
    let sol = match solve_ldp(params) {
        Ok(s) => s,
        Err(e) => {
            row.note = e.to_string();
            return row;
        }
    };
    row.closed_rate = Some(sol.rate);
    let checked = (|| -> Result<(f64, f64)> {
        let prob = minimize_zeta_prob(params)?;
        let geom = solve_geom(params)?;
        let y_e = ye_from_cone(sol.y2, sol.a_cone)?;
        let rate_err = (prob.value - sol.rate).abs().max((geom.psi_net - sol.rate).abs());
        let arg_err = [
            prob.c3 - sol.c3,
            prob.nu - sol.nu,
            prob.a0 - sol.a0,
            geom.gamma_g - sol.gamma_g,
            geom.y_i - sol.y2,
            geom.y_e - y_e,
        ]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));
        row.prob_rate = Some(prob.value);
        row.geom_rate = Some(geom.psi_net);
        Ok((rate_err, arg_err))
    })();
    match checked {
        Ok((re, ae)) => {
            row.rate_err = Some(re);
            row.arg_err = Some(ae);
            row.verdict = if re <= VERIFY_RATE_TOL && ae <= VERIFY_ARG_TOL { Verdict::Pass } else { Verdict::Fail };
        }
        Err(e) => {
            row.verdict = Verdict::Fail;
            row.note = e.to_string();
        }
    }
    row
}

/// Default verification grid: ten offsets around the transition at each of two betas.
pub fn verify_grid(model: Model, mu: f64) -> Vec<ModelParams> {
    let betas: [f64; 2] = match model {
        Model::Binary => [TABLE1_BETA, 0.15],
        Model::Box => [TABLE3_BETA, 0.12],
    };
    let offsets = [-0.12, -0.09, -0.06, -0.03, -0.01, 0.01, 0.03, 0.06, 0.09, 0.12];
    let mut out = Vec::new();
    for beta in betas {
        let Ok(a_pt) = pt_alpha(beta, model, mu) else { continue };
        for d in offsets {
            out.push(ModelParams::new(model, a_pt + d, beta, mu));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub model: Model,
    pub mu: f64,
    pub rows: Vec<VerifyRow>,
    /// Width-gap check at the transition for each grid beta: `(beta, alpha_pt, gap)`.
    pub width_checks: Vec<(f64, f64, f64)>,
    pub worst_rate_err: f64,
    pub worst_point: Option<(f64, f64)>,
    pub pass: bool,
}

pub fn run_verify(points: &[ModelParams], model: Model, mu: f64) -> VerifySummary {
    let rows: Vec<VerifyRow> = points.iter().map(verify_point).collect();
    let mut betas: Vec<f64> = points.iter().map(|p| p.beta).collect();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    let width_checks: Vec<(f64, f64, f64)> = betas
        .iter()
        .filter_map(|&b| {
            let a = pt_alpha(b, model, mu).ok()?;
            let gap = expected_width_gap(&ModelParams::new(model, a, b, mu)).ok()?;
            Some((b, a, gap))
        })
        .collect();
    let mut worst = (0.0, None);
    for r in &rows {
        if let Some(e) = r.rate_err {
            if e >= worst.0 {
                worst = (e, Some((r.alpha, r.beta)));
            }
        }
    }
    let pass = rows.iter().all(|r| r.verdict != Verdict::Fail)
        && width_checks.iter().all(|w| w.2.abs() <= VERIFY_RATE_TOL);
    VerifySummary { model, mu, rows, width_checks, worst_rate_err: worst.0, worst_point: worst.1, pass }
}

pub fn cmd_verify(args: &VerifyArgs, format: Format) -> Result<Report> {
    let model: Model = args.model.into();
    let mu = if model == Model::Binary { 1.0 } else { args.mu };
    let points = match (&args.alphas, args.beta) {
        (Some(alphas), Some(beta)) => alphas.iter().map(|&a| ModelParams::new(model, a, beta, mu)).collect(),
        (Some(_), None) => return Err(Error::Domain("--alphas needs --beta".into())),
        _ => verify_grid(model, mu),
    };
    let summary = run_verify(&points, model, mu);
    let mut warnings: Vec<String> = summary
        .rows
        .iter()
        .filter(|r| r.verdict != Verdict::Pass)
        .map(|r| format!("{:?} alpha={} beta={}: {}", r.verdict, r.alpha, r.beta, r.note))
        .collect();
    for (b, a, gap) in &summary.width_checks {
        warnings.push(format!("width gap at the transition beta={b}, alpha={a}: {gap:.3e}"));
    }
    warnings.push(format!(
        "{}: worst rate discrepancy {:.3e} at {:?}",
        if summary.pass { "PASS" } else { "FAIL" },
        summary.worst_rate_err,
        summary.worst_point
    ));
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.3e}"));
    let body = match format {
        Format::Csv => csv_string(
            &["alpha", "beta", "mu", "closed_rate", "prob_rate", "geom_rate", "rate_err", "arg_err", "verdict"],
            summary
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.alpha.to_string(),
                        r.beta.to_string(),
                        r.mu.to_string(),
                        r.closed_rate.map_or_else(String::new, |v| format!("{v:.10}")),
                        r.prob_rate.map_or_else(String::new, |v| format!("{v:.10}")),
                        r.geom_rate.map_or_else(String::new, |v| format!("{v:.10}")),
                        opt(r.rate_err),
                        opt(r.arg_err),
                        format!("{:?}", r.verdict).to_uppercase(),
                    ]
                })
                .collect(),
        )?,
        Format::Json => to_json("verify", &summary)?,
    };
    Ok(Report { body, warnings, success: summary.pass, ..Default::default() })
}

/// Cells of a `simulate` invocation.
pub fn simulate_cells(args: &SimulateArgs) -> Result<Vec<SimulationCell>> {
    if args.table2 {
        return Ok(table2_cells());
    }
    if args.table4 {
        return Ok(table4_cells());
    }
    let (Some(n), Some(m), Some(k)) = (args.n, args.m, args.k) else {
        return Err(Error::Domain("simulate needs --n, --m and --k, or a table preset".into()));
    };
    let model: Model = args.model.into();
    let mu = if model == Model::Binary { 1.0 } else { args.mu };
    let dims = InstanceDims::new(model, n, m, k, mu)?;
    Ok(vec![SimulationCell { model, alpha: dims.alpha(), beta: dims.beta(), mu, dims }])
}

pub fn cmd_simulate(args: &SimulateArgs, seed: u64, format: Format) -> Result<Report> {
    let cells = simulate_cells(args)?;
    let method: Method = args.method.into();
    let interior = match args.interior_constant {
        Some(c) if (0.0..=1.0).contains(&c) => InteriorValues::Constant(c),
        Some(c) => return Err(Error::Domain(format!("interior constant {c} outside [0, 1]"))),
        None => InteriorValues::Uniform,
    };
    let mut rows: Vec<RateEstimate> = Vec::with_capacity(cells.len());
    for cell in &cells {
        let mut cfg = TrialConfig::new(cell.dims, cell.model, cell.mu, args.trials, seed, method);
        cfg.interior = interior;
        rows.push(run_trials(&cfg)?.with_theory(cell.alpha, cell.beta));
    }
    let warnings = rows
        .iter()
        .filter(|r| r.solver_errors > 0)
        .map(|r| format!("n={} m={}: {} solver errors, e.g. {:?}", r.dims.n, r.dims.m, r.solver_errors, r.error_samples))
        .collect();
    let manifest = RunManifest::new(seed, method, args.trials, interior, rows.clone());
    let manifest_json =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Domain(format!("json: {e}")))?;
    let (body, manifest) = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_estimates_csv(&mut buf, &rows)?;
            (String::from_utf8(buf).expect("csv output is utf-8"), Some(manifest_json))
        }
        Format::Json => (manifest_json, None),
    };
    Ok(Report { body, manifest, warnings, success: true, ..Default::default() })
}

/// Companion paths for an output file: `<out>.gp` and `<out>.manifest.json`.
pub fn companion_path(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    if let Some(t) = cli.threads {
        // A pool that already exists (for example in tests) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let report = match &cli.command {
        Command::Pt(a) => cmd_pt(a, cli.format)?,
        Command::Ldp(a) => cmd_ldp(a, cli.format)?,
        Command::Verify(a) => cmd_verify(a, cli.format)?,
        Command::Simulate(a) => cmd_simulate(a, cli.seed, cli.format)?,
    };
    for w in &report.warnings {
        eprintln!("{w}");
    }
    let io = |e: std::io::Error| Error::Domain(format!("io: {e}"));
    match &cli.out {
        Some(path) => {
            std::fs::write(path, &report.body).map_err(io)?;
            if let (Some(script), Format::Csv) = (&report.script, cli.format) {
                let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                std::fs::write(companion_path(path, ".gp"), script.replace("DATA", &name)).map_err(io)?;
            }
            if let Some(m) = &report.manifest {
                std::fs::write(companion_path(path, ".manifest.json"), m).map_err(io)?;
            }
        }
        None => print!("{}", report.body),
    }
    Ok(if report.success { 0 } else { 1 })
}
