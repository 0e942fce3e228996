//! `lanchester` command line.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 runtime failure
//! (integration or output), 3 `corridor --verify` found a violation.

pub mod error;
pub mod grid;
pub mod simulate;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lanchester_core::classifier::classify;
use lanchester_core::closed_form::solve_ratio;
use lanchester_core::corridor::CorridorSpec;
use lanchester_core::model::{ModelParams, RatioState};
use lanchester_core::premium::{growth_exponent, log_norm, premium_ratio, propagate};
use lanchester_io::report::{
    to_json_string, ClassifyReport, CorridorReport, EventEntry, PremiumComparison, PremiumReport,
    SolveReport,
};
use lanchester_io::scenario::step_grid;
use lanchester_io::table::format_number;
use lanchester_io::{load_scenario, TrajectoryRow, TrajectoryTable, FORMAT_VERSION};
use rayon::prelude::*;
use serde::Serialize;

pub use error::{CliError, CliResult};
use grid::AxisRange;

#[derive(Debug, Parser)]
#[command(name = "lanchester", version, about = "Constant-sum Lanchester model: regimes, closed forms, corridors, premium")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Regime, equilibrium and breach face for (alpha, beta).
    Classify(ClassifyArgs),
    /// Closed-form ratio trajectory.
    Solve(SolveArgs),
    /// Numerical run of a scenario file.
    Simulate(SimulateArgs),
    /// Corridor admissibility, optionally with randomized verification.
    Corridor(CorridorArgs),
    /// Growth of the unconstrained linear system.
    Premium(PremiumArgs),
    /// Regime map over an (alpha, beta) grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SolveArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub y0: f64,
    #[arg(long)]
    pub t_end: f64,
    #[arg(long)]
    pub dt: f64,
    /// `csv` writes the trajectory, `json` the report.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Also write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CorridorArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub abar: f64,
    #[arg(long)]
    pub bbar: f64,
    #[arg(long)]
    pub eps: f64,
    /// Run randomized trials with saturating piecewise-constant disturbances.
    #[arg(long)]
    pub verify: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Default: 20 / (2 sqrt(ab)).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Disturbance dwell time. Default: 1 / (2 sqrt(ab)).
    #[arg(long)]
    pub dwell: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PremiumArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub r0: f64,
    #[arg(long)]
    pub b0: f64,
    #[arg(long)]
    pub t_end: f64,
    /// CSV sample step. Default: t_end / 200.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Degenerate pair for the premium comparison (needs --compare-beta).
    #[arg(long, requires = "compare_beta")]
    pub compare_alpha: Option<f64>,
    #[arg(long, requires = "compare_alpha")]
    pub compare_beta: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// LO:HI:N, both ends included.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_range: AxisRange,
    #[arg(long, allow_hyphen_values = true)]
    pub beta_range: AxisRange,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn emit(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(content.as_bytes()).and_then(|_| out.flush()) {
                // The reader went away (e.g. `| head`): nothing left to do.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(|e| CliError::Runtime(format!("stdout: {e}"))),
            }
        }
    }
}

fn json<R: Serialize>(r: &R) -> CliResult<String> {
    Ok(to_json_string(r)?)
}

fn params(alpha: f64, beta: f64) -> CliResult<ModelParams<f64>> {
    Ok(ModelParams::new(alpha, beta)?)
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Classify(a) => cmd_classify(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Corridor(a) => cmd_corridor(a),
        Command::Premium(a) => cmd_premium(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeRow {
    pub alpha: f64,
    pub beta: f64,
    pub regime: String,
    pub y_star: Option<f64>,
    pub x_star: Option<f64>,
}

pub fn regime_row(alpha: f64, beta: f64) -> CliResult<RegimeRow> {
    let r = classify(&params(alpha, beta)?);
    Ok(RegimeRow {
        alpha,
        beta,
        regime: r.regime.name().into(),
        y_star: r.equilibrium.map(|e| e.y_star),
        x_star: r.equilibrium.map(|e| e.x_star),
    })
}

pub fn regime_csv(rows: &[RegimeRow]) -> String {
    let cell = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    let mut s = String::from("alpha,beta,regime,y_star,x_star\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            format_number(r.alpha),
            format_number(r.beta),
            r.regime,
            cell(r.y_star),
            cell(r.x_star)
        ));
    }
    s
}

fn cmd_classify(a: ClassifyArgs) -> CliResult<()> {
    let p = params(a.alpha, a.beta)?;
    let content = match a.format {
        Format::Json => json(&ClassifyReport::from(&classify(&p)))?,
        Format::Csv => regime_csv(&[regime_row(a.alpha, a.beta)?]),
    };
    emit(a.out.output.as_deref(), &content)
}

/// Closed-form trajectory on `0, dt, ..., t_end`, truncated before the
/// maximal time; the terminal event goes to the report.
pub fn solve_table(a: &SolveArgs) -> CliResult<(TrajectoryTable, SolveReport)> {
    if !(a.t_end > 0.0 && a.t_end.is_finite()) {
        return Err(CliError::Usage("--t-end must be positive".into()));
    }
    if !(a.dt > 0.0 && a.dt.is_finite()) {
        return Err(CliError::Usage("--dt must be positive".into()));
    }
    let p = params(a.alpha, a.beta)?;
    let sol = solve_ratio(&p, RatioState::new(a.y0)?)?;
    let mut table = TrajectoryTable::new(false, false);
    for t in step_grid(a.t_end, a.dt) {
        if t >= sol.t_max() {
            break;
        }
        let y = sol.eval(t)?.value();
        table.push(TrajectoryRow::from_ratio(t, y, a.alpha, a.beta));
    }
    let mut events = Vec::new();
    if let Some(face) = sol.terminal_event() {
        if sol.t_max() <= a.t_end {
            let label = match face {
                lanchester_core::Face::B => "ratio_blowup",
                lanchester_core::Face::R => "ratio_zero",
            };
            events.push(EventEntry {
                t: sol.t_max(),
                label: label.into(),
                face: Some(face.label().into()),
                bracket: [sol.t_max(), sol.t_max()],
            });
        }
    }
    let report = SolveReport {
        format_version: FORMAT_VERSION,
        kind: "solve".into(),
        alpha: a.alpha,
        beta: a.beta,
        y0: a.y0,
        case: sol.case().name().into(),
        t_max: (!sol.is_global()).then(|| sol.t_max()),
        t_end: a.t_end,
        rows: table.rows.len(),
        events,
    };
    Ok((table, report))
}

fn cmd_solve(a: SolveArgs) -> CliResult<()> {
    let (table, report) = solve_table(&a)?;
    let report_json = json(&report)?;
    if let Some(p) = &a.report {
        emit(Some(p), &report_json)?;
    }
    match a.format {
        Format::Csv => emit(a.out.output.as_deref(), &table.to_csv_string()),
        Format::Json => emit(a.out.output.as_deref(), &report_json),
    }
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    let scenario = load_scenario(&a.config)?;
    let out = simulate::run_scenario(&scenario)?;
    let report_json = json(&out.report)?;
    if let Some(p) = &a.report {
        emit(Some(p), &report_json)?;
    }
    match a.format {
        Format::Csv => emit(a.out.output.as_deref(), &out.table.to_csv_string()),
        Format::Json => emit(a.out.output.as_deref(), &report_json),
    }
}

fn cmd_corridor(a: CorridorArgs) -> CliResult<()> {
    let spec = CorridorSpec::new(a.a, a.b, a.abar, a.bbar, a.eps)?;
    let mut report = CorridorReport::from(&spec);
    let mut failed = false;
    if a.verify {
        let seed = a
            .seed
            .ok_or_else(|| CliError::Usage("--verify needs --seed".into()))?;
        if a.trials == 0 {
            return Err(CliError::Usage("--trials must be positive".into()));
        }
        let horizon = a.horizon.unwrap_or_else(|| verify::default_horizon(&spec));
        let dwell = a.dwell.unwrap_or_else(|| verify::default_dwell(&spec));
        if !(horizon > 0.0 && horizon.is_finite() && dwell > 0.0 && dwell.is_finite()) {
            return Err(CliError::Usage("--horizon and --dwell must be positive".into()));
        }
        let summary = verify::verify_corridor(&spec, seed, a.trials, horizon, dwell)?;
        // The bound only claims anything for admissible specs.
        failed = report.admissible && !summary.passed;
        report.verification = Some(summary);
    }
    emit(a.out.output.as_deref(), &json(&report)?)?;
    if failed {
        let v = report.verification.as_ref().expect("set above");
        return Err(CliError::Verification(format!(
            "corridor verification failed: {} exits, {} envelope violations in {} trials (max violation {:e})",
            v.exits, v.envelope_violations, v.trials, v.max_envelope_violation
        )));
    }
    Ok(())
}

fn cmd_premium(a: PremiumArgs) -> CliResult<()> {
    let p = params(a.alpha, a.beta)?;
    let z0 = [a.r0, a.b0];
    let est = growth_exponent(&p, z0, a.t_end)?;
    let compare = match (a.compare_alpha, a.compare_beta) {
        (Some(ca), Some(cb)) => Some(PremiumComparison {
            alpha: ca,
            beta: cb,
            ratio_exponent: premium_ratio(&p, &params(ca, cb)?, z0, a.t_end)?,
        }),
        _ => None,
    };
    let ab = a.alpha * a.beta;
    let report = PremiumReport {
        format_version: FORMAT_VERSION,
        kind: "premium".into(),
        alpha: a.alpha,
        beta: a.beta,
        z0,
        horizon: a.t_end,
        exponent: est.exponent,
        pre_asymptotic: est.pre_asymptotic,
        sqrt_alpha_beta: (ab > 0.0).then(|| ab.sqrt()),
        compare,
    };
    let report_json = json(&report)?;
    if let Some(path) = &a.report {
        emit(Some(path), &report_json)?;
    }
    match a.format {
        Format::Json => emit(a.out.output.as_deref(), &report_json),
        Format::Csv => {
            let dt = a.dt.unwrap_or(a.t_end / 200.0);
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::Usage("--dt must be positive".into()));
            }
            let mut s = String::from("t,R,B,norm\n");
            for t in step_grid(a.t_end, dt) {
                let z = propagate(&p, z0, t);
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    format_number(t),
                    format_number(z[0]),
                    format_number(z[1]),
                    format_number(log_norm(&p, z0, t).exp())
                ));
            }
            emit(a.out.output.as_deref(), &s)
        }
    }
}

pub fn sweep_rows(alpha: &AxisRange, beta: &AxisRange) -> CliResult<Vec<RegimeRow>> {
    let av = alpha.values();
    let bv = beta.values();
    let cells: Vec<(f64, f64)> = av.iter().flat_map(|&x| bv.iter().map(move |&y| (x, y))).collect();
    cells.par_iter().map(|&(x, y)| regime_row(x, y)).collect()
}

#[derive(Serialize)]
struct SweepReport<'a> {
    format_version: u32,
    kind: &'static str,
    rows: &'a [RegimeRow],
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let rows = sweep_rows(&a.alpha_range, &a.beta_range)?;
    let content = match a.format {
        Format::Csv => regime_csv(&rows),
        Format::Json => json(&SweepReport {
            format_version: FORMAT_VERSION,
            kind: "sweep",
            rows: &rows,
        })?,
    };
    emit(a.out.output.as_deref(), &content)
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

