use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use fcdispatch::netconfig::{parse_network, serialize_result, serialize_sweep, serialize_table};
use fcdispatch::reference::{compare, grid_bruteforce, grid_spacing, lambda_bisection, GRID_MAX_BRANCHES};
use fcdispatch::{Dispatcher, Error};

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

const VALIDATE_TOL: f64 = 1e-3;
const GRID_POINTS: usize = 200;

#[derive(Parser)]
#[command(
    name = "fcdispatch",
    version,
    about = "Minimum-current power sharing for fuel-cell stack networks"
)]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the observable points of a network.
    Plan { config: PathBuf },
    /// Solve one demand and print the result as JSON.
    Solve {
        config: PathBuf,
        /// Required power, W.
        #[arg(long, allow_negative_numbers = true)]
        power: f64,
    },
    /// Solve evenly spaced demands and print CSV.
    Sweep {
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        points: usize,
    },
    /// Cross-check dispatch against the table-free oracles.
    Validate {
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        power: f64,
        /// Adds this many amperes to branch 1 of the dispatch before comparing.
        #[arg(long, hide = true, allow_negative_numbers = true)]
        perturb: Option<f64>,
    },
}

/// Failure carrying its exit code.
struct Exit {
    code: u8,
    error: anyhow::Error,
}

impl Exit {
    fn config(error: impl Into<anyhow::Error>) -> Self {
        Exit {
            code: EXIT_CONFIG,
            error: error.into(),
        }
    }
}

impl From<anyhow::Error> for Exit {
    fn from(error: anyhow::Error) -> Self {
        Exit { code: 1, error }
    }
}

fn load(path: &Path) -> Result<Dispatcher, Exit> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Exit::config)?;
    let network = parse_network(&text)
        .with_context(|| format!("in {}", path.display()))
        .map_err(Exit::config)?;
    Dispatcher::new(&network).map_err(Exit::config)
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn demands(from: f64, to: f64, points: usize) -> anyhow::Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite()) || from > to {
        bail!("sweep needs finite --from <= --to, got {from} and {to}");
    }
    if points < 2 {
        bail!("sweep needs --points >= 2, got {points}");
    }
    let step = (to - from) / (points - 1) as f64;
    Ok((0..points)
        .map(|k| if k == points - 1 { to } else { from + step * k as f64 })
        .collect())
}

fn run(cli: Cli) -> Result<u8, Exit> {
    let output = cli.output.as_deref();
    match cli.command {
        Command::Plan { config } => {
            let dispatcher = load(&config)?;
            emit(output, &serialize_table(dispatcher.table()))?;
            Ok(0)
        }
        Command::Solve { config, power } => {
            let dispatcher = load(&config)?;
            let result = dispatcher.dispatch(power).map_err(anyhow::Error::from)?;
            emit(output, &serialize_result(&result))?;
            if result.is_optimal() {
                Ok(0)
            } else {
                let (lo, hi) = result.feasible_range;
                eprintln!("Required power cannot be obtained: {power} W is outside [{lo}, {hi}] W");
                Ok(EXIT_INFEASIBLE)
            }
        }
        Command::Sweep {
            config,
            from,
            to,
            points,
        } => {
            let grid = demands(from, to, points).map_err(Exit::config)?;
            let dispatcher = load(&config)?;
            let rows = grid
                .into_iter()
                .map(|p| dispatcher.dispatch(p))
                .collect::<Result<Vec<_>, Error>>()
                .map_err(anyhow::Error::from)?;
            emit(output, &serialize_sweep(&rows, dispatcher.stacks().len()))?;
            Ok(0)
        }
        Command::Validate { config, power, perturb } => validate(&config, power, perturb, output),
    }
}

fn validate(config: &Path, power: f64, perturb: Option<f64>, output: Option<&Path>) -> Result<u8, Exit> {
    let started = Instant::now();
    let dispatcher = load(config)?;
    let table_time = started.elapsed();

    let started = Instant::now();
    let mut result = dispatcher.dispatch(power).map_err(anyhow::Error::from)?;
    let dispatch_time = started.elapsed();
    if !result.is_optimal() {
        let (lo, hi) = result.feasible_range;
        eprintln!("Required power cannot be obtained: {power} W is outside [{lo}, {hi}] W");
        emit(output, &serialize_result(&result))?;
        return Ok(EXIT_INFEASIBLE);
    }
    if let Some(delta) = perturb {
        result.currents[0] += delta;
        result.total_current += delta;
    }

    let stacks = dispatcher.stacks();
    let started = Instant::now();
    let oracle = lambda_bisection(stacks, power).map_err(anyhow::Error::from)?;
    let oracle_time = started.elapsed();
    let cmp = compare(&result, &oracle, VALIDATE_TOL);

    let mut report = String::new();
    let w = &mut report;
    writeln!(w, "branches: {}", stacks.len()).ok();
    writeln!(w, "p_req: {power}").ok();
    writeln!(w, "branch,dispatch,lambda_bisection,delta").ok();
    for (j, ((d, o), delta)) in result
        .currents
        .iter()
        .zip(&oracle.currents)
        .zip(&cmp.branch_deltas)
        .enumerate()
    {
        writeln!(w, "{},{d},{o},{delta}", j + 1).ok();
    }
    writeln!(
        w,
        "total,{},{},{}",
        result.total_current, oracle.total_current, cmp.total_delta
    )
    .ok();
    writeln!(
        w,
        "lambda_bisection: max |delta| {} A, tolerance {VALIDATE_TOL} A: {}",
        cmp.max_abs_delta,
        verdict(cmp.pass)
    )
    .ok();
    let mut pass = cmp.pass;

    let mut grid_time = None;
    if stacks.len() <= GRID_MAX_BRANCHES {
        let started = Instant::now();
        let grid = grid_bruteforce(stacks, power, GRID_POINTS).map_err(anyhow::Error::from)?;
        grid_time = Some(started.elapsed());
        let spacing = grid_spacing(stacks, GRID_POINTS);
        let gap = grid.total_current - result.total_current;
        let ok = gap >= -1e-9 * result.total_current.max(1.0) && gap <= spacing;
        writeln!(
            w,
            "grid_search({GRID_POINTS}): total {} A, gap {gap} A, spacing {spacing} A: {}",
            grid.total_current,
            verdict(ok)
        )
        .ok();
        pass &= ok;
    }
    writeln!(w, "result: {}", verdict(pass)).ok();
    emit(output, &report)?;

    // timings vary run to run, so they stay off the report
    eprintln!(
        "timing: table {:?}, dispatch {:?}, lambda_bisection {:?}{}",
        table_time,
        dispatch_time,
        oracle_time,
        grid_time.map(|t| format!(", grid_search {t:?}")).unwrap_or_default()
    );
    Ok(if pass { 0 } else { EXIT_MISMATCH })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(Exit { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
