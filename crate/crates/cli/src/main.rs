//! `calabi`: run the flow, the verification suite, or a packaged experiment.
//!
//! Exit status is 0 when every executed check passes, 1 on a failed check or a flow that
//! ends in breakdown, and 2 on usage or configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use calabi_core::diagnostics::ExperimentResult;
use calabi_core::experiments::{
    experiment_contraction_ladder, experiment_extension_monitor, experiment_linear_spectrum, experiment_smoothing,
    experiment_stability,
};
use calabi_core::flow::FlowStatus;
use calabi_core::io::{parse_config, write_csv, write_results_csv, write_snapshot, RunConfig, SnapshotHeader};
use calabi_core::verify::{verify_suite, CORPUS_SEED};
use calabi_core::CalabiError;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "calabi", version, about = "Spectral Calabi flow on flat complex tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory, overriding `[output] dir`.
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,

    /// Suppress the report on stdout.
    #[arg(long, global = true)]
    quiet: bool,

    /// Seed overriding `[output] seed` (for `verify`, the corpus seed).
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Run the flow described by the config and write diagnostics and snapshots.
    Run,
    /// Identity and consistency checks.
    Verify,
    /// Decay rates of small single modes against the bilaplacian symbol.
    Spectrum,
    /// Long run from small data to the flat metric.
    Stability,
    /// Parabolic smoothing constant under grid refinement.
    Smoothing,
    /// Picard contraction factors down a step-size ladder.
    Contraction,
    /// Metric bounds and curvature maximum along a surface run.
    Monitor,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Verify => "verify",
            Command::Spectrum => "spectrum",
            Command::Stability => "stability",
            Command::Smoothing => "smoothing",
            Command::Contraction => "contraction",
            Command::Monitor => "monitor",
        }
    }
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<CalabiError> for Failure {
    fn from(e: CalabiError) -> Self {
        match e {
            CalabiError::Config { .. } | CalabiError::InvalidLattice(_) | CalabiError::InvalidMetric { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Check(other.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("CALABI_THREADS") else { return Ok(()) };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Usage(format!("CALABI_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot size the thread pool: {e}")))
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage(format!("`{}` needs --config PATH", cli.command.name())))?;
    let mut cfg = parse_config(path).map_err(|e| match e {
        CalabiError::Io(io) => Failure::Usage(format!("cannot read {}: {io}", path.display())),
        other => Failure::Usage(format!("{}: {other}", path.display())),
    })?;
    if let Some(dir) = &cli.output {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn output_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Check(format!("cannot create {}: {e}", dir.display())))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let problem = cfg.problem()?;
    let controls = cfg.controls(&problem);
    let phi0 = cfg.initial_potential()?;
    let dir = &cfg.output_dir;
    output_dir(dir)?;
    let mut snapshot_error = None;
    let flow = problem.run_flow_with(phi0, &controls, |state, _| {
        if cfg.snapshot_every > 0 && state.step_index % cfg.snapshot_every == 0 {
            let path = dir.join(format!("phi_{:06}.grd", state.step_index));
            let header = SnapshotHeader::for_field(state.phi.field(), state.t, "phi");
            if let Err(e) = write_snapshot(&path, state.phi.field(), &header) {
                snapshot_error.get_or_insert(e);
            }
        }
    });
    if let Some(e) = snapshot_error {
        return Err(e.into());
    }
    if !flow.rows.is_empty() {
        write_csv(&dir.join("diagnostics.csv"), &flow.rows)?;
        let phi = flow.state.phi.field();
        write_snapshot(&dir.join("phi_final.grd"), phi, &SnapshotHeader::for_field(phi, flow.state.t, "phi"))?;
    }
    let status = flow.state.status;
    if !cli.quiet {
        println!("status: {status}");
        println!("t: {}", flow.state.t);
        println!("accepted steps: {}", flow.state.step_index);
        println!("step attempts: {}", flow.state.attempts);
        if let Some(row) = flow.rows.last() {
            println!("calabi energy: {:e}", row.calabi_energy);
            println!("max |R|: {:e}", row.max_abs_r);
        }
        if let Some(msg) = &flow.state.message {
            println!("message: {msg}");
        }
        println!("output: {}", dir.display());
    }
    match status {
        FlowStatus::Running | FlowStatus::Converged => Ok(()),
        other => Err(Failure::Check(format!("flow ended with {other}"))),
    }
}

fn report(cli: &Cli, result: &ExperimentResult, dir: Option<&Path>) -> Result<(), Failure> {
    if let Some(dir) = dir {
        output_dir(dir)?;
        write_results_csv(&dir.join(format!("{}_results.csv", result.name)), result)?;
        for (label, rows) in &result.runs {
            if !rows.is_empty() {
                write_csv(&dir.join(format!("{}_{label}.csv", result.name)), rows)?;
            }
        }
    }
    if !cli.quiet {
        print!("{result}");
    }
    if result.pass {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} failed", result.name)))
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Run => run(cli),
        Command::Verify => {
            let result = verify_suite(cli.seed.unwrap_or(CORPUS_SEED))?;
            report(cli, &result, cli.output.as_deref())
        }
        cmd => {
            let cfg = load_config(cli)?;
            let result = match cmd {
                Command::Spectrum => experiment_linear_spectrum(&cfg),
                Command::Stability => experiment_stability(&cfg),
                Command::Smoothing => experiment_smoothing(&cfg),
                Command::Contraction => experiment_contraction_ladder(&cfg),
                Command::Monitor => experiment_extension_monitor(&cfg),
                Command::Run | Command::Verify => unreachable!("handled above"),
            }?;
            report(cli, &result, Some(&cfg.output_dir))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(if code == 0 { 0 } else { EXIT_USAGE });
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Check(msg)) => {
            if !cli.quiet {
                eprintln!("FAIL: {msg}");
            }
            ExitCode::from(EXIT_FAIL)
        }
    }
}
