//! `homret` — config-driven simulation and retrieval of Hong-Ou-Mandel
//! interference scenarios.
//!
//! Subcommands: `simulate`, `retrieve`, `analyze`, `sweep`, and `reproduce`
//! (which runs every checked-in scenario and prints a summary table). Every
//! invocation writes a `run_record.txt` into its output directory — on
//! failure too, with the reason — so a directory of runs is self-auditing.
//!
//! Exit codes: 0 on success, 1 for input or configuration errors, 2 when a
//! retrieval ran out of budget without meeting its error tolerance.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use homret_cli::commands::{self, RetrieveInputs, TraceInput};
use homret_cli::config::{RawConfig, ScenarioConfig};
use homret_cli::error::CliError;
use homret_cli::record::RunRecord;

/// The five checked-in scenarios `reproduce` runs, embedded at build time so
/// the binary reproduces them from anywhere.
const SCENARIOS: &[(&str, &str)] = &[
    (
        "fig4_gaussian_gs",
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/fig4_gaussian_gs.cfg")),
    ),
    (
        "fig5_gp1",
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/fig5_gp1.cfg")),
    ),
    (
        "fig5_gp2",
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/fig5_gp2.cfg")),
    ),
    (
        "fig6_composite",
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/fig6_composite.cfg")),
    ),
    (
        "fig7_hg3_cosine",
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/fig7_hg3_cosine.cfg")),
    ),
];

#[derive(Parser)]
#[command(
    name = "homret",
    version,
    about = "Simulate Hong-Ou-Mandel visibility traces and retrieve the medium's phase constant"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file (flat `key = value` text).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `outputs.dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Force a random-phase initial guess with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override `retrieval.max_iterations`.
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    /// Override `retrieval.algorithm` (gs, gp-phase, gp-coeff, composite).
    #[arg(long)]
    algorithm: Option<String>,
}

#[derive(Args)]
struct RetrieveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Spectrum trace file; required with any of the trace flags below.
    #[arg(long)]
    spectrum: Option<PathBuf>,
    /// Visibility trace file on the grid conjugate to the spectrum grid.
    #[arg(long, conflicts_with_all = ["coincidence", "measured"])]
    visibility: Option<PathBuf>,
    /// Normalized coincidence trace file (statistics read from its header).
    #[arg(long, conflicts_with = "measured")]
    coincidence: Option<PathBuf>,
    /// Two-column `delay visibility` file on any grid; resampled.
    #[arg(long)]
    measured: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Phase-constant trace file to analyze.
    #[arg(long)]
    beta: PathBuf,
    /// Spectrum file providing the averaging weights.
    #[arg(long)]
    spectrum: PathBuf,
    /// Ground-truth phase-constant file to compare against.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output directory; defaults to the directory of --beta.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Directory receiving one subdirectory per scenario.
    #[arg(long, default_value = "runs/reproduce")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the scenario: spectrum, medium, visibility, coincidence.
    Simulate(CommonArgs),
    /// Recover the phase constant from a visibility trace and spectrum.
    Retrieve(RetrieveArgs),
    /// Estimate beta2/beta3 from a recovered phase-constant file.
    Analyze(AnalyzeArgs),
    /// Retrieve the joint spectral phase slice by slice.
    Sweep(CommonArgs),
    /// Run every checked-in scenario and print a summary table.
    Reproduce(ReproduceArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => run_scenario_command("simulate", &args, commands::simulate),
        Command::Retrieve(args) => run_retrieve(&args),
        Command::Analyze(args) => run_analyze(&args),
        Command::Sweep(args) => run_scenario_command("sweep", &args, commands::sweep),
        Command::Reproduce(args) => run_reproduce(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}

/// Applies command-line overrides to the raw configuration so the effective
/// settings flow through validation and into the run record.
fn apply_overrides(raw: &mut RawConfig, args: &CommonArgs) {
    if let Some(out) = &args.out {
        raw.set("outputs.dir", out.display().to_string());
    }
    if let Some(seed) = args.seed {
        raw.set("retrieval.initial_guess", "random-phase".into());
        raw.set("retrieval.seed", seed.to_string());
    }
    if let Some(n) = args.max_iters {
        raw.set("retrieval.max_iterations", n.to_string());
    }
    if let Some(algorithm) = &args.algorithm {
        raw.set("retrieval.algorithm", algorithm.clone());
    }
}

/// Loads and validates the configuration. On failure, returns the error
/// plus the best-effort output directory so a run record can still land.
fn load_scenario(args: &CommonArgs) -> Result<(ScenarioConfig, PathBuf), (CliError, PathBuf)> {
    let fallback_dir = || {
        args.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("."))
    };
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        (
            CliError::Input(format!("cannot read config '{}': {e}", args.config.display())),
            fallback_dir(),
        )
    })?;
    let mut raw = RawConfig::parse(&text).map_err(|e| {
        (
            CliError::Input(format!("{}: {e}", args.config.display())),
            fallback_dir(),
        )
    })?;
    apply_overrides(&mut raw, args);
    let recorded_dir = raw
        .get("outputs.dir")
        .map(PathBuf::from)
        .unwrap_or_else(fallback_dir);
    let config_dir = args
        .config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let config = ScenarioConfig::from_raw(raw, &config_dir).map_err(|e| {
        (
            CliError::Input(format!("{}: {e}", args.config.display())),
            recorded_dir.clone(),
        )
    })?;
    let out_dir = config.outputs_dir.clone();
    Ok((config, out_dir))
}

/// Shared harness for config-driven commands: resolve the scenario, run the
/// body, and write the run record in every case.
fn run_scenario_command(
    name: &'static str,
    args: &CommonArgs,
    body: impl FnOnce(&ScenarioConfig, &Path, &mut RunRecord) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let started = Instant::now();
    let mut record = RunRecord::new(name);
    let (outcome, out_dir) = match load_scenario(args) {
        Ok((config, out_dir)) => {
            record.set_config(&config.raw);
            match std::fs::create_dir_all(&out_dir) {
                Ok(()) => (body(&config, &out_dir, &mut record), out_dir),
                Err(e) => (
                    Err(CliError::Input(format!(
                        "cannot create output directory '{}': {e}",
                        out_dir.display()
                    ))),
                    PathBuf::from("."),
                ),
            }
        }
        Err((error, out_dir)) => (Err(error), out_dir),
    };
    write_record(&record, &out_dir, &outcome, started);
    outcome
}

/// Best-effort record write; a record failure must not mask the run outcome.
fn write_record(record: &RunRecord, out_dir: &Path, outcome: &Result<(), CliError>, started: Instant) {
    let _ = std::fs::create_dir_all(out_dir);
    let path = out_dir.join("run_record.txt");
    if let Err(e) = record.write(&path, outcome, started.elapsed()) {
        eprintln!("warning: could not write run record '{}': {e}", path.display());
    }
}

fn run_retrieve(args: &RetrieveArgs) -> Result<(), CliError> {
    let inputs = match (&args.spectrum, &args.visibility, &args.coincidence, &args.measured) {
        (None, None, None, None) => RetrieveInputs::FromConfig,
        (Some(spectrum), visibility, coincidence, measured) => {
            let trace = match (visibility, coincidence, measured) {
                (Some(path), None, None) => TraceInput::Visibility(path.clone()),
                (None, Some(path), None) => TraceInput::Coincidence(path.clone()),
                (None, None, Some(path)) => TraceInput::Measured(path.clone()),
                (None, None, None) => {
                    return Err(CliError::Input(
                        "--spectrum needs one of --visibility, --coincidence, or --measured".into(),
                    ))
                }
                _ => unreachable!("clap conflicts_with rules forbid combined trace flags"),
            };
            RetrieveInputs::Files { spectrum: spectrum.clone(), trace }
        }
        (None, ..) => {
            return Err(CliError::Input(
                "--visibility/--coincidence/--measured require --spectrum".into(),
            ))
        }
    };
    run_scenario_command("retrieve", &args.common, |config, out_dir, record| {
        commands::retrieve_command(config, &inputs, out_dir, record)
    })
}

fn run_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let out_dir = args.out.clone().unwrap_or_else(|| {
        args.beta
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf()
    });
    let mut record = RunRecord::new("analyze");
    let outcome = match std::fs::create_dir_all(&out_dir) {
        Ok(()) => commands::analyze(
            &args.beta,
            &args.spectrum,
            args.truth.as_deref(),
            &out_dir,
            &mut record,
        ),
        Err(e) => Err(CliError::Input(format!(
            "cannot create output directory '{}': {e}",
            out_dir.display()
        ))),
    };
    write_record(&record, &out_dir, &outcome, started);
    outcome
}

fn run_reproduce(args: &ReproduceArgs) -> Result<(), CliError> {
    let mut rows = Vec::with_capacity(SCENARIOS.len());
    for (name, text) in SCENARIOS {
        let started = Instant::now();
        let out_dir = args.out.join(name);
        let mut record = RunRecord::new("reproduce");
        let outcome = (|| {
            let mut raw = RawConfig::parse(text)
                .map_err(|e| CliError::Input(format!("scenario {name}: {e}")))?;
            raw.set("outputs.dir", out_dir.display().to_string());
            let config = ScenarioConfig::from_raw(raw, Path::new("."))
                .map_err(|e| CliError::Input(format!("scenario {name}: {e}")))?;
            record.set_config(&config.raw);
            std::fs::create_dir_all(&out_dir).map_err(|e| {
                CliError::Input(format!(
                    "cannot create output directory '{}': {e}",
                    out_dir.display()
                ))
            })?;
            let row = commands::reproduce_one(name, &config, &out_dir, &mut record)?;
            rows.push(row);
            Ok(())
        })();
        write_record(&record, &out_dir, &outcome, started);
        // A scenario that plateaus above its tolerance still belongs in the
        // table; only input-level failures abort the batch.
        if let Err(CliError::Input(_)) = &outcome {
            return outcome;
        }
    }
    let table = commands::format_summary(&rows);
    print!("{table}");
    let summary_path = args.out.join("summary.txt");
    std::fs::write(&summary_path, &table).map_err(|e| {
        CliError::Input(format!("cannot write '{}': {e}", summary_path.display()))
    })?;
    Ok(())
}
