//! The five subcommand bodies. Each takes a materialized scenario (or
//! explicit input files), performs its work, writes artifacts into the run
//! directory, and files summary entries into the run record.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use homret_core::analysis::{
    compare_phase_constants, estimate_dispersion, second_derivative_profile,
};
use homret_core::io;
use homret_core::jsp::{jsp_sweep, JspMap};
use homret_core::resample::resample_visibility;
use homret_core::retrieval::{retrieve_with_sink, IterationRecord};
use homret_core::visibility::{coincidence_from_visibility, visibility, VisibilityTrace};

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::record::RunRecord;
use crate::scenario::{build_sweep, materialize, Scenario};

fn input(message: impl Into<String>) -> CliError {
    CliError::Input(message.into())
}

/// Simulates the scenario end to end and writes the four trace files.
pub fn simulate(
    config: &ScenarioConfig,
    out_dir: &Path,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let scenario = materialize(config)?;
    let beta = scenario
        .beta
        .as_ref()
        .ok_or_else(|| input("medium.kind: required for the simulate command"))?;
    let distance = scenario
        .distance_km
        .expect("validation ties distance_km to medium.kind");

    let trace = visibility(&scenario.spectrum, beta, distance, &scenario.delay)?;
    let coincidence = coincidence_from_visibility(&trace, config.statistics)?;

    let spectrum_path = out_dir.join("spectrum.txt");
    io::write_spectrum(&spectrum_path, &scenario.spectrum)?;
    record.artifact("spectrum", &spectrum_path);

    let beta_path = out_dir.join("beta.txt");
    io::write_phase_constant(&beta_path, beta)?;
    record.artifact("beta", &beta_path);

    let visibility_path = out_dir.join("visibility.txt");
    io::write_visibility(&visibility_path, &trace)?;
    record.artifact("visibility", &visibility_path);

    let coincidence_path = out_dir.join("coincidence.txt");
    io::write_coincidence(&coincidence_path, &coincidence)?;
    record.artifact("coincidence", &coincidence_path);

    let peak = trace.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    record.result_number("peak_visibility", peak);
    record.result("statistics", io::statistics_name(config.statistics));
    record.result("n_points", scenario.freq.len());
    Ok(())
}

/// Where the retrieval's measured trace and spectrum come from.
pub enum RetrieveInputs {
    /// Simulate the scenario in memory and retrieve from that.
    FromConfig,
    /// Read the spectrum and a trace from files.
    Files { spectrum: PathBuf, trace: TraceInput },
}

/// Trace file flavors accepted by `retrieve`.
pub enum TraceInput {
    /// A visibility trace with grid headers; must be conjugate to the
    /// spectrum grid.
    Visibility(PathBuf),
    /// A normalized coincidence trace with grid headers; converted using the
    /// statistics recorded in the file.
    Coincidence(PathBuf),
    /// Any two-column `delay visibility` file; resampled onto the conjugate
    /// grid with a monotone cubic.
    Measured(PathBuf),
}

/// Summary of one retrieval for records and tables.
pub struct RetrievalSummary {
    pub algorithm: String,
    pub iterations: usize,
    pub initial_error: f64,
    pub final_error: f64,
    pub converged: bool,
    pub reason: String,
    pub beta2_error: Option<f64>,
    pub beta3_error: Option<f64>,
}

/// Loads or synthesizes the retrieval inputs: spectrum, measured visibility,
/// and (when available) the ground-truth phase constant.
fn retrieval_inputs(
    config: &ScenarioConfig,
    inputs: &RetrieveInputs,
    record: &mut RunRecord,
) -> Result<(Scenario, VisibilityTrace), CliError> {
    match inputs {
        RetrieveInputs::FromConfig => {
            let scenario = materialize(config)?;
            let beta = scenario.beta.as_ref().ok_or_else(|| {
                input("medium.kind: required to retrieve without explicit input files")
            })?;
            let distance = scenario.distance_km.expect("distance rides with the medium");
            let trace = visibility(&scenario.spectrum, beta, distance, &scenario.delay)?;
            Ok((scenario, trace))
        }
        RetrieveInputs::Files { spectrum, trace } => {
            let spectrum = io::read_spectrum(spectrum)?;
            let freq = *spectrum.grid();
            let (freq, delay) =
                homret_core::grid::build_conjugate_grids(freq.len(), freq.spacing(), freq.center())?;
            let measured = match trace {
                TraceInput::Visibility(path) => {
                    let trace = io::read_visibility(path)?;
                    if trace.grid() != &delay {
                        return Err(input(format!(
                            "visibility file '{}' is not on the delay grid conjugate to the \
                             spectrum grid; pass it as --measured to resample",
                            path.display()
                        )));
                    }
                    trace
                }
                TraceInput::Coincidence(path) => {
                    let (trace, statistics) = io::read_coincidence_as_visibility(path)?;
                    record.result("statistics", io::statistics_name(statistics));
                    if trace.grid() != &delay {
                        return Err(input(format!(
                            "coincidence file '{}' is not on the delay grid conjugate to the \
                             spectrum grid",
                            path.display()
                        )));
                    }
                    trace
                }
                TraceInput::Measured(path) => {
                    let (delays, values) = io::read_columns(path)?;
                    let resampled = resample_visibility(&delays, &values, &delay)?;
                    record.result("resampled_zero_filled", resampled.zero_filled);
                    resampled.trace
                }
            };
            // The configured medium, if any, is the ground truth to compare
            // against; it must live on the file's grid.
            let beta = match &config.medium {
                Some(medium) => Some(crate::scenario::build_medium_on(medium, &freq)?),
                None => None,
            };
            let scenario = Scenario {
                freq,
                delay,
                spectrum,
                beta,
                distance_km: config.distance_km,
            };
            Ok((scenario, measured))
        }
    }
}

/// Runs the configured retrieval on the scenario and writes the recovered
/// phase constant, its curvature profile, the convergence log, and the
/// error report. Shared by `retrieve` and `reproduce`.
pub fn run_retrieval(
    config: &ScenarioConfig,
    inputs: &RetrieveInputs,
    out_dir: &Path,
    record: &mut RunRecord,
) -> Result<RetrievalSummary, CliError> {
    let (scenario, measured) = retrieval_inputs(config, inputs, record)?;
    let distance = scenario
        .distance_km
        .ok_or_else(|| input("medium.distance_km: required to map the recovered phase to beta"))?;

    if matches!(inputs, RetrieveInputs::FromConfig) {
        let spectrum_path = out_dir.join("spectrum.txt");
        io::write_spectrum(&spectrum_path, &scenario.spectrum)?;
        record.artifact("spectrum", &spectrum_path);
        let visibility_path = out_dir.join("visibility.txt");
        io::write_visibility(&visibility_path, &measured)?;
        record.artifact("visibility", &visibility_path);
    }

    let mut log: Vec<IterationRecord> = Vec::new();
    let result = retrieve_with_sink(
        &measured,
        &scenario.spectrum,
        distance,
        &config.retrieval,
        |step| log.push(step),
    )?;

    let recovered = result
        .beta
        .as_ref()
        .expect("standard-mode retrieval always reports a phase constant");
    let estimate = estimate_dispersion(recovered, &scenario.spectrum)?;

    let beta_path = out_dir.join("recovered_beta.txt");
    io::write_phase_constant(&beta_path, recovered)?;
    record.artifact("recovered_beta", &beta_path);

    let profile = second_derivative_profile(recovered.values(), scenario.freq.spacing())?;
    let profile_path = out_dir.join("recovered_beta2_profile.txt");
    io::write_derivative_profile(&profile_path, &scenario.freq, &profile, 2)?;
    record.artifact("recovered_beta2_profile", &profile_path);

    let recovered_visibility_path = out_dir.join("recovered_visibility.txt");
    io::write_visibility(&recovered_visibility_path, &result.recovered_visibility)?;
    record.artifact("recovered_visibility", &recovered_visibility_path);

    let log_path = out_dir.join("convergence.txt");
    io::write_convergence_log(&log_path, result.initial_error, &log)?;
    record.artifact("convergence", &log_path);

    // Error report: retrieval statistics plus, when the ground truth is
    // known, the coefficient comparison.
    let comparison = match &scenario.beta {
        Some(truth) => Some(compare_phase_constants(recovered, truth, &scenario.spectrum)?),
        None => None,
    };
    let report_path = out_dir.join("error_report.txt");
    let mut report = String::new();
    let _ = writeln!(report, "# homret error report v1");
    let _ = writeln!(report, "algorithm = {}", config.retrieval.algorithm);
    let _ = writeln!(report, "iterations = {}", result.iterations);
    let _ = writeln!(report, "initial_error = {:.16e}", result.initial_error);
    let _ = writeln!(report, "final_error = {:.16e}", result.final_error);
    let _ = writeln!(report, "converged = {}", result.converged);
    let _ = writeln!(report, "reason = {}", result.reason);
    let _ = writeln!(report, "beta2_recovered_ps2_per_km = {:.16e}", estimate.beta2);
    let _ = writeln!(report, "beta3_recovered_ps3_per_km = {:.16e}", estimate.beta3);
    if let Some(c) = &comparison {
        let _ = writeln!(report, "beta2_truth_ps2_per_km = {:.16e}", c.beta2_truth);
        let _ = writeln!(report, "beta3_truth_ps3_per_km = {:.16e}", c.beta3_truth);
        let _ = writeln!(
            report,
            "beta2_error_ps2_per_km = {:.16e}",
            (c.beta2_recovered - c.beta2_truth).abs()
        );
        let _ = writeln!(
            report,
            "beta3_error_ps3_per_km = {:.16e}",
            (c.beta3_recovered - c.beta3_truth).abs()
        );
        let _ = writeln!(report, "residual_rms_rad_per_km = {:.16e}", c.residual_rms);
    }
    std::fs::write(&report_path, report)?;
    record.artifact("error_report", &report_path);

    record.result("algorithm", config.retrieval.algorithm);
    record.result("iterations", result.iterations);
    record.result_number("initial_error", result.initial_error);
    record.result_number("final_error", result.final_error);
    record.result("converged", result.converged);
    record.result("reason", result.reason);
    record.result_number("beta2_ps2_per_km", estimate.beta2);
    record.result_number("beta3_ps3_per_km", estimate.beta3);
    if let Some(c) = &comparison {
        record.result_number("beta2_error_ps2_per_km", (c.beta2_recovered - c.beta2_truth).abs());
        record.result_number("beta3_error_ps3_per_km", (c.beta3_recovered - c.beta3_truth).abs());
    }

    Ok(RetrievalSummary {
        algorithm: config.retrieval.algorithm.to_string(),
        iterations: result.iterations,
        initial_error: result.initial_error,
        final_error: result.final_error,
        converged: result.converged,
        reason: result.reason.to_string(),
        beta2_error: comparison.as_ref().map(|c| (c.beta2_recovered - c.beta2_truth).abs()),
        beta3_error: comparison.as_ref().map(|c| (c.beta3_recovered - c.beta3_truth).abs()),
    })
}

/// `retrieve` proper: run the retrieval and fail with the non-convergence
/// exit code if the tolerance was not met.
pub fn retrieve_command(
    config: &ScenarioConfig,
    inputs: &RetrieveInputs,
    out_dir: &Path,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let summary = run_retrieval(config, inputs, out_dir, record)?;
    if !summary.converged {
        return Err(CliError::NonConvergence(format!(
            "retrieval stopped ({}) at error {:.3e} after {} iterations without reaching \
             tolerance {:.3e}",
            summary.reason,
            summary.final_error,
            summary.iterations,
            config.retrieval.error_tolerance
        )));
    }
    Ok(())
}

/// `analyze`: dispersion estimates for an existing phase-constant file,
/// optionally compared against a ground-truth file.
pub fn analyze(
    beta_path: &Path,
    spectrum_path: &Path,
    truth_path: Option<&Path>,
    out_dir: &Path,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let beta = io::read_phase_constant(beta_path)?;
    let spectrum = io::read_spectrum(spectrum_path)?;
    if beta.grid() != spectrum.grid() {
        return Err(input(format!(
            "'{}' and '{}' are sampled on different grids",
            beta_path.display(),
            spectrum_path.display()
        )));
    }
    let estimate = estimate_dispersion(&beta, &spectrum)?;

    let mut text = String::new();
    let _ = writeln!(text, "# homret analysis v1");
    let _ = writeln!(text, "beta2_ps2_per_km = {:.16e}", estimate.beta2);
    let _ = writeln!(text, "beta3_ps3_per_km = {:.16e}", estimate.beta3);
    record.result_number("beta2_ps2_per_km", estimate.beta2);
    record.result_number("beta3_ps3_per_km", estimate.beta3);

    if let Some(truth_path) = truth_path {
        let truth = io::read_phase_constant(truth_path)?;
        if truth.grid() != spectrum.grid() {
            return Err(input(format!(
                "'{}' is sampled on a different grid than the spectrum",
                truth_path.display()
            )));
        }
        let report = compare_phase_constants(&beta, &truth, &spectrum)?;
        let beta2_error = (report.beta2_recovered - report.beta2_truth).abs();
        let beta3_error = (report.beta3_recovered - report.beta3_truth).abs();
        let _ = writeln!(text, "beta2_truth_ps2_per_km = {:.16e}", report.beta2_truth);
        let _ = writeln!(text, "beta3_truth_ps3_per_km = {:.16e}", report.beta3_truth);
        let _ = writeln!(text, "beta2_error_ps2_per_km = {beta2_error:.16e}");
        let _ = writeln!(text, "beta3_error_ps3_per_km = {beta3_error:.16e}");
        let _ = writeln!(text, "residual_rms_rad_per_km = {:.16e}", report.residual_rms);
        record.result_number("beta2_error_ps2_per_km", beta2_error);
        record.result_number("beta3_error_ps3_per_km", beta3_error);
    }

    let path = out_dir.join("analysis.txt");
    std::fs::write(&path, text)?;
    record.artifact("analysis", &path);
    Ok(())
}

/// The value of the curvature fit of one sweep slice, or NaN where the fit
/// is impossible (too few unmasked samples).
fn slice_curvature_or_nan(map: &JspMap, slice: usize) -> f64 {
    map.slice_curvature(slice).unwrap_or(f64::NAN)
}

/// `sweep`: synthesize and retrieve every configured idler slice. Slices
/// that fail to converge are masked, not fatal — the map records them.
pub fn sweep(
    config: &ScenarioConfig,
    out_dir: &Path,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let sweep_spec = config
        .sweep
        .as_ref()
        .ok_or_else(|| input("sweep.idler_offsets: required for the sweep command"))?;
    let scenario = materialize(config)?;
    let setup = build_sweep(&scenario, config, sweep_spec)?;

    let map = jsp_sweep(
        &setup.reference,
        &setup.reference_phase,
        &setup.slices,
        setup.mean_photon_number,
        &config.retrieval,
    )?;

    let map_path = out_dir.join("jsp_map.txt");
    io::write_jsp_map(&map_path, &map)?;
    record.artifact("jsp_map", &map_path);

    let mut report = String::new();
    let _ = writeln!(report, "# homret sweep report v1");
    let _ = writeln!(report, "# columns: slice idler_rad_per_ps converged final_error curvature");
    for i in 0..map.n_slices() {
        let _ = writeln!(
            report,
            "{} {:.16e} {} {:.16e} {:.16e}",
            i,
            map.idler_frequencies()[i],
            u8::from(map.converged()[i]),
            map.final_errors()[i],
            slice_curvature_or_nan(&map, i),
        );
    }
    let report_path = out_dir.join("sweep_report.txt");
    std::fs::write(&report_path, report)?;
    record.artifact("sweep_report", &report_path);

    let n_converged = map.converged().iter().filter(|&&c| c).count();
    record.result("slices", map.n_slices());
    record.result("slices_converged", n_converged);
    for i in 0..map.n_slices() {
        record.result(
            &format!("slice.{i}.idler_rad_per_ps"),
            format!("{:.16e}", map.idler_frequencies()[i]),
        );
        record.result(&format!("slice.{i}.converged"), map.converged()[i]);
        record.result(
            &format!("slice.{i}.final_error"),
            format!("{:.16e}", map.final_errors()[i]),
        );
    }
    Ok(())
}

/// One row of the `reproduce` summary table.
pub struct SummaryRow {
    pub name: String,
    pub summary: RetrievalSummary,
    pub seconds: f64,
}

/// Formats the reproduce summary as an aligned text table.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:<18} {:<10} {:>6}  {:>11}  {:>11}  {:>11}  {:>11}  {:>7}",
        "scenario", "algorithm", "iters", "E initial", "E final", "beta2 err", "beta3 err", "time"
    );
    for row in rows {
        let beta2 = row
            .summary
            .beta2_error
            .map_or_else(|| "-".to_string(), |e| format!("{e:.3e}"));
        let beta3 = row
            .summary
            .beta3_error
            .map_or_else(|| "-".to_string(), |e| format!("{e:.3e}"));
        let _ = writeln!(
            table,
            "{:<18} {:<10} {:>6}  {:>11.3e}  {:>11.3e}  {:>11}  {:>11}  {:>6.2}s",
            row.name,
            row.summary.algorithm,
            row.summary.iterations,
            row.summary.initial_error,
            row.summary.final_error,
            beta2,
            beta3,
            row.seconds,
        );
    }
    table
}

/// Runs one embedded scenario for `reproduce`, with its own run directory
/// and record.
pub fn reproduce_one(
    name: &str,
    config: &ScenarioConfig,
    out_dir: &Path,
    record: &mut RunRecord,
) -> Result<SummaryRow, CliError> {
    let started = Instant::now();
    let summary = run_retrieval(config, &RetrieveInputs::FromConfig, out_dir, record)?;
    Ok(SummaryRow {
        name: name.to_string(),
        summary,
        seconds: started.elapsed().as_secs_f64(),
    })
}
