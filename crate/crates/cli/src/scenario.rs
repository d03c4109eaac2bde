//! Turns a validated [`ScenarioConfig`] into core objects: grids, spectrum,
//! medium, and the sweep slice family.


use homret_core::dispersion::{cosine_phase_constant, taylor_phase_constant, PhaseConstant};
use homret_core::grid::{build_conjugate_grids, DelayGrid, FrequencyGrid};
use homret_core::io;
use homret_core::jsp::JspSlice;
use homret_core::spectrum::{gaussian_spectrum, hermite_gaussian_spectrum, Spectrum};
use homret_core::units::{
    angular_frequency_to_wavelength, thz_to_angular_frequency, wavelength_to_angular_frequency,
};

use crate::config::{MediumSpec, ScenarioConfig, SourceSpec, SweepSpec};
use crate::error::CliError;

/// Materialized scenario: everything the commands operate on.
pub struct Scenario {
    pub freq: FrequencyGrid,
    pub delay: DelayGrid,
    pub spectrum: Spectrum,
    pub beta: Option<PhaseConstant>,
    pub distance_km: Option<f64>,
}

fn input(message: impl Into<String>) -> CliError {
    CliError::Input(message.into())
}

/// Builds the frequency/delay grids and the source spectrum. For file
/// sources the file's header defines the grid; a `grid` section, if present,
/// must agree with it.
fn build_source(config: &ScenarioConfig) -> Result<(FrequencyGrid, DelayGrid, Spectrum), CliError> {
    match &config.source {
        SourceSpec::Gaussian { center_nm, width_nm } => {
            let grid = config.grid.expect("validation requires a grid for synthesized sources");
            let center = wavelength_to_angular_frequency(*center_nm);
            let spacing = thz_to_angular_frequency(grid.spacing_thz);
            let (freq, delay) = build_conjugate_grids(grid.n_points, spacing, center)?;
            let spectrum = gaussian_spectrum(&freq, *center_nm, *width_nm)?;
            Ok((freq, delay, spectrum))
        }
        SourceSpec::HermiteGaussian { order, center_nm, width_nm } => {
            let grid = config.grid.expect("validation requires a grid for synthesized sources");
            let center = wavelength_to_angular_frequency(*center_nm);
            let spacing = thz_to_angular_frequency(grid.spacing_thz);
            let (freq, delay) = build_conjugate_grids(grid.n_points, spacing, center)?;
            let spectrum = hermite_gaussian_spectrum(&freq, *order, *center_nm, *width_nm)?;
            Ok((freq, delay, spectrum))
        }
        SourceSpec::File { path } => {
            let spectrum = io::read_spectrum(path)?;
            let freq = *spectrum.grid();
            if let Some(grid) = config.grid {
                let spacing = thz_to_angular_frequency(grid.spacing_thz);
                if grid.n_points != freq.len()
                    || (spacing - freq.spacing()).abs() > 1e-9 * freq.spacing()
                {
                    return Err(input(format!(
                        "grid: config asks for {} points at {} THz, but '{}' carries {} points at {} THz",
                        grid.n_points,
                        grid.spacing_thz,
                        path.display(),
                        freq.len(),
                        homret_core::units::angular_frequency_to_thz(freq.spacing()),
                    )));
                }
            }
            let (freq, delay) = build_conjugate_grids(freq.len(), freq.spacing(), freq.center())?;
            Ok((freq, delay, spectrum))
        }
    }
}

/// Builds the medium's phase constant on the given grid.
pub fn build_medium_on(
    medium: &MediumSpec,
    freq: &FrequencyGrid,
) -> Result<PhaseConstant, CliError> {
    match medium {
        MediumSpec::Taylor { coefficients } => {
            Ok(taylor_phase_constant(freq, coefficients, freq.center())?)
        }
        MediumSpec::Cosine { amplitude, period, phase_offset } => {
            Ok(cosine_phase_constant(freq, *amplitude, *period, *phase_offset)?)
        }
        MediumSpec::File { path } => {
            let beta = io::read_phase_constant(path)?;
            if beta.grid() != freq {
                return Err(input(format!(
                    "medium.file: '{}' is sampled on a different grid than the source",
                    path.display()
                )));
            }
            Ok(beta)
        }
    }
}

/// Materializes the scenario from its configuration.
pub fn materialize(config: &ScenarioConfig) -> Result<Scenario, CliError> {
    let (freq, delay, spectrum) = build_source(config)?;
    let beta = match &config.medium {
        Some(medium) => Some(build_medium_on(medium, &freq)?),
        None => None,
    };
    Ok(Scenario { freq, delay, spectrum, beta, distance_km: config.distance_km })
}

/// The reference arm and slice family of a sweep: the reference spectrum is
/// the scenario source, its phase is the configured chirp, and each slice is
/// a (possibly displaced) Gaussian with the configured joint-phase model.
pub struct SweepSetup {
    pub reference: Spectrum,
    pub reference_phase: Vec<f64>,
    pub slices: Vec<JspSlice>,
    pub mean_photon_number: f64,
}

pub fn build_sweep(
    scenario: &Scenario,
    config: &ScenarioConfig,
    sweep: &SweepSpec,
) -> Result<SweepSetup, CliError> {
    let freq = &scenario.freq;
    let offsets = freq.offsets();
    let reference_phase: Vec<f64> =
        offsets.iter().map(|&x| sweep.reference_chirp * x * x).collect();

    let signal_width_nm = match (sweep.signal_width_nm, &config.source) {
        (Some(w), _) => w,
        (None, SourceSpec::Gaussian { width_nm, .. })
        | (None, SourceSpec::HermiteGaussian { width_nm, .. }) => *width_nm,
        (None, SourceSpec::File { .. }) => {
            return Err(input(
                "sweep.signal_width_nm: required when the source spectrum comes from a file",
            ))
        }
    };

    let mut slices = Vec::with_capacity(sweep.idler_offsets.len());
    for &idler_offset in &sweep.idler_offsets {
        let signal_center = if sweep.displace_signal {
            freq.center() - idler_offset
        } else {
            freq.center()
        };
        let signal = gaussian_spectrum(
            freq,
            angular_frequency_to_wavelength(signal_center),
            signal_width_nm,
        )?;
        let phase: Vec<f64> = offsets
            .iter()
            .map(|&x| {
                sweep.quadratic * x * x / 2.0
                    + sweep.cubic * x * x * x
                    + sweep.cross * idler_offset * x
            })
            .collect();
        slices.push(JspSlice {
            idler_frequency: freq.center() + idler_offset,
            signal,
            phase,
        });
    }
    Ok(SweepSetup {
        reference: scenario.spectrum.clone(),
        reference_phase,
        slices,
        mean_photon_number: sweep.mean_photon_number,
    })
}
