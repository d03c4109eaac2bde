//! Joint spectral phase mapping: slice-by-slice retrieval against a
//! characterized reference field.
//!
//! Each slice of a two-photon joint spectrum, selected by an idler
//! frequency, interferes with the same reference field and yields one
//! visibility trace. Retrieving every trace and subtracting the known
//! reference phase assembles the joint phase over the signal axis, up to a
//! constant-plus-linear gauge per slice that the measurement cannot see and
//! that is removed here in the intensity-weighted sense.

use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, SpectralTrace};
use crate::retrieval::fit::weighted_fit;
use crate::retrieval::{phase_difference_retrieval, RetrievalConfig};
use crate::spectrum::Spectrum;
use crate::visibility::{jsp_visibility, VisibilityTrace};
use num_complex::Complex64;

/// Samples with intensity-product weight below this fraction of the slice
/// peak are masked out of the map.
pub const JSP_WEIGHT_FLOOR_FRACTION: f64 = 1e-6;

/// One slice of a joint spectrum to be synthesized and retrieved: the signal
/// marginal at a given idler frequency plus the joint phase over the signal
/// grid.
#[derive(Debug, Clone)]
pub struct JspSlice {
    /// Idler frequency label, rad/ps.
    pub idler_frequency: f64,
    /// Signal-axis intensity of this slice.
    pub signal: Spectrum,
    /// Joint phase over the signal grid, rad.
    pub phase: Vec<f64>,
}

/// One measured slice: the signal marginal and its visibility trace.
#[derive(Debug, Clone)]
pub struct MeasuredJspSlice {
    /// Idler frequency label, rad/ps.
    pub idler_frequency: f64,
    /// Signal-axis intensity of this slice.
    pub signal: Spectrum,
    /// Measured visibility on the grid conjugate to the signal grid.
    pub trace: VisibilityTrace,
}

/// Recovered joint spectral phase, one row per idler slice.
#[derive(Debug, Clone)]
pub struct JspMap {
    grid: FrequencyGrid,
    idler_frequencies: Vec<f64>,
    /// Gauge-fixed phase rows; only samples with a set mask are meaningful.
    phases: Vec<Vec<f64>>,
    /// Intensity-product weight of every sample (zero where masked). The
    /// retrieved phase noise grows as the inverse amplitude product, so this
    /// is the inverse-variance weight for fits over a row.
    weights: Vec<Vec<f64>>,
    mask: Vec<Vec<bool>>,
    converged: Vec<bool>,
    final_errors: Vec<f64>,
}

impl JspMap {
    /// Signal-axis frequency grid shared by all rows.
    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn idler_frequencies(&self) -> &[f64] {
        &self.idler_frequencies
    }

    pub fn n_slices(&self) -> usize {
        self.idler_frequencies.len()
    }

    pub fn phases(&self) -> &[Vec<f64>] {
        &self.phases
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn mask(&self) -> &[Vec<bool>] {
        &self.mask
    }

    /// Whether each slice's retrieval reached its error tolerance.
    pub fn converged(&self) -> &[bool] {
        &self.converged
    }

    pub fn final_errors(&self) -> &[f64] {
        &self.final_errors
    }

    /// Weighted second derivative of one slice's phase over the signal
    /// frequency: the coefficient of `x^2/2` in a weighted cubic fit over
    /// the masked samples. The cubic term is carried so that third-order
    /// structure in the slice cannot leak into the curvature when the
    /// support sits off the grid center.
    pub fn slice_curvature(&self, slice: usize) -> Result<f64> {
        let phases = self.phases.get(slice).ok_or_else(|| {
            Error::OutOfRange(format!(
                "slice {slice} out of range for a map of {} slices",
                self.n_slices()
            ))
        })?;
        let weights = &self.weights[slice];
        let offsets = self.grid.offsets();
        let basis = vec![
            vec![1.0; offsets.len()],
            offsets.clone(),
            offsets.iter().map(|&x| 0.5 * x * x).collect(),
            offsets.iter().map(|&x| x * x * x / 6.0).collect(),
        ];
        let coeffs = weighted_fit(&basis, phases, weights)
            .ok_or(Error::InsufficientData { needed: 4, got: 0 })?;
        Ok(coeffs[2])
    }
}

fn check_reference(reference: &Spectrum, reference_phase: &[f64]) -> Result<()> {
    if reference_phase.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: reference_phase.len(),
        });
    }
    if reference_phase.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("reference phase"));
    }
    Ok(())
}

/// Synthesizes the visibility trace of every slice against the reference and
/// retrieves the joint phase back. The reference amplitude is the square
/// root of its intensity dressed with `reference_phase`.
pub fn jsp_sweep(
    reference: &Spectrum,
    reference_phase: &[f64],
    slices: &[JspSlice],
    mean_photon_number: f64,
    config: &RetrievalConfig,
) -> Result<JspMap> {
    if slices.is_empty() {
        return Err(Error::EmptySweep);
    }
    check_reference(reference, reference_phase)?;
    let grid = *reference.grid();
    let reference_amplitude: Vec<Complex64> = reference
        .intensity()
        .iter()
        .zip(reference_phase)
        .map(|(&i, &p)| Complex64::from_polar(i.sqrt(), p))
        .collect();
    let reference_amplitude = SpectralTrace::new(grid, reference_amplitude)?;

    let mut measured = Vec::with_capacity(slices.len());
    for slice in slices {
        if slice.signal.grid() != reference.grid() {
            return Err(Error::GridMismatch(
                "slice signal spectrum is not on the reference grid".into(),
            ));
        }
        if slice.phase.len() != slice.signal.len() {
            return Err(Error::LengthMismatch {
                expected: slice.signal.len(),
                actual: slice.phase.len(),
            });
        }
        if slice.phase.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("slice joint phase"));
        }
        let signal_amplitude: Vec<Complex64> = slice
            .signal
            .intensity()
            .iter()
            .zip(&slice.phase)
            .map(|(&i, &p)| Complex64::from_polar(i.sqrt(), p))
            .collect();
        let signal_amplitude = SpectralTrace::new(grid, signal_amplitude)?;
        let trace = jsp_visibility(&reference_amplitude, &signal_amplitude, mean_photon_number)?;
        measured.push(MeasuredJspSlice {
            idler_frequency: slice.idler_frequency,
            signal: slice.signal.clone(),
            trace,
        });
    }
    jsp_sweep_measured(reference, reference_phase, &measured, config)
}

/// Retrieves the joint phase from measured per-slice visibility traces.
pub fn jsp_sweep_measured(
    reference: &Spectrum,
    reference_phase: &[f64],
    slices: &[MeasuredJspSlice],
    config: &RetrievalConfig,
) -> Result<JspMap> {
    if slices.is_empty() {
        return Err(Error::EmptySweep);
    }
    check_reference(reference, reference_phase)?;
    config.validate()?;
    let grid = *reference.grid();
    let offsets = grid.offsets();

    let mut idler_frequencies = Vec::with_capacity(slices.len());
    let mut phases = Vec::with_capacity(slices.len());
    let mut weights = Vec::with_capacity(slices.len());
    let mut mask = Vec::with_capacity(slices.len());
    let mut converged = Vec::with_capacity(slices.len());
    let mut final_errors = Vec::with_capacity(slices.len());

    for slice in slices {
        if slice.signal.grid() != reference.grid() {
            return Err(Error::GridMismatch(
                "slice signal spectrum is not on the reference grid".into(),
            ));
        }
        let result =
            phase_difference_retrieval(&slice.trace, reference, &slice.signal, config)?;

        // Weight each sample by the intensity product: the recovered phase
        // error scales inversely with the amplitude product that shaped the
        // trace, so this is the inverse-variance weight. Mask everything
        // under the floor.
        let product: Vec<f64> = reference
            .intensity()
            .iter()
            .zip(slice.signal.intensity())
            .map(|(&a, &b)| a * b)
            .collect();
        let floor =
            JSP_WEIGHT_FLOOR_FRACTION * product.iter().cloned().fold(0.0, f64::max);
        let slice_ok = result.converged;
        let slice_mask: Vec<bool> = product.iter().map(|&w| slice_ok && w >= floor).collect();
        let slice_weights: Vec<f64> = product
            .iter()
            .zip(&slice_mask)
            .map(|(&w, &ok)| if ok { w } else { 0.0 })
            .collect();

        // Joint phase = recovered product phase minus the known reference
        // phase, minus the per-slice affine gauge.
        let mut row: Vec<f64> = result
            .unwrapped_phases()
            .iter()
            .zip(reference_phase)
            .map(|(r, p)| r - p)
            .collect();
        let basis = vec![vec![1.0; offsets.len()], offsets.clone()];
        match weighted_fit(&basis, &row, &slice_weights) {
            Some(affine) => {
                for (v, &x) in row.iter_mut().zip(&offsets) {
                    *v -= affine[0] + affine[1] * x;
                }
                idler_frequencies.push(slice.idler_frequency);
                phases.push(row);
                weights.push(slice_weights);
                mask.push(slice_mask);
                converged.push(slice_ok);
                final_errors.push(result.final_error);
            }
            None => {
                // Nothing usable in this slice; keep the row but mark it.
                idler_frequencies.push(slice.idler_frequency);
                phases.push(row);
                weights.push(vec![0.0; offsets.len()]);
                mask.push(vec![false; offsets.len()]);
                converged.push(false);
                final_errors.push(result.final_error);
            }
        }
    }

    Ok(JspMap {
        grid,
        idler_frequencies,
        phases,
        weights,
        mask,
        converged,
        final_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_conjugate_grids;
    use crate::retrieval::{Algorithm, InitialGuess};
    use crate::spectrum::gaussian_spectrum;
    use crate::units::wavelength_to_angular_frequency;

    /// Joint phase with curvature `q` along the signal axis plus enough
    /// cubic structure to make the trace asymmetric (which pins the sign of
    /// the recovered curvature).
    fn joint_phase(offsets: &[f64], q: f64, idler_offset: f64) -> Vec<f64> {
        offsets
            .iter()
            .map(|&x| 0.5 * q * x * x + 0.05 * x * x * x + 0.3 * idler_offset * x)
            .collect()
    }

    fn sweep_fixture() -> (Spectrum, Vec<f64>, Vec<JspSlice>) {
        let center = wavelength_to_angular_frequency(1533.0);
        let (freq, _) = build_conjugate_grids(256, 0.01 * 2.0 * std::f64::consts::PI, center)
            .unwrap();
        let reference = gaussian_spectrum(&freq, 1533.0, 1.2).unwrap();
        // A chirped reference: the sweep must subtract this back out.
        let reference_phase: Vec<f64> =
            freq.offsets().iter().map(|&x| 0.8 * x * x).collect();
        let offsets = freq.offsets();
        let slices: Vec<JspSlice> = [-0.3_f64, 0.0, 0.3]
            .iter()
            .map(|&idler_offset| {
                let signal_nm = 1533.0 - idler_offset; // displace each slice a little
                let signal = gaussian_spectrum(&freq, signal_nm, 0.9).unwrap();
                JspSlice {
                    idler_frequency: center + idler_offset,
                    signal,
                    phase: joint_phase(&offsets, 2.0, idler_offset),
                }
            })
            .collect();
        (reference, reference_phase, slices)
    }

    fn sweep_config() -> RetrievalConfig {
        // Seed every slice with the rough bulk chirp. A cold start would
        // strand the centered slice at the conjugate-twin saddle: its
        // amplitude is symmetric and only the weak cubic term of the joint
        // phase distinguishes the two branches. Magnitude projection then
        // converges into a shallow local basin a few orders below this
        // tolerance, where phases are accurate to ~1e-5 rad — far tighter
        // than the curvature checks need.
        RetrievalConfig {
            algorithm: Algorithm::Gs,
            max_iterations: 1500,
            error_tolerance: 1e-10,
            stall_tolerance: 1e-9,
            initial_guess: InitialGuess::TaylorSeed {
                coefficients: vec![0.0, 0.0, -3.5, -0.2],
            },
            ..RetrievalConfig::default()
        }
    }

    #[test]
    fn sweep_recovers_slice_curvature() {
        let (reference, reference_phase, slices) = sweep_fixture();
        let map =
            jsp_sweep(&reference, &reference_phase, &slices, 1.0, &sweep_config()).unwrap();
        assert_eq!(map.n_slices(), 3);
        for slice in 0..3 {
            assert!(
                map.converged()[slice],
                "slice {slice} stopped at {}",
                map.final_errors()[slice]
            );
            let curvature = map.slice_curvature(slice).unwrap();
            assert!(
                (curvature - 2.0).abs() / 2.0 < 1e-3,
                "slice {slice}: curvature {curvature}"
            );
        }
    }

    #[test]
    fn mask_covers_the_supported_samples_only() {
        let (reference, reference_phase, slices) = sweep_fixture();
        let map =
            jsp_sweep(&reference, &reference_phase, &slices, 1.0, &sweep_config()).unwrap();
        let mask = &map.mask()[1];
        let n = mask.len();
        assert!(!mask[0] && !mask[n - 1], "wings should be masked");
        assert!(mask[n / 2], "peak should be kept");
    }

    #[test]
    fn unconverged_slices_are_flagged_and_masked() {
        let (reference, reference_phase, slices) = sweep_fixture();
        let config = RetrievalConfig {
            max_iterations: 1,
            error_tolerance: 1e-30,
            ..sweep_config()
        };
        let map = jsp_sweep(&reference, &reference_phase, &slices, 1.0, &config).unwrap();
        assert!(map.converged().iter().all(|&c| !c));
        assert!(map.mask().iter().all(|row| row.iter().all(|&m| !m)));
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let (reference, reference_phase, _) = sweep_fixture();
        let err = jsp_sweep(&reference, &reference_phase, &[], 1.0, &sweep_config());
        assert!(matches!(err, Err(Error::EmptySweep)));
    }

    #[test]
    fn mismatched_slice_grid_is_rejected() {
        let (reference, reference_phase, mut slices) = sweep_fixture();
        let other_center = wavelength_to_angular_frequency(1540.0);
        let (other, _) = build_conjugate_grids(256, 0.01 * 2.0 * std::f64::consts::PI, other_center)
            .unwrap();
        slices[0].signal = gaussian_spectrum(&other, 1540.0, 0.9).unwrap();
        slices[0].phase = vec![0.0; 256];
        let err = jsp_sweep(&reference, &reference_phase, &slices, 1.0, &sweep_config());
        assert!(matches!(err, Err(Error::GridMismatch(_))));
    }
}
