//! Shared projection machinery for the retrieval algorithms.
//!
//! The engine owns the two constraint sets — the spectral magnitude
//! `I(w)` and the delay-domain magnitude `sqrt(V(tau))` — plus the
//! precomputed scale factors every iteration needs. All algorithms share the
//! same pair of projections and the same error metric; they differ only in
//! how the spectral projection picks the phase.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{DelayGrid, DelayTrace, FrequencyGrid, SpectralTrace};
use crate::spectrum::Spectrum;
use crate::transform::{forward_transform, inverse_transform};
use crate::visibility::VisibilityTrace;

/// Magnitudes smaller than this are treated as zero when extracting a phase
/// factor; the substitution then keeps the target magnitude with zero phase
/// rather than dividing by a denormal.
const PHASE_FLOOR: f64 = 1e-300;

/// `value / |value|` with a floor that maps near-zero samples to `1 + 0i`.
pub(crate) fn unit_phase(value: Complex64) -> Complex64 {
    let norm = value.norm();
    if norm < PHASE_FLOOR {
        Complex64::new(1.0, 0.0)
    } else {
        value / norm
    }
}

pub(crate) struct Engine {
    freq: FrequencyGrid,
    delay: DelayGrid,
    /// Spectral-domain magnitude constraint `I(w)` (unit-area intensity).
    constraint: Vec<f64>,
    /// Delay-domain magnitude target `sqrt(scale * V(tau))`.
    target: Vec<f64>,
    /// `sum_j (scale * V_j)` — denominator of the normalized error metric.
    error_denom: f64,
    /// Factor that brings the measured trace onto the scale the transform of
    /// the constraint actually produces (Parseval-consistent).
    rescale: f64,
}

impl Engine {
    /// Assembles the engine from a measured visibility trace and the source
    /// spectrum. The trace is rescaled so its integral matches what the
    /// transform of the unit-area spectrum yields under Parseval's theorem:
    /// `scale = 2 pi sum I^2 dw / (sum V dtau)`. For a self-consistent
    /// simulated trace the factor is 1 up to measurement noise.
    pub(crate) fn new(visibility: &VisibilityTrace, spectrum: &Spectrum) -> Result<Self> {
        let freq = *spectrum.grid();
        let delay = *visibility.grid();
        if !delay.is_conjugate_of(&freq) {
            return Err(Error::GridMismatch(
                "visibility delay grid is not conjugate to the spectrum's frequency grid"
                    .into(),
            ));
        }
        let constraint = spectrum.intensity().to_vec();
        let spectral_power: f64 =
            constraint.iter().map(|s| s * s).sum::<f64>() * freq.spacing();
        let trace_power: f64 = visibility.values().iter().sum::<f64>() * delay.spacing();
        if trace_power <= 0.0 {
            return Err(Error::DegenerateTrace(
                "visibility trace has zero integral; nothing to retrieve",
            ));
        }
        let rescale = 2.0 * std::f64::consts::PI * spectral_power / trace_power;
        let target: Vec<f64> = visibility
            .values()
            .iter()
            .map(|&v| (rescale * v).sqrt())
            .collect();
        let error_denom: f64 = visibility.values().iter().sum::<f64>() * rescale;
        if !error_denom.is_finite() || error_denom <= 0.0 {
            return Err(Error::DegenerateTrace("visibility trace sums to zero"));
        }
        Ok(Self {
            freq,
            delay,
            constraint,
            target,
            error_denom,
            rescale,
        })
    }

    pub(crate) fn frequency_grid(&self) -> &FrequencyGrid {
        &self.freq
    }

    pub(crate) fn delay_grid(&self) -> &DelayGrid {
        &self.delay
    }

    pub(crate) fn constraint(&self) -> &[f64] {
        &self.constraint
    }

    pub(crate) fn target(&self) -> &[f64] {
        &self.target
    }

    pub(crate) fn rescale(&self) -> f64 {
        self.rescale
    }

    /// Starting iterate: the spectral constraint dressed with the given
    /// per-sample phases.
    pub(crate) fn initial_iterate(&self, phases: &[f64]) -> SpectralTrace {
        let values: Vec<Complex64> = self
            .constraint
            .iter()
            .zip(phases)
            .map(|(&s, &p)| Complex64::from_polar(s, p))
            .collect();
        SpectralTrace::new(self.freq, values).expect("constraint length matches grid")
    }

    pub(crate) fn forward(&self, g: &SpectralTrace) -> DelayTrace {
        forward_transform(g)
    }

    pub(crate) fn inverse(&self, big_g: &DelayTrace) -> SpectralTrace {
        inverse_transform(big_g, &self.freq).expect("delay grid is conjugate by construction")
    }

    /// Normalized squared error between the magnitude of the transformed
    /// iterate and the delay-domain target:
    /// `E = sum (|G_j| - sqrt(V_j))^2 / sum V_j`.
    pub(crate) fn error(&self, transformed: &DelayTrace) -> f64 {
        let num: f64 = transformed
            .values()
            .iter()
            .zip(&self.target)
            .map(|(g, &t)| {
                let d = g.norm() - t;
                d * d
            })
            .sum();
        num / self.error_denom
    }

    /// Delay-domain projection: replace magnitudes with the target, keep the
    /// phases.
    pub(crate) fn fourier_project(&self, transformed: &DelayTrace) -> DelayTrace {
        let values: Vec<Complex64> = transformed
            .values()
            .iter()
            .zip(&self.target)
            .map(|(g, &t)| unit_phase(*g) * t)
            .collect();
        DelayTrace::new(self.delay, values).expect("same grid, same length")
    }

    /// Spectral-domain projection: replace magnitudes with the constraint,
    /// keep the phases (the classic alternating-projection update).
    pub(crate) fn spectral_project(&self, g_prime: &SpectralTrace) -> SpectralTrace {
        let values: Vec<Complex64> = g_prime
            .values()
            .iter()
            .zip(&self.constraint)
            .map(|(g, &s)| unit_phase(*g) * s)
            .collect();
        SpectralTrace::new(self.freq, values).expect("same grid, same length")
    }

    /// Spectral iterate with the constraint magnitude and explicit phases.
    pub(crate) fn iterate_with_phases(&self, phases: &[f64]) -> SpectralTrace {
        self.initial_iterate(phases)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::taylor_phase_constant;
    use crate::grid::build_conjugate_grids;
    use crate::spectrum::gaussian_spectrum;
    use crate::units::wavelength_to_angular_frequency;
    use crate::visibility::visibility;

    fn fixture() -> (Spectrum, VisibilityTrace) {
        let center = wavelength_to_angular_frequency(1533.0);
        let (freq, delay) = build_conjugate_grids(256, 0.01 * 2.0 * std::f64::consts::PI, center)
            .unwrap();
        let spectrum = gaussian_spectrum(&freq, 1533.0, 1.0).unwrap();
        let beta = taylor_phase_constant(&freq, &[0.0, 0.0, 4.0], center).unwrap();
        let trace = visibility(&spectrum, &beta, 3.7, &delay).unwrap();
        (spectrum, trace)
    }

    #[test]
    fn self_consistent_trace_needs_no_rescale() {
        let (spectrum, trace) = fixture();
        let engine = Engine::new(&trace, &spectrum).unwrap();
        assert!(
            (engine.rescale() - 1.0).abs() < 1e-9,
            "rescale = {}",
            engine.rescale()
        );
    }

    #[test]
    fn error_vanishes_at_the_true_phase() {
        let (spectrum, trace) = fixture();
        let center = spectrum.grid().center();
        let engine = Engine::new(&trace, &spectrum).unwrap();
        let beta = taylor_phase_constant(spectrum.grid(), &[0.0, 0.0, 4.0], center).unwrap();
        let phases: Vec<f64> = beta.values().iter().map(|b| -b * 3.7).collect();
        let g = engine.initial_iterate(&phases);
        let error = engine.error(&engine.forward(&g));
        assert!(error < 1e-20, "error at truth = {error}");
    }

    #[test]
    fn zero_phase_start_has_sizable_error() {
        let (spectrum, trace) = fixture();
        let engine = Engine::new(&trace, &spectrum).unwrap();
        let g = engine.initial_iterate(&vec![0.0; spectrum.grid().len()]);
        let error = engine.error(&engine.forward(&g));
        assert!(error > 1e-2, "error at zero phase = {error}");
    }

    #[test]
    fn projections_are_idempotent() {
        let (spectrum, trace) = fixture();
        let engine = Engine::new(&trace, &spectrum).unwrap();
        let g = engine.initial_iterate(&vec![0.25; spectrum.grid().len()]);
        let big_g = engine.forward(&g);
        let once = engine.fourier_project(&big_g);
        let twice = engine.fourier_project(&once);
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert!((a - b).norm() < 1e-12);
        }
        let gp = engine.inverse(&once);
        let sp_once = engine.spectral_project(&gp);
        let sp_twice = engine.spectral_project(&sp_once);
        for (a, b) in sp_once.values().iter().zip(sp_twice.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn unit_phase_handles_zero() {
        let u = unit_phase(Complex64::new(0.0, 0.0));
        assert_eq!(u, Complex64::new(1.0, 0.0));
        let v = unit_phase(Complex64::new(0.0, -2.0));
        assert!((v - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let (spectrum, _) = fixture();
        let (_, other_delay) = build_conjugate_grids(
            256,
            0.021 * 2.0 * std::f64::consts::PI,
            spectrum.grid().center(),
        )
        .unwrap();
        let flat = VisibilityTrace::new(other_delay, vec![0.5; 256]).unwrap();
        assert!(Engine::new(&flat, &spectrum).is_err());
    }
}
