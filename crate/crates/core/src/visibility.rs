//! Forward model: from a source spectrum and a phase-constant profile to the
//! two-photon interference visibility and coincidence traces.
//!
//! The medium imprints `exp(-i beta(w) z)` on the spectrum; the visibility
//! is the squared magnitude of the delay-domain transform of that product:
//!
//! `V(tau) = | integral I(w) exp(-i beta(w) z) exp(-i w tau) dw |^2`
//!
//! With a unit-area spectrum the dispersion-free dip reaches exactly 1 at
//! zero delay, and any dispersion can only lower and broaden it. The
//! normalized coincidence rate is `N_c(tau) = 1 - xi * V(tau)` where `xi`
//! encodes the photon statistics of the interfering pair.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{DelayGrid, SpectralTrace};
use crate::dispersion::PhaseConstant;
use crate::spectrum::Spectrum;
use crate::transform::forward_transform;

/// Slack allowed above 1.0 for visibility built from unit-area spectra;
/// covers quadrature roundoff only.
pub const VISIBILITY_PEAK_SLACK: f64 = 1e-9;

/// Photon statistics of the interfering fields, fixing the dip depth factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonStatistics {
    /// Heralded single photons: full dip, `xi = 1`.
    SinglePhoton,
    /// Phase-averaged coherent states: `xi = 1/2`.
    Coherent,
    /// Thermal states: `xi = 1/3`.
    Thermal,
}

impl PhotonStatistics {
    /// Dip depth factor `xi` in `N_c = 1 - xi * V`.
    pub fn dip_factor(&self) -> f64 {
        match self {
            PhotonStatistics::SinglePhoton => 1.0,
            PhotonStatistics::Coherent => 0.5,
            PhotonStatistics::Thermal => 1.0 / 3.0,
        }
    }
}

/// Non-negative visibility samples on a delay grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityTrace {
    grid: DelayGrid,
    values: Vec<f64>,
}

impl VisibilityTrace {
    /// Wraps visibility samples; values must be finite and non-negative.
    pub fn new(grid: DelayGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("visibility"));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::OutOfRange("visibility must be non-negative".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &DelayGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest visibility sample.
    pub fn peak(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Sum of all samples (used as the error normalization in retrieval).
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Normalized coincidence-rate samples on a delay grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceTrace {
    grid: DelayGrid,
    values: Vec<f64>,
    statistics: PhotonStatistics,
}

impl CoincidenceTrace {
    pub fn grid(&self) -> &DelayGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn statistics(&self) -> PhotonStatistics {
        self.statistics
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The complex product `I(w) exp(-i beta(w) z)` on the shared grid.
///
/// Its magnitude equals the intensity for every medium, which is exactly the
/// constraint the retrieval re-imposes each iteration.
pub fn cross_spectrum(
    spectrum: &Spectrum,
    beta: &PhaseConstant,
    distance_km: f64,
) -> Result<SpectralTrace> {
    if spectrum.grid() != beta.grid() {
        return Err(Error::GridMismatch(
            "spectrum and phase constant live on different grids".into(),
        ));
    }
    if !(distance_km.is_finite() && distance_km >= 0.0) {
        return Err(Error::OutOfRange(format!(
            "propagation distance must be finite and non-negative, got {distance_km} km"
        )));
    }
    let values: Vec<Complex64> = spectrum
        .intensity()
        .iter()
        .zip(beta.values())
        .map(|(&i, &b)| Complex64::from_polar(i, -b * distance_km))
        .collect();
    SpectralTrace::new(*spectrum.grid(), values)
}

/// Visibility trace for a source `spectrum` after `distance_km` of a medium
/// with phase constant `beta`, sampled on `delays` (which must be conjugate
/// to the spectrum grid).
pub fn visibility(
    spectrum: &Spectrum,
    beta: &PhaseConstant,
    distance_km: f64,
    delays: &DelayGrid,
) -> Result<VisibilityTrace> {
    if !delays.is_conjugate_of(spectrum.grid()) {
        return Err(Error::GridMismatch(
            "delay grid is not conjugate to the spectrum grid".into(),
        ));
    }
    let g = cross_spectrum(spectrum, beta, distance_km)?;
    let big_g = forward_transform(&g);
    let values: Vec<f64> = big_g.values().iter().map(|v| v.norm_sqr()).collect();
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if peak > 1.0 + VISIBILITY_PEAK_SLACK {
        return Err(Error::OutOfRange(format!(
            "visibility peak {peak} exceeds 1; the spectrum normalization is inconsistent"
        )));
    }
    VisibilityTrace::new(*delays, values)
}

/// Normalized coincidence rate `N_c = 1 - xi * V`.
pub fn coincidence_from_visibility(
    v: &VisibilityTrace,
    statistics: PhotonStatistics,
) -> Result<CoincidenceTrace> {
    let xi = statistics.dip_factor();
    if v.peak() > 1.0 + VISIBILITY_PEAK_SLACK {
        return Err(Error::OutOfRange(
            "visibility above 1 cannot come from a normalized trace".into(),
        ));
    }
    let values = v.values().iter().map(|&x| 1.0 - xi * x).collect();
    Ok(CoincidenceTrace { grid: *v.grid(), values, statistics })
}

/// Inverts [`coincidence_from_visibility`]: `V = (1 - N_c) / xi`.
pub fn visibility_from_coincidence(trace: &CoincidenceTrace) -> Result<VisibilityTrace> {
    let xi = trace.statistics().dip_factor();
    let values: Vec<f64> = trace
        .values()
        .iter()
        .map(|&n| {
            let v = (1.0 - n) / xi;
            // Tiny negative excursions are roundoff from the forward map.
            if v < 0.0 && v > -1e-12 {
                0.0
            } else {
                v
            }
        })
        .collect();
    if values.iter().any(|&v| v < 0.0) {
        return Err(Error::OutOfRange(
            "coincidence rate above 1 implies negative visibility".into(),
        ));
    }
    VisibilityTrace::new(*trace.grid(), values)
}

/// Checks that a complex spectral amplitude has unit L2 norm,
/// `sum |a|^2 dw = 1`, within `tol`.
fn check_unit_norm(trace: &SpectralTrace, tol: f64, what: &str) -> Result<()> {
    let norm: f64 =
        trace.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * trace.grid().spacing();
    if (norm - 1.0).abs() > tol {
        return Err(Error::OutOfRange(format!(
            "{what} must have unit L2 norm, got {norm}"
        )));
    }
    Ok(())
}

/// Rescales a complex spectral amplitude to unit L2 norm.
pub fn normalize_amplitude(trace: &SpectralTrace) -> Result<SpectralTrace> {
    let norm: f64 =
        trace.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * trace.grid().spacing();
    if norm <= 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateTrace("amplitude has no power to normalize"));
    }
    let s = norm.sqrt().recip();
    let values = trace.values().iter().map(|v| v * s).collect();
    SpectralTrace::new(*trace.grid(), values)
}

/// Visibility of the interference between a weak reference field with
/// spectral amplitude `reference` (mean photon number `mean_photon_number`)
/// and a single-photon signal with spectral amplitude `signal`:
///
/// `V(tau) = 2 |integral a(w) phi(w) exp(-i w tau) dw|^2 / (|A|^2 + 2)`
///
/// Both amplitudes must be unit-norm on a shared grid; the peak visibility
/// scales as `2 / (|A|^2 + 2)` and reaches 1 only for a vanishing reference
/// perfectly matched to the signal.
pub fn jsp_visibility(
    reference: &SpectralTrace,
    signal: &SpectralTrace,
    mean_photon_number: f64,
) -> Result<VisibilityTrace> {
    if reference.grid() != signal.grid() {
        return Err(Error::GridMismatch(
            "reference and signal amplitudes live on different grids".into(),
        ));
    }
    if !(mean_photon_number.is_finite() && mean_photon_number >= 0.0) {
        return Err(Error::OutOfRange(format!(
            "mean photon number must be finite and non-negative, got {mean_photon_number}"
        )));
    }
    check_unit_norm(reference, 1e-6, "reference amplitude")?;
    check_unit_norm(signal, 1e-6, "signal amplitude")?;

    let product: Vec<Complex64> = reference
        .values()
        .iter()
        .zip(signal.values())
        .map(|(a, p)| a * p)
        .collect();
    let g = SpectralTrace::new(*reference.grid(), product)?;
    let big_g = forward_transform(&g);
    let scale = 2.0 / (mean_photon_number + 2.0);
    let values = big_g.values().iter().map(|v| scale * v.norm_sqr()).collect();
    VisibilityTrace::new(reference.grid().conjugate_delays(), values)
}
