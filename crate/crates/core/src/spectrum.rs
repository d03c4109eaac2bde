//! Source intensity spectra.
//!
//! A [`Spectrum`] is a non-negative intensity sampled on a [`FrequencyGrid`]
//! and normalized to unit area, `sum I(w_i) * dw = 1`, so that downstream
//! traces come out with a natural scale (peak visibility 1 for a
//! dispersion-free medium).

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::units;

/// Minimum ratio between the spectral RMS width and the grid spacing; below
/// this the line shape is under-resolved.
const MIN_WIDTH_IN_SAMPLES: f64 = 3.0;

/// Maximum ratio between the spectral RMS width and the grid span; above
/// this the window clips the line shape.
const MAX_WIDTH_FRACTION_OF_SPAN: f64 = 1.0 / 6.0;

/// Unit-area intensity spectrum on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: FrequencyGrid,
    intensity: Vec<f64>,
}

impl Spectrum {
    /// Wraps raw intensity samples, validating non-negativity and finiteness
    /// and normalizing the result to unit area.
    pub fn new(grid: FrequencyGrid, intensity: Vec<f64>) -> Result<Self> {
        if intensity.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: intensity.len(),
            });
        }
        if intensity.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spectrum intensity"));
        }
        if intensity.iter().any(|&v| v < 0.0) {
            return Err(Error::OutOfRange("spectrum intensity must be non-negative".into()));
        }
        let area: f64 = intensity.iter().sum::<f64>() * grid.spacing();
        if area <= 0.0 {
            return Err(Error::DegenerateTrace("spectrum has zero total intensity"));
        }
        let intensity = intensity.into_iter().map(|v| v / area).collect();
        Ok(Self { grid, intensity })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn len(&self) -> usize {
        self.intensity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensity.is_empty()
    }

    /// Largest intensity sample.
    pub fn peak(&self) -> f64 {
        self.intensity.iter().cloned().fold(0.0, f64::max)
    }

    /// Index of the largest intensity sample.
    pub fn peak_index(&self) -> usize {
        self.intensity
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("spectrum is non-empty")
    }

    /// Intensity-weighted mean frequency.
    pub fn mean_frequency(&self) -> f64 {
        let dw = self.grid.spacing();
        self.intensity
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.grid.angular_frequency(i))
            .sum::<f64>()
            * dw
    }

    /// RMS width of the intensity distribution.
    pub fn rms_width(&self) -> f64 {
        let mean = self.mean_frequency();
        let dw = self.grid.spacing();
        let var = self
            .intensity
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let d = self.grid.angular_frequency(i) - mean;
                v * d * d
            })
            .sum::<f64>()
            * dw;
        var.max(0.0).sqrt()
    }

    fn check_resolution(self) -> Result<Self> {
        let rms = self.rms_width();
        let dw = self.grid.spacing();
        if rms < MIN_WIDTH_IN_SAMPLES * dw {
            return Err(Error::SpectrumResolution(format!(
                "RMS width {rms:.6e} rad/ps is below {MIN_WIDTH_IN_SAMPLES} grid steps \
                 ({:.6e} rad/ps); the line shape is under-resolved",
                MIN_WIDTH_IN_SAMPLES * dw
            )));
        }
        let span = self.grid.span();
        if rms > MAX_WIDTH_FRACTION_OF_SPAN * span {
            return Err(Error::SpectrumResolution(format!(
                "RMS width {rms:.6e} rad/ps exceeds one sixth of the grid span \
                 ({:.6e} rad/ps); the window is too small",
                MAX_WIDTH_FRACTION_OF_SPAN * span
            )));
        }
        Ok(self)
    }
}

fn check_center_inside(grid: &FrequencyGrid, w_c: f64, what: &str) -> Result<()> {
    let lo = grid.angular_frequency(0);
    let hi = grid.angular_frequency(grid.len() - 1);
    if w_c < lo || w_c > hi {
        return Err(Error::OutOfRange(format!(
            "{what} center {w_c:.6} rad/ps lies outside the grid [{lo:.6}, {hi:.6}]"
        )));
    }
    Ok(())
}

/// Gaussian intensity spectrum specified by its center wavelength (nm) and
/// its intensity full width at half maximum in wavelength (nm).
///
/// The wavelength width is converted to angular frequency as
/// `dw = 2*pi*c*dl/l^2` before sampling. Errors when the line shape is
/// under-resolved or clipped by the grid window.
pub fn gaussian_spectrum(
    grid: &FrequencyGrid,
    center_wavelength_nm: f64,
    fwhm_wavelength_nm: f64,
) -> Result<Spectrum> {
    if !(fwhm_wavelength_nm.is_finite() && fwhm_wavelength_nm > 0.0) {
        return Err(Error::OutOfRange(format!(
            "FWHM must be finite and positive, got {fwhm_wavelength_nm} nm"
        )));
    }
    let w_c = units::wavelength_to_angular_frequency(center_wavelength_nm);
    check_center_inside(grid, w_c, "gaussian spectrum")?;
    let fwhm = units::wavelength_width_to_angular(center_wavelength_nm, fwhm_wavelength_nm);
    let coeff = 4.0 * std::f64::consts::LN_2 / (fwhm * fwhm);
    let intensity: Vec<f64> = (0..grid.len())
        .map(|i| {
            let d = grid.angular_frequency(i) - w_c;
            (-coeff * d * d).exp()
        })
        .collect();
    Spectrum::new(*grid, intensity)?.check_resolution()
}

/// Physicists' Hermite polynomial `H_n(x)` by the three-term recurrence.
pub fn hermite_polynomial(order: usize, x: f64) -> f64 {
    let mut h_prev = 1.0;
    if order == 0 {
        return h_prev;
    }
    let mut h = 2.0 * x;
    for k in 1..order {
        let next = 2.0 * x * h - 2.0 * k as f64 * h_prev;
        h_prev = h;
        h = next;
    }
    h
}

/// Hermite-Gaussian intensity spectrum `|H_n(x) exp(-x^2/2)|^2` with
/// `x = (w - w_c) / s`; the scale `s` is given as a wavelength width (nm)
/// and converted like the Gaussian FWHM.
///
/// Order 0 reduces to [`gaussian_spectrum`] with FWHM `2*sqrt(ln 2) * scale`.
pub fn hermite_gaussian_spectrum(
    grid: &FrequencyGrid,
    order: usize,
    center_wavelength_nm: f64,
    scale_wavelength_nm: f64,
) -> Result<Spectrum> {
    if !(scale_wavelength_nm.is_finite() && scale_wavelength_nm > 0.0) {
        return Err(Error::OutOfRange(format!(
            "scale must be finite and positive, got {scale_wavelength_nm} nm"
        )));
    }
    let w_c = units::wavelength_to_angular_frequency(center_wavelength_nm);
    check_center_inside(grid, w_c, "hermite-gaussian spectrum")?;
    let s = units::wavelength_width_to_angular(center_wavelength_nm, scale_wavelength_nm);
    let intensity: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = (grid.angular_frequency(i) - w_c) / s;
            let amp = hermite_polynomial(order, x) * (-0.5 * x * x).exp();
            amp * amp
        })
        .collect();
    Spectrum::new(*grid, intensity)?.check_resolution()
}
