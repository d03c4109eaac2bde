//! Numerical differentiation of recovered phase constants and
//! spectrum-weighted dispersion estimates.
//!
//! The recovered profile is only trustworthy where the spectrum carries
//! energy, so every aggregate here weights samples by the source intensity
//! and drops both the spectral wings (below a floor relative to the peak)
//! and the grid-edge samples where only one-sided stencils fit.

use crate::dispersion::PhaseConstant;
use crate::error::{Error, Result};
use crate::retrieval::fit::weighted_fit;
use crate::spectrum::Spectrum;

/// Samples with intensity below this fraction of the spectral peak are
/// excluded from weighted estimates.
pub const INTENSITY_FLOOR_FRACTION: f64 = 1e-6;

/// A sampled derivative, with the samples that had to fall back to one-sided
/// stencils flagged so estimators can skip them.
#[derive(Debug, Clone)]
pub struct DerivativeProfile {
    values: Vec<f64>,
    one_sided: Vec<bool>,
}

impl DerivativeProfile {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True where the sample came from a one-sided boundary stencil.
    pub fn one_sided(&self) -> &[bool] {
        &self.one_sided
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_samples(values: &[f64], spacing: f64, needed: usize) -> Result<()> {
    if values.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: values.len(),
        });
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::OutOfRange(format!(
            "sample spacing must be positive and finite, got {spacing}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("derivative input samples"));
    }
    Ok(())
}

/// Second derivative of uniformly sampled data. Interior samples use the
/// five-point stencil `(-1, 16, -30, 16, -1) / (12 h^2)` (exact through
/// fifth-degree polynomials); the two samples at each edge fall back to a
/// one-sided four-point formula and are flagged.
pub fn second_derivative_profile(values: &[f64], spacing: f64) -> Result<DerivativeProfile> {
    check_samples(values, spacing, 5)?;
    let n = values.len();
    let h2 = spacing * spacing;
    let mut out = vec![0.0; n];
    let mut one_sided = vec![false; n];
    for i in 2..n - 2 {
        out[i] = (-values[i - 2] + 16.0 * values[i - 1] - 30.0 * values[i]
            + 16.0 * values[i + 1]
            - values[i + 2])
            / (12.0 * h2);
    }
    let forward =
        |f: &[f64], i: usize| (2.0 * f[i] - 5.0 * f[i + 1] + 4.0 * f[i + 2] - f[i + 3]) / h2;
    let backward =
        |f: &[f64], i: usize| (2.0 * f[i] - 5.0 * f[i - 1] + 4.0 * f[i - 2] - f[i - 3]) / h2;
    for i in [0, 1] {
        out[i] = forward(values, i);
        one_sided[i] = true;
    }
    for i in [n - 2, n - 1] {
        out[i] = backward(values, i);
        one_sided[i] = true;
    }
    Ok(DerivativeProfile { values: out, one_sided })
}

/// Third derivative of uniformly sampled data. Interior samples use the
/// seven-point stencil `(1/8, -1, 13/8, 0, -13/8, 1, -1/8) / h^3` (exact
/// through sixth-degree polynomials); the three samples at each edge fall
/// back to a one-sided five-point formula and are flagged.
pub fn third_derivative_profile(values: &[f64], spacing: f64) -> Result<DerivativeProfile> {
    check_samples(values, spacing, 7)?;
    let n = values.len();
    let h3 = spacing * spacing * spacing;
    let mut out = vec![0.0; n];
    let mut one_sided = vec![false; n];
    for i in 3..n - 3 {
        out[i] = (0.125 * values[i - 3] - values[i - 2] + 1.625 * values[i - 1]
            - 1.625 * values[i + 1]
            + values[i + 2]
            - 0.125 * values[i + 3])
            / h3;
    }
    let forward = |f: &[f64], i: usize| {
        (-2.5 * f[i] + 9.0 * f[i + 1] - 12.0 * f[i + 2] + 7.0 * f[i + 3] - 1.5 * f[i + 4]) / h3
    };
    let backward = |f: &[f64], i: usize| {
        (2.5 * f[i] - 9.0 * f[i - 1] + 12.0 * f[i - 2] - 7.0 * f[i - 3] + 1.5 * f[i - 4]) / h3
    };
    for i in [0, 1, 2] {
        out[i] = forward(values, i);
        one_sided[i] = true;
    }
    for i in [n - 3, n - 2, n - 1] {
        out[i] = backward(values, i);
        one_sided[i] = true;
    }
    Ok(DerivativeProfile { values: out, one_sided })
}

/// Intensity-weighted average of a derivative profile, skipping one-sided
/// samples and everything below the intensity floor.
pub fn weighted_coefficient(profile: &DerivativeProfile, spectrum: &Spectrum) -> Result<f64> {
    if profile.len() != spectrum.len() {
        return Err(Error::LengthMismatch {
            expected: spectrum.len(),
            actual: profile.len(),
        });
    }
    let floor = INTENSITY_FLOOR_FRACTION * spectrum.peak();
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&v, &flagged), &w) in profile
        .values
        .iter()
        .zip(&profile.one_sided)
        .zip(spectrum.intensity())
    {
        if flagged || w < floor {
            continue;
        }
        num += w * v;
        den += w;
    }
    if den <= 0.0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(num / den)
}

/// Spectrum-weighted dispersion coefficients of a sampled phase constant.
#[derive(Debug, Clone, Copy)]
pub struct DispersionEstimate {
    /// Group-velocity dispersion, ps^2/km.
    pub beta2: f64,
    /// Third-order dispersion, ps^3/km.
    pub beta3: f64,
}

fn check_same_grid(beta: &PhaseConstant, spectrum: &Spectrum) -> Result<()> {
    if beta.grid() != spectrum.grid() {
        return Err(Error::GridMismatch(
            "phase constant and spectrum must share one frequency grid".into(),
        ));
    }
    Ok(())
}

/// Estimates `beta_2` and `beta_3` from a sampled phase constant by
/// finite-difference differentiation and intensity-weighted averaging.
pub fn estimate_dispersion(
    beta: &PhaseConstant,
    spectrum: &Spectrum,
) -> Result<DispersionEstimate> {
    check_same_grid(beta, spectrum)?;
    let spacing = beta.grid().spacing();
    let second = second_derivative_profile(beta.values(), spacing)?;
    let third = third_derivative_profile(beta.values(), spacing)?;
    Ok(DispersionEstimate {
        beta2: weighted_coefficient(&second, spectrum)?,
        beta3: weighted_coefficient(&third, spectrum)?,
    })
}

/// Agreement between a recovered phase constant and the profile that
/// generated the data, judged only on observable quantities: the dispersion
/// coefficients and the residual after removing the constant-plus-linear
/// gauge the measurement cannot see.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    pub beta2_recovered: f64,
    pub beta2_truth: f64,
    pub beta3_recovered: f64,
    pub beta3_truth: f64,
    /// Intensity-weighted RMS of the gauge-free residual, rad/km.
    pub residual_rms: f64,
}

impl ErrorReport {
    pub fn beta2_relative_error(&self) -> f64 {
        relative(self.beta2_recovered, self.beta2_truth)
    }

    pub fn beta3_relative_error(&self) -> f64 {
        relative(self.beta3_recovered, self.beta3_truth)
    }
}

fn relative(recovered: f64, truth: f64) -> f64 {
    let diff = (recovered - truth).abs();
    if truth == 0.0 {
        diff
    } else {
        diff / truth.abs()
    }
}

/// Compares a recovered phase constant against the truth on a shared grid.
/// Truth coefficients come from its Taylor expansion when it has one, and
/// from the same finite-difference estimate otherwise.
pub fn compare_phase_constants(
    recovered: &PhaseConstant,
    truth: &PhaseConstant,
    spectrum: &Spectrum,
) -> Result<ErrorReport> {
    check_same_grid(recovered, spectrum)?;
    check_same_grid(truth, spectrum)?;
    let estimate = estimate_dispersion(recovered, spectrum)?;
    let (beta2_truth, beta3_truth) = match truth.taylor() {
        Some(t) => (t.coefficient(2), t.coefficient(3)),
        None => {
            let e = estimate_dispersion(truth, spectrum)?;
            (e.beta2, e.beta3)
        }
    };

    // Remove the unobservable constant-plus-linear part of the difference
    // with an intensity-weighted fit, then take the weighted RMS of what is
    // left.
    let grid = spectrum.grid();
    let offsets = grid.offsets();
    let difference: Vec<f64> = recovered
        .values()
        .iter()
        .zip(truth.values())
        .map(|(r, t)| r - t)
        .collect();
    let floor = INTENSITY_FLOOR_FRACTION * spectrum.peak();
    let weights: Vec<f64> = spectrum
        .intensity()
        .iter()
        .map(|&w| if w < floor { 0.0 } else { w })
        .collect();
    let basis = vec![vec![1.0; offsets.len()], offsets.clone()];
    let affine = weighted_fit(&basis, &difference, &weights)
        .ok_or(Error::InsufficientData { needed: 2, got: 0 })?;
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&d, &x), &w) in difference.iter().zip(&offsets).zip(&weights) {
        if w <= 0.0 {
            continue;
        }
        let r = d - affine[0] - affine[1] * x;
        num += w * r * r;
        den += w;
    }
    if den <= 0.0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(ErrorReport {
        beta2_recovered: estimate.beta2,
        beta2_truth,
        beta3_recovered: estimate.beta3,
        beta3_truth,
        residual_rms: (num / den).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::taylor_phase_constant;
    use crate::grid::{build_conjugate_grids, FrequencyGrid};
    use crate::spectrum::gaussian_spectrum;
    use crate::units::wavelength_to_angular_frequency;

    fn grid() -> FrequencyGrid {
        let center = wavelength_to_angular_frequency(1533.0);
        build_conjugate_grids(256, 0.01 * 2.0 * std::f64::consts::PI, center)
            .unwrap()
            .0
    }

    #[test]
    fn second_derivative_is_exact_on_a_quartic() {
        let h = 0.1;
        let values: Vec<f64> = (0..64)
            .map(|i| {
                let x = i as f64 * h - 3.2;
                0.5 * x.powi(4) - x.powi(3) + 2.0 * x * x - x + 3.0
            })
            .collect();
        let profile = second_derivative_profile(&values, h).unwrap();
        for i in 2..62 {
            let x = i as f64 * h - 3.2;
            let expected = 6.0 * x * x - 6.0 * x + 4.0;
            assert!(
                (profile.values()[i] - expected).abs() < 1e-9,
                "i={i}: {} vs {expected}",
                profile.values()[i]
            );
            assert!(!profile.one_sided()[i]);
        }
        for i in [0, 1, 62, 63] {
            assert!(profile.one_sided()[i]);
        }
    }

    #[test]
    fn third_derivative_is_exact_on_a_quintic() {
        let h = 0.05;
        let values: Vec<f64> = (0..80)
            .map(|i| {
                let x = i as f64 * h - 2.0;
                x.powi(5) - 0.25 * x.powi(4) + x.powi(3) - x
            })
            .collect();
        let profile = third_derivative_profile(&values, h).unwrap();
        for i in 3..77 {
            let x = i as f64 * h - 2.0;
            let expected = 60.0 * x * x - 6.0 * x + 6.0;
            assert!(
                (profile.values()[i] - expected).abs() < 1e-7,
                "i={i}: {} vs {expected}",
                profile.values()[i]
            );
        }
        for i in [0, 1, 2, 77, 78, 79] {
            assert!(profile.one_sided()[i]);
        }
    }

    #[test]
    fn dispersion_estimate_recovers_taylor_coefficients() {
        let grid = grid();
        let spectrum = gaussian_spectrum(&grid, 1533.0, 1.0).unwrap();
        let beta =
            taylor_phase_constant(&grid, &[7.0, -2.0, 4.0, 0.06], grid.center()).unwrap();
        let estimate = estimate_dispersion(&beta, &spectrum).unwrap();
        assert!(
            (estimate.beta2 - 4.0).abs() / 4.0 < 1e-10,
            "beta2 = {}",
            estimate.beta2
        );
        assert!(
            (estimate.beta3 - 0.06).abs() / 0.06 < 1e-8,
            "beta3 = {}",
            estimate.beta3
        );
    }

    #[test]
    fn comparison_ignores_the_affine_gauge() {
        let grid = grid();
        let spectrum = gaussian_spectrum(&grid, 1533.0, 1.0).unwrap();
        let truth =
            taylor_phase_constant(&grid, &[0.0, 0.0, 4.0, 0.06], grid.center()).unwrap();
        let recovered = truth.with_affine_added(1e3, 10.0);
        let report = compare_phase_constants(&recovered, &truth, &spectrum).unwrap();
        assert!(report.beta2_relative_error() < 1e-10, "{report:?}");
        assert!(report.beta3_relative_error() < 1e-8, "{report:?}");
        assert!(report.residual_rms < 1e-9, "{report:?}");
    }

    #[test]
    fn weighted_average_skips_flagged_and_faint_samples() {
        let grid = grid();
        let spectrum = gaussian_spectrum(&grid, 1533.0, 1.0).unwrap();
        // Quadratic everywhere except the grid edges, which the one-sided
        // flags and the intensity floor both exclude.
        let mut values: Vec<f64> = grid.offsets().iter().map(|&x| 2.0 * x * x).collect();
        let n = values.len();
        values[0] = 1e6;
        values[n - 1] = -1e6;
        let profile = second_derivative_profile(&values, grid.spacing()).unwrap();
        let mean = weighted_coefficient(&profile, &spectrum).unwrap();
        assert!((mean - 4.0).abs() < 1e-9, "mean = {mean}");
    }

    #[test]
    fn short_inputs_are_rejected() {
        assert!(second_derivative_profile(&[1.0; 4], 0.1).is_err());
        assert!(third_derivative_profile(&[1.0; 6], 0.1).is_err());
    }
}
