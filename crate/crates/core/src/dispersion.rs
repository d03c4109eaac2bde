//! Phase-constant profiles of the dispersive medium.
//!
//! The phase constant `beta(w)` (rad/km) is what one propagation kilometer
//! adds to the spectral phase. Profiles are stored sampled on a
//! [`FrequencyGrid`]; profiles built from a Taylor expansion keep their
//! coefficients alongside the samples for exact bookkeeping.
//!
//! Taylor convention: `beta(w) = sum_j beta_j * (w - w0)^j / j!` with
//! `beta_j` in ps^j/km, i.e. `beta_j` is the j-th derivative at the
//! expansion center. The constant and linear terms only move the trace
//! (global phase and delay); the curvature `beta''` is the observable.

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;

/// Taylor expansion of a phase constant around `center` rad/ps;
/// `coefficients[j]` is the j-th derivative `beta_j` in ps^j/km.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorCoefficients {
    pub center: f64,
    pub coefficients: Vec<f64>,
}

impl TaylorCoefficients {
    /// Polynomial value at angular frequency `w`.
    pub fn evaluate(&self, w: f64) -> f64 {
        let x = w - self.center;
        let mut term = 1.0;
        let mut sum = 0.0;
        for (j, c) in self.coefficients.iter().enumerate() {
            if j > 0 {
                term *= x / j as f64;
            }
            sum += c * term;
        }
        sum
    }

    /// Coefficient `beta_j`, zero when the expansion is shorter than `j`.
    pub fn coefficient(&self, j: usize) -> f64 {
        self.coefficients.get(j).copied().unwrap_or(0.0)
    }
}

/// Sampled phase-constant profile, optionally carrying the Taylor expansion
/// it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConstant {
    grid: FrequencyGrid,
    values: Vec<f64>,
    taylor: Option<TaylorCoefficients>,
}

impl PhaseConstant {
    /// Wraps arbitrary sampled values (rad/km); no Taylor view is attached.
    pub fn from_samples(grid: FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("phase constant"));
        }
        Ok(Self { grid, values, taylor: None })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// Sampled values in rad/km.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The Taylor expansion this profile was built from, when there is one.
    pub fn taylor(&self) -> Option<&TaylorCoefficients> {
        self.taylor.as_ref()
    }

    /// Returns a copy with `beta0 + beta1 * (w - w0)` added. The added terms
    /// are pure gauge: they change the global phase and the trace position
    /// but not the recoverable curvature.
    pub fn with_affine_added(&self, beta0: f64, beta1: f64) -> Self {
        let w0 = self.grid.center();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v + beta0 + beta1 * (self.grid.angular_frequency(i) - w0))
            .collect();
        let taylor = self.taylor.as_ref().map(|t| {
            let mut coefficients = t.coefficients.clone();
            if coefficients.len() < 2 {
                coefficients.resize(2, 0.0);
            }
            // Only exact when the expansion center is the grid center.
            coefficients[0] += beta0 + beta1 * (self.grid.center() - t.center);
            coefficients[1] += beta1;
            TaylorCoefficients { center: t.center, coefficients }
        });
        Self { grid: self.grid, values, taylor }
    }
}

/// Samples a Taylor-expanded phase constant on `grid`.
pub fn taylor_phase_constant(
    grid: &FrequencyGrid,
    coefficients: &[f64],
    center: f64,
) -> Result<PhaseConstant> {
    if coefficients.iter().any(|v| !v.is_finite()) || !center.is_finite() {
        return Err(Error::NonFinite("taylor coefficients"));
    }
    let taylor = TaylorCoefficients { center, coefficients: coefficients.to_vec() };
    let values: Vec<f64> = (0..grid.len())
        .map(|i| taylor.evaluate(grid.angular_frequency(i)))
        .collect();
    Ok(PhaseConstant { grid: *grid, values, taylor: Some(taylor) })
}

/// Samples `beta(w) = amplitude * cos(2*pi*(w - w0)/period + phase_offset)`
/// on `grid`, a deliberately non-polynomial profile for robustness studies.
///
/// `amplitude` is in rad/km, `period` in rad/ps.
pub fn cosine_phase_constant(
    grid: &FrequencyGrid,
    amplitude: f64,
    period: f64,
    phase_offset: f64,
) -> Result<PhaseConstant> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::OutOfRange(format!(
            "cosine period must be finite and positive, got {period}"
        )));
    }
    if !amplitude.is_finite() || !phase_offset.is_finite() {
        return Err(Error::NonFinite("cosine parameters"));
    }
    let w0 = grid.center();
    let k = std::f64::consts::TAU / period;
    let values: Vec<f64> = (0..grid.len())
        .map(|i| amplitude * (k * (grid.angular_frequency(i) - w0) + phase_offset).cos())
        .collect();
    PhaseConstant::from_samples(*grid, values)
}
