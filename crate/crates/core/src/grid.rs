//! Sampling grids for the spectral and delay domains.
//!
//! The two domains form a conjugate pair: a frequency grid with `n` points
//! spaced `dw` apart pairs with a delay grid spaced `dt = 2*pi / (n * dw)`,
//! so that `dt * dw * n = 2*pi` holds exactly. Both grids put their origin
//! at the array midpoint (index `n/2`), which keeps transforms symmetric
//! around the carrier frequency and zero delay.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Smallest admissible grid; the derivative stencils and the transforms make
/// no sense below this.
pub const MIN_GRID_POINTS: usize = 8;

/// Relative tolerance used when checking that two grids are conjugate.
pub const CONJUGACY_TOLERANCE: f64 = 1e-12;

fn validate_points(n_points: usize) -> Result<()> {
    if n_points < MIN_GRID_POINTS {
        return Err(Error::InvalidGrid(format!(
            "need at least {MIN_GRID_POINTS} points, got {n_points}"
        )));
    }
    if n_points % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "point count must be even, got {n_points}"
        )));
    }
    Ok(())
}

/// Uniform angular-frequency grid (rad/ps), centered on the carrier.
///
/// Sample `i` sits at `center + (i - n/2) * spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    center: f64,
    spacing: f64,
    n_points: usize,
}

impl FrequencyGrid {
    /// Builds a grid of `n_points` samples spaced `spacing` rad/ps around
    /// `center` rad/ps. The count must be even and at least [`MIN_GRID_POINTS`].
    pub fn new(center: f64, spacing: f64, n_points: usize) -> Result<Self> {
        validate_points(n_points)?;
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "frequency spacing must be finite and positive, got {spacing}"
            )));
        }
        if !center.is_finite() {
            return Err(Error::InvalidGrid("frequency center must be finite".into()));
        }
        Ok(Self { center, spacing, n_points })
    }

    /// Carrier (center) angular frequency in rad/ps.
    pub fn center(&self) -> f64 {
        self.center
    }

    /// Sample spacing in rad/ps.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    /// Angular frequency of sample `i`.
    pub fn angular_frequency(&self, i: usize) -> f64 {
        self.center + self.offset(i)
    }

    /// Offset of sample `i` from the carrier, `w_i - w0`.
    pub fn offset(&self, i: usize) -> f64 {
        (i as f64 - (self.n_points / 2) as f64) * self.spacing
    }

    /// All sample frequencies in ascending order.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.angular_frequency(i)).collect()
    }

    /// All offsets from the carrier in ascending order.
    pub fn offsets(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.offset(i)).collect()
    }

    /// Total width covered by the grid, `n * spacing`.
    pub fn span(&self) -> f64 {
        self.spacing * self.n_points as f64
    }

    /// The delay grid conjugate to this one: same point count, spacing
    /// `2*pi / (n * spacing)`, origin at zero delay.
    pub fn conjugate_delays(&self) -> DelayGrid {
        DelayGrid {
            spacing: TAU / (self.n_points as f64 * self.spacing),
            n_points: self.n_points,
            origin: 0.0,
        }
    }
}

/// Uniform relative-delay grid (ps) with zero delay at the array midpoint.
///
/// Sample `i` sits at `origin + (i - n/2) * spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayGrid {
    spacing: f64,
    n_points: usize,
    origin: f64,
}

impl DelayGrid {
    /// Builds a delay grid; `origin` is the delay of the midpoint sample.
    pub fn new(spacing: f64, n_points: usize, origin: f64) -> Result<Self> {
        validate_points(n_points)?;
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "delay spacing must be finite and positive, got {spacing}"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid("delay origin must be finite".into()));
        }
        Ok(Self { spacing, n_points, origin })
    }

    /// Sample spacing in ps.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    /// Delay of the midpoint sample in ps.
    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Delay of sample `i` in ps.
    pub fn delay(&self, i: usize) -> f64 {
        self.origin + (i as f64 - (self.n_points / 2) as f64) * self.spacing
    }

    /// All sample delays in ascending order.
    pub fn delays(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.delay(i)).collect()
    }

    /// Total width covered by the grid.
    pub fn span(&self) -> f64 {
        self.spacing * self.n_points as f64
    }

    /// True when this grid and `freq` satisfy `dt * dw * n = 2*pi` (within
    /// [`CONJUGACY_TOLERANCE`]) with matching point counts.
    pub fn is_conjugate_of(&self, freq: &FrequencyGrid) -> bool {
        self.n_points == freq.len()
            && (self.spacing * freq.spacing() * self.n_points as f64 / TAU - 1.0).abs()
                < CONJUGACY_TOLERANCE
    }
}

/// Builds a conjugate frequency/delay grid pair around `center` rad/ps.
pub fn build_conjugate_grids(
    n_points: usize,
    freq_spacing: f64,
    center: f64,
) -> Result<(FrequencyGrid, DelayGrid)> {
    let freq = FrequencyGrid::new(center, freq_spacing, n_points)?;
    let delay = freq.conjugate_delays();
    Ok((freq, delay))
}

/// Marker trait for the two grid kinds so traces can be generic over them.
pub trait SamplingGrid: Clone + PartialEq + std::fmt::Debug {
    fn points(&self) -> usize;
}

impl SamplingGrid for FrequencyGrid {
    fn points(&self) -> usize {
        self.len()
    }
}

impl SamplingGrid for DelayGrid {
    fn points(&self) -> usize {
        self.len()
    }
}

/// A complex-valued sample sequence tied to the grid it lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTrace<G: SamplingGrid> {
    grid: G,
    values: Vec<Complex64>,
}

/// Complex trace over a [`FrequencyGrid`] (spectral domain).
pub type SpectralTrace = ComplexTrace<FrequencyGrid>;
/// Complex trace over a [`DelayGrid`] (delay domain).
pub type DelayTrace = ComplexTrace<DelayGrid>;

impl<G: SamplingGrid> ComplexTrace<G> {
    /// Wraps `values` sampled on `grid`; the lengths must agree.
    pub fn new(grid: G, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::LengthMismatch {
                expected: grid.points(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &G {
        self.grid_ref()
    }

    fn grid_ref(&self) -> &G {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise magnitudes.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Pointwise wrapped phases in (-pi, pi].
    pub fn phases(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.arg()).collect()
    }
}
