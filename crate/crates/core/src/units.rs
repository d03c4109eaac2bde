//! Unit conventions and conversions.
//!
//! Internally everything runs in a single consistent system:
//! angular frequency in rad/ps, delay in ps, propagation distance in km,
//! phase constant in rad/km and its Taylor coefficients in ps^j/km.
//! Wavelengths (nm) and plain frequencies (THz) are accepted at the
//! boundaries and converted here.

use std::f64::consts::TAU;

/// Speed of light in vacuum. The numeric value is the same in nm/ps and km/s.
pub const SPEED_OF_LIGHT_NM_PER_PS: f64 = 299_792.458;

/// Angular frequency (rad/ps) of light at the given vacuum wavelength (nm).
pub fn wavelength_to_angular_frequency(wavelength_nm: f64) -> f64 {
    TAU * SPEED_OF_LIGHT_NM_PER_PS / wavelength_nm
}

/// Vacuum wavelength (nm) for the given angular frequency (rad/ps).
pub fn angular_frequency_to_wavelength(omega_rad_per_ps: f64) -> f64 {
    TAU * SPEED_OF_LIGHT_NM_PER_PS / omega_rad_per_ps
}

/// Plain frequency (THz) to angular frequency (rad/ps).
pub fn thz_to_angular_frequency(frequency_thz: f64) -> f64 {
    TAU * frequency_thz
}

/// Angular frequency (rad/ps) to plain frequency (THz).
pub fn angular_frequency_to_thz(omega_rad_per_ps: f64) -> f64 {
    omega_rad_per_ps / TAU
}

/// Width of a spectral feature converted from wavelength (nm) to angular
/// frequency (rad/ps) at the given center wavelength: dw = 2*pi*c*dl/l^2.
pub fn wavelength_width_to_angular(center_nm: f64, width_nm: f64) -> f64 {
    TAU * SPEED_OF_LIGHT_NM_PER_PS * width_nm / (center_nm * center_nm)
}
