//! Projection distance and its analytic gradients for the
//! generalized-projection steps.
//!
//! After the delay-domain magnitude substitution and the transform back, the
//! iterate `g'` is in general off the spectral-constraint set. The next
//! iterate is chosen by descending the squared distance
//!
//! `Z(phi) = sum_i | I_i exp(i phi_i) - g'_i |^2`
//!
//! over either the per-sample phases or a handful of Taylor coefficients of
//! the phase-constant expansion.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::SpectralTrace;

fn check_lengths(g_prime: &SpectralTrace, constraint: &[f64], phases: &[f64]) -> Result<()> {
    if constraint.len() != g_prime.len() {
        return Err(Error::LengthMismatch {
            expected: g_prime.len(),
            actual: constraint.len(),
        });
    }
    if phases.len() != g_prime.len() {
        return Err(Error::LengthMismatch {
            expected: g_prime.len(),
            actual: phases.len(),
        });
    }
    Ok(())
}

/// Squared distance between the constrained candidate
/// `I_i exp(i phases_i)` and the free iterate `g'`.
pub fn projection_distance(
    g_prime: &SpectralTrace,
    constraint: &[f64],
    phases: &[f64],
) -> Result<f64> {
    check_lengths(g_prime, constraint, phases)?;
    Ok(projection_distance_unchecked(g_prime.values(), constraint, phases))
}

pub(crate) fn projection_distance_unchecked(
    g_prime: &[Complex64],
    constraint: &[f64],
    phases: &[f64],
) -> f64 {
    g_prime
        .iter()
        .zip(constraint)
        .zip(phases)
        .map(|((gp, &s), &phi)| (Complex64::from_polar(s, phi) - gp).norm_sqr())
        .sum()
}

/// Gradient of the projection distance over the per-sample phases:
/// `dZ/dphi_i = 2 |g'_i| I_i sin(phi_i - arg g'_i)`.
pub fn gp_phase_gradient(
    g_prime: &SpectralTrace,
    constraint: &[f64],
    phases: &[f64],
) -> Result<Vec<f64>> {
    check_lengths(g_prime, constraint, phases)?;
    Ok(g_prime
        .values()
        .iter()
        .zip(constraint)
        .zip(phases)
        .map(|((gp, &s), &phi)| 2.0 * gp.norm() * s * (phi - gp.arg()).sin())
        .collect())
}

/// Gradient of the projection distance over a block of basis coefficients
/// with the candidate phase `phases` already evaluated, normalized by
/// `4 * sum I_i`. `basis[k][i]` holds `d phi_i / d p_k`.
pub(crate) fn coeff_gradient_with_basis(
    g_prime: &[Complex64],
    constraint: &[f64],
    phases: &[f64],
    basis: &[Vec<f64>],
) -> Vec<f64> {
    let denom: f64 = 4.0 * constraint.iter().sum::<f64>();
    let residual: Vec<f64> = g_prime
        .iter()
        .zip(constraint)
        .zip(phases)
        .map(|((gp, &s), &phi)| 2.0 * gp.norm() * s * (phi - gp.arg()).sin())
        .collect();
    basis
        .iter()
        .map(|b| residual.iter().zip(b).map(|(r, c)| r * c).sum::<f64>() / denom)
        .collect()
}

/// Phase of the Taylor candidate, `phi_i = -z * sum_j beta_j x_i^j / j!`
/// with `x_i = w_i - center` and `coefficients[k] = beta_{k+2}`.
pub fn taylor_candidate_phase(
    offsets: &[f64],
    coefficients: &[f64],
    distance_km: f64,
) -> Vec<f64> {
    offsets
        .iter()
        .map(|&x| {
            let mut term = x * x / 2.0; // x^2 / 2!
            let mut phi = 0.0;
            for (k, &c) in coefficients.iter().enumerate() {
                if k > 0 {
                    term *= x / (k + 2) as f64;
                }
                phi += c * term;
            }
            -distance_km * phi
        })
        .collect()
}

/// Gradient of the normalized projection distance over the Taylor
/// coefficients `beta_2 .. beta_J` of the phase constant
/// (`coefficients[k] = beta_{k+2}`), chain rule through
/// `phi_i = -z * beta_j x_i^j / j!` included:
///
/// `grad_j = sum_i 2 |g'_i| I_i sin(phi_i - arg g'_i) * (-z x_i^j / j!)
///           / (4 sum_i I_i)`
pub fn gp_coeff_gradient(
    g_prime: &SpectralTrace,
    constraint: &[f64],
    coefficients: &[f64],
    center: f64,
    distance_km: f64,
) -> Result<Vec<f64>> {
    if constraint.len() != g_prime.len() {
        return Err(Error::LengthMismatch {
            expected: g_prime.len(),
            actual: constraint.len(),
        });
    }
    if coefficients.is_empty() {
        return Err(Error::InvalidConfig(
            "coefficient gradient needs at least one coefficient".into(),
        ));
    }
    let grid = g_prime.grid();
    let offsets: Vec<f64> = (0..grid.len())
        .map(|i| grid.angular_frequency(i) - center)
        .collect();
    let phases = taylor_candidate_phase(&offsets, coefficients, distance_km);
    let basis: Vec<Vec<f64>> = (0..coefficients.len())
        .map(|k| {
            let j = k + 2;
            let fact: f64 = (1..=j).map(|m| m as f64).product();
            offsets.iter().map(|&x| -distance_km * x.powi(j as i32) / fact).collect()
        })
        .collect();
    Ok(coeff_gradient_with_basis(g_prime.values(), constraint, &phases, &basis))
}
