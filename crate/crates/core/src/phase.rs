//! Wrapped-phase utilities.

use std::f64::consts::PI;

/// Wraps an angle into (-pi, pi].
pub fn wrap_to_pi(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Unwraps a sampled phase sequence outward from `start`, keeping the value
/// at `start` fixed and removing 2*pi jumps between neighbouring samples.
///
/// Unwrapping outward from the most reliable sample (typically the spectral
/// peak) keeps accumulation errors away from the region that matters.
pub fn unwrap_from(wrapped: &[f64], start: usize) -> Vec<f64> {
    assert!(start < wrapped.len(), "start index out of bounds");
    let mut out = vec![0.0; wrapped.len()];
    out[start] = wrapped[start];
    for i in (start + 1)..wrapped.len() {
        out[i] = out[i - 1] + wrap_to_pi(wrapped[i] - wrapped[i - 1]);
    }
    for i in (0..start).rev() {
        out[i] = out[i + 1] + wrap_to_pi(wrapped[i] - wrapped[i + 1]);
    }
    out
}
