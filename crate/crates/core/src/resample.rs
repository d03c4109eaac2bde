//! Resampling of measured visibility traces onto a conjugate delay grid.
//!
//! Instruments sample delays on their own grid (a translation stage step,
//! say), which is almost never conjugate to the spectrometer grid. The
//! retrieval requires the conjugate pairing, so measured traces are
//! interpolated onto it with a monotone cubic (Fritsch-Carlson) scheme:
//! shape-preserving, no overshoot between samples, and exact at the nodes.

use crate::error::{Error, Result};
use crate::grid::DelayGrid;
use crate::visibility::VisibilityTrace;

/// Result of resampling: the trace on the target grid plus a note of how
/// many target samples fell outside the measured span and were zero-filled.
#[derive(Debug, Clone)]
pub struct ResampledVisibility {
    pub trace: VisibilityTrace,
    pub zero_filled: usize,
}

/// Fritsch-Carlson slope estimates for monotone cubic interpolation.
///
/// Interior slopes are the weighted harmonic mean of the adjacent secants,
/// forced to zero at local extrema; endpoint slopes use the standard
/// one-sided three-point formula with monotonicity clamping.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    let s: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];

    for i in 1..n - 1 {
        if s[i - 1] * s[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
        }
    }

    let one_sided = |h0: f64, h1: f64, s0: f64, s1: f64| {
        let mut d0 = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if d0 * s0 <= 0.0 {
            d0 = 0.0;
        } else if s0 * s1 < 0.0 && d0.abs() > 3.0 * s0.abs() {
            d0 = 3.0 * s0;
        }
        d0
    };
    d[0] = one_sided(h[0], h[1], s[0], s[1]);
    d[n - 1] = one_sided(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
    d
}

/// Evaluates the cubic Hermite interpolant at `t`; `t` must lie inside the
/// node span. Node hits return the node value exactly.
fn hermite_eval(x: &[f64], y: &[f64], d: &[f64], t: f64) -> f64 {
    // Find the bracketing interval by binary search.
    let k = match x.binary_search_by(|v| v.total_cmp(&t)) {
        Ok(i) => return y[i],
        Err(i) => i - 1,
    };
    let h = x[k + 1] - x[k];
    let u = (t - x[k]) / h;
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    h00 * y[k] + h10 * h * d[k] + h01 * y[k + 1] + h11 * h * d[k + 1]
}

/// Interpolates a measured visibility trace `(delays_ps, values)` onto
/// `target`. Target samples outside the measured span are zero-filled and
/// counted; interpolated values are clamped at zero from below.
///
/// Requires at least four strictly increasing, finite delay samples.
pub fn resample_visibility(
    delays_ps: &[f64],
    values: &[f64],
    target: &DelayGrid,
) -> Result<ResampledVisibility> {
    if delays_ps.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: delays_ps.len(),
            actual: values.len(),
        });
    }
    if delays_ps.len() < 4 {
        return Err(Error::InsufficientData { needed: 4, got: delays_ps.len() });
    }
    if delays_ps.iter().chain(values.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("measured visibility"));
    }
    if delays_ps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange(
            "measured delays must be strictly increasing".into(),
        ));
    }

    let d = monotone_slopes(delays_ps, values);
    let lo = delays_ps[0];
    let hi = delays_ps[delays_ps.len() - 1];
    let mut zero_filled = 0usize;
    let out: Vec<f64> = (0..target.len())
        .map(|j| {
            let t = target.delay(j);
            if t < lo || t > hi {
                zero_filled += 1;
                0.0
            } else {
                hermite_eval(delays_ps, values, &d, t).max(0.0)
            }
        })
        .collect();

    Ok(ResampledVisibility {
        trace: VisibilityTrace::new(*target, out)?,
        zero_filled,
    })
}
