//! Discrete approximations of the continuous Fourier pair linking the
//! spectral and delay domains.
//!
//! Forward:  G(tau) = integral g(w) exp(-i w tau) dw
//! Inverse:  g(w)   = (1 / 2*pi) integral G(tau) exp(+i w tau) dtau
//!
//! Both integrals are discretized on conjugate grids with the quadrature
//! weights (`dw`, `dt / 2*pi`) folded in, so the pair is an exact numerical
//! inverse: `inverse(forward(g)) == g` up to floating-point roundoff, and
//! Parseval's identity `sum |G|^2 dt = 2*pi * sum |g|^2 dw` holds.
//!
//! The kernels run on an FFT after re-indexing both domains so their origins
//! sit at the array midpoint; the carrier phase `exp(-i w0 tau)` is applied
//! explicitly.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::f64::consts::TAU;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{DelayTrace, FrequencyGrid, SpectralTrace};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn plan_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Swaps the two halves of an even-length buffer, moving the midpoint sample
/// to index 0 (and back: the operation is an involution for even lengths).
fn half_rotate(buf: &mut [Complex64]) {
    let half = buf.len() / 2;
    let (a, b) = buf.split_at_mut(half);
    a.swap_with_slice(b);
}

/// Transforms a spectral-domain trace to the conjugate delay domain,
/// approximating `G(tau) = integral g(w) exp(-i w tau) dw`.
pub fn forward_transform(g: &SpectralTrace) -> DelayTrace {
    let freq = *g.grid();
    let delay = freq.conjugate_delays();
    let mut buf = g.values().to_vec();

    half_rotate(&mut buf);
    plan_forward(buf.len()).process(&mut buf);
    half_rotate(&mut buf);

    let dw = freq.spacing();
    let w0 = freq.center();
    for (j, v) in buf.iter_mut().enumerate() {
        *v *= Complex64::from_polar(dw, -w0 * delay.delay(j));
    }

    DelayTrace::new(delay, buf).expect("conjugate grid preserves length")
}

/// Transforms a delay-domain trace back to the given frequency grid,
/// approximating `g(w) = (1 / 2*pi) integral G(tau) exp(+i w tau) dtau`.
///
/// Errors when `big_g`'s grid is not conjugate to `freq`.
pub fn inverse_transform(big_g: &DelayTrace, freq: &FrequencyGrid) -> Result<SpectralTrace> {
    let delay = big_g.grid();
    if !delay.is_conjugate_of(freq) {
        return Err(Error::GridMismatch(
            "delay grid is not conjugate to the requested frequency grid".into(),
        ));
    }

    let w0 = freq.center();
    let mut buf: Vec<Complex64> = big_g
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| v * Complex64::from_polar(1.0, w0 * delay.delay(j)))
        .collect();

    half_rotate(&mut buf);
    plan_inverse(buf.len()).process(&mut buf);
    half_rotate(&mut buf);

    let scale = delay.spacing() / TAU;
    for v in buf.iter_mut() {
        *v *= scale;
    }

    SpectralTrace::new(*freq, buf)
}
