//! Numerical toolkit for two-photon Hong-Ou-Mandel interferometry in
//! dispersive media.
//!
//! The crate covers both directions of the measurement:
//!
//! * **Forward model** — given a source spectrum and a phase constant
//!   profile `beta(omega)`, compute the interferometric visibility trace
//!   `V(tau)` (and coincidence rates for single-photon, coherent, or
//!   thermal inputs) after propagation through a medium of known length.
//!   See [`visibility`] and [`dispersion`].
//! * **Inverse problem** — given a measured visibility trace and the
//!   source spectrum, recover the spectral phase `-beta(omega) z` by
//!   iterative projection between the delay and frequency domains, then
//!   extract the dispersion coefficients `beta_2`, `beta_3` from the
//!   recovered profile. See [`retrieval`] and [`analysis`].
//!
//! Frequency and delay grids come in conjugate pairs (`dtau * domega * N =
//! 2 pi`) so the discrete Fourier transform maps exactly between the two
//! domains; [`grid::build_conjugate_grids`] constructs such a pair. All
//! frequencies are angular, in rad/ps; delays are in ps; propagation
//! distances in km; Taylor dispersion coefficients `beta_j` in ps^j/km.
//!
//! A joint-spectral-phase mode ([`jsp`]) repeats the retrieval across a
//! sweep of idler-filter positions and assembles the two-dimensional phase
//! map slice by slice; [`io`] reads and writes every artifact as plain
//! two-column text.

pub mod analysis;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod io;
pub mod jsp;
pub mod phase;
pub mod resample;
pub mod retrieval;
pub mod spectrum;
pub mod transform;
pub mod units;
pub mod visibility;

pub use analysis::{estimate_dispersion, DispersionEstimate, ErrorReport};
pub use dispersion::{
    cosine_phase_constant, taylor_phase_constant, PhaseConstant, TaylorCoefficients,
};
pub use error::{Error, Result};
pub use grid::{build_conjugate_grids, DelayGrid, FrequencyGrid};
pub use retrieval::{
    phase_difference_retrieval, retrieve, retrieve_with_sink, Algorithm, InitialGuess,
    RetrievalConfig, RetrievalResult, StopReason,
};
pub use spectrum::{gaussian_spectrum, hermite_gaussian_spectrum, Spectrum};
pub use visibility::{
    coincidence_from_visibility, visibility, visibility_from_coincidence, CoincidenceTrace,
    PhotonStatistics, VisibilityTrace,
};
