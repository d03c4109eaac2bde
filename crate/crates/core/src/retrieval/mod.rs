//! Iterative recovery of the spectral phase from a visibility trace and the
//! source spectrum.
//!
//! All algorithms alternate between the two measured magnitude constraints:
//! the spectrum `I(w)` in the frequency domain and `sqrt(V(tau))` in the
//! delay domain. They differ in how the frequency-domain constraint is
//! enforced:
//!
//! * [`Algorithm::Gs`] — keep the iterate's phase unchanged and swap in the
//!   constraint magnitude (alternating projections). The error metric is
//!   non-increasing by construction.
//! * [`Algorithm::GpPhase`] — descend the distance between the iterate and
//!   the constraint set over every per-sample phase, with an adaptive line
//!   search along the analytic gradient.
//! * [`Algorithm::GpCoeff`] — same descent, but over a handful of Taylor
//!   coefficients of the phase-constant expansion (plus an internal constant
//!   and linear alignment term so measurement gauge cannot block the fit).
//! * [`Algorithm::Composite`] — alternate Gs and GpCoeff stages, switching
//!   whenever progress stalls, and report the best iterate seen.
//!
//! # Sign ambiguity for symmetric spectra
//!
//! When the source spectrum is symmetric about its center, conjugate
//! reflection of the iterate — `g(w) -> conj(g(-w))` about the center, which
//! negates the even part of the phase while keeping the odd part — conjugates
//! the delay-domain transform and therefore leaves the visibility exactly
//! unchanged. The trace then determines `beta2` only up to sign (and every
//! other even Taylor order with it), and a cold-started run converges to
//! whichever branch numerical noise favors. Supply
//! [`InitialGuess::TaylorSeed`] with the known dispersion sign — a coarse
//! magnitude is enough — to select the physical branch. Asymmetric spectra do
//! not have this degeneracy.

mod engine;
pub(crate) mod fit;
mod gradient;
mod line_search;

pub use gradient::{
    gp_coeff_gradient, gp_phase_gradient, projection_distance, taylor_candidate_phase,
};
pub use line_search::LineSearchConfig;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dispersion::{PhaseConstant, TaylorCoefficients};
use crate::error::{Error, Result};
use crate::grid::{DelayTrace, SpectralTrace};
use crate::phase::unwrap_from;
use crate::spectrum::Spectrum;
use crate::visibility::VisibilityTrace;

use engine::Engine;
use fit::weighted_fit;
use gradient::{coeff_gradient_with_basis, projection_distance_unchecked};
use line_search::line_search;

/// Consecutive iterations below the stall tolerance before a stage gives up.
const STALL_WINDOW: usize = 3;

/// Consecutive composite stages without a new best error before the
/// scheduler stops.
const STAGNANT_STAGE_LIMIT: usize = 4;

/// Retrieval algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Alternating magnitude projections with the iterate's own phase.
    Gs,
    /// Gradient descent of the projection distance over per-sample phases.
    GpPhase,
    /// Gradient descent over Taylor coefficients of the phase constant.
    GpCoeff,
    /// Stall-triggered alternation of `Gs` and `GpCoeff` stages.
    Composite,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Algorithm::Gs => "gs",
            Algorithm::GpPhase => "gp-phase",
            Algorithm::GpCoeff => "gp-coeff",
            Algorithm::Composite => "composite",
        };
        f.write_str(name)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gs" => Ok(Algorithm::Gs),
            "gp-phase" => Ok(Algorithm::GpPhase),
            "gp-coeff" => Ok(Algorithm::GpCoeff),
            "composite" => Ok(Algorithm::Composite),
            other => Err(Error::Parse(format!(
                "unknown algorithm '{other}'; expected gs, gp-phase, gp-coeff, or composite"
            ))),
        }
    }
}

/// How the spectral phase is seeded before the first iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// All phases start at zero.
    ZeroPhase,
    /// Independent uniform phases in `(-pi, pi)`, reproducible per seed.
    RandomPhase { seed: u64 },
    /// Phases of a Taylor phase constant (`coefficients[j]` is `beta_j`)
    /// propagated over the run's distance.
    TaylorSeed { coefficients: Vec<f64> },
}

/// Settings shared by all retrieval algorithms.
#[derive(Debug, Clone)]
pub struct RetrievalConfig {
    pub algorithm: Algorithm,
    /// Total iteration budget across all stages.
    pub max_iterations: usize,
    /// Error level that counts as converged.
    pub error_tolerance: f64,
    /// Relative per-iteration improvement below which progress counts as
    /// stalled; also the stage-level progress threshold for the composite.
    pub stall_tolerance: f64,
    pub initial_guess: InitialGuess,
    /// Highest Taylor order `J` the coefficient descent adjusts
    /// (the variables are `beta_2 .. beta_J`).
    pub gp_coeff_order: usize,
    pub line_search: LineSearchConfig,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Composite,
            max_iterations: 5000,
            error_tolerance: 1e-12,
            stall_tolerance: 1e-3,
            initial_guess: InitialGuess::ZeroPhase,
            gp_coeff_order: 3,
            line_search: LineSearchConfig::default(),
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.error_tolerance.is_finite() && self.error_tolerance >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "error_tolerance must be finite and non-negative, got {}",
                self.error_tolerance
            )));
        }
        if !(self.stall_tolerance.is_finite()
            && self.stall_tolerance > 0.0
            && self.stall_tolerance < 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "stall_tolerance must lie in (0, 1), got {}",
                self.stall_tolerance
            )));
        }
        if self.gp_coeff_order < 2 {
            return Err(Error::InvalidConfig(format!(
                "gp_coeff_order must be at least 2 (a quadratic term), got {}",
                self.gp_coeff_order
            )));
        }
        if let InitialGuess::TaylorSeed { coefficients } = &self.initial_guess {
            if coefficients.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidConfig(
                    "initial-guess coefficients must be finite".into(),
                ));
            }
        }
        self.line_search.validate().map_err(Error::InvalidConfig)
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The error dropped to or below the configured tolerance.
    ToleranceMet,
    /// Progress fell below the stall tolerance and stayed there.
    Stalled,
    /// The iteration budget ran out first.
    MaxIterations,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            StopReason::ToleranceMet => "tolerance met",
            StopReason::Stalled => "stalled",
            StopReason::MaxIterations => "iteration limit reached",
        };
        f.write_str(name)
    }
}

/// One line of the convergence log.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    /// 1-based iteration index (0 is the initial guess).
    pub iteration: usize,
    pub error: f64,
    pub algorithm: Algorithm,
}

/// Summary of one scheduler stage (a single-algorithm run has exactly one).
#[derive(Debug, Clone, Copy)]
pub struct StageRecord {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub initial_error: f64,
    pub final_error: f64,
}

/// Outcome of a retrieval run. The reported iterate is the lowest-error one
/// encountered, which for the monotone `Gs` algorithm is simply the last.
#[derive(Debug, Clone)]
pub struct RetrievalResult {
    /// Recovered spectral iterate: constraint magnitude, recovered phase.
    pub iterate: SpectralTrace,
    /// Visibility implied by the recovered iterate, on the delay grid.
    pub recovered_visibility: VisibilityTrace,
    /// Phase constant implied by the recovered phase over the propagation
    /// distance; absent in phase-difference mode.
    pub beta: Option<PhaseConstant>,
    /// Final Taylor model of the coefficient descent (pure `GpCoeff` runs
    /// only). `coefficients[0..=1]` hold the unobservable constant and
    /// group-delay alignment terms the descent used internally.
    pub taylor_estimate: Option<TaylorCoefficients>,
    /// Error after each iteration; entry 0 is the initial guess.
    pub error_history: Vec<f64>,
    pub iterations: usize,
    pub initial_error: f64,
    /// Error of the reported iterate.
    pub final_error: f64,
    pub converged: bool,
    pub reason: StopReason,
    pub stages: Vec<StageRecord>,
}

impl RetrievalResult {
    /// Recovered per-sample phases, wrapped to `(-pi, pi]`.
    pub fn phases(&self) -> Vec<f64> {
        self.iterate.phases()
    }

    /// Recovered phases unwrapped outward from the grid midpoint.
    pub fn unwrapped_phases(&self) -> Vec<f64> {
        let wrapped = self.iterate.phases();
        let mid = wrapped.len() / 2;
        unwrap_from(&wrapped, mid)
    }
}

/// Normalized squared mismatch between two visibility traces on the same
/// grid: `sum (sqrt(a) - sqrt(b))^2 / sum b`.
pub fn visibility_mismatch(model: &VisibilityTrace, measured: &VisibilityTrace) -> Result<f64> {
    if model.len() != measured.len() {
        return Err(Error::LengthMismatch {
            expected: measured.len(),
            actual: model.len(),
        });
    }
    let denom: f64 = measured.values().iter().sum();
    if denom <= 0.0 {
        return Err(Error::DegenerateTrace("measured visibility sums to zero"));
    }
    let num: f64 = model
        .values()
        .iter()
        .zip(measured.values())
        .map(|(&a, &b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    Ok(num / denom)
}

/// Recovers the phase constant of the medium from a visibility trace, the
/// source spectrum, and the propagation distance in km.
pub fn retrieve(
    visibility: &VisibilityTrace,
    spectrum: &Spectrum,
    distance_km: f64,
    config: &RetrievalConfig,
) -> Result<RetrievalResult> {
    retrieve_with_sink(visibility, spectrum, distance_km, config, |_| {})
}

/// Same as [`retrieve`], invoking `sink` after every iteration with the
/// running error (for convergence logs and progress displays).
pub fn retrieve_with_sink(
    visibility: &VisibilityTrace,
    spectrum: &Spectrum,
    distance_km: f64,
    config: &RetrievalConfig,
    mut sink: impl FnMut(IterationRecord),
) -> Result<RetrievalResult> {
    if !(distance_km.is_finite() && distance_km > 0.0) {
        return Err(Error::OutOfRange(format!(
            "propagation distance must be positive and finite, got {distance_km} km"
        )));
    }
    config.validate()?;
    let engine = Engine::new(visibility, spectrum)?;
    run(engine, config, distance_km, true, &mut sink)
}

/// Recovers the spectral phase *difference* between two fields whose
/// amplitude product shapes the trace — the constraint is
/// `sqrt(I_ref * I_sig)` and no propagation distance is involved, so the
/// result carries phases but no phase constant.
pub fn phase_difference_retrieval(
    visibility: &VisibilityTrace,
    reference: &Spectrum,
    signal: &Spectrum,
    config: &RetrievalConfig,
) -> Result<RetrievalResult> {
    config.validate()?;
    if reference.grid() != signal.grid() {
        return Err(Error::GridMismatch(
            "reference and signal spectra must share one frequency grid".into(),
        ));
    }
    let product: Vec<f64> = reference
        .intensity()
        .iter()
        .zip(signal.intensity())
        .map(|(&a, &b)| (a * b).sqrt())
        .collect();
    let effective = Spectrum::new(*reference.grid(), product)?;
    let engine = Engine::new(visibility, &effective)?;
    // Distance is a pure bookkeeping scale here; the Taylor candidate basis
    // folds it into the coefficients.
    run(engine, config, 1.0, false, &mut |_| {})
}

fn run(
    engine: Engine,
    config: &RetrievalConfig,
    distance_km: f64,
    report_beta: bool,
    sink: &mut dyn FnMut(IterationRecord),
) -> Result<RetrievalResult> {
    let mut driver = Driver::new(engine, config, distance_km);
    let (reason, converged) = match config.algorithm {
        Algorithm::Composite => driver.run_composite(sink),
        single => driver.run_single(single, sink),
    };
    driver.into_result(reason, converged, report_beta)
}

/// Taylor model the coefficient descent adjusts: the coefficients proper
/// plus a constant and linear term that absorb the unobservable gauge
/// (global phase and trace position).
#[derive(Debug, Clone)]
struct CoeffModel {
    gauge: f64,
    slope: f64,
    /// `coeffs[k]` is the Taylor coefficient of order `k + 2`.
    coeffs: Vec<f64>,
}

impl CoeffModel {
    /// Phase without the constant term: `slope * x + taylor(x)`.
    fn rest_phases(&self, offsets: &[f64], distance_km: f64) -> Vec<f64> {
        let mut rest = taylor_candidate_phase(offsets, &self.coeffs, distance_km);
        for (r, &x) in rest.iter_mut().zip(offsets) {
            *r += self.slope * x;
        }
        rest
    }

    fn phases(&self, offsets: &[f64], distance_km: f64) -> Vec<f64> {
        let mut rest = self.rest_phases(offsets, distance_km);
        for r in rest.iter_mut() {
            *r += self.gauge;
        }
        rest
    }
}

#[derive(Clone)]
struct Snapshot {
    iterate: SpectralTrace,
    transformed: DelayTrace,
    error: f64,
    model: Option<CoeffModel>,
}

enum StageEnd {
    Tolerance,
    Stalled,
    Budget,
}

struct Driver<'a> {
    engine: Engine,
    config: &'a RetrievalConfig,
    distance_km: f64,
    offsets: Vec<f64>,
    iterate: SpectralTrace,
    transformed: DelayTrace,
    error: f64,
    model: Option<CoeffModel>,
    best: Snapshot,
    history: Vec<f64>,
    stages: Vec<StageRecord>,
    phase_step: f64,
    coeff_step: f64,
}

impl<'a> Driver<'a> {
    fn new(engine: Engine, config: &'a RetrievalConfig, distance_km: f64) -> Self {
        let freq = *engine.frequency_grid();
        let n = freq.len();
        let phases: Vec<f64> = match &config.initial_guess {
            InitialGuess::ZeroPhase => vec![0.0; n],
            InitialGuess::RandomPhase { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..n).map(|_| rng.gen_range(-PI..PI)).collect()
            }
            InitialGuess::TaylorSeed { coefficients } => {
                let taylor = TaylorCoefficients {
                    center: freq.center(),
                    coefficients: coefficients.clone(),
                };
                (0..n)
                    .map(|i| -distance_km * taylor.evaluate(freq.angular_frequency(i)))
                    .collect()
            }
        };
        let iterate = engine.initial_iterate(&phases);
        let transformed = engine.forward(&iterate);
        let error = engine.error(&transformed);
        let best = Snapshot {
            iterate: iterate.clone(),
            transformed: transformed.clone(),
            error,
            model: None,
        };
        Self {
            engine,
            config,
            distance_km,
            offsets: freq.offsets(),
            iterate,
            transformed,
            error,
            model: None,
            best,
            history: vec![error],
            stages: Vec::new(),
            phase_step: config.line_search.initial_step,
            coeff_step: config.line_search.initial_step,
        }
    }

    fn record(&mut self, algorithm: Algorithm, sink: &mut dyn FnMut(IterationRecord)) {
        self.history.push(self.error);
        sink(IterationRecord {
            iteration: self.history.len() - 1,
            error: self.error,
            algorithm,
        });
        if self.error < self.best.error {
            self.best = Snapshot {
                iterate: self.iterate.clone(),
                transformed: self.transformed.clone(),
                error: self.error,
                model: self.model.clone(),
            };
        }
    }

    fn refresh(&mut self) {
        self.transformed = self.engine.forward(&self.iterate);
        self.error = self.engine.error(&self.transformed);
    }

    fn gs_step(&mut self) {
        let constrained = self.engine.fourier_project(&self.transformed);
        let g_prime = self.engine.inverse(&constrained);
        self.iterate = self.engine.spectral_project(&g_prime);
        self.refresh();
    }

    /// One phase-variable descent step; `true` means the line search found
    /// no improving step.
    fn gp_phase_step(&mut self) -> bool {
        let constrained = self.engine.fourier_project(&self.transformed);
        let g_prime = self.engine.inverse(&constrained);
        let gpv = g_prime.values();
        let constraint = self.engine.constraint();
        let phases = self.iterate.phases();
        let grad: Vec<f64> = gpv
            .iter()
            .zip(constraint)
            .zip(&phases)
            .map(|((g, &s), &p)| 2.0 * g.norm() * s * (p - g.arg()).sin())
            .collect();
        let z0 = projection_distance_unchecked(gpv, constraint, &phases);
        let objective = |alpha: f64| {
            gpv.iter()
                .zip(constraint)
                .zip(&phases)
                .zip(&grad)
                .map(|(((g, &s), &p), &d)| {
                    (Complex64::from_polar(s, p - alpha * d) - g).norm_sqr()
                })
                .sum::<f64>()
        };
        match line_search(objective, z0, self.phase_step, &self.config.line_search) {
            Some((alpha, _)) => {
                self.phase_step = alpha;
                let new_phases: Vec<f64> =
                    phases.iter().zip(&grad).map(|(p, d)| p - alpha * d).collect();
                self.iterate = self.engine.iterate_with_phases(&new_phases);
                self.refresh();
                false
            }
            None => true,
        }
    }

    /// Delay centroid of the target trace — where a linear spectral phase
    /// would have to place the model trace to line up with the data.
    fn centroid_slope(&self) -> f64 {
        let target = self.engine.target();
        let delay = self.engine.delay_grid();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &t) in target.iter().enumerate() {
            let w = t * t;
            num += w * delay.delay(i);
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Seeds the Taylor model at coefficient-stage entry. Candidates: a
    /// weighted least-squares fit to the current iterate's unwrapped phase,
    /// the same fit with the linear term re-aligned to the trace centroid,
    /// and a blank centroid-aligned model; the one whose trace matches the
    /// target best wins.
    fn init_coeff_model(&mut self) {
        let n_coeffs = self.config.gp_coeff_order - 1;
        let z = self.distance_km;
        let wrapped = self.iterate.phases();
        let unwrapped = unwrap_from(&wrapped, wrapped.len() / 2);

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n_coeffs + 2);
        basis.push(vec![1.0; self.offsets.len()]);
        basis.push(self.offsets.clone());
        for k in 0..n_coeffs {
            let j = k + 2;
            let fact: f64 = (1..=j).map(|m| m as f64).product();
            basis.push(self.offsets.iter().map(|&x| x.powi(j as i32) / fact).collect());
        }
        let fitted = weighted_fit(&basis, &unwrapped, self.engine.constraint());

        let centroid = self.centroid_slope();
        let mut candidates: Vec<CoeffModel> = Vec::with_capacity(3);
        if let Some(a) = fitted {
            let fit_model = CoeffModel {
                gauge: a[0],
                slope: a[1],
                coeffs: a[2..].iter().map(|&v| -v / z).collect(),
            };
            let mut recentred = fit_model.clone();
            recentred.slope = centroid;
            candidates.push(fit_model);
            candidates.push(recentred);
        }
        candidates.push(CoeffModel {
            gauge: 0.0,
            slope: centroid,
            coeffs: vec![0.0; n_coeffs],
        });

        let mut best: Option<(f64, CoeffModel, SpectralTrace, DelayTrace)> = None;
        for model in candidates {
            let phases = model.phases(&self.offsets, z);
            let iterate = self.engine.iterate_with_phases(&phases);
            let transformed = self.engine.forward(&iterate);
            let error = self.engine.error(&transformed);
            if best.as_ref().map_or(true, |(e, ..)| error < *e) {
                best = Some((error, model, iterate, transformed));
            }
        }
        let (error, model, iterate, transformed) = best.expect("candidate list is never empty");
        self.model = Some(model);
        self.iterate = iterate;
        self.transformed = transformed;
        self.error = error;
        self.coeff_step = self.config.line_search.initial_step;
    }

    /// One coefficient-descent step; `true` means the line search failed.
    fn gp_coeff_step(&mut self) -> bool {
        let model = self.model.clone().expect("coefficient stage seeds the model first");
        let z = self.distance_km;
        let constrained = self.engine.fourier_project(&self.transformed);
        let g_prime = self.engine.inverse(&constrained);
        let gpv = g_prime.values();
        let constraint = self.engine.constraint();
        let offsets = &self.offsets;

        let rest = model.rest_phases(offsets, z);
        // Optimal constant term in closed form: the phase of
        // sum_i I_i g'_i exp(-i rest_i).
        let mut acc = Complex64::new(0.0, 0.0);
        for ((g, &s), &r) in gpv.iter().zip(constraint).zip(&rest) {
            acc += s * g * Complex64::from_polar(1.0, -r);
        }
        let gauge = if acc.norm() > 0.0 { acc.arg() } else { model.gauge };
        let phases: Vec<f64> = rest.iter().map(|r| gauge + r).collect();

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(model.coeffs.len() + 1);
        basis.push(offsets.clone());
        for k in 0..model.coeffs.len() {
            let j = k + 2;
            let fact: f64 = (1..=j).map(|m| m as f64).product();
            basis.push(offsets.iter().map(|&x| -z * x.powi(j as i32) / fact).collect());
        }
        let grad = coeff_gradient_with_basis(gpv, constraint, &phases, &basis);
        let denom = 4.0 * constraint.iter().sum::<f64>();
        let z0 = projection_distance_unchecked(gpv, constraint, &phases) / denom;

        let objective = |alpha: f64| {
            let slope = model.slope - alpha * grad[0];
            let coeffs: Vec<f64> = model
                .coeffs
                .iter()
                .zip(&grad[1..])
                .map(|(c, d)| c - alpha * d)
                .collect();
            let poly = taylor_candidate_phase(offsets, &coeffs, z);
            gpv.iter()
                .zip(constraint)
                .zip(offsets)
                .zip(&poly)
                .map(|(((g, &s), &x), &p)| {
                    (Complex64::from_polar(s, gauge + slope * x + p) - g).norm_sqr()
                })
                .sum::<f64>()
                / denom
        };
        match line_search(objective, z0, self.coeff_step, &self.config.line_search) {
            Some((alpha, _)) => {
                self.coeff_step = alpha;
                let updated = CoeffModel {
                    gauge,
                    slope: model.slope - alpha * grad[0],
                    coeffs: model
                        .coeffs
                        .iter()
                        .zip(&grad[1..])
                        .map(|(c, d)| c - alpha * d)
                        .collect(),
                };
                let new_phases = updated.phases(offsets, z);
                self.iterate = self.engine.iterate_with_phases(&new_phases);
                self.model = Some(updated);
                self.refresh();
                false
            }
            None => {
                if let Some(m) = &mut self.model {
                    m.gauge = gauge;
                }
                true
            }
        }
    }

    /// Runs one algorithm until tolerance, stall, or the iteration budget.
    fn run_stage(
        &mut self,
        algorithm: Algorithm,
        budget: usize,
        sink: &mut dyn FnMut(IterationRecord),
    ) -> (usize, StageEnd) {
        let entry_error = self.error;
        let tolerance = self.config.error_tolerance;
        let mut done = 0usize;
        let mut slow = 0usize;
        let mut end = StageEnd::Budget;

        if algorithm == Algorithm::GpCoeff && budget > 0 {
            // Seeding the model replaces the iterate, so it counts as an
            // iteration of its own.
            self.init_coeff_model();
            done += 1;
            self.record(algorithm, sink);
            if self.error <= tolerance {
                end = StageEnd::Tolerance;
            }
        }

        while done < budget && !matches!(end, StageEnd::Tolerance) {
            let previous = self.error;
            let failed = match algorithm {
                Algorithm::Gs => {
                    self.gs_step();
                    false
                }
                Algorithm::GpPhase => self.gp_phase_step(),
                Algorithm::GpCoeff => self.gp_coeff_step(),
                Algorithm::Composite => unreachable!("composite dispatches concrete stages"),
            };
            done += 1;
            self.record(algorithm, sink);
            if self.error <= tolerance {
                end = StageEnd::Tolerance;
                break;
            }
            if failed {
                end = StageEnd::Stalled;
                break;
            }
            let relative = (previous - self.error) / previous.max(f64::MIN_POSITIVE);
            if relative < self.config.stall_tolerance {
                slow += 1;
                if slow >= STALL_WINDOW {
                    end = StageEnd::Stalled;
                    break;
                }
            } else {
                slow = 0;
            }
        }

        self.stages.push(StageRecord {
            algorithm,
            iterations: done,
            initial_error: entry_error,
            final_error: self.error,
        });
        (done, end)
    }

    fn run_single(
        &mut self,
        algorithm: Algorithm,
        sink: &mut dyn FnMut(IterationRecord),
    ) -> (StopReason, bool) {
        if self.error <= self.config.error_tolerance {
            return (StopReason::ToleranceMet, true);
        }
        let (_, end) = self.run_stage(algorithm, self.config.max_iterations, sink);
        match end {
            StageEnd::Tolerance => (StopReason::ToleranceMet, true),
            StageEnd::Stalled => (StopReason::Stalled, false),
            StageEnd::Budget => (StopReason::MaxIterations, false),
        }
    }

    fn run_composite(&mut self, sink: &mut dyn FnMut(IterationRecord)) -> (StopReason, bool) {
        if self.error <= self.config.error_tolerance {
            return (StopReason::ToleranceMet, true);
        }
        let mut used = 0usize;
        let mut stagnant = 0usize;
        let mut algorithm = Algorithm::Gs;
        while used < self.config.max_iterations {
            let best_before = self.best.error;
            let budget = self.config.max_iterations - used;
            let (done, end) = self.run_stage(algorithm, budget, sink);
            used += done;
            match end {
                StageEnd::Tolerance => return (StopReason::ToleranceMet, true),
                StageEnd::Budget => break,
                StageEnd::Stalled => {}
            }
            if self.best.error <= best_before * (1.0 - self.config.stall_tolerance) {
                stagnant = 0;
            } else {
                stagnant += 1;
                if stagnant >= STAGNANT_STAGE_LIMIT {
                    return (StopReason::Stalled, false);
                }
            }
            algorithm = match algorithm {
                Algorithm::Gs => Algorithm::GpCoeff,
                _ => Algorithm::Gs,
            };
        }
        (StopReason::MaxIterations, false)
    }

    fn into_result(
        self,
        reason: StopReason,
        converged: bool,
        report_beta: bool,
    ) -> Result<RetrievalResult> {
        let Snapshot {
            iterate,
            transformed,
            error,
            model,
        } = self.best;
        let rescale = self.engine.rescale();
        let recovered: Vec<f64> = transformed
            .values()
            .iter()
            .map(|g| g.norm_sqr() / rescale)
            .collect();
        let recovered_visibility =
            VisibilityTrace::new(*self.engine.delay_grid(), recovered)?;

        let (beta, taylor_estimate) = if report_beta {
            let wrapped = iterate.phases();
            let mid = wrapped.len() / 2;
            let unwrapped = unwrap_from(&wrapped, mid);
            let samples: Vec<f64> =
                unwrapped.iter().map(|p| -p / self.distance_km).collect();
            let beta =
                PhaseConstant::from_samples(*self.engine.frequency_grid(), samples)?;
            let taylor = if self.config.algorithm == Algorithm::GpCoeff {
                model.map(|m| {
                    let mut coefficients =
                        vec![-m.gauge / self.distance_km, -m.slope / self.distance_km];
                    coefficients.extend_from_slice(&m.coeffs);
                    TaylorCoefficients {
                        center: self.engine.frequency_grid().center(),
                        coefficients,
                    }
                })
            } else {
                None
            };
            (Some(beta), taylor)
        } else {
            (None, None)
        };

        Ok(RetrievalResult {
            iterate,
            recovered_visibility,
            beta,
            taylor_estimate,
            error_history: self.history.clone(),
            iterations: self.history.len() - 1,
            initial_error: self.history[0],
            final_error: error,
            converged,
            reason,
            stages: self.stages,
        })
    }
}
