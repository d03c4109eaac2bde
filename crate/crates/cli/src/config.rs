//! Flat `key = value` scenario configuration files.
//!
//! One scenario per file. Keys are dotted paths (`medium.beta2 = 4.0`),
//! `#` starts a comment, and blank lines are ignored. Duplicate and unknown
//! keys are hard errors so typos fail loudly, and every diagnostic names
//! the offending key.
//!
//! Input file paths (`source.file`, `medium.file`) resolve relative to the
//! configuration file's directory; `outputs.dir` resolves relative to the
//! working directory so runs land next to where the tool was invoked.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use homret_core::io::parse_statistics;
use homret_core::retrieval::{Algorithm, InitialGuess, RetrievalConfig};
use homret_core::visibility::PhotonStatistics;

/// A configuration problem; the message carries the key path and reason.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(message.into()))
}

/// Raw `key = value` pairs in file order, before typed validation.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: Vec<(String, String)>,
}

impl RawConfig {
    /// Parses the text of a configuration file. Syntax and duplicate-key
    /// errors are reported with line numbers.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (index, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!(
                    "line {}: expected 'key = value', got '{}'",
                    index + 1,
                    line
                ));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return err(format!("line {}: empty key", index + 1));
            }
            if value.is_empty() {
                return err(format!("line {}: key '{key}' has no value", index + 1));
            }
            if entries.iter().any(|(k, _)| *k == key) {
                return err(format!("line {}: duplicate key '{key}'", index + 1));
            }
            entries.push((key, value));
        }
        Ok(Self { entries })
    }

    /// Replaces the value of `key`, or appends the pair if absent — used for
    /// command-line overrides before validation.
    pub fn set(&mut self, key: &str, value: String) {
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some((_, v)) => *v = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Effective key-value pairs in file order, for run-record snapshots.
    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

/// Tracks which keys validation consumed so leftovers can be rejected.
struct Reader<'a> {
    raw: &'a RawConfig,
    consumed: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn new(raw: &'a RawConfig) -> Self {
        Self { raw, consumed: BTreeSet::new() }
    }

    fn take(&mut self, key: &str) -> Option<&'a str> {
        self.consumed.insert(key.to_string());
        self.raw.get(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(text) => match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => err(format!("{key}: expected a finite number, got '{text}'")),
            },
        }
    }

    fn require_f64(&mut self, key: &str, why: &str) -> Result<f64, ConfigError> {
        self.take_f64(key)?
            .map_or_else(|| err(format!("{key}: required {why}")), Ok)
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(text) => text
                .parse::<usize>()
                .map(Some)
                .map_err(|_| ConfigError(format!("{key}: expected a non-negative integer, got '{text}'"))),
        }
    }

    fn take_u64(&mut self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(text) => text
                .parse::<u64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("{key}: expected an unsigned integer, got '{text}'"))),
        }
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some("true") => Ok(Some(true)),
            Some("false") => Ok(Some(false)),
            Some(text) => err(format!("{key}: expected true or false, got '{text}'")),
        }
    }

    fn take_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(text) => {
                let mut values = Vec::new();
                for token in text.split_whitespace() {
                    match token.parse::<f64>() {
                        Ok(v) if v.is_finite() => values.push(v),
                        _ => {
                            return err(format!(
                                "{key}: expected whitespace-separated numbers, got '{token}'"
                            ))
                        }
                    }
                }
                Ok(Some(values))
            }
        }
    }

    /// Errors on every key that no validation rule consumed.
    fn finish(self) -> Result<(), ConfigError> {
        for (key, _) in self.raw.entries() {
            if !self.consumed.contains(key) {
                return err(format!("unknown configuration key '{key}'"));
            }
        }
        Ok(())
    }
}

/// Source spectrum description.
#[derive(Debug, Clone)]
pub enum SourceSpec {
    /// Gaussian line: FWHM `width_nm` centered at `center_nm`.
    Gaussian { center_nm: f64, width_nm: f64 },
    /// Hermite-Gaussian line of the given order and width scale.
    HermiteGaussian { order: usize, center_nm: f64, width_nm: f64 },
    /// Spectrum read from a trace file (defines the frequency grid).
    File { path: PathBuf },
}

/// Dispersive medium description.
#[derive(Debug, Clone)]
pub enum MediumSpec {
    /// Taylor phase constant: `coefficients[j]` is `beta_j` in ps^j/km.
    Taylor { coefficients: Vec<f64> },
    /// Cosine phase constant `A cos(2 pi x / P + offset)` in rad/km.
    Cosine { amplitude: f64, period: f64, phase_offset: f64 },
    /// Phase-constant samples read from a trace file (grid must match).
    File { path: PathBuf },
}

/// Sampling grid description (derived from the file for file sources).
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub n_points: usize,
    pub spacing_thz: f64,
}

/// Joint-spectral-phase sweep description. The signal phase of the slice at
/// idler offset `d` (rad/ps from the grid center) is
/// `quadratic * x^2 / 2 + cubic * x^3 + cross * d * x` over the frequency
/// offset `x`, and its spectrum is a Gaussian displaced by `-d` when
/// `displace_signal` is set.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub idler_offsets: Vec<f64>,
    pub mean_photon_number: f64,
    pub reference_chirp: f64,
    pub signal_width_nm: Option<f64>,
    pub displace_signal: bool,
    pub quadratic: f64,
    pub cubic: f64,
    pub cross: f64,
}

/// A fully validated scenario: what to simulate, how to retrieve, where to
/// write. `raw` keeps the effective key-value pairs for run records.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub source: SourceSpec,
    pub grid: Option<GridSpec>,
    pub medium: Option<MediumSpec>,
    pub distance_km: Option<f64>,
    pub statistics: PhotonStatistics,
    pub retrieval: RetrievalConfig,
    pub sweep: Option<SweepSpec>,
    pub outputs_dir: PathBuf,
    pub raw: RawConfig,
}

/// Resolves `path` against the configuration file's directory and checks it
/// exists now rather than mid-run.
fn input_file(key: &str, value: &str, config_dir: &Path) -> Result<PathBuf, ConfigError> {
    let candidate = config_dir.join(value);
    if !candidate.is_file() {
        return err(format!("{key}: file '{}' does not exist", candidate.display()));
    }
    Ok(candidate)
}

fn parse_source(reader: &mut Reader<'_>, config_dir: &Path) -> Result<SourceSpec, ConfigError> {
    let kind = reader
        .take("source.kind")
        .map(str::to_string)
        .ok_or_else(|| ConfigError("source.kind: required (gaussian, hermite-gaussian, or file)".into()))?;
    let source = match kind.as_str() {
        "gaussian" => SourceSpec::Gaussian {
            center_nm: reader.require_f64("source.center_nm", "for a gaussian source")?,
            width_nm: reader.require_f64("source.width_nm", "for a gaussian source")?,
        },
        "hermite-gaussian" => SourceSpec::HermiteGaussian {
            order: reader
                .take_usize("source.order")?
                .ok_or_else(|| ConfigError("source.order: required for a hermite-gaussian source".into()))?,
            center_nm: reader.require_f64("source.center_nm", "for a hermite-gaussian source")?,
            width_nm: reader.require_f64("source.width_nm", "for a hermite-gaussian source")?,
        },
        "file" => {
            let value = reader
                .take("source.file")
                .map(str::to_string)
                .ok_or_else(|| ConfigError("source.file: required for a file source".into()))?;
            SourceSpec::File { path: input_file("source.file", &value, config_dir)? }
        }
        other => {
            return err(format!(
                "source.kind: expected gaussian, hermite-gaussian, or file, got '{other}'"
            ))
        }
    };
    match &source {
        SourceSpec::Gaussian { center_nm, width_nm }
        | SourceSpec::HermiteGaussian { center_nm, width_nm, .. } => {
            if *center_nm <= 0.0 {
                return err(format!("source.center_nm: must be positive, got {center_nm}"));
            }
            if *width_nm <= 0.0 {
                return err(format!("source.width_nm: must be positive, got {width_nm}"));
            }
        }
        SourceSpec::File { .. } => {}
    }
    Ok(source)
}

fn parse_medium(
    reader: &mut Reader<'_>,
    config_dir: &Path,
) -> Result<(Option<MediumSpec>, Option<f64>), ConfigError> {
    let Some(kind) = reader.take("medium.kind").map(str::to_string) else {
        return Ok((None, None));
    };
    let medium = match kind.as_str() {
        "taylor" => {
            let mut coefficients = vec![0.0; 4];
            for (j, slot) in coefficients.iter_mut().enumerate() {
                if let Some(v) = reader.take_f64(&format!("medium.beta{j}"))? {
                    *slot = v;
                }
            }
            MediumSpec::Taylor { coefficients }
        }
        "cosine" => {
            let amplitude = reader.require_f64("medium.amplitude", "for a cosine medium")?;
            let period = reader.require_f64("medium.period", "for a cosine medium")?;
            if period <= 0.0 {
                return err(format!("medium.period: must be positive, got {period}"));
            }
            MediumSpec::Cosine {
                amplitude,
                period,
                phase_offset: reader.take_f64("medium.phase_offset")?.unwrap_or(0.0),
            }
        }
        "file" => {
            let value = reader
                .take("medium.file")
                .map(str::to_string)
                .ok_or_else(|| ConfigError("medium.file: required for a file medium".into()))?;
            MediumSpec::File { path: input_file("medium.file", &value, config_dir)? }
        }
        other => {
            return err(format!(
                "medium.kind: expected taylor, cosine, or file, got '{other}'"
            ))
        }
    };
    let distance = reader.require_f64("medium.distance_km", "when a medium is configured")?;
    if distance <= 0.0 {
        return err(format!("medium.distance_km: must be positive, got {distance}"));
    }
    Ok((Some(medium), Some(distance)))
}

fn parse_grid(reader: &mut Reader<'_>, source: &SourceSpec) -> Result<Option<GridSpec>, ConfigError> {
    let n_points = reader.take_usize("grid.n_points")?;
    let spacing_thz = reader.take_f64("grid.spacing_thz")?;
    match (n_points, spacing_thz) {
        (Some(n_points), Some(spacing_thz)) => {
            if n_points < 8 {
                return err(format!("grid.n_points: need at least 8 points, got {n_points}"));
            }
            if spacing_thz <= 0.0 {
                return err(format!("grid.spacing_thz: must be positive, got {spacing_thz}"));
            }
            Ok(Some(GridSpec { n_points, spacing_thz }))
        }
        (None, None) => {
            if matches!(source, SourceSpec::File { .. }) {
                Ok(None) // the source file's header defines the grid
            } else {
                err("grid.n_points, grid.spacing_thz: required for synthesized sources")
            }
        }
        (Some(_), None) => err("grid.spacing_thz: required when grid.n_points is set"),
        (None, Some(_)) => err("grid.n_points: required when grid.spacing_thz is set"),
    }
}

fn parse_retrieval(reader: &mut Reader<'_>) -> Result<RetrievalConfig, ConfigError> {
    let mut config = RetrievalConfig::default();
    if let Some(name) = reader.take("retrieval.algorithm") {
        config.algorithm = Algorithm::from_str(name).map_err(|e| {
            ConfigError(format!("retrieval.algorithm: {e}"))
        })?;
    }
    if let Some(v) = reader.take_usize("retrieval.max_iterations")? {
        config.max_iterations = v;
    }
    if let Some(v) = reader.take_f64("retrieval.error_tolerance")? {
        config.error_tolerance = v;
    }
    if let Some(v) = reader.take_f64("retrieval.stall_tolerance")? {
        config.stall_tolerance = v;
    }
    if let Some(v) = reader.take_usize("retrieval.gp_coeff_order")? {
        config.gp_coeff_order = v;
    }
    let guess = reader.take("retrieval.initial_guess").map(str::to_string);
    let seed = reader.take_u64("retrieval.seed")?;
    let taylor_seed = reader.take_f64_list("retrieval.taylor_seed")?;
    config.initial_guess = match guess.as_deref() {
        None | Some("zero-phase") => {
            if seed.is_some() {
                return err("retrieval.seed: only valid with retrieval.initial_guess = random-phase");
            }
            if taylor_seed.is_some() {
                return err(
                    "retrieval.taylor_seed: only valid with retrieval.initial_guess = taylor-seed",
                );
            }
            InitialGuess::ZeroPhase
        }
        Some("random-phase") => InitialGuess::RandomPhase {
            seed: seed.ok_or_else(|| {
                ConfigError("retrieval.seed: required for a random-phase initial guess".into())
            })?,
        },
        Some("taylor-seed") => InitialGuess::TaylorSeed {
            coefficients: match taylor_seed {
                Some(c) if !c.is_empty() => c,
                _ => {
                    return err(
                        "retrieval.taylor_seed: required (list of beta_j) for a taylor-seed initial guess",
                    )
                }
            },
        },
        Some(other) => {
            return err(format!(
                "retrieval.initial_guess: expected zero-phase, random-phase, or taylor-seed, got '{other}'"
            ))
        }
    };
    config
        .validate()
        .map_err(|e| ConfigError(format!("retrieval: {e}")))?;
    Ok(config)
}

fn parse_sweep(reader: &mut Reader<'_>) -> Result<Option<SweepSpec>, ConfigError> {
    let idler_offsets = reader.take_f64_list("sweep.idler_offsets")?;
    let mean_photon_number = reader.take_f64("sweep.mean_photon_number")?;
    let reference_chirp = reader.take_f64("sweep.reference_chirp")?;
    let signal_width_nm = reader.take_f64("sweep.signal_width_nm")?;
    let displace_signal = reader.take_bool("sweep.displace_signal")?;
    let quadratic = reader.take_f64("sweep.quadratic")?;
    let cubic = reader.take_f64("sweep.cubic")?;
    let cross = reader.take_f64("sweep.cross")?;

    let Some(idler_offsets) = idler_offsets else {
        let stray = [
            mean_photon_number.is_some(),
            reference_chirp.is_some(),
            signal_width_nm.is_some(),
            displace_signal.is_some(),
            quadratic.is_some(),
            cubic.is_some(),
            cross.is_some(),
        ];
        if stray.iter().any(|&s| s) {
            return err("sweep.idler_offsets: required when other sweep.* keys are set");
        }
        return Ok(None);
    };
    if idler_offsets.is_empty() {
        return err("sweep.idler_offsets: needs at least one idler offset");
    }
    let mean_photon_number = mean_photon_number.unwrap_or(0.0);
    if mean_photon_number < 0.0 {
        return err(format!(
            "sweep.mean_photon_number: must be non-negative, got {mean_photon_number}"
        ));
    }
    if let Some(w) = signal_width_nm {
        if w <= 0.0 {
            return err(format!("sweep.signal_width_nm: must be positive, got {w}"));
        }
    }
    Ok(Some(SweepSpec {
        idler_offsets,
        mean_photon_number,
        reference_chirp: reference_chirp.unwrap_or(0.0),
        signal_width_nm,
        displace_signal: displace_signal.unwrap_or(true),
        quadratic: quadratic.unwrap_or(0.0),
        cubic: cubic.unwrap_or(0.0),
        cross: cross.unwrap_or(0.0),
    }))
}

impl ScenarioConfig {
    /// Validates raw key-value pairs into a scenario. `config_dir` anchors
    /// relative input paths.
    pub fn from_raw(raw: RawConfig, config_dir: &Path) -> Result<Self, ConfigError> {
        let mut reader = Reader::new(&raw);

        let source = parse_source(&mut reader, config_dir)?;
        let grid = parse_grid(&mut reader, &source)?;
        let (medium, distance_km) = parse_medium(&mut reader, config_dir)?;
        let statistics = match reader.take("statistics") {
            None => PhotonStatistics::SinglePhoton,
            Some(name) => parse_statistics(&name.replace('_', "-"))
                .map_err(|e| ConfigError(format!("statistics: {e}")))?,
        };
        let retrieval = parse_retrieval(&mut reader)?;
        let sweep = parse_sweep(&mut reader)?;
        let outputs_dir = reader
            .take("outputs.dir")
            .map(PathBuf::from)
            .ok_or_else(|| ConfigError("outputs.dir: required".into()))?;

        reader.finish()?;
        Ok(Self {
            source,
            grid,
            medium,
            distance_km,
            statistics,
            retrieval,
            sweep,
            outputs_dir,
            raw,
        })
    }
}
