//! Plain-text readers and writers for traces.
//!
//! Every file is two (or more) whitespace-separated columns preceded by
//! `#`-prefixed header lines. The header carries the grid metadata
//! (`key: value` pairs), so the first column is informational — readers
//! rebuild the grid from the header and only parse the value columns.
//! Values are written with 17 significant digits, which round-trips `f64`
//! exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::analysis::DerivativeProfile;
use crate::dispersion::PhaseConstant;
use crate::error::{Error, Result};
use crate::grid::{DelayGrid, FrequencyGrid};
use crate::jsp::JspMap;
use crate::retrieval::IterationRecord;
use crate::spectrum::Spectrum;
use crate::visibility::{CoincidenceTrace, PhotonStatistics, VisibilityTrace};

const FORMAT_TAG: &str = "homret trace v1";

fn parse_f64(value: &str, what: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("cannot parse {what} from '{value}'")))
}

fn parse_usize(value: &str, what: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Parse(format!("cannot parse {what} from '{value}'")))
}

struct Header {
    keys: Vec<(String, String)>,
}

impl Header {
    fn get(&self, key: &str) -> Result<&str> {
        self.keys
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse(format!("missing header field '{key}'")))
    }
}

/// Reads header comments and data columns; `want` is the expected number of
/// numeric columns per data line.
fn read_trace_file(path: &Path, want: usize) -> Result<(Header, Vec<Vec<f64>>)> {
    let file = File::open(path)?;
    let mut keys = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once(':') {
                keys.push((key.trim().to_string(), value.trim().to_string()));
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < want {
            return Err(Error::Parse(format!(
                "{}: line {}: expected {} columns, found {}",
                path.display(),
                line_no + 1,
                want,
                fields.len()
            )));
        }
        let mut row = Vec::with_capacity(want);
        for field in fields.iter().take(want) {
            row.push(parse_f64(field, "data value")?);
        }
        rows.push(row);
    }
    Ok((Header { keys }, rows))
}

fn check_kind(header: &Header, expected: &str) -> Result<()> {
    let kind = header.get("kind")?;
    if kind != expected {
        return Err(Error::Parse(format!(
            "file holds a '{kind}' trace, expected '{expected}'"
        )));
    }
    Ok(())
}

fn frequency_grid_from(header: &Header) -> Result<FrequencyGrid> {
    FrequencyGrid::new(
        parse_f64(header.get("center")?, "grid center")?,
        parse_f64(header.get("spacing")?, "grid spacing")?,
        parse_usize(header.get("points")?, "grid points")?,
    )
}

fn delay_grid_from(header: &Header) -> Result<DelayGrid> {
    DelayGrid::new(
        parse_f64(header.get("spacing")?, "grid spacing")?,
        parse_usize(header.get("points")?, "grid points")?,
        parse_f64(header.get("origin")?, "grid origin")?,
    )
}

fn check_count(rows: &[Vec<f64>], expected: usize) -> Result<()> {
    if rows.len() != expected {
        return Err(Error::Parse(format!(
            "header promises {expected} samples but the file holds {}",
            rows.len()
        )));
    }
    Ok(())
}

fn write_frequency_header(
    out: &mut impl Write,
    kind: &str,
    grid: &FrequencyGrid,
    columns: &str,
) -> Result<()> {
    writeln!(out, "# {FORMAT_TAG}")?;
    writeln!(out, "# kind: {kind}")?;
    writeln!(out, "# center: {:.16e}", grid.center())?;
    writeln!(out, "# spacing: {:.16e}", grid.spacing())?;
    writeln!(out, "# points: {}", grid.len())?;
    writeln!(out, "# columns: {columns}")?;
    Ok(())
}

fn write_delay_header(
    out: &mut impl Write,
    kind: &str,
    grid: &DelayGrid,
    columns: &str,
) -> Result<()> {
    writeln!(out, "# {FORMAT_TAG}")?;
    writeln!(out, "# kind: {kind}")?;
    writeln!(out, "# origin: {:.16e}", grid.origin())?;
    writeln!(out, "# spacing: {:.16e}", grid.spacing())?;
    writeln!(out, "# points: {}", grid.len())?;
    writeln!(out, "# columns: {columns}")?;
    Ok(())
}

/// Writes a spectrum as `angular_frequency intensity` rows.
pub fn write_spectrum(path: &Path, spectrum: &Spectrum) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let grid = spectrum.grid();
    write_frequency_header(
        &mut out,
        "spectrum",
        grid,
        "angular_frequency_rad_per_ps intensity",
    )?;
    for (i, &v) in spectrum.intensity().iter().enumerate() {
        writeln!(out, "{:.16e} {:.16e}", grid.angular_frequency(i), v)?;
    }
    Ok(())
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let (header, rows) = read_trace_file(path, 2)?;
    check_kind(&header, "spectrum")?;
    let grid = frequency_grid_from(&header)?;
    check_count(&rows, grid.len())?;
    Spectrum::new(grid, rows.into_iter().map(|r| r[1]).collect())
}

/// Writes a sampled phase constant as `angular_frequency beta` rows. The
/// Taylor view, when the profile has one, is recorded as a comment only.
pub fn write_phase_constant(path: &Path, beta: &PhaseConstant) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let grid = beta.grid();
    write_frequency_header(
        &mut out,
        "phase-constant",
        grid,
        "angular_frequency_rad_per_ps beta_rad_per_km",
    )?;
    if let Some(taylor) = beta.taylor() {
        let rendered: Vec<String> =
            taylor.coefficients.iter().map(|c| format!("{c:.16e}")).collect();
        writeln!(out, "# taylor: {}", rendered.join(" "))?;
    }
    for (i, &v) in beta.values().iter().enumerate() {
        writeln!(out, "{:.16e} {:.16e}", grid.angular_frequency(i), v)?;
    }
    Ok(())
}

/// Reads a sampled phase constant; any Taylor comment is ignored, so the
/// result carries samples only.
pub fn read_phase_constant(path: &Path) -> Result<PhaseConstant> {
    let (header, rows) = read_trace_file(path, 2)?;
    check_kind(&header, "phase-constant")?;
    let grid = frequency_grid_from(&header)?;
    check_count(&rows, grid.len())?;
    PhaseConstant::from_samples(grid, rows.into_iter().map(|r| r[1]).collect())
}

/// Writes a visibility trace as `delay visibility` rows.
pub fn write_visibility(path: &Path, trace: &VisibilityTrace) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let grid = trace.grid();
    write_delay_header(&mut out, "visibility", grid, "delay_ps visibility")?;
    for (i, &v) in trace.values().iter().enumerate() {
        writeln!(out, "{:.16e} {:.16e}", grid.delay(i), v)?;
    }
    Ok(())
}

pub fn read_visibility(path: &Path) -> Result<VisibilityTrace> {
    let (header, rows) = read_trace_file(path, 2)?;
    check_kind(&header, "visibility")?;
    let grid = delay_grid_from(&header)?;
    check_count(&rows, grid.len())?;
    VisibilityTrace::new(grid, rows.into_iter().map(|r| r[1]).collect())
}

/// Canonical text name of a photon-statistics variant.
pub fn statistics_name(statistics: PhotonStatistics) -> &'static str {
    match statistics {
        PhotonStatistics::SinglePhoton => "single-photon",
        PhotonStatistics::Coherent => "coherent",
        PhotonStatistics::Thermal => "thermal",
    }
}

/// Inverse of [`statistics_name`].
pub fn parse_statistics(name: &str) -> Result<PhotonStatistics> {
    match name {
        "single-photon" => Ok(PhotonStatistics::SinglePhoton),
        "coherent" => Ok(PhotonStatistics::Coherent),
        "thermal" => Ok(PhotonStatistics::Thermal),
        other => Err(Error::Parse(format!(
            "unknown photon statistics '{other}'; expected single-photon, coherent, or thermal"
        ))),
    }
}

/// Writes a normalized coincidence trace as `delay rate` rows; the photon
/// statistics ride along in the header.
pub fn write_coincidence(path: &Path, trace: &CoincidenceTrace) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let grid = trace.grid();
    write_delay_header(&mut out, "coincidence", grid, "delay_ps coincidence_rate")?;
    writeln!(out, "# statistics: {}", statistics_name(trace.statistics()))?;
    for (i, &v) in trace.values().iter().enumerate() {
        writeln!(out, "{:.16e} {:.16e}", grid.delay(i), v)?;
    }
    Ok(())
}

/// Reads a coincidence trace and converts it straight to visibility using
/// the statistics recorded in its header.
pub fn read_coincidence_as_visibility(path: &Path) -> Result<(VisibilityTrace, PhotonStatistics)> {
    let (header, rows) = read_trace_file(path, 2)?;
    check_kind(&header, "coincidence")?;
    let grid = delay_grid_from(&header)?;
    check_count(&rows, grid.len())?;
    let statistics = parse_statistics(header.get("statistics")?)?;
    let xi = statistics.dip_factor();
    let values: Vec<f64> = rows
        .into_iter()
        .map(|r| {
            let v = (1.0 - r[1]) / xi;
            if v < 0.0 && v > -1e-9 {
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok((VisibilityTrace::new(grid, values)?, statistics))
}

/// Reads any two-column `delay value` file with optional `#` comments —
/// the entry point for externally measured traces on arbitrary sampling.
/// Returns the two columns as-is.
pub fn read_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, rows) = read_trace_file(path, 2)?;
    if rows.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no data rows found",
            path.display()
        )));
    }
    Ok(rows.into_iter().map(|r| (r[0], r[1])).unzip())
}

/// Writes the per-iteration error log of a retrieval run.
pub fn write_convergence_log(
    path: &Path,
    initial_error: f64,
    records: &[IterationRecord],
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# {FORMAT_TAG}")?;
    writeln!(out, "# kind: convergence")?;
    writeln!(out, "# columns: iteration error algorithm")?;
    writeln!(out, "0 {initial_error:.16e} initial")?;
    for record in records {
        writeln!(out, "{} {:.16e} {}", record.iteration, record.error, record.algorithm)?;
    }
    Ok(())
}

/// Writes a dispersion-derivative profile (order 2 or 3) as
/// `angular_frequency value one_sided` rows; the one-sided flag marks
/// endpoint samples computed with lower-accuracy stencils.
pub fn write_derivative_profile(
    path: &Path,
    grid: &FrequencyGrid,
    profile: &DerivativeProfile,
    order: usize,
) -> Result<()> {
    if profile.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), actual: profile.len() });
    }
    let (kind, columns) = match order {
        2 => ("beta2-profile", "angular_frequency_rad_per_ps beta2_ps2_per_km one_sided"),
        3 => ("beta3-profile", "angular_frequency_rad_per_ps beta3_ps3_per_km one_sided"),
        other => {
            return Err(Error::OutOfRange(format!(
                "derivative profile order must be 2 or 3, got {other}"
            )))
        }
    };
    let mut out = BufWriter::new(File::create(path)?);
    write_frequency_header(&mut out, kind, grid, columns)?;
    for i in 0..grid.len() {
        writeln!(
            out,
            "{:.16e} {:.16e} {}",
            grid.angular_frequency(i),
            profile.values()[i],
            u8::from(profile.one_sided()[i])
        )?;
    }
    Ok(())
}

/// Writes a joint-spectral-phase map as one block per idler slice, rows of
/// `idler_frequency angular_frequency phase weight mask`, with blank lines
/// separating slices.
pub fn write_jsp_map(path: &Path, map: &JspMap) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let grid = map.grid();
    write_frequency_header(
        &mut out,
        "jsp-map",
        grid,
        "idler_rad_per_ps signal_rad_per_ps phase_rad weight mask",
    )?;
    writeln!(out, "# slices: {}", map.n_slices())?;
    for slice in 0..map.n_slices() {
        let idler = map.idler_frequencies()[slice];
        let phases = &map.phases()[slice];
        let weights = &map.weights()[slice];
        let mask = &map.mask()[slice];
        for i in 0..grid.len() {
            writeln!(
                out,
                "{:.16e} {:.16e} {:.16e} {:.16e} {}",
                idler,
                grid.angular_frequency(i),
                phases[i],
                weights[i],
                u8::from(mask[i])
            )?;
        }
        if slice + 1 < map.n_slices() {
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_conjugate_grids;
    use crate::spectrum::gaussian_spectrum;
    use crate::units::wavelength_to_angular_frequency;
    use crate::visibility::{coincidence_from_visibility, visibility};
    use crate::dispersion::taylor_phase_constant;
    use std::path::PathBuf;

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("homret-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    fn fixture() -> (Spectrum, PhaseConstant, VisibilityTrace) {
        let center = wavelength_to_angular_frequency(1533.0);
        let (freq, delay) =
            build_conjugate_grids(256, 0.01 * 2.0 * std::f64::consts::PI, center).unwrap();
        let spectrum = gaussian_spectrum(&freq, 1533.0, 1.0).unwrap();
        let beta = taylor_phase_constant(&freq, &[0.0, 0.0, 4.0, 0.06], center).unwrap();
        let trace = visibility(&spectrum, &beta, 3.7, &delay).unwrap();
        (spectrum, beta, trace)
    }

    #[test]
    fn spectrum_round_trips_to_machine_precision() {
        let (spectrum, _, _) = fixture();
        let path = scratch("spectrum.dat");
        write_spectrum(&path, &spectrum).unwrap();
        let back = read_spectrum(&path).unwrap();
        assert_eq!(back.grid(), spectrum.grid());
        // Reading re-normalizes the area, which may shift samples by an ulp.
        for (a, b) in back.intensity().iter().zip(spectrum.intensity()) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn phase_constant_round_trips_exactly() {
        let (_, beta, _) = fixture();
        let path = scratch("beta.dat");
        write_phase_constant(&path, &beta).unwrap();
        let back = read_phase_constant(&path).unwrap();
        assert_eq!(back.grid(), beta.grid());
        for (a, b) in back.values().iter().zip(beta.values()) {
            assert_eq!(a, b);
        }
        // Samples only: the Taylor view is not reconstructed.
        assert!(back.taylor().is_none());
    }

    #[test]
    fn visibility_round_trips_exactly() {
        let (_, _, trace) = fixture();
        let path = scratch("visibility.dat");
        write_visibility(&path, &trace).unwrap();
        let back = read_visibility(&path).unwrap();
        assert_eq!(back.grid(), trace.grid());
        for (a, b) in back.values().iter().zip(trace.values()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn coincidence_reads_back_as_the_same_visibility() {
        use crate::visibility::PhotonStatistics;
        let (_, _, trace) = fixture();
        let coincidence =
            coincidence_from_visibility(&trace, PhotonStatistics::Coherent).unwrap();
        let path = scratch("coincidence.dat");
        write_coincidence(&path, &coincidence).unwrap();
        let (back, statistics) = read_coincidence_as_visibility(&path).unwrap();
        assert_eq!(statistics, PhotonStatistics::Coherent);
        for (a, b) in back.values().iter().zip(trace.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn generic_columns_reader_accepts_comments_and_blanks() {
        let path = scratch("columns.dat");
        std::fs::write(&path, "# a comment\n\n0.5 1.0\n1.5 2.0\n# trailing\n2.5 0.25\n")
            .unwrap();
        let (x, y) = read_columns(&path).unwrap();
        assert_eq!(x, vec![0.5, 1.5, 2.5]);
        assert_eq!(y, vec![1.0, 2.0, 0.25]);
    }

    #[test]
    fn kind_mismatch_is_reported() {
        let (spectrum, _, _) = fixture();
        let path = scratch("kind.dat");
        write_spectrum(&path, &spectrum).unwrap();
        let err = read_visibility(&path).unwrap_err();
        assert!(matches!(err, Error::Parse(_)), "{err}");
    }

    #[test]
    fn truncated_file_is_reported() {
        let (spectrum, _, _) = fixture();
        let path = scratch("truncated.dat");
        write_spectrum(&path, &spectrum).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let shorter: String = text.lines().take(100).map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, shorter).unwrap();
        assert!(read_spectrum(&path).is_err());
    }
}
