//! Run records: one flat key-value file per invocation, written whether the
//! run succeeded or not, so a directory of runs is self-describing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use crate::config::RawConfig;
use crate::error::CliError;

/// Accumulates everything worth keeping about one command invocation:
/// the effective configuration, the artifacts written, and summary results.
pub struct RunRecord {
    command: &'static str,
    config: Vec<(String, String)>,
    artifacts: Vec<(String, String)>,
    results: Vec<(String, String)>,
}

impl RunRecord {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            config: Vec::new(),
            artifacts: Vec::new(),
            results: Vec::new(),
        }
    }

    /// Snapshots the effective configuration (after command-line overrides).
    pub fn set_config(&mut self, raw: &RawConfig) {
        self.config = raw.entries().to_vec();
    }

    pub fn artifact(&mut self, name: &str, path: &Path) {
        self.artifacts.push((name.to_string(), path.display().to_string()));
    }

    pub fn result(&mut self, key: &str, value: impl ToString) {
        self.results.push((key.to_string(), value.to_string()));
    }

    pub fn result_number(&mut self, key: &str, value: f64) {
        self.results.push((key.to_string(), format!("{value:.16e}")));
    }

    /// Writes the record. `outcome` is the run's final disposition; failures
    /// record their reason instead of pretending nothing ran.
    pub fn write(
        &self,
        path: &Path,
        outcome: &Result<(), CliError>,
        duration: Duration,
    ) -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# homret run record v1")?;
        writeln!(out, "command = {}", self.command)?;
        writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"))?;
        match outcome {
            Ok(()) => writeln!(out, "status = success")?,
            Err(CliError::Input(message)) => {
                writeln!(out, "status = input-error")?;
                writeln!(out, "error = {message}")?;
            }
            Err(CliError::NonConvergence(message)) => {
                writeln!(out, "status = non-convergence")?;
                writeln!(out, "error = {message}")?;
            }
        }
        writeln!(out, "duration_s = {:.3}", duration.as_secs_f64())?;
        for (key, value) in &self.config {
            writeln!(out, "config.{key} = {value}")?;
        }
        for (name, path) in &self.artifacts {
            writeln!(out, "artifact.{name} = {path}")?;
        }
        for (key, value) in &self.results {
            writeln!(out, "result.{key} = {value}")?;
        }
        Ok(())
    }
}
