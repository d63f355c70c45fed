//! Result envelope, CSV tables and file emission.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "homoclinic";

/// A CSV table; cells are formatted from payload values only.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Cell text for a number; empty for missing values.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Everything a subcommand produces.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub payload: Value,
    pub tables: Vec<Table>,
    /// `(file stem, svg text)`.
    pub plots: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ResultEnvelope<'a> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub wall_clock_seconds: f64,
    pub warnings: &'a [String],
    pub payload: &'a Value,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    /// `validation` or `numerical` (or `io`).
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
    pub detail: Value,
}

#[derive(Debug, Serialize)]
pub struct ErrorEnvelope<'a> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub error: ErrorBody,
}

pub fn error_json(command: &str, err: &CliError) -> String {
    let env = ErrorEnvelope {
        schema_version: SCHEMA_VERSION,
        tool: TOOL,
        version: env!("CARGO_PKG_VERSION"),
        command,
        error: ErrorBody { kind: err.kind(), exit_code: err.exit_code(), message: err.to_string(), detail: err.detail() },
    };
    serde_json::to_string_pretty(&env).unwrap_or_else(|_| "{}".into())
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Writes `<command>.json`, one CSV per table and one SVG per plot into `dir`.
pub fn emit(dir: &Path, command: &str, cfg: &RunConfig, art: &Artifacts, seconds: f64) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    if cfg.wants(Format::Json) {
        let env = ResultEnvelope {
            schema_version: SCHEMA_VERSION,
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: cfg,
            wall_clock_seconds: seconds,
            warnings: &art.warnings,
            payload: &art.payload,
        };
        let p = dir.join(format!("{command}.json"));
        let mut text = serde_json::to_string_pretty(&env).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        write(&p, &text)?;
        written.push(p);
    }
    if cfg.wants(Format::Csv) {
        for t in &art.tables {
            let p = dir.join(format!("{}.csv", t.name));
            write(&p, &t.to_csv()?)?;
            written.push(p);
        }
    }
    if cfg.wants(Format::Svg) {
        for (name, svg) in &art.plots {
            let p = dir.join(format!("{name}.svg"));
            write(&p, svg)?;
            written.push(p);
        }
    }
    Ok(written)
}

pub fn write_error(dir: &Path, text: &str) {
    if std::fs::create_dir_all(dir).is_ok() {
        let _ = std::fs::write(dir.join("error.json"), format!("{text}\n"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_lf() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![num(1.5), opt(None)]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1.5,\n");
    }
}
