use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Mechanism(#[from] sepax::mechanism::MechanismError),
    #[error(transparent)]
    Order(#[from] sepax::order::OrderError),
    #[error(transparent)]
    Amd(#[from] sepax::amd::AmdError),
    #[error(transparent)]
    Path(#[from] sepax::paths::PathError),
    #[error(transparent)]
    Count(#[from] sepax::verify::CountError),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid utility file {path}: {reason}")]
    Utility { path: String, reason: String },
}

/// Result of a subcommand: the JSON report and the process exit code.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Value,
    pub seed: Option<u64>,
    pub result: Value,
    pub counts: Value,
    /// Wall-clock time; the only field that varies between identical runs.
    pub elapsed_ms: u128,
    #[serde(skip)]
    pub exit: i32,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_DISAGREEMENT: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

/// Writes `contents` to a temporary file beside `path` and renames it into
/// place, so a failed run never leaves a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let err = |source| CliError::Write {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(contents.as_bytes()).map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

/// Writes several files only after all of them have been rendered.
pub fn write_all_atomic(files: &[(&Path, String)]) -> Result<(), CliError> {
    for (path, contents) in files {
        write_atomic(path, contents)?;
    }
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}
