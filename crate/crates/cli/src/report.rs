use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

/// `{config, version, results, diagnostics}`.
#[derive(Debug, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub version: &'static str,
    pub results: Value,
    pub diagnostics: Value,
}

impl Report {
    pub fn new(config: RunConfig, results: Value) -> Self {
        Report { config, version: borp_core::VERSION, results, diagnostics: json!({}) }
    }

    pub fn with_diagnostics(mut self, diagnostics: Value) -> Self {
        self.diagnostics = diagnostics;
        self
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, |w| {
            serde_json::to_writer_pretty(&mut *w, self).map_err(std::io::Error::other)?;
            writeln!(w)
        })
    }
}

/// Resolves `path` against the output directory unless it is absolute.
pub fn place(dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        dir.join(path)
    }
}

/// Writes through a temporary file in the target directory, then renames it into place.
pub fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Input(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w).map_err(io)?;
        w.flush().map_err(io)?;
    }
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Same as [`write_atomic`] for writers producing core errors.
pub fn write_atomic_core(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> borp_core::Result<()>,
) -> Result<(), CliError> {
    write_atomic(path, |w| body(w).map_err(std::io::Error::other))
}
