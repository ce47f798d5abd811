//! Atomic file output and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use tempfile::NamedTempFile;

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG: &str = "config.json";

/// Writes through a temporary file in the same directory, then renames it
/// into place, so readers never see a partial artifact.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf).and_then(|_| buf.flush()).map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    write_atomic(path, |w| {
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")
    })
}

pub fn write_container(path: &Path, c: &levymaps::container::Container) -> Result<(), CliError> {
    let mut bytes = Vec::new();
    c.write(&mut bytes)?;
    write_atomic(path, |w| w.write_all(&bytes))
}

pub fn read_container(path: &Path) -> Result<levymaps::container::Container, CliError> {
    let f = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(levymaps::container::Container::read(std::io::BufReader::new(f))?)
}

pub fn replica_dir(out: &Path, replica: usize) -> PathBuf {
    out.join(format!("replica_{replica:04}"))
}

/// Records one stage in `manifest.json`, keeping the entries of earlier
/// stages. No timestamps: reruns must be byte-identical.
pub fn record_stage(out: &Path, stage: &str, entry: Value) -> Result<(), CliError> {
    let path = out.join(MANIFEST);
    let mut manifest: Value = match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        Err(_) => serde_json::json!({
            "tool": "levymaps",
            "version": env!("CARGO_PKG_VERSION"),
            "rng": {
                "generator": "ChaCha8",
                "key": "seed",
                "stream": "stage << 32 | block << 24 | replica",
                "stages": { "path": 0, "labels": 1, "estimators": 2, "spine": 3 },
            },
            "stages": {},
        }),
    };
    manifest["stages"][stage] = entry;
    write_json(&path, &manifest)
}
