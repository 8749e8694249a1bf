use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::commands::CliError;

/// Fails if any target exists and `force` is off. Checked before work starts.
pub fn check_writable(paths: &[&Path], force: bool) -> Result<(), CliError> {
    if force {
        return Ok(());
    }
    for p in paths {
        if p.exists() {
            return Err(CliError::Io(format!(
                "{} already exists; pass --force to overwrite",
                p.display()
            )));
        }
    }
    Ok(())
}

/// Writes to `path`, or to standard output when `path` is `None`.
pub fn write(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

/// `results.csv` → `results.csv.meta.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}
