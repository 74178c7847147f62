//! Atomic file output and the failure-to-exit-code mapping.

use monotone_mdp::Error as MdpError;
use std::fs;
use std::path::Path;

/// A failure carrying the process exit code it maps to.
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn input_error(e: impl Into<anyhow::Error>) -> CliError {
    CliError {
        code: 2,
        error: e.into(),
    }
}

/// Maps library failures onto the exit-code contract: schema and
/// configuration problems are input errors (2), convergence and conditioning
/// problems are numerical (3), guard refusals are 4.
pub fn from_mdp_error(e: MdpError) -> CliError {
    let code = match &e {
        MdpError::InvalidModel(_) | MdpError::Config(_) => 2,
        MdpError::NoConvergence { .. } | MdpError::Numerical(_) => 3,
        MdpError::GuardExceeded { .. } => 4,
    };
    CliError {
        code,
        error: e.into(),
    }
}

/// Writes via a temp file in the same directory, then renames into place.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(input_error)?;
        }
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, contents).map_err(input_error)?;
    fs::rename(&tmp, path).map_err(input_error)?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| input_error(anyhow::anyhow!("cannot read {}: {e}", path.display())))
}
