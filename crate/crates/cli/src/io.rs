//! JSON files for states and stabiliser groups.

use std::path::Path;

use qbell_core::qstate::{DenseState, StateFile};
use qbell_core::stabiliser::{GroupFile, StabiliserGroup};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Reads a file into a string.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Writes a string to a file, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| CliError::Io { path: parent.to_path_buf(), source })?;
    }
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| CliError::Schema { path: path.to_path_buf(), message: e.to_string() })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable value");
    s.push('\n');
    s
}

/// Loads a single-register state from `{d, n, amplitudes: [[re, im], …]}`.
pub fn load_state(path: &Path) -> Result<DenseState> {
    let file: StateFile = parse(path, &read_text(path)?)?;
    file.into_state().map_err(|e| match e {
        qbell_core::Error::InvalidInput(message) => CliError::Schema { path: path.to_path_buf(), message },
        other => other.into(),
    })
}

/// Saves a single-register state; floats round-trip exactly.
pub fn save_state(path: &Path, state: &DenseState) -> Result<()> {
    write_text(path, &state_json(state))
}

/// The state file contents for `state`.
pub fn state_json(state: &DenseState) -> String {
    to_json(&StateFile::from_state(state))
}

/// Loads a stabiliser group from `{d, n, generators: [{v, w, s}, …]}`.
pub fn load_group(path: &Path) -> Result<StabiliserGroup> {
    let file: GroupFile = parse(path, &read_text(path)?)?;
    file.into_group().map_err(|e| match e {
        qbell_core::Error::InvalidInput(message) => CliError::Schema { path: path.to_path_buf(), message },
        other => other.into(),
    })
}

/// Saves a stabiliser group.
pub fn save_group(path: &Path, group: &StabiliserGroup) -> Result<()> {
    write_text(path, &to_json(&GroupFile::from_group(group)))
}
