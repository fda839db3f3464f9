//! Config-file loading and run manifests.
//!
//! The config file is plain `key = value` lines (# comments allowed); keys
//! mirror long flag names. Explicit flags always override config entries.
//! Every command writes a manifest of its resolved arguments next to its
//! primary output so a run can be reproduced bit-identically.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::{CliError, CliResult};

pub type Config = BTreeMap<String, String>;

pub fn load_config(path: Option<&Path>) -> Result<Config, String> {
    let mut map = BTreeMap::new();
    let Some(path) = path else {
        return Ok(map);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("--config {}: {e}", path.display()))?;
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "--config {}: line {} is not key = value",
                path.display(),
                no + 1
            ));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Flag value if given, else config entry, else the default.
pub fn resolve<T: Clone + std::str::FromStr>(
    flag: Option<T>,
    config: &Config,
    key: &str,
    default: T,
) -> CliResult<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match config.get(key) {
        Some(raw) => raw.parse().map_err(|_| {
            CliError::Validation(format!("config key {key}: cannot parse {raw:?}"))
        }),
        None => Ok(default),
    }
}

/// A run manifest: the command, its resolved arguments, and the build
/// version. Serialized as sorted-key JSON so identical runs produce
/// byte-identical manifests.
pub struct Manifest {
    command: &'static str,
    entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Manifest {
            command,
            entries: BTreeMap::new(),
        }
    }

    pub fn arg(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.entries.insert(key.to_string(), value.to_string());
        self
    }

    fn json(&self) -> String {
        #[derive(serde::Serialize)]
        struct File<'a> {
            command: &'a str,
            version: &'a str,
            args: &'a BTreeMap<String, String>,
        }
        serde_json::to_string_pretty(&File {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            args: &self.entries,
        })
        .expect("manifest serialization cannot fail")
    }

    /// Writes `manifest.json` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join("manifest.json");
        std::fs::write(&path, self.json())
            .map_err(|e| runtime_error(format!("writing {}: {e}", path.display()), dir))
    }

    /// Writes `<file>.manifest.json` next to a file output.
    pub fn write_for_file(&self, file: &Path) -> CliResult<()> {
        let path = sibling_manifest(file);
        std::fs::write(&path, self.json()).map_err(|e| {
            runtime_error(
                format!("writing {}: {e}", path.display()),
                file.parent().unwrap_or(Path::new(".")),
            )
        })
    }
}

pub fn sibling_manifest(file: &Path) -> PathBuf {
    let mut name = file
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    name.push_str(".manifest.json");
    file.with_file_name(name)
}

/// Wraps a runtime failure: writes a failure manifest into `dir` (best
/// effort) and returns the error carrying its path.
pub fn runtime_error(message: String, dir: &Path) -> CliError {
    #[derive(serde::Serialize)]
    struct Failure<'a> {
        version: &'a str,
        error: &'a str,
    }
    let _ = std::fs::create_dir_all(dir);
    let path = dir.join("failure_manifest.json");
    let body = serde_json::to_string_pretty(&Failure {
        version: env!("CARGO_PKG_VERSION"),
        error: &message,
    })
    .expect("failure manifest serialization cannot fail");
    let _ = std::fs::write(&path, body);
    CliError::Runtime {
        message,
        manifest: path,
    }
}
