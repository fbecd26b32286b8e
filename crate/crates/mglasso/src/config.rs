//! Parameter resolution: built-in defaults, then the config file, then flags.
//!
//! A config file is TOML (`.toml`) or JSON (anything else). Top-level keys
//! `seed`, `threads`, `output_dir` and `format` are global; every other
//! top-level key must name a command and hold a table of that command's
//! parameters.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};
use crate::io::Format;

pub const COMMANDS: [&str; 6] = ["simulate", "fit", "path", "stars", "evaluate", "clr"];
const GLOBAL_KEYS: [&str; 4] = ["seed", "threads", "output_dir", "format"];

/// Settings shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Global {
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub output_dir: PathBuf,
    pub format: Format,
}

impl Default for Global {
    fn default() -> Self {
        Global {
            seed: 0,
            threads: 0,
            output_dir: PathBuf::from("."),
            format: Format::Csv,
        }
    }
}

/// A parsed config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub global: Map<String, Value>,
    pub sections: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let value: Value = if is_toml {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        Self::from_value(value).map_err(|m| CliError::Config(format!("{}: {m}", path.display())))
    }

    pub fn from_value(value: Value) -> std::result::Result<Self, String> {
        let Value::Object(top) = value else {
            return Err("top level must be a table".into());
        };
        let mut out = ConfigFile::default();
        for (k, v) in top {
            if GLOBAL_KEYS.contains(&k.as_str()) {
                out.global.insert(k, v);
            } else if COMMANDS.contains(&k.as_str()) {
                if !v.is_object() {
                    return Err(format!("section `{k}` must be a table"));
                }
                out.sections.insert(k, v);
            } else {
                return Err(format!("unknown key `{k}`"));
            }
        }
        Ok(out)
    }

    pub fn section(&self, command: &str) -> Option<&Map<String, Value>> {
        self.sections.get(command).and_then(Value::as_object)
    }
}

fn overlay(base: &mut Map<String, Value>, top: &Map<String, Value>) {
    for (k, v) in top {
        if !v.is_null() {
            base.insert(k.clone(), v.clone());
        }
    }
}

fn as_map<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value).expect("serializable parameters") {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

/// Merges `defaults < file < flags` and deserializes the result. `flags`
/// should serialize unset options as `null` or omit them.
pub fn resolve<P, F>(scope: &str, defaults: &P, file: Option<&Map<String, Value>>, flags: &F) -> Result<P>
where
    P: Serialize + DeserializeOwned,
    F: Serialize,
{
    let mut merged = as_map(defaults);
    if let Some(f) = file {
        overlay(&mut merged, f);
    }
    overlay(&mut merged, &as_map(flags));
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(format!("{scope}: {e}")))
}

pub fn resolve_global<F: Serialize>(file: Option<&ConfigFile>, flags: &F) -> Result<Global> {
    resolve("global", &Global::default(), file.map(|f| &f.global), flags)
}
