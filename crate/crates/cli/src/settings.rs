//! `key = value` config files merged with command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

/// Resolved settings for one subcommand: defaults, then the config file,
/// then explicit flags.
#[derive(Debug, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

/// A key the subcommand accepts, with its default if it has one.
pub type Key = (&'static str, Option<&'static str>);

impl Settings {
    pub fn resolve(
        allowed: &[Key],
        file: Option<&Path>,
        flags: Vec<(&'static str, Option<String>)>,
    ) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> = allowed
            .iter()
            .filter_map(|(k, d)| d.map(|d| (k.to_string(), d.to_string())))
            .collect();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            for (key, value) in parse_config(&text, path)? {
                if !allowed.iter().any(|(k, _)| *k == key) {
                    return Err(CliError::Validation(format!(
                        "{}: unknown key `{key}`",
                        path.display()
                    )));
                }
                values.insert(key, value);
            }
        }
        for (key, value) in flags {
            if let Some(v) = value {
                values.insert(key.to_string(), v);
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.opt(key)?
            .ok_or_else(|| CliError::Validation(format!("missing required setting `{key}`")))
    }

    pub fn opt<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| CliError::Validation(format!("invalid value `{v}` for `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.get(key)
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        Ok(self.opt(key)?.unwrap_or(false))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.values
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
        )
    }

    /// `# key=value` lines prepended to CSV artifacts.
    pub fn csv_preamble(&self) -> String {
        self.values.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
    }

    pub fn log(&self, command: &str) {
        let line: Vec<String> = self.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
        eprintln!("[jgekd {command}] resolved config: {}", line.join(" "));
    }
}

fn parse_config(text: &str, path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Validation(format!("{}:{}: expected `key = value`", path.display(), n + 1))
        })?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}
