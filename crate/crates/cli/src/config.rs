//! Flat `key = value` config files and option resolution.
//!
//! A value given on the command line wins over the config file, which wins
//! over the built-in default.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::UsageError;

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(UsageError(format!(
                    "config line {}: expected key = value",
                    i + 1
                )));
            };
            let key = k.trim().replace('-', "_");
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(UsageError(format!(
                    "config line {}: duplicate key {key}",
                    i + 1
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, UsageError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| UsageError(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    /// Rejects keys the current command does not know.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), UsageError> {
        match self.values.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(UsageError(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn resolve<T: FromStr>(
        &self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, UsageError> {
        Ok(self.resolve_opt(key, flag)?.unwrap_or(default))
    }

    pub fn resolve_opt<T: FromStr>(
        &self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, UsageError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| UsageError(format!("config key `{key}`: cannot parse `{v}`"))),
        }
    }
}
