//! `--set key=value` plumbing. Each subcommand takes the keys it knows;
//! anything left over is a usage error, never a silent no-op.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::output::CliError;

#[derive(Debug)]
pub struct OverrideSet {
    values: BTreeMap<String, String>,
}

impl OverrideSet {
    /// Later duplicates win, matching flag-repetition intuition.
    pub fn parse(pairs: &[String]) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for pair in pairs {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                CliError::usage(format!("--set {pair:?}: expected key=value"))
            })?;
            values.insert(key.to_string(), value.to_string());
        }
        Ok(OverrideSet { values })
    }

    pub fn take_string(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn take_parsed<T: FromStr>(&mut self, key: &str, expected: &str) -> Result<Option<T>, CliError> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::usage(format!("--set {key}={raw}: expected {expected}"))
            }),
        }
    }

    pub fn take_u64(&mut self, key: &str) -> Result<Option<u64>, CliError> {
        self.take_parsed(key, "a non-negative integer")
    }

    pub fn take_u32(&mut self, key: &str) -> Result<Option<u32>, CliError> {
        self.take_parsed(key, "a non-negative integer")
    }

    pub fn take_usize(&mut self, key: &str) -> Result<Option<usize>, CliError> {
        self.take_parsed(key, "a non-negative integer")
    }

    pub fn take_f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.take_parsed::<f64>(key, "a number")? {
            Some(v) if !v.is_finite() => {
                Err(CliError::usage(format!("--set {key}: expected a finite number")))
            }
            other => Ok(other),
        }
    }

    pub fn take_bool(&mut self, key: &str) -> Result<Option<bool>, CliError> {
        self.take_parsed(key, "true or false")
    }

    pub fn finish(self) -> Result<(), CliError> {
        if self.values.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.values.keys().map(String::as_str).collect();
            Err(CliError::usage(format!(
                "unknown override key(s): {}",
                keys.join(", ")
            )))
        }
    }
}
