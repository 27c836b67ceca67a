//! Name-keyed factories for the interchangeable pieces of the toolkit:
//! analytic fields, nonlinearity families, solvers and ledger paths.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("unknown {kind} '{name}' (known: {known})")]
    Unknown {
        kind: &'static str,
        name: String,
        known: String,
    },
    #[error("invalid parameters for {kind} '{name}': {message}")]
    InvalidParams {
        kind: &'static str,
        name: String,
        message: String,
    },
}

pub type Factory<T> = fn(&Value) -> Result<T, String>;

pub struct Entry<T> {
    pub summary: &'static str,
    pub build: Factory<T>,
}

pub struct Registry<T> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Entry<T>>,
}

impl<T> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, summary: &'static str, build: Factory<T>) -> &mut Self {
        self.entries.insert(name, Entry { summary, build });
        self
    }

    pub fn build(&self, name: &str, params: &Value) -> Result<T, RegistryError> {
        let entry = self.entries.get(name).ok_or_else(|| RegistryError::Unknown {
            kind: self.kind,
            name: name.to_string(),
            known: self.names().collect::<Vec<_>>().join(", "),
        })?;
        (entry.build)(params).map_err(|message| RegistryError::InvalidParams {
            kind: self.kind,
            name: name.to_string(),
            message,
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn summaries(&self) -> impl Iterator<Item = (&'static str, &'static str)> + '_ {
        self.entries.iter().map(|(k, e)| (*k, e.summary))
    }
}

impl<T> fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("entries", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}

/// Fetch a numeric parameter with a default.
pub fn param_f64(params: &Value, key: &str, default: Option<f64>) -> Result<f64, String> {
    match params.get(key) {
        Some(v) => v
            .as_f64()
            .ok_or_else(|| format!("parameter '{key}' must be a number")),
        None => default.ok_or_else(|| format!("missing parameter '{key}'")),
    }
}

/// Reject keys outside `allowed` (the family or tag key is always allowed).
pub fn check_keys(params: &Value, allowed: &[&str]) -> Result<(), String> {
    if let Some(obj) = params.as_object() {
        for k in obj.keys() {
            if k != "family" && k != "name" && !allowed.contains(&k.as_str()) {
                return Err(format!("unknown key '{k}'"));
            }
        }
    }
    Ok(())
}
