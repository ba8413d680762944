//! Layered configuration: defaults, then a JSON file (plain config or a
//! run manifest), then command-line flags.

use std::path::Path;

use doppel_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

pub const SEED_ENV: &str = "DOPPEL_SEED";

/// Seed default from `DOPPEL_SEED`, else 0.
pub fn default_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(Error::InvalidArgument(format!("{SEED_ENV}: {e}"))),
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Reads `path` and returns the config object for `command`. A run
/// manifest is unwrapped; a manifest from another command is rejected.
fn read_layer(path: &Path, command: &str) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    let value: Value = serde_json::from_str(&text)?;
    let is_manifest = value.get("command").is_some() && value.get("config").is_some();
    if !is_manifest {
        return Ok(value);
    }
    let recorded = value["command"].as_str().unwrap_or_default();
    if recorded != command {
        return Err(Error::InvalidArgument(format!(
            "{} is a manifest for `{recorded}`, not `{command}`",
            path.display()
        )));
    }
    Ok(value["config"].clone())
}

/// `defaults` overlaid with the file at `path`, if any. Nested objects
/// merge key by key, so a file may set only part of a section.
pub fn layered<T: Serialize + DeserializeOwned>(defaults: T, path: Option<&Path>, command: &str) -> Result<T> {
    let Some(path) = path else {
        return Ok(defaults);
    };
    let mut value = serde_json::to_value(defaults)?;
    merge(&mut value, read_layer(path, command)?);
    Ok(serde_json::from_value(value)?)
}
