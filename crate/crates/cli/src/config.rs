//! Scenario config loading with `key=value` overrides.

use bimetric_core::scenarios::ScenarioConfig;
use serde_json::{Map, Value};
use std::path::Path;

use crate::CliError;

/// Reads `path` (or starts from the defaults), applies `overrides`, and
/// validates the result.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<ScenarioConfig, CliError> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", p.display()))
            })?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    if !value.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    let known = serde_json::to_value(ScenarioConfig::default()).expect("default config serializes");
    for item in overrides {
        apply_override(&mut value, &known, item)?;
    }
    let config: ScenarioConfig =
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
    config
        .resolve()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

/// `a.b.c=value`; the value is parsed as JSON when possible, otherwise taken
/// as a string.
fn apply_override(target: &mut Value, known: &Value, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override '{item}' is not key=value")))?;
    let path: Vec<&str> = key.split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!(
            "override key '{key}' is malformed"
        )));
    }
    check_known(known, &path, key)?;
    let parsed =
        serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));

    let mut node = target;
    for part in &path[..path.len() - 1] {
        let obj = node.as_object_mut().expect("checked to be an object");
        let child = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        if !child.is_object() {
            *child = Value::Object(Map::new());
        }
        node = child;
    }
    node.as_object_mut()
        .expect("checked to be an object")
        .insert(path[path.len() - 1].to_string(), parsed);
    Ok(())
}

/// Keys must exist in the default config; below an unset optional section
/// (default `null`) anything goes and deserialization has the final say.
fn check_known(known: &Value, path: &[&str], key: &str) -> Result<(), CliError> {
    let mut node = known;
    for part in path {
        match node {
            Value::Object(map) => match map.get(*part) {
                Some(child) => node = child,
                None => return Err(CliError::Usage(format!("unknown config key '{key}'"))),
            },
            Value::Null => return Ok(()),
            _ => {
                return Err(CliError::Usage(format!(
                    "config key '{key}' has no sub-keys"
                )))
            }
        }
    }
    Ok(())
}
