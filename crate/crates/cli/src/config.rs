//! Loading a sweep configuration and applying `--set key=value` overrides.

use std::path::Path;

use cvqkd_core::SweepConfig;
use toml::{Table, Value};

/// Parses `text`, applies `overrides` in order and deserializes the result.
///
/// Without overrides the original text is deserialized directly so that
/// error messages point at the right line.
pub fn parse(text: &str, overrides: &[String]) -> Result<SweepConfig, String> {
    if overrides.is_empty() {
        return toml::from_str(text).map_err(|e| e.to_string());
    }
    let mut table: Table = toml::from_str(text).map_err(|e| e.to_string())?;
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    let merged = toml::to_string(&table).map_err(|e| e.to_string())?;
    toml::from_str(&merged).map_err(|e| format!("after --set overrides: {e}"))
}

pub fn load(path: &Path, overrides: &[String]) -> Result<SweepConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse(&text, overrides).map_err(|e| format!("{}: {e}", path.display()))
}

/// Sets a dotted key such as `system.eps_c=0.02`. The value is read as a
/// TOML literal (`0.02`, `[4.0, 40.0]`, `"json"`); anything that does not
/// parse is taken as a bare string.
pub fn apply_override(table: &mut Table, item: &str) -> Result<(), String> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| format!("--set expects key=value, got '{item}'"))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(format!("--set has a malformed key '{key}'"));
    }
    let value = literal(raw.trim());

    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().expect("split yields at least one part");
    let mut current = table;
    for part in parts {
        let entry = current
            .entry(part)
            .or_insert_with(|| Value::Table(Table::new()));
        current = entry
            .as_table_mut()
            .ok_or_else(|| format!("--set {key}: '{part}' is not a section"))?;
    }
    current.insert(leaf.to_string(), value);
    Ok(())
}

fn literal(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}
