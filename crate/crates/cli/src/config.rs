//! `key=value` overrides over dotted paths of [`Controls`].
//!
//! Values are JSON literals (`1e-9`, `true`, `null`, `[5.0,20.0]`,
//! `"normalized"`); anything that does not parse as JSON is taken as a
//! string. The printed form reads back to the same controls.

use anyhow::{anyhow, bail, Context, Result};
use hopfinf_core::Controls;
use serde_json::{Map, Value};

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        leaf => out.push((prefix.to_string(), leaf.to_string())),
    }
}

/// Sorted `key=value` lines for every leaf control.
pub fn render(c: &Controls) -> String {
    let mut pairs = vec![];
    flatten("", &serde_json::to_value(c).expect("controls serialize"), &mut pairs);
    pairs.sort();
    pairs.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map: &mut Map<String, Value> =
            cur.as_object_mut().ok_or_else(|| anyhow!("'{key}': '{part}' is not a section"))?;
        let slot = map.get_mut(*part).ok_or_else(|| anyhow!("unknown control '{key}'"))?;
        if i + 1 == parts.len() {
            if slot.is_object() {
                bail!("'{key}' is a section, not a value");
            }
            *slot = value;
            return Ok(());
        }
        cur = slot;
    }
    bail!("empty control key")
}

/// Applies `key=value` lines; `#` starts a comment line.
pub fn apply(base: &Controls, text: &str) -> Result<Controls> {
    let mut root = serde_json::to_value(base)?;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key=value", n + 1))?;
        let v = v.trim();
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        set_path(&mut root, k.trim(), value).with_context(|| format!("line {}", n + 1))?;
    }
    let c: Controls = serde_json::from_value(root).context("invalid control value")?;
    c.validate()?;
    Ok(c)
}
