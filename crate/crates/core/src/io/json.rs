use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Serializes with sorted object keys, two-space indentation, and every
/// non-integer number printed with exactly six decimals. Output ends with a
/// newline. Non-finite floats become `null` (serde_json's mapping).
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::InvalidArgument(format!("json encoding: {e}")))?;
    let mut out = String::new();
    emit(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

pub fn write_canonical_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    super::write_atomic(path, to_canonical_json(value)?.as_bytes())
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn emit(v: &Value, level: usize, out: &mut String) {
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("f64 number");
                // avoid "-0.000000" for tiny negatives
                let s = format!("{x:.6}");
                if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
                    out.push_str("0.000000");
                } else {
                    out.push_str(&s);
                }
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            if items.iter().all(|i| !matches!(i, Value::Array(_) | Value::Object(_))) {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    emit(item, level, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(level + 1, out);
                emit(item, level + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(level, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                indent(level + 1, out);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                emit(&map[*k], level + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            indent(level, out);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorted_keys_and_fixed_floats() {
        let v = json!({"b": 0.5, "a": [1, 2.25], "c": {"z": null, "y": "s"}});
        let s = to_canonical_json(&v).unwrap();
        assert_eq!(
            s,
            "{\n  \"a\": [1, 2.250000],\n  \"b\": 0.500000,\n  \"c\": {\n    \"y\": \"s\",\n    \"z\": null\n  }\n}\n"
        );
    }

    #[test]
    fn negative_zero_normalized() {
        assert_eq!(to_canonical_json(&-1e-9).unwrap(), "0.000000\n");
        assert_eq!(to_canonical_json(&-0.25).unwrap(), "-0.250000\n");
        assert_eq!(to_canonical_json(&f64::NAN).unwrap(), "null\n");
    }
}
