//! JSON writer with sorted keys and every non-integer number printed with
//! exactly six decimals, so identical data always serializes to identical bytes.

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::{Error, Result};

/// Six-decimal rendering shared by JSON and CSV output; negative zero prints as zero.
pub fn fixed6(f: f64) -> String {
    let s = format!("{f:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn number(n: &Number, out: &mut String) {
    if let Some(u) = n.as_u64() {
        out.push_str(&u.to_string());
    } else if let Some(i) = n.as_i64() {
        out.push_str(&i.to_string());
    } else {
        out.push_str(&fixed6(n.as_f64().unwrap_or(0.0)));
    }
}

fn string(s: &str, out: &mut String) {
    out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
}

fn newline(indent: Option<usize>, depth: usize, out: &mut String) {
    if let Some(w) = indent {
        out.push('\n');
        out.extend(std::iter::repeat_n(' ', w * depth));
    }
}

/// Object keys in output order: `lead` keys first when present, the rest sorted.
fn ordered_keys<'a>(map: &'a serde_json::Map<String, Value>, lead: &[&str]) -> Vec<&'a String> {
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort_by_key(|k| (lead.iter().position(|l| l == k).unwrap_or(lead.len()), k.as_str()));
    keys
}

fn value(v: &Value, indent: Option<usize>, depth: usize, lead: &[&str], out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => number(n, out),
        Value::String(s) => string(s, out),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(indent, depth + 1, out);
                value(item, indent, depth + 1, lead, out);
            }
            newline(indent, depth, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, k) in ordered_keys(map, lead).into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(indent, depth + 1, out);
                string(k, out);
                out.push(':');
                if indent.is_some() {
                    out.push(' ');
                }
                value(&map[k], indent, depth + 1, lead, out);
            }
            newline(indent, depth, out);
            out.push('}');
        }
    }
}

/// Single-line form. Keys named in `lead` come first, in that order.
pub fn to_line<T: Serialize>(v: &T, lead: &[&str]) -> Result<String> {
    let json = serde_json::to_value(v).map_err(|e| Error::Data(e.to_string()))?;
    let mut out = String::new();
    value(&json, None, 0, lead, &mut out);
    Ok(out)
}

/// Indented form with a trailing newline.
pub fn to_pretty<T: Serialize>(v: &T) -> Result<String> {
    let json = serde_json::to_value(v).map_err(|e| Error::Data(e.to_string()))?;
    let mut out = String::new();
    value(&json, Some(2), 0, &[], &mut out);
    out.push('\n');
    Ok(out)
}
