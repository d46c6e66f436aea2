//! CX network-exchange documents.
//!
//! A document is a JSON array of aspect objects. Only the `nodes` and
//! `edges` aspects are read; all others are ignored. Aspects may be split
//! over several array elements and may appear in any order.
//!
//! Node fields: `@id` (or `id`), optional name `n`. Edge fields: source `s`,
//! target `t`, optional interaction `i`. Unnamed nodes get the label
//! `node:<id>`; edges without an interaction use `interacts_with`.

use std::collections::HashMap;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::kg::Triple;

pub const DEFAULT_INTERACTION: &str = "interacts_with";

fn id_key(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn field<'a>(obj: &'a Value, names: &[&str]) -> Option<&'a Value> {
    names.iter().find_map(|n| obj.get(*n)).filter(|v| !v.is_null())
}

fn aspect<'a>(doc: &'a [Value], name: &'a str) -> impl Iterator<Item = &'a Value> + 'a {
    doc.iter()
        .filter_map(move |a| a.get(name))
        .filter_map(Value::as_array)
        .flatten()
}

pub fn parse_cx(text: &str) -> Result<Vec<Triple>> {
    let doc: Value = serde_json::from_str(text)?;
    let doc = doc
        .as_array()
        .ok_or_else(|| Error::Format("CX document must be a JSON array of aspects".into()))?;

    let mut names = HashMap::new();
    for (i, node) in aspect(doc, "nodes").enumerate() {
        let id = field(node, &["@id", "id"])
            .and_then(id_key)
            .ok_or_else(|| Error::Format(format!("node {i} has no usable id")))?;
        let name = match field(node, &["n", "name"]) {
            Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
            _ => format!("node:{id}"),
        };
        names.insert(id, name);
    }

    let mut triples = Vec::new();
    for (i, edge) in aspect(doc, "edges").enumerate() {
        let endpoint = |keys: &[&str], what: &str| -> Result<&String> {
            let id = field(edge, keys)
                .and_then(id_key)
                .ok_or_else(|| Error::Format(format!("edge {i} has no {what}")))?;
            names
                .get(&id)
                .ok_or_else(|| Error::Format(format!("edge references unknown node {id}")))
        };
        let head = endpoint(&["s", "source"], "source")?;
        let tail = endpoint(&["t", "target"], "target")?;
        let relation = match field(edge, &["i", "interaction"]) {
            Some(Value::String(s)) if !s.trim().is_empty() => s.trim(),
            _ => DEFAULT_INTERACTION,
        };
        triples.push(Triple::new(head.as_str(), relation, tail.as_str())?);
    }
    Ok(triples)
}

pub fn read_cx(path: &Path) -> Result<Vec<Triple>> {
    parse_cx(&super::read_text(path)?)
}
