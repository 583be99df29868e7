//! Network documents: `{"elements": [...]}` with one tagged object per
//! optical element, in order.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use atomcluster_core::hilbert::PolBasis;
use atomcluster_core::optics::{
    default_four_atom_network, fusion_network, parity_check_network, two_pair_network, NetworkConfig, OpticalElement,
};
use atomcluster_core::Error;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const PRESETS: [&str; 4] = ["default", "two_pair", "parity_check", "fusion"];

pub fn preset(name: &str) -> Option<NetworkConfig> {
    match name {
        "default" | "four_atom" => Some(default_four_atom_network()),
        "two_pair" => Some(two_pair_network()),
        "parity_check" => Some(parity_check_network()),
        "fusion" => Some(fusion_network()),
        _ => None,
    }
}

/// Rails read by some element but produced by none: the network's inputs.
pub fn input_rails(net: &NetworkConfig) -> Vec<u32> {
    let mut read = BTreeSet::new();
    let mut made = BTreeSet::new();
    for e in &net.elements {
        match *e {
            OpticalElement::Qwp { rail } | OpticalElement::Hwp { rail, .. } | OpticalElement::Loss { rail, .. } => {
                read.insert(rail);
            }
            OpticalElement::Pbs { in_a, in_b, out_1, out_2 } => {
                read.insert(in_a);
                read.insert(in_b);
                made.insert(out_1);
                made.insert(out_2);
            }
            OpticalElement::Detector(d) => {
                read.insert(d.rail);
            }
        }
    }
    read.difference(&made).copied().collect()
}

fn element_error(index: usize, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("network element {index}: {reason}"))
}

/// Parses and validates a document value. Inputs are taken to carry
/// circularly polarized photons straight from the cavities.
pub fn from_value(doc: &Value) -> CliResult<NetworkConfig> {
    let obj = doc
        .as_object()
        .ok_or_else(|| CliError::Config(String::from("network document must be an object with an `elements` list")))?;
    if let Some(k) = obj.keys().find(|k| *k != "elements") {
        return Err(CliError::Config(format!("network document: unknown key `{k}`")));
    }
    let list = obj
        .get("elements")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::Config(String::from("network document: `elements` must be a list")))?;
    let elements = list
        .iter()
        .enumerate()
        .map(|(i, v)| serde_json::from_value::<OpticalElement>(v.clone()).map_err(|e| element_error(i, e)))
        .collect::<CliResult<Vec<_>>>()?;
    let net = NetworkConfig::new(elements);
    validate(&net)?;
    Ok(net)
}

pub fn validate(net: &NetworkConfig) -> CliResult<()> {
    if net.detectors().next().is_none() {
        return Err(CliError::Config(String::from("network declares no detectors")));
    }
    let inputs: BTreeMap<u32, PolBasis> = input_rails(net).into_iter().map(|r| (r, PolBasis::Circular)).collect();
    net.validate(&inputs).map_err(|e| match e {
        Error::Network { index, reason } => element_error(index, reason),
        other => CliError::Config(other.to_string()),
    })
}

pub fn parse(text: &str) -> CliResult<NetworkConfig> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("network document, line {}, column {}: {e}", e.line(), e.column())))?;
    from_value(&v)
}

/// Resolves the `network` field of a run configuration: a preset name, a
/// path (relative to `base`), or an inline document.
pub fn resolve(value: Option<&Value>, base: Option<&Path>) -> CliResult<NetworkConfig> {
    match value {
        None => Ok(default_four_atom_network()),
        Some(Value::String(s)) => match preset(s) {
            Some(n) => Ok(n),
            None => {
                let path = base.map_or_else(|| Path::new(s).to_path_buf(), |b| b.join(s));
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    CliError::Config(format!(
                        "network `{s}` is neither a preset ({}) nor a readable file: {e}",
                        PRESETS.join(", ")
                    ))
                })?;
                parse(&text)
            }
        },
        Some(v @ Value::Object(_)) => from_value(v),
        Some(other) => Err(CliError::Config(format!("`network` must be a preset name, path or document, got {other}"))),
    }
}

pub fn to_document(net: &NetworkConfig) -> String {
    let mut s = serde_json::to_string_pretty(net).expect("network serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in PRESETS {
            let net = preset(name).unwrap();
            assert_eq!(parse(&to_document(&net)).unwrap(), net);
        }
        assert_eq!(input_rails(&default_four_atom_network()), vec![1, 2, 3, 4]);
    }

    #[test]
    fn bad_element_names_its_index() {
        let doc = r#"{"elements": [{"type": "qwp", "rail": 1}, {"type": "mirror", "rail": 1}]}"#;
        let msg = parse(doc).unwrap_err().to_string();
        assert!(msg.contains("element 1"), "{msg}");
        let doc = r#"{"elements": [{"type": "qwp", "rail": 1}, {"type": "hwp", "rail": 1, "angle_deg": 22.5, "x": 1}]}"#;
        assert!(parse(doc).unwrap_err().to_string().contains("element 1"));
    }

    #[test]
    fn wiring_errors_name_the_element() {
        let mut net = default_four_atom_network();
        net.elements.remove(0);
        let msg = validate(&net).unwrap_err().to_string();
        assert!(msg.contains("element"), "{msg}");
    }
}
