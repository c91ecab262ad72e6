//! Hyperparameter values shared by classifier and strategy specs.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A single hyperparameter value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
}

impl ParamValue {
    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(*v),
            ParamValue::Float(_) => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            ParamValue::Int(v) => *v as f64,
            ParamValue::Float(v) => *v,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
        }
    }
}

/// Named hyperparameters. BTreeMap keeps key order deterministic.
pub type ParamMap = BTreeMap<String, ParamValue>;

pub fn get_int(params: &ParamMap, name: &str) -> Option<i64> {
    params.get(name).and_then(|v| v.as_i64())
}

pub fn get_float(params: &ParamMap, name: &str) -> Option<f64> {
    params.get(name).map(|v| v.as_f64())
}

/// Renders `k=v;k=v` with keys in map order. Used in result files, so the
/// format must stay free of commas.
pub fn format_params(params: &ParamMap) -> String {
    params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_is_sorted_and_comma_free() {
        let mut p = ParamMap::new();
        p.insert("ntree".into(), ParamValue::Int(431));
        p.insert("mtry".into(), ParamValue::Int(2));
        p.insert("eta".into(), ParamValue::Float(0.0125));
        let s = format_params(&p);
        assert_eq!(s, "eta=0.0125;mtry=2;ntree=431");
        assert!(!s.contains(','));
    }
}
