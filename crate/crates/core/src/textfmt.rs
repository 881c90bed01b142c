//! Canonical text tensor format: a JSON document
//! `{kind, L, dims, entries: [[i1, .., iL, re, im], ..]}` with 0-based indices.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};
use crate::tensor::{Kind, SystemSpec, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorDocument {
    pub kind: Kind,
    #[serde(rename = "L")]
    pub l: usize,
    pub dims: Vec<usize>,
    pub entries: Vec<Vec<Value>>,
}

impl TensorDocument {
    pub fn from_tensor(t: &Tensor) -> TensorDocument {
        let spec = t.spec();
        let entries = spec
            .basis()
            .into_iter()
            .zip(t.entries())
            .filter(|(_, v)| **v != ZERO)
            .map(|(idx, v)| {
                let mut row: Vec<Value> = idx.into_iter().map(Value::from).collect();
                row.push(float_value(v.re));
                row.push(float_value(v.im));
                row
            })
            .collect();
        TensorDocument { kind: spec.kind(), l: spec.particles(), dims: spec.dims().to_vec(), entries }
    }

    pub fn to_tensor(&self) -> Result<Tensor> {
        let spec = SystemSpec::new(self.kind, self.l, self.dims.clone())?;
        let mut t = Tensor::zeros(&spec);
        let mut values = t.clone().into_entries();
        for row in &self.entries {
            if row.len() != self.l + 2 {
                return Err(Error::Format(format!("entry row has {} fields, expected {}", row.len(), self.l + 2)));
            }
            let idx = row[..self.l].iter().map(index_of).collect::<Result<Vec<usize>>>()?;
            for (j, &i) in idx.iter().enumerate() {
                if i >= spec.local_dim(j) {
                    return Err(Error::IndexOutOfRange { index: i, dim: spec.local_dim(j) });
                }
            }
            let ordered = match self.kind {
                Kind::Distinguishable => true,
                Kind::Bosonic => idx.windows(2).all(|w| w[0] <= w[1]),
                Kind::Fermionic => idx.windows(2).all(|w| w[0] < w[1]),
            };
            if !ordered {
                return Err(Error::Format(format!("index tuple {idx:?} is not in canonical order")));
            }
            let re = number_of(&row[self.l])?;
            let im = number_of(&row[self.l + 1])?;
            values[spec.position(&idx)] += C64::new(re, im);
        }
        t = Tensor::from_entries(&spec, values)?;
        Ok(t)
    }
}

fn float_value(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

fn index_of(v: &Value) -> Result<usize> {
    if let Some(u) = v.as_u64() {
        return Ok(u as usize);
    }
    match v.as_f64() {
        Some(f) if f >= 0.0 && f.fract() == 0.0 => Ok(f as usize),
        _ => Err(Error::Format(format!("index {v} is not a nonnegative integer"))),
    }
}

fn number_of(v: &Value) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::Format(format!("coefficient {v} is not a number")))
}

pub fn to_json(t: &Tensor) -> String {
    serde_json::to_string(&TensorDocument::from_tensor(t)).expect("document serializes")
}

/// Read a tensor document. Unknown fields are ignored, so richer documents
/// that embed the tensor fields (catalog entries, for example) load too.
pub fn from_json(text: &str) -> Result<Tensor> {
    let doc: TensorDocument = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    doc.to_tensor()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::make_tensor;

    #[test]
    fn round_trip() {
        let s = SystemSpec::fermionic(5, 2).unwrap();
        let t = make_tensor(&s, &[(vec![0, 1], C64::new(1.0, 0.5)), (vec![3, 2], C64::new(-2.0, 0.0))]).unwrap();
        let text = to_json(&t);
        assert!(text.contains("\"L\":2"));
        assert_eq!(from_json(&text).unwrap(), t);
    }

    #[test]
    fn extra_fields_are_ignored_and_order_is_checked() {
        let ok = r#"{"id":"x","kind":"bosonic","L":2,"dims":[2],"entries":[[0,1,1.0,0.0]]}"#;
        assert!(from_json(ok).is_ok());
        let bad = r#"{"kind":"fermionic","L":2,"dims":[3],"entries":[[1,0,1.0,0.0]]}"#;
        assert!(matches!(from_json(bad), Err(Error::Format(_))));
    }
}
