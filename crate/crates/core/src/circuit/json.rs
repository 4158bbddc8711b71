//! Versioned JSON form of a [`Circuit`].
//!
//! ```json
//! {"version":1,"n_qubits":2,"n_clbits":2,"registers":{},
//!  "ops":[{"kind":"h","qubits":[0]},
//!         {"kind":"measure","qubits":[0,1],"clbits":[0,1]}]}
//! ```

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Circuit, CircuitError, DiagonalUnitary, Gate, PermutationUnitary, RegisterView};

pub const CIRCUIT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RegisterDocument {
    pub start: usize,
    pub len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alias: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OpDocument {
    pub kind: String,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clbits: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CircuitDocument {
    pub version: u32,
    pub n_qubits: usize,
    pub n_clbits: usize,
    pub registers: BTreeMap<String, RegisterDocument>,
    pub ops: Vec<OpDocument>,
}

fn doc_err(msg: impl Into<String>) -> CircuitError {
    CircuitError::Document(msg.into())
}

fn param<'a>(params: &'a Option<Value>, key: &str, kind: &str) -> Result<&'a Value, CircuitError> {
    params
        .as_ref()
        .and_then(|p| p.get(key))
        .ok_or_else(|| doc_err(format!("'{kind}' op is missing params.{key}")))
}

fn parse<T: serde::de::DeserializeOwned>(v: &Value, what: &str) -> Result<T, CircuitError> {
    serde_json::from_value(v.clone()).map_err(|e| doc_err(format!("{what}: {e}")))
}

fn single(qubits: &[usize], kind: &str) -> Result<usize, CircuitError> {
    match qubits {
        [q] => Ok(*q),
        _ => Err(doc_err(format!("'{kind}' op takes exactly one qubit"))),
    }
}

impl From<&Gate> for OpDocument {
    fn from(gate: &Gate) -> Self {
        let mut doc = OpDocument {
            kind: gate.kind().to_owned(),
            qubits: gate.qubits(),
            clbits: None,
            params: None,
        };
        match gate {
            Gate::Phase { angle, .. } => doc.params = Some(json!({ "angle": angle })),
            Gate::Unitary1Q { matrix, .. } => {
                let m: Vec<Vec<[f64; 2]>> = matrix
                    .iter()
                    .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                    .collect();
                doc.params = Some(json!({ "matrix": m }));
            }
            Gate::Diagonal(d) => doc.params = Some(json!({ "phases": d.phases })),
            Gate::Permutation(p) => doc.params = Some(json!({ "mapping": p.mapping })),
            Gate::Measure { clbits, .. } => doc.clbits = Some(clbits.clone()),
            Gate::Controlled { controls, gate } => {
                let inner = OpDocument::from(gate.as_ref());
                let mut inner_json = json!({ "kind": inner.kind });
                if let Some(p) = inner.params {
                    inner_json["params"] = p;
                }
                doc.params = Some(json!({ "controls": controls.len(), "gate": inner_json }));
            }
            _ => {}
        }
        doc
    }
}

impl TryFrom<&OpDocument> for Gate {
    type Error = CircuitError;

    fn try_from(doc: &OpDocument) -> Result<Self, Self::Error> {
        let kind = doc.kind.as_str();
        let qs = &doc.qubits;
        let gate = match kind {
            "h" => Gate::Hadamard(single(qs, kind)?),
            "x" => Gate::PauliX(single(qs, kind)?),
            "z" => Gate::PauliZ(single(qs, kind)?),
            "phase" => Gate::Phase {
                target: single(qs, kind)?,
                angle: parse(param(&doc.params, "angle", kind)?, "phase angle")?,
            },
            "unitary1q" => {
                let m: [[[f64; 2]; 2]; 2] = parse(param(&doc.params, "matrix", kind)?, "unitary1q matrix")?;
                let z = |v: [f64; 2]| Complex64::new(v[0], v[1]);
                Gate::Unitary1Q {
                    target: single(qs, kind)?,
                    matrix: [[z(m[0][0]), z(m[0][1])], [z(m[1][0]), z(m[1][1])]],
                }
            }
            "mcz" => match qs.split_last() {
                Some((target, controls)) => Gate::MultiControlledZ {
                    controls: controls.to_vec(),
                    target: *target,
                },
                None => return Err(doc_err("'mcz' op needs a target qubit")),
            },
            "swap" => match qs.as_slice() {
                [a, b] => Gate::Swap(*a, *b),
                _ => return Err(doc_err("'swap' op takes exactly two qubits")),
            },
            "diagonal" => Gate::Diagonal(DiagonalUnitary {
                qubits: qs.clone(),
                phases: parse(param(&doc.params, "phases", kind)?, "diagonal phases")?,
            }),
            "permutation" => Gate::Permutation(PermutationUnitary {
                qubits: qs.clone(),
                mapping: parse(param(&doc.params, "mapping", kind)?, "permutation mapping")?,
            }),
            "measure" => Gate::Measure {
                qubits: qs.clone(),
                clbits: doc
                    .clbits
                    .clone()
                    .ok_or_else(|| doc_err("'measure' op is missing clbits"))?,
            },
            "barrier" => Gate::Barrier(qs.clone()),
            "controlled" => {
                let k: usize = parse(param(&doc.params, "controls", kind)?, "control count")?;
                if k > qs.len() {
                    return Err(doc_err("'controlled' op has more controls than qubits"));
                }
                let inner: &Value = param(&doc.params, "gate", kind)?;
                let inner_doc = OpDocument {
                    kind: parse(
                        inner
                            .get("kind")
                            .ok_or_else(|| doc_err("controlled gate is missing kind"))?,
                        "controlled gate kind",
                    )?,
                    qubits: qs[k..].to_vec(),
                    clbits: None,
                    params: inner.get("params").cloned(),
                };
                Gate::Controlled {
                    controls: qs[..k].to_vec(),
                    gate: Box::new(Gate::try_from(&inner_doc)?),
                }
            }
            other => return Err(doc_err(format!("unknown op kind '{other}'"))),
        };
        Ok(gate)
    }
}

impl From<&Circuit> for CircuitDocument {
    fn from(c: &Circuit) -> Self {
        CircuitDocument {
            version: CIRCUIT_FORMAT_VERSION,
            n_qubits: c.n_qubits,
            n_clbits: c.n_clbits,
            registers: c
                .registers
                .iter()
                .map(|(k, v)| {
                    (
                        k.clone(),
                        RegisterDocument {
                            start: v.start,
                            len: v.len,
                            alias: v.alias.clone(),
                        },
                    )
                })
                .collect(),
            ops: c.ops.iter().map(OpDocument::from).collect(),
        }
    }
}

impl From<Circuit> for CircuitDocument {
    fn from(c: Circuit) -> Self {
        CircuitDocument::from(&c)
    }
}

impl TryFrom<CircuitDocument> for Circuit {
    type Error = CircuitError;

    fn try_from(doc: CircuitDocument) -> Result<Self, Self::Error> {
        if doc.version != CIRCUIT_FORMAT_VERSION {
            return Err(doc_err(format!(
                "unsupported circuit format version {} (expected {CIRCUIT_FORMAT_VERSION})",
                doc.version
            )));
        }
        let ops = doc.ops.iter().map(Gate::try_from).collect::<Result<Vec<_>, _>>()?;
        Ok(Circuit {
            n_qubits: doc.n_qubits,
            n_clbits: doc.n_clbits,
            ops,
            registers: doc
                .registers
                .into_iter()
                .map(|(k, v)| {
                    (
                        k,
                        RegisterView {
                            start: v.start,
                            len: v.len,
                            alias: v.alias,
                        },
                    )
                })
                .collect(),
        })
    }
}

impl Serialize for Circuit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CircuitDocument::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Circuit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = CircuitDocument::deserialize(d)?;
        Circuit::try_from(doc).map_err(serde::de::Error::custom)
    }
}

impl Circuit {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("circuit documents always serialize")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit documents always serialize")
    }

    pub fn from_json(s: &str) -> Result<Circuit, CircuitError> {
        serde_json::from_str(s).map_err(|e| doc_err(e.to_string()))
    }
}
