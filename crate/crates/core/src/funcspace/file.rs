//! JSON interchange format for functions.
//!
//! ```json
//! {"kind":"table","values":{"e":[0.0,0.0],"a":[1.0,0.0]}}
//! {"kind":"oracle","linear":[2.0],"constant":[5.0,0.0],"noise":{"type":"parity","amplitude":0.1,"seed":42}}
//! ```
//! Complex numbers are `[re, im]`; coefficients may also be plain reals.
//! Lattice tables are keyed by comma-separated coordinates and must cover a full box.

use std::sync::Arc;

use indexmap::IndexMap;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BoundedFn, Noise, Oracle};
use crate::carrier::{box_points, Carrier};
use crate::error::{JensenError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexLit {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexLit> for Complex64 {
    fn from(c: ComplexLit) -> Self {
        match c {
            ComplexLit::Real(r) => Complex64::new(r, 0.0),
            ComplexLit::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

impl ComplexLit {
    fn compact(c: Complex64) -> Self {
        if c.im == 0.0 {
            ComplexLit::Real(c.re)
        } else {
            ComplexLit::Pair([c.re, c.im])
        }
    }
}

pub fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

/// `#[serde(with = ...)]` adapter writing a complex number as `[re, im]`.
pub mod pair_serde {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionFile {
    Table {
        values: IndexMap<String, [f64; 2]>,
    },
    Oracle {
        linear: Vec<ComplexLit>,
        constant: ComplexLit,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quadratic: Option<Vec<Vec<ComplexLit>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise: Option<Noise>,
    },
}

impl FunctionFile {
    pub fn into_function(self, carrier: Arc<Carrier>) -> Result<BoundedFn> {
        match self {
            FunctionFile::Oracle {
                linear,
                constant,
                quadratic,
                noise,
            } => BoundedFn::oracle(
                carrier,
                Oracle {
                    linear: linear.into_iter().map(Into::into).collect(),
                    constant: constant.into(),
                    quadratic: quadratic.map(|q| {
                        q.into_iter()
                            .map(|r| r.into_iter().map(Into::into).collect())
                            .collect()
                    }),
                    noise,
                },
            ),
            FunctionFile::Table { values } => table_from_labels(carrier, values),
        }
    }

    /// File form of a table or oracle; lazy transforms must be tabulated first.
    pub fn from_function(f: &BoundedFn) -> Result<Self> {
        if let Some(o) = f.as_oracle() {
            return Ok(FunctionFile::Oracle {
                linear: o.linear.iter().copied().map(ComplexLit::compact).collect(),
                constant: ComplexLit::Pair(pair(o.constant)),
                quadratic: o.quadratic.as_ref().map(|q| {
                    q.iter()
                        .map(|r| r.iter().copied().map(ComplexLit::compact).collect())
                        .collect()
                }),
                noise: o.noise.clone(),
            });
        }
        let entries = f.table_entries().ok_or_else(|| {
            JensenError::MalformedFunction("only tables and oracles have a file form".into())
        })?;
        let carrier = f.carrier();
        Ok(FunctionFile::Table {
            values: entries
                .into_iter()
                .map(|(x, v)| (carrier.label(&x), pair(v)))
                .collect(),
        })
    }
}

fn table_from_labels(
    carrier: Arc<Carrier>,
    values: IndexMap<String, [f64; 2]>,
) -> Result<BoundedFn> {
    let lookup = |label: &str| {
        values
            .get(label)
            .map(|&[re, im]| Complex64::new(re, im))
            .ok_or_else(|| JensenError::MalformedFunction(format!("table is missing {label:?}")))
    };
    for label in values.keys() {
        carrier.parse_label(label)?;
    }
    match carrier.as_ref() {
        Carrier::Finite(c) => {
            let v = c
                .labels()
                .iter()
                .map(|l| lookup(l))
                .collect::<Result<Vec<_>>>()?;
            if values.len() != v.len() {
                return Err(JensenError::MalformedFunction(
                    "duplicate table keys".into(),
                ));
            }
            BoundedFn::table(carrier, v)
        }
        Carrier::Lattice(l) => {
            let dim = l.dim() as u32;
            let radius = (0..=l.folner_max().max(l.window_radius()) * 4)
                .find(|r| ((2 * r + 1) as usize).pow(dim) >= values.len())
                .filter(|r| ((2 * r + 1) as usize).pow(dim) == values.len())
                .ok_or_else(|| {
                    JensenError::MalformedFunction(format!(
                        "{} lattice values do not fill a centered box",
                        values.len()
                    ))
                })?;
            let v = box_points(l.dim(), radius)
                .iter()
                .map(|x| lookup(&carrier.label(x)))
                .collect::<Result<Vec<_>>>()?;
            BoundedFn::window_table(carrier, radius, v)
        }
    }
}

pub fn parse_function(json: &str, carrier: Arc<Carrier>) -> Result<BoundedFn> {
    serde_json::from_str::<FunctionFile>(json)
        .map_err(|source| JensenError::Json {
            context: "function file".into(),
            source,
        })?
        .into_function(carrier)
}

pub fn function_to_json(f: &BoundedFn) -> Result<String> {
    Ok(
        serde_json::to_string_pretty(&FunctionFile::from_function(f)?)
            .expect("function serializes"),
    )
}
