//! JSON interchange format for carriers.
//!
//! ```json
//! {"kind":"finite","elements":["e","a"],"neutral":"e","op":[[0,1],[1,0]],"involution":[0,1]}
//! {"kind":"lattice","dim":1,"window":64,"folner_max":512}
//! ```

use serde::{Deserialize, Serialize};

use super::{Carrier, FiniteCarrier, LatticeCarrier};
use crate::error::{JensenError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CarrierFile {
    Finite {
        elements: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        neutral: Option<String>,
        op: Vec<Vec<usize>>,
        involution: Vec<usize>,
    },
    Lattice {
        dim: usize,
        window: i64,
        folner_max: i64,
    },
}

impl CarrierFile {
    pub fn into_carrier(self) -> Result<Carrier> {
        match self {
            CarrierFile::Finite {
                elements,
                neutral,
                op,
                involution,
            } => {
                let neutral = neutral
                    .map(|label| {
                        elements.iter().position(|l| *l == label).ok_or_else(|| {
                            JensenError::MalformedCarrier(format!(
                                "neutral {label:?} is not an element"
                            ))
                        })
                    })
                    .transpose()?;
                FiniteCarrier::new(elements, op, involution, neutral).map(Carrier::Finite)
            }
            CarrierFile::Lattice {
                dim,
                window,
                folner_max,
            } => LatticeCarrier::new(dim, window, folner_max).map(Carrier::Lattice),
        }
    }
}

impl From<&Carrier> for CarrierFile {
    fn from(c: &Carrier) -> Self {
        match c {
            Carrier::Finite(f) => CarrierFile::Finite {
                elements: f.labels().to_vec(),
                neutral: Some(f.labels()[f.neutral_index()].clone()),
                op: f.table_rows(),
                involution: f.involution_table().to_vec(),
            },
            Carrier::Lattice(l) => CarrierFile::Lattice {
                dim: l.dim(),
                window: l.window_radius(),
                folner_max: l.folner_max(),
            },
        }
    }
}

pub fn parse_carrier(json: &str) -> Result<Carrier> {
    serde_json::from_str::<CarrierFile>(json)
        .map_err(|source| JensenError::Json {
            context: "carrier file".into(),
            source,
        })?
        .into_carrier()
}

pub fn carrier_to_json(c: &Carrier) -> String {
    serde_json::to_string_pretty(&CarrierFile::from(c)).expect("carrier serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carrier::bundled;

    #[test]
    fn bundled_carriers_round_trip() {
        for c in bundled::all() {
            let back = parse_carrier(&carrier_to_json(&c)).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn spec_shaped_documents_parse() {
        let z2 = parse_carrier(
            r#"{"kind":"finite","elements":["e","a"],"neutral":"e","op":[[0,1],[1,0]],"involution":[0,1]}"#,
        )
        .unwrap();
        assert_eq!(z2, bundled::z2());
        let l =
            parse_carrier(r#"{"kind":"lattice","dim":1,"window":64,"folner_max":512}"#).unwrap();
        assert_eq!(l, bundled::lattice(1, 64, 512));
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(
            parse_carrier(r#"{"kind":"finite","elements":["e"],"op":[[1]],"involution":[0]}"#)
                .is_err()
        );
        assert!(parse_carrier(r#"{"kind":"lattice","dim":1,"window":64,"folner_max":8}"#).is_err());
        assert!(parse_carrier(
            r#"{"kind":"finite","elements":["e"],"neutral":"x","op":[[0]],"involution":[0]}"#
        )
        .is_err());
        assert!(matches!(
            parse_carrier(
                r#"{"kind":"finite","elements":["p","q"],"op":[[0,0],[1,1]],"involution":[0,1]}"#
            ),
            Err(JensenError::NoNeutral)
        ));
    }
}
