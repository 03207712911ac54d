//! JSON form of descriptors, elements and functionals:
//! `{"kind": "matrix", "n": 2, "field": "complex", "coords": [[re, im], ...]}`.
//! Grassmann uses `"N"`, weighted sequences `"L"` and `"beta"`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{AlgebraDescriptor, AlgebraElement, AlgebraKind, DualFunctional, ScalarField};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDescriptor {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    generators: Option<usize>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default)]
    field: Option<ScalarField>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    generators: Option<usize>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default)]
    field: Option<ScalarField>,
    coords: Vec<[f64; 2]>,
}

fn required<T>(v: Option<T>, name: &str, kind: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidDescriptor(format!("`{kind}` requires field `{name}`")))
}

impl RawDescriptor {
    fn into_descriptor(self) -> Result<AlgebraDescriptor> {
        let stray = |name: &str, present: bool| -> Result<()> {
            if present {
                Err(Error::InvalidDescriptor(format!(
                    "field `{name}` does not apply to `{}`",
                    self.kind
                )))
            } else {
                Ok(())
            }
        };
        let kind = match self.kind.as_str() {
            "matrix" => {
                stray("N", self.generators.is_some())?;
                stray("L", self.len.is_some())?;
                stray("beta", self.beta.is_some())?;
                AlgebraKind::Matrix {
                    n: required(self.n, "n", "matrix")?,
                }
            }
            "quaternion" => {
                stray("n", self.n.is_some())?;
                stray("N", self.generators.is_some())?;
                stray("L", self.len.is_some())?;
                stray("beta", self.beta.is_some())?;
                AlgebraKind::Quaternion
            }
            "grassmann" => {
                stray("n", self.n.is_some())?;
                stray("L", self.len.is_some())?;
                stray("beta", self.beta.is_some())?;
                AlgebraKind::Grassmann {
                    generators: required(self.generators, "N", "grassmann")?,
                }
            }
            "weighted_seq" => {
                stray("n", self.n.is_some())?;
                stray("N", self.generators.is_some())?;
                AlgebraKind::WeightedSeq {
                    len: required(self.len, "L", "weighted_seq")?,
                    beta: required(self.beta, "beta", "weighted_seq")?,
                }
            }
            other => return Err(Error::InvalidDescriptor(format!("unknown algebra kind `{other}`"))),
        };
        let field = self.field.unwrap_or(match kind {
            AlgebraKind::Quaternion => ScalarField::Real,
            _ => ScalarField::Complex,
        });
        AlgebraDescriptor::new(kind, field)
    }

    fn from_descriptor(d: &AlgebraDescriptor) -> Self {
        let mut raw = RawDescriptor {
            kind: String::new(),
            n: None,
            generators: None,
            len: None,
            beta: None,
            field: Some(d.field()),
        };
        raw.kind = match d.kind() {
            AlgebraKind::Matrix { n } => {
                raw.n = Some(n);
                "matrix"
            }
            AlgebraKind::Quaternion => "quaternion",
            AlgebraKind::Grassmann { generators } => {
                raw.generators = Some(generators);
                "grassmann"
            }
            AlgebraKind::WeightedSeq { len, beta } => {
                raw.len = Some(len);
                raw.beta = Some(beta);
                "weighted_seq"
            }
        }
        .to_string();
        raw
    }
}

impl RawElement {
    fn split(self) -> (RawDescriptor, Vec<C64>) {
        let coords = self.coords.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        (
            RawDescriptor {
                kind: self.kind,
                n: self.n,
                generators: self.generators,
                len: self.len,
                beta: self.beta,
                field: self.field,
            },
            coords,
        )
    }

    fn join(d: &AlgebraDescriptor, coords: &[C64]) -> Self {
        let r = RawDescriptor::from_descriptor(d);
        RawElement {
            kind: r.kind,
            n: r.n,
            generators: r.generators,
            len: r.len,
            beta: r.beta,
            field: r.field,
            coords: coords.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl Serialize for AlgebraDescriptor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawDescriptor::from_descriptor(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlgebraDescriptor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RawDescriptor::deserialize(d)?
            .into_descriptor()
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for AlgebraElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawElement::join(&self.descriptor, &self.coords).serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlgebraElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (raw, coords) = RawElement::deserialize(d)?.split();
        let desc = raw.into_descriptor().map_err(serde::de::Error::custom)?;
        AlgebraElement::new(desc, coords).map_err(serde::de::Error::custom)
    }
}

impl Serialize for DualFunctional {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawElement::join(&self.descriptor, &self.coords).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DualFunctional {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (raw, coords) = RawElement::deserialize(d)?.split();
        let desc = raw.into_descriptor().map_err(serde::de::Error::custom)?;
        DualFunctional::new(desc, coords).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn parses_documented_shapes() {
        let e: AlgebraElement = serde_json::from_str(
            r#"{"kind": "matrix", "n": 2, "field": "complex",
                "coords": [[0,0],[1,0],[0,0],[0,0]]}"#,
        )
        .unwrap();
        assert_eq!(e.coords()[1], C64::new(1.0, 0.0));

        let q: AlgebraElement =
            serde_json::from_str(r#"{"kind": "quaternion", "coords": [[1,0],[0,0],[0,0],[0,0]]}"#).unwrap();
        assert_eq!(q.descriptor().field(), ScalarField::Real);

        let d: AlgebraDescriptor =
            serde_json::from_str(r#"{"kind": "weighted_seq", "L": 8, "beta": 2.0, "field": "real"}"#).unwrap();
        assert_eq!(d.dim(), 8);
        let g: AlgebraDescriptor = serde_json::from_str(r#"{"kind": "grassmann", "N": 3}"#).unwrap();
        assert_eq!(g.dim(), 8);
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            r#"{"kind": "matrix", "coords": []}"#,
            r#"{"kind": "matrix", "n": 1, "coords": [[1,0],[2,0]]}"#,
            r#"{"kind": "octonion", "coords": []}"#,
            r#"{"kind": "quaternion", "field": "complex", "coords": [[1,0],[0,0],[0,0],[0,0]]}"#,
            r#"{"kind": "matrix", "n": 1, "N": 2, "coords": [[1,0]]}"#,
            r#"{"kind": "matrix", "n": 1, "colour": "red", "coords": [[1,0]]}"#,
        ] {
            assert!(serde_json::from_str::<AlgebraElement>(bad).is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn element_json_roundtrip(seed in any::<u64>(), which in 0usize..4) {
            let d = [
                AlgebraDescriptor::matrix(2, ScalarField::Complex).unwrap(),
                AlgebraDescriptor::quaternion(),
                AlgebraDescriptor::grassmann(3, ScalarField::Real).unwrap(),
                AlgebraDescriptor::weighted_seq(5, 1.5, ScalarField::Complex).unwrap(),
            ][which];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = AlgebraElement::random(d, 3.0, &mut rng);
            let back: AlgebraElement = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
            prop_assert_eq!(back, e);
        }
    }
}
