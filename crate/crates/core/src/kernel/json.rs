//! Kernel grids as JSON: `{"p": 1, "c": [[[re, im], ...], ...], "radius": number | "inf"}`.
//!
//! For `p = 1` each grid cell is a `[re, im]` pair; for `p > 1` each cell is
//! a `p×p` nested array of pairs.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::KernelCoefficients;
use crate::linalg::CMatrix;
use crate::series::Radius;
use crate::C64;

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Cell {
    Scalar([f64; 2]),
    Block(Vec<Vec<[f64; 2]>>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    p: usize,
    c: Vec<Vec<Cell>>,
    radius: Radius,
}

impl Cell {
    fn into_block(self, p: usize) -> Result<CMatrix, String> {
        match self {
            Cell::Scalar([re, im]) if p == 1 => Ok(CMatrix::from_row_major(1, 1, vec![C64::new(re, im)])),
            Cell::Scalar(_) => Err(format!("expected a {p}x{p} block, found a scalar")),
            Cell::Block(rows) => {
                if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                    return Err(format!("expected a {p}x{p} block"));
                }
                let data = rows.into_iter().flatten().map(|[re, im]| C64::new(re, im)).collect();
                Ok(CMatrix::from_row_major(p, p, data))
            }
        }
    }

    fn from_block(b: &CMatrix) -> Self {
        if b.rows() == 1 {
            let v = b[(0, 0)];
            Cell::Scalar([v.re, v.im])
        } else {
            Cell::Block(
                (0..b.rows())
                    .map(|i| b.row(i).iter().map(|v| [v.re, v.im]).collect())
                    .collect(),
            )
        }
    }
}

impl Serialize for KernelCoefficients {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let c = (0..self.size)
            .map(|j| {
                (0..self.size)
                    .map(|k| Cell::from_block(self.coefficient(j, k)))
                    .collect()
            })
            .collect();
        RawKernel {
            p: self.p,
            c,
            radius: self.radius,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for KernelCoefficients {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawKernel::deserialize(d)?;
        let size = raw.c.len();
        if raw.c.iter().any(|row| row.len() != size) {
            return Err(D::Error::custom("kernel grid `c` must be square"));
        }
        let blocks = raw
            .c
            .into_iter()
            .flatten()
            .map(|cell| cell.into_block(raw.p))
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        KernelCoefficients::new(raw.p, size, blocks, raw.radius).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scalar_grid() {
        let k: KernelCoefficients =
            serde_json::from_str(r#"{"p": 1, "c": [[[1,0],[0,0]],[[0,0],[2,0]]], "radius": "inf"}"#).unwrap();
        assert_eq!(k.size(), 2);
        assert_eq!(k.scalar_coefficient(1, 1), C64::new(2.0, 0.0));
        assert_eq!(k.radius(), Radius::Infinite);
    }

    #[test]
    fn parses_block_grid() {
        let k: KernelCoefficients =
            serde_json::from_str(r#"{"p": 2, "c": [[ [[[1,0],[0,1]],[[0,-1],[1,0]]] ]], "radius": 3.0}"#).unwrap();
        assert_eq!(k.p(), 2);
        assert_eq!(k.coefficient(0, 0)[(0, 1)], C64::new(0.0, 1.0));
    }

    #[test]
    fn rejects_bad_grids() {
        for bad in [
            r#"{"p": 1, "c": [[[1,0],[1,0]]], "radius": "inf"}"#,
            r#"{"p": 1, "c": [[[1,0],[1,0]],[[0,0],[1,0]]], "radius": "inf"}"#,
            r#"{"p": 1, "c": [[[1,0]]], "radius": -1}"#,
            r#"{"p": 1, "c": [[[1,0]]], "radius": "inf", "extra": 0}"#,
            r#"{"p": 2, "c": [[[1,0]]], "radius": "inf"}"#,
        ] {
            assert!(serde_json::from_str::<KernelCoefficients>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn roundtrip_preset() {
        let k = KernelCoefficients::polynomial(3);
        let back: KernelCoefficients = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
        assert_eq!(back.size(), 4);
        for j in 0..4 {
            assert_eq!(back.scalar_coefficient(j, j), k.scalar_coefficient(j, j));
        }
    }
}
