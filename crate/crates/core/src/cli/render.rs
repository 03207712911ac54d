//! JSON and CSV rendering of numeric results.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::algebra::{AlgebraElement, AlgebraKind, ScalarField};
use crate::linalg::CMatrix;
use crate::C64;

/// Finite floats as numbers; `inf` and `nan` as strings, since JSON has neither.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn cx(c: C64) -> Value {
    json!([num(c.re), num(c.im)])
}

pub fn cx_list(v: &[C64]) -> Value {
    Value::Array(v.iter().map(|&c| cx(c)).collect())
}

/// Rows of `[re, im]` pairs, or of plain reals when `real` is set.
pub fn matrix(m: &CMatrix, real: bool) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array(m.row(i).iter().map(|&c| if real { num(c.re) } else { cx(c) }).collect()))
            .collect(),
    )
}

/// The element's JSON form, plus a `"matrix"` view for matrix algebras.
pub fn element(e: &AlgebraElement) -> Value {
    let mut v = serde_json::to_value(e).expect("elements serialize");
    if let (AlgebraKind::Matrix { .. }, Some(m)) = (e.descriptor().kind(), e.to_matrix()) {
        let real = e.descriptor().field() == ScalarField::Real;
        v["matrix"] = matrix(&m, real);
    }
    v
}

/// Shortest round-trip form, with an exponent for small and large values.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

/// One line of compact JSON.
pub fn to_line(v: &Value) -> String {
    let mut s = serde_json::to_string(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Row-major CSV with an `re_j,im_j` column pair per matrix column.
pub fn matrix_csv(m: &CMatrix) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..m.cols())
        .flat_map(|j| [format!("re_{j}"), format!("im_{j}")])
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().flat_map(|c| [float(c.re), float(c.im)]).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// A CSV table from a header and already formatted cells.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_become_strings() {
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(f64::NAN), json!("nan"));
        assert_eq!(num(1.5), json!(1.5));
    }

    #[test]
    fn csv_has_column_pairs() {
        let m = CMatrix::from_row_major(1, 2, vec![C64::new(1.0, -0.5), C64::new(0.0, 2.0)]);
        assert_eq!(matrix_csv(&m), "re_0,im_0,re_1,im_1\n1.0,-0.5,0.0,2.0\n");
    }
}
