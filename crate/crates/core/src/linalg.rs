//! Small dense complex matrices.
//!
//! Only what the kernel and jet code needs: products, adjoints, Kronecker
//! products and a few norms. Storage is row-major.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max |G - G^H| entrywise.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        Self::from_fn(r, c, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "matrix-vector size mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Leading `n`×`n` principal block.
    pub fn leading_block(&self, n: usize) -> Self {
        Self::from_fn(n, n, |i, j| self[(i, j)])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product size mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Binomial coefficients C(j, n) for 0 ≤ n ≤ j < size, via Pascal's rule.
pub(crate) fn binomial_table(size: usize) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; size]; size];
    for j in 0..size {
        table[j][0] = 1.0;
        for n in 1..=j {
            table[j][n] = table[j - 1][n - 1] + if n < j { table[j - 1][n] } else { 0.0 };
        }
    }
    table
}

/// 1/n! for n < len, accumulated as a running quotient.
pub(crate) fn inverse_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut v = 1.0;
    for k in 0..len {
        if k > 0 {
            v /= k as f64;
        }
        out.push(v);
    }
    out
}
