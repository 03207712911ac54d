//! Concrete finite-dimensional topological algebras with involution and
//! a duality pairing.
//!
//! Four families are supported: complex (or real) `n×n` matrices, the real
//! quaternions, the Grassmann algebra on `N ≤ 12` generators, and truncated
//! weighted sequences under the Cauchy product. Every element stores its
//! coordinates over the complex numbers; for real algebras the imaginary
//! parts are pinned to zero on construction.

mod grassmann;
mod json;
mod strong;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::C64;

pub use grassmann::{reversal_sign, wedge_sign, GrassmannBasis, MAX_GENERATORS};
pub use strong::{
    power_bound_check, power_norm_bound, verify_strong_inequality, PowerBoundCheck, StrongAlgebraWitness,
    StrongInequalityReport,
};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarField {
    Real,
    Complex,
}

impl ScalarField {
    /// Conjugation in the field; the identity on the reals.
    pub fn conj(self, c: C64) -> C64 {
        match self {
            ScalarField::Real => C64::new(c.re, 0.0),
            ScalarField::Complex => c.conj(),
        }
    }

    fn pin(self, c: C64) -> C64 {
        match self {
            ScalarField::Real => C64::new(c.re, 0.0),
            ScalarField::Complex => c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlgebraKind {
    Matrix {
        n: usize,
    },
    Quaternion,
    Grassmann {
        generators: usize,
    },
    /// Sequences `x_0..x_{L-1}` with weights `beta^{-n t}` in the level norms.
    WeightedSeq {
        len: usize,
        beta: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraDescriptor {
    kind: AlgebraKind,
    field: ScalarField,
}

impl AlgebraDescriptor {
    pub fn new(kind: AlgebraKind, field: ScalarField) -> Result<Self> {
        match kind {
            AlgebraKind::Matrix { n: 0 } => {
                return Err(Error::InvalidDescriptor("matrix size must be at least 1".into()))
            }
            AlgebraKind::Quaternion if field != ScalarField::Real => {
                return Err(Error::InvalidDescriptor(
                    "quaternions are an algebra over the reals".into(),
                ))
            }
            AlgebraKind::Grassmann { generators } if generators > MAX_GENERATORS => {
                return Err(Error::InvalidDescriptor(format!(
                    "grassmann supports at most {MAX_GENERATORS} generators, got {generators}"
                )))
            }
            AlgebraKind::WeightedSeq { len: 0, .. } => {
                return Err(Error::InvalidDescriptor("sequence length must be at least 1".into()))
            }
            AlgebraKind::WeightedSeq { beta, .. } if !(beta > 1.0) || !beta.is_finite() => {
                return Err(Error::InvalidDescriptor(format!(
                    "sequence weight base must be finite and > 1, got {beta}"
                )))
            }
            _ => {}
        }
        Ok(Self { kind, field })
    }

    pub fn matrix(n: usize, field: ScalarField) -> Result<Self> {
        Self::new(AlgebraKind::Matrix { n }, field)
    }

    pub fn quaternion() -> Self {
        Self {
            kind: AlgebraKind::Quaternion,
            field: ScalarField::Real,
        }
    }

    pub fn grassmann(generators: usize, field: ScalarField) -> Result<Self> {
        Self::new(AlgebraKind::Grassmann { generators }, field)
    }

    pub fn weighted_seq(len: usize, beta: f64, field: ScalarField) -> Result<Self> {
        Self::new(AlgebraKind::WeightedSeq { len, beta }, field)
    }

    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            AlgebraKind::Matrix { n } => n * n,
            AlgebraKind::Quaternion => 4,
            AlgebraKind::Grassmann { generators } => 1 << generators,
            AlgebraKind::WeightedSeq { len, .. } => len,
        }
    }

    pub fn ensure_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::DescriptorMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl fmt::Display for AlgebraDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let field = match self.field {
            ScalarField::Real => "real",
            ScalarField::Complex => "complex",
        };
        match self.kind {
            AlgebraKind::Matrix { n } => write!(f, "matrix({n}, {field})"),
            AlgebraKind::Quaternion => write!(f, "quaternion"),
            AlgebraKind::Grassmann { generators } => write!(f, "grassmann({generators}, {field})"),
            AlgebraKind::WeightedSeq { len, beta } => {
                write!(f, "weighted_seq(L={len}, beta={beta}, {field})")
            }
        }
    }
}

/// An element of one of the concrete algebras, in its canonical basis.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    descriptor: AlgebraDescriptor,
    coords: Vec<C64>,
}

/// A continuous linear functional on the algebra, stored by coordinates
/// against the same basis. See [`pair`] for the pairing convention.
#[derive(Clone, Debug, PartialEq)]
pub struct DualFunctional {
    descriptor: AlgebraDescriptor,
    coords: Vec<C64>,
}

fn checked_coords(descriptor: &AlgebraDescriptor, coords: Vec<C64>) -> Result<Vec<C64>> {
    if coords.len() != descriptor.dim() {
        return Err(Error::DimensionMismatch {
            expected: descriptor.dim(),
            found: coords.len(),
        });
    }
    Ok(coords.into_iter().map(|c| descriptor.field.pin(c)).collect())
}

impl AlgebraElement {
    pub fn new(descriptor: AlgebraDescriptor, coords: Vec<C64>) -> Result<Self> {
        let coords = checked_coords(&descriptor, coords)?;
        Ok(Self { descriptor, coords })
    }

    pub fn zero(descriptor: AlgebraDescriptor) -> Self {
        Self {
            descriptor,
            coords: vec![ZERO; descriptor.dim()],
        }
    }

    pub fn unit(descriptor: AlgebraDescriptor) -> Self {
        Self::scalar(descriptor, ONE)
    }

    /// `c · unit`.
    pub fn scalar(descriptor: AlgebraDescriptor, c: C64) -> Self {
        let mut e = Self::zero(descriptor);
        let c = descriptor.field.pin(c);
        match descriptor.kind {
            AlgebraKind::Matrix { n } => {
                for i in 0..n {
                    e.coords[i * n + i] = c;
                }
            }
            _ => e.coords[0] = c,
        }
        e
    }

    pub fn from_matrix(m: &CMatrix, field: ScalarField) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidArgument("matrix element must be square".into()));
        }
        let descriptor = AlgebraDescriptor::matrix(m.rows(), field)?;
        Self::new(descriptor, m.as_slice().to_vec())
    }

    /// `w + x i + y j + z k`.
    pub fn quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self {
            descriptor: AlgebraDescriptor::quaternion(),
            coords: [w, x, y, z].iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }

    /// Generator `e_i`, 1-based.
    pub fn grassmann_generator(descriptor: AlgebraDescriptor, i: usize) -> Result<Self> {
        let AlgebraKind::Grassmann { generators } = descriptor.kind else {
            return Err(Error::InvalidArgument("not a grassmann algebra".into()));
        };
        if i == 0 || i > generators {
            return Err(Error::InvalidArgument(format!(
                "generator index {i} outside 1..={generators}"
            )));
        }
        let basis = GrassmannBasis::get(generators);
        let mut e = Self::zero(descriptor);
        e.coords[basis.index(1 << (i - 1))] = ONE;
        Ok(e)
    }

    /// Monomial `e_S` for a set of 1-based generator indices, with the sign
    /// that results from sorting them.
    pub fn grassmann_monomial(descriptor: AlgebraDescriptor, gens: &[usize]) -> Result<Self> {
        let mut e = Self::unit(descriptor);
        for &g in gens {
            e = e.mul(&Self::grassmann_generator(descriptor, g)?)?;
        }
        Ok(e)
    }

    pub fn descriptor(&self) -> &AlgebraDescriptor {
        &self.descriptor
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| *c == ZERO)
    }

    /// Matrix view; only meaningful for the matrix family.
    pub fn to_matrix(&self) -> Option<CMatrix> {
        match self.descriptor.kind {
            AlgebraKind::Matrix { n } => Some(CMatrix::from_row_major(n, n, self.coords.clone())),
            _ => None,
        }
    }

    /// Coefficient on the unit: the body of a Grassmann element, the real
    /// part of a quaternion, `x_0` of a sequence, `trace/n` of a matrix.
    pub fn body(&self) -> C64 {
        match self.descriptor.kind {
            AlgebraKind::Matrix { n } => (0..n).map(|i| self.coords[i * n + i]).sum::<C64>() / n as f64,
            _ => self.coords[0],
        }
    }

    /// `self − body·unit`.
    pub fn soul(&self) -> Self {
        let mut s = self.clone();
        s.add_scaled(-self.body(), &Self::unit(self.descriptor));
        s
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.descriptor.ensure_same(&rhs.descriptor)?;
        let mut out = self.clone();
        out.add_scaled(ONE, rhs);
        Ok(out)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.descriptor.ensure_same(&rhs.descriptor)?;
        let mut out = self.clone();
        out.add_scaled(-ONE, rhs);
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        let c = self.descriptor.field.pin(c);
        Self {
            descriptor: self.descriptor,
            coords: self.coords.iter().map(|x| x * c).collect(),
        }
    }

    /// `self += c · other`, descriptors assumed equal.
    pub(crate) fn add_scaled(&mut self, c: C64, other: &Self) {
        debug_assert_eq!(self.descriptor, other.descriptor);
        let c = self.descriptor.field.pin(c);
        for (x, y) in self.coords.iter_mut().zip(&other.coords) {
            *x += c * y;
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Product in the algebra.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.descriptor.ensure_same(&rhs.descriptor)?;
        Ok(self.mul_same(rhs))
    }

    pub(crate) fn mul_same(&self, rhs: &Self) -> Self {
        let coords = match self.descriptor.kind {
            AlgebraKind::Matrix { n } => matrix_product(n, &self.coords, &rhs.coords),
            AlgebraKind::Quaternion => hamilton_product(&self.coords, &rhs.coords).to_vec(),
            AlgebraKind::Grassmann { generators } => {
                wedge_product(GrassmannBasis::get(generators), &self.coords, &rhs.coords)
            }
            AlgebraKind::WeightedSeq { len, .. } => cauchy_product(len, &self.coords, &rhs.coords),
        };
        Self {
            descriptor: self.descriptor,
            coords,
        }
    }

    /// `A^n`, with `A^0` the unit.
    pub fn power(&self, n: usize) -> Self {
        let mut p = Self::unit(self.descriptor);
        for _ in 0..n {
            p = p.mul_same(self);
        }
        p
    }

    /// `[A^0, A^1, …, A^n]`, computed by repeated right multiplication.
    pub fn powers(&self, n: usize) -> Vec<Self> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(Self::unit(self.descriptor));
        for k in 1..=n {
            let next = out[k - 1].mul_same(self);
            out.push(next);
        }
        out
    }

    /// The involution `A ↦ A*`: conjugate-linear and product reversing.
    pub fn involution(&self) -> Self {
        let field = self.descriptor.field;
        let coords = match self.descriptor.kind {
            AlgebraKind::Matrix { n } => {
                let mut out = vec![ZERO; n * n];
                for i in 0..n {
                    for j in 0..n {
                        out[j * n + i] = field.conj(self.coords[i * n + j]);
                    }
                }
                out
            }
            AlgebraKind::Quaternion => {
                let c = &self.coords;
                vec![c[0], -c[1], -c[2], -c[3]]
            }
            AlgebraKind::Grassmann { generators } => {
                let basis = GrassmannBasis::get(generators);
                self.coords
                    .iter()
                    .enumerate()
                    .map(|(i, c)| field.conj(*c) * reversal_sign(basis.degree(i)))
                    .collect()
            }
            AlgebraKind::WeightedSeq { .. } => self.coords.iter().map(|c| field.conj(*c)).collect(),
        };
        Self {
            descriptor: self.descriptor,
            coords,
        }
    }

    /// Level norm `‖A‖_t`. `t` only affects weighted sequences.
    ///
    /// Matrix: Frobenius (an upper bound for the operator 2-norm).
    /// Quaternion: modulus. Grassmann: ℓ₁ on coefficients.
    /// Weighted sequence: `Σ |x_n| β^{-n t}`.
    pub fn level_norm(&self, t: f64) -> f64 {
        match self.descriptor.kind {
            AlgebraKind::Matrix { .. } | AlgebraKind::Quaternion => {
                self.coords.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
            }
            AlgebraKind::Grassmann { .. } => self.coords.iter().map(|c| c.norm()).sum(),
            AlgebraKind::WeightedSeq { beta, .. } => self
                .coords
                .iter()
                .enumerate()
                .map(|(n, c)| c.norm() * beta.powf(-(n as f64) * t))
                .sum(),
        }
    }

    pub fn random<R: Rng + ?Sized>(descriptor: AlgebraDescriptor, scale: f64, rng: &mut R) -> Self {
        let coords = random_coords(&descriptor, scale, rng);
        Self { descriptor, coords }
    }

    /// Random element with zero body.
    pub fn random_soul<R: Rng + ?Sized>(descriptor: AlgebraDescriptor, scale: f64, rng: &mut R) -> Self {
        Self::random(descriptor, scale, rng).soul()
    }
}

fn random_coords<R: Rng + ?Sized>(d: &AlgebraDescriptor, scale: f64, rng: &mut R) -> Vec<C64> {
    (0..d.dim())
        .map(|_| {
            let re = rng.gen_range(-scale..=scale);
            let im = match d.field {
                ScalarField::Real => 0.0,
                ScalarField::Complex => rng.gen_range(-scale..=scale),
            };
            C64::new(re, im)
        })
        .collect()
}

impl DualFunctional {
    pub fn new(descriptor: AlgebraDescriptor, coords: Vec<C64>) -> Result<Self> {
        let coords = checked_coords(&descriptor, coords)?;
        Ok(Self { descriptor, coords })
    }

    /// The functional whose coordinates coincide with those of `e`.
    pub fn from_element(e: &AlgebraElement) -> Self {
        Self {
            descriptor: e.descriptor,
            coords: e.coords.clone(),
        }
    }

    /// Coordinate functional on basis index `i`.
    pub fn coordinate(descriptor: AlgebraDescriptor, i: usize) -> Result<Self> {
        if i >= descriptor.dim() {
            return Err(Error::DimensionMismatch {
                expected: descriptor.dim(),
                found: i,
            });
        }
        let mut coords = vec![ZERO; descriptor.dim()];
        coords[i] = ONE;
        Ok(Self { descriptor, coords })
    }

    pub fn descriptor(&self) -> &AlgebraDescriptor {
        &self.descriptor
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn scale(&self, c: C64) -> Self {
        let c = self.descriptor.field.pin(c);
        Self {
            descriptor: self.descriptor,
            coords: self.coords.iter().map(|x| x * c).collect(),
        }
    }

    /// Dual involution `a ↦ a*`, defined so that `conj⟨a,A⟩ = ⟨a*,A*⟩`.
    pub fn involution(&self) -> Self {
        // The pairing is a conjugated coordinate dot product in every family,
        // so the dual involution acts on coordinates exactly like the
        // involution on elements.
        let as_elem = AlgebraElement {
            descriptor: self.descriptor,
            coords: self.coords.clone(),
        };
        Self::from_element(&as_elem.involution())
    }

    /// Dual norm of the coordinate pairing against `level_norm(·, t)`, so
    /// that `|⟨a, A⟩| ≤ ‖a‖′ ‖A‖_t`.
    pub fn dual_norm(&self, t: f64) -> f64 {
        match self.descriptor.kind {
            AlgebraKind::Matrix { .. } | AlgebraKind::Quaternion => {
                self.coords.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
            }
            AlgebraKind::Grassmann { .. } => self.coords.iter().map(|c| c.norm()).fold(0.0, f64::max),
            AlgebraKind::WeightedSeq { beta, .. } => self
                .coords
                .iter()
                .enumerate()
                .map(|(n, c)| c.norm() * beta.powf(n as f64 * t))
                .fold(0.0, f64::max),
        }
    }

    pub fn random<R: Rng + ?Sized>(descriptor: AlgebraDescriptor, scale: f64, rng: &mut R) -> Self {
        let coords = random_coords(&descriptor, scale, rng);
        Self { descriptor, coords }
    }
}

/// Duality pairing `⟨a, A⟩`.
///
/// Matrix: `trace(a^H A)`. Quaternion: `Re(conj(a) A)`. Grassmann and
/// weighted sequences: `Σ conj(a_i) A_i`. All four reduce to the conjugated
/// coordinate dot product in the canonical basis.
pub fn pair(a: &DualFunctional, x: &AlgebraElement) -> Result<C64> {
    a.descriptor.ensure_same(&x.descriptor)?;
    Ok(pair_same(a, x))
}

pub(crate) fn pair_same(a: &DualFunctional, x: &AlgebraElement) -> C64 {
    let field = a.descriptor.field;
    a.coords
        .iter()
        .zip(&x.coords)
        .map(|(ai, xi)| field.conj(*ai) * xi)
        .sum()
}

fn matrix_product(n: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == ZERO {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

fn hamilton_product(p: &[C64], q: &[C64]) -> [C64; 4] {
    let (a1, b1, c1, d1) = (p[0], p[1], p[2], p[3]);
    let (a2, b2, c2, d2) = (q[0], q[1], q[2], q[3]);
    [
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ]
}

fn wedge_product(basis: &GrassmannBasis, a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; basis.dim()];
    for (i, ai) in a.iter().enumerate() {
        if *ai == ZERO {
            continue;
        }
        let s = basis.mask(i);
        for (j, bj) in b.iter().enumerate() {
            if *bj == ZERO {
                continue;
            }
            let t = basis.mask(j);
            if s & t != 0 {
                continue;
            }
            out[basis.index(s | t)] += ai * bj * wedge_sign(s, t);
        }
    }
    out
}

fn cauchy_product(len: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; len];
    for (i, ai) in a.iter().enumerate() {
        if *ai == ZERO {
            continue;
        }
        for (j, bj) in b.iter().take(len - i).enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}
