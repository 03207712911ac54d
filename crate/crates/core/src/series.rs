//! Power-series evaluation of analytic functions at shifted algebra
//! arguments: `f(z + A) = Σ Aⁿ f⁽ⁿ⁾(z)/n!`, its weak (paired) form, the
//! pairing sequences `⟨a*, Aⁿ⟩`, and certified truncation tails.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::{
    pair, pair_same, power_norm_bound, AlgebraElement, AlgebraKind, DualFunctional, ScalarField, StrongAlgebraWitness,
};
use crate::error::{Error, Result};
use crate::linalg::inverse_factorials;
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Radius of convergence of a power series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Radius {
    Finite(f64),
    Infinite,
}

impl Radius {
    pub fn contains(&self, modulus: f64) -> bool {
        match self {
            Radius::Finite(r) => modulus < *r,
            Radius::Infinite => modulus.is_finite(),
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Radius::Finite(r) => *r,
            Radius::Infinite => f64::INFINITY,
        }
    }

    pub(crate) fn check(&self, modulus: f64) -> Result<()> {
        if self.contains(modulus) {
            Ok(())
        } else {
            Err(Error::RadiusViolation {
                modulus,
                radius: self.value(),
            })
        }
    }

    /// Radius of the series re-expanded about a point at distance `shift`.
    pub fn shrink(&self, shift: f64) -> Radius {
        match self {
            Radius::Finite(r) => Radius::Finite(r - shift),
            Radius::Infinite => Radius::Infinite,
        }
    }
}

impl Serialize for Radius {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Radius::Finite(r) => s.serialize_f64(*r),
            Radius::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Radius {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(r) if r > 0.0 => Ok(Radius::Finite(r)),
            Raw::Num(r) => Err(serde::de::Error::custom(format!("radius must be positive, got {r}"))),
            Raw::Str(s) if s == "inf" => Ok(Radius::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "radius must be a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// A scalar analytic function given by Taylor coefficients about 0:
/// `f(ζ) = Σ c_k ζᵏ`, with coefficients past the stored ones taken as zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntireFunctionRep {
    #[serde(with = "crate::complex_pairs")]
    coeffs: Vec<C64>,
    radius: Radius,
}

impl EntireFunctionRep {
    pub fn new(coeffs: Vec<C64>, radius: Radius) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("function needs at least one coefficient".into()));
        }
        if let Radius::Finite(r) = radius {
            if !(r > 0.0) {
                return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
            }
        }
        Ok(Self { coeffs, radius })
    }

    pub fn polynomial(coeffs: &[f64]) -> Self {
        Self {
            coeffs: if coeffs.is_empty() {
                vec![ZERO]
            } else {
                coeffs.iter().map(|&c| C64::new(c, 0.0)).collect()
            },
            radius: Radius::Infinite,
        }
    }

    pub fn exp(terms: usize) -> Self {
        Self {
            coeffs: inverse_factorials(terms.max(1))
                .into_iter()
                .map(|c| C64::new(c, 0.0))
                .collect(),
            radius: Radius::Infinite,
        }
    }

    pub fn sin(terms: usize) -> Self {
        let inv = inverse_factorials(terms.max(1));
        let coeffs = inv
            .iter()
            .enumerate()
            .map(|(k, c)| match k % 4 {
                1 => C64::new(*c, 0.0),
                3 => C64::new(-*c, 0.0),
                _ => ZERO,
            })
            .collect();
        Self {
            coeffs,
            radius: Radius::Infinite,
        }
    }

    pub fn cos(terms: usize) -> Self {
        let inv = inverse_factorials(terms.max(1));
        let coeffs = inv
            .iter()
            .enumerate()
            .map(|(k, c)| match k % 4 {
                0 => C64::new(*c, 0.0),
                2 => C64::new(-*c, 0.0),
                _ => ZERO,
            })
            .collect();
        Self {
            coeffs,
            radius: Radius::Infinite,
        }
    }

    /// `1/(1 − ζ)`, radius 1.
    pub fn geom(terms: usize) -> Self {
        Self {
            coeffs: vec![C64::new(1.0, 0.0); terms.max(1)],
            radius: Radius::Finite(1.0),
        }
    }

    /// Named preset: `exp`, `sin`, `cos` or `geom`.
    pub fn preset(name: &str, terms: usize) -> Result<Self> {
        match name {
            "exp" => Ok(Self::exp(terms)),
            "sin" => Ok(Self::sin(terms)),
            "cos" => Ok(Self::cos(terms)),
            "geom" => Ok(Self::geom(terms)),
            other => Err(Error::InvalidArgument(format!("unknown function preset `{other}`"))),
        }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn radius(&self) -> Radius {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Same radius, new coefficient array.
    pub fn with_coeffs(&self, coeffs: Vec<C64>) -> Self {
        Self {
            coeffs: if coeffs.is_empty() { vec![ZERO] } else { coeffs },
            radius: self.radius,
        }
    }

    /// Horner evaluation at a scalar.
    pub fn eval(&self, zeta: C64) -> Result<C64> {
        self.radius.check(zeta.norm())?;
        Ok(self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * zeta + c))
    }

    /// `ζ ↦ f(ζ + h)`, re-expanded about 0.
    pub fn shifted(&self, h: C64) -> Result<Self> {
        Ok(Self {
            coeffs: taylor_shift(self, h)?,
            radius: self.radius.shrink(h.norm()),
        })
    }

    pub fn derivative(&self) -> Self {
        let coeffs: Vec<C64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * k as f64)
            .collect();
        self.with_coeffs(coeffs)
    }

    /// `α f + g`, truncated to the longer coefficient array; the radius is the smaller one.
    pub fn axpy(alpha: C64, f: &Self, g: &Self) -> Self {
        let n = f.len().max(g.len());
        let at = |v: &[C64], k: usize| v.get(k).copied().unwrap_or(ZERO);
        let coeffs = (0..n).map(|k| alpha * at(&f.coeffs, k) + at(&g.coeffs, k)).collect();
        let radius = match (f.radius, g.radius) {
            (Radius::Infinite, r) | (r, Radius::Infinite) => r,
            (Radius::Finite(a), Radius::Finite(b)) => Radius::Finite(a.min(b)),
        };
        Self { coeffs, radius }
    }
}

/// Coefficients `g_n = f⁽ⁿ⁾(z)/n!` of `f` re-expanded about `z`, by repeated
/// Horner re-centering (synthetic division). Exact for polynomials up to rounding.
pub fn taylor_shift(f: &EntireFunctionRep, z: C64) -> Result<Vec<C64>> {
    f.radius.check(z.norm())?;
    let mut c = f.coeffs.clone();
    if z == ZERO {
        return Ok(c);
    }
    let m = c.len();
    for i in 0..m {
        for j in (i..m - 1).rev() {
            let next = c[j + 1];
            c[j] += z * next;
        }
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationPolicy {
    /// Number of series terms tried first.
    #[serde(rename = "N")]
    pub order: usize,
    pub tail_tol: f64,
    #[serde(default = "TruncationPolicy::default_max_terms")]
    pub max_terms: usize,
    /// Norm level `t` used for the tail bound (weighted sequences only).
    #[serde(default)]
    pub level: f64,
}

impl TruncationPolicy {
    pub fn new(order: usize, tail_tol: f64) -> Self {
        Self {
            order,
            tail_tol,
            max_terms: Self::default_max_terms().max(order),
            level: 0.0,
        }
    }

    fn default_max_terms() -> usize {
        400
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidArgument("truncation order must be positive".into()));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::InvalidArgument("tail_tol must be positive".into()));
        }
        if self.order > self.max_terms {
            return Err(Error::InvalidArgument(format!(
                "truncation order {} exceeds max_terms {}",
                self.order, self.max_terms
            )));
        }
        Ok(())
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self::new(20, 1e-12)
    }
}

/// A truncated series value with a bound on the discarded remainder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certified<T> {
    pub value: T,
    pub tail_bound: f64,
    pub terms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PartialSum {
    Element(AlgebraElement),
    #[serde(with = "crate::complex_pair")]
    Scalar(C64),
}

/// What a failed certification leaves behind.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonConvergence {
    pub partial: PartialSum,
    pub tail_bound: f64,
    pub terms: usize,
    pub tail_tol: f64,
}

/// Shared setup for `eval_ext` / `eval_weak`: shifted coefficients, the
/// element whose powers are summed, and whether those powers terminate.
struct SeriesSetup {
    coeffs: Vec<C64>,
    base: AlgebraElement,
    nilpotent_terms: Option<usize>,
}

fn setup(f: &EntireFunctionRep, z: C64, a: &AlgebraElement, pol: &TruncationPolicy) -> Result<SeriesSetup> {
    pol.validate()?;
    let desc = *a.descriptor();
    if desc.field() == ScalarField::Real && (z.im != 0.0 || f.coeffs.iter().any(|c| c.im != 0.0)) {
        return Err(Error::InvalidArgument(
            "complex base point or coefficients over a real algebra".into(),
        ));
    }
    if let AlgebraKind::Grassmann { generators } = desc.kind() {
        // Recenter on the body so that only the nilpotent soul is raised to powers.
        let body = a.body();
        let center = z + body;
        let coeffs = taylor_shift(f, center)?;
        return Ok(SeriesSetup {
            coeffs,
            base: a.soul(),
            nilpotent_terms: Some(generators + 1),
        });
    }
    let witness = StrongAlgebraWitness::unit(pol.level);
    if let Radius::Finite(r) = f.radius {
        let reach = z.norm() + witness.d_t * a.level_norm(pol.level);
        if !(reach < r) {
            return Err(Error::RadiusViolation {
                modulus: reach,
                radius: r,
            });
        }
    }
    Ok(SeriesSetup {
        coeffs: taylor_shift(f, z)?,
        base: a.clone(),
        nilpotent_terms: None,
    })
}

/// `suffix[k] = Σ_{j ≥ k} |g_j| · bound(A^j)` with `bound` from the power-norm inequality.
fn tail_suffix(coeffs: &[C64], a: &AlgebraElement, witness: &StrongAlgebraWitness, scale: f64) -> Vec<f64> {
    let mut suffix = vec![0.0; coeffs.len() + 1];
    for k in (0..coeffs.len()).rev() {
        let g = coeffs[k].norm();
        let term = if g == 0.0 {
            0.0
        } else {
            g * power_norm_bound(a, k, witness) * scale
        };
        suffix[k] = suffix[k + 1] + term;
    }
    suffix
}

/// Runs the truncated series, calling `accumulate(g_n, Aⁿ)` per term.
fn run_series(
    s: &SeriesSetup,
    pol: &TruncationPolicy,
    tail_scale: f64,
    mut accumulate: impl FnMut(C64, &AlgebraElement),
) -> (usize, f64, bool) {
    let witness = StrongAlgebraWitness::unit(pol.level);
    let limit = s.coeffs.len();
    if let Some(nil) = s.nilpotent_terms {
        let terms = nil.min(limit);
        let mut p = AlgebraElement::unit(*s.base.descriptor());
        for n in 0..terms {
            accumulate(s.coeffs[n], &p);
            p = p.mul_same(&s.base);
        }
        return (terms, 0.0, true);
    }
    let suffix = tail_suffix(&s.coeffs, &s.base, &witness, tail_scale);
    let cap = pol.max_terms.min(limit);
    let mut p = AlgebraElement::unit(*s.base.descriptor());
    let mut n = 0;
    loop {
        if n >= limit {
            return (n, 0.0, true);
        }
        if p.is_zero() {
            // every later power vanishes as well
            return (n, 0.0, true);
        }
        accumulate(s.coeffs[n], &p);
        n += 1;
        if n >= limit {
            return (n, 0.0, true);
        }
        let tail = suffix[n];
        if n >= pol.order && tail <= pol.tail_tol {
            return (n, tail, true);
        }
        if n >= cap {
            return (n, tail, false);
        }
        p = p.mul_same(&s.base);
    }
}

/// `f(z + A)` as an algebra element, with tail certificate.
///
/// The tail bound is `Σ_{n ≥ terms} |f⁽ⁿ⁾(z)/n!| d^{n−1} ‖A‖ⁿ`. For
/// Grassmann arguments the series is recentered on the body and terminates
/// exactly after `N + 1` soul powers; a power that vanishes exactly also
/// ends the series with a zero tail.
pub fn eval_ext(
    f: &EntireFunctionRep,
    z: C64,
    a: &AlgebraElement,
    pol: &TruncationPolicy,
) -> Result<Certified<AlgebraElement>> {
    let s = setup(f, z, a, pol)?;
    let mut acc = AlgebraElement::zero(*a.descriptor());
    let (terms, tail, ok) = run_series(&s, pol, 1.0, |g, p| acc.add_scaled(g, p));
    if !ok {
        return Err(Error::NonConvergence(Box::new(NonConvergence {
            partial: PartialSum::Element(acc),
            tail_bound: tail,
            terms,
            tail_tol: pol.tail_tol,
        })));
    }
    Ok(Certified {
        value: acc,
        tail_bound: tail,
        terms,
    })
}

/// `Σ ⟨a, Aⁿ⟩ f⁽ⁿ⁾(z)/n!`, the weak form of [`eval_ext`]. The tail bound
/// carries the extra factor `‖a‖′`.
pub fn eval_weak(
    f: &EntireFunctionRep,
    z: C64,
    a: &AlgebraElement,
    functional: &DualFunctional,
    pol: &TruncationPolicy,
) -> Result<Certified<C64>> {
    pair(functional, a)?;
    let s = setup(f, z, a, pol)?;
    let mut acc = ZERO;
    let scale = functional.dual_norm(pol.level);
    let (terms, tail, ok) = run_series(&s, pol, scale, |g, p| acc += g * pair_same(functional, p));
    if !ok {
        return Err(Error::NonConvergence(Box::new(NonConvergence {
            partial: PartialSum::Scalar(acc),
            tail_bound: tail,
            terms,
            tail_tol: pol.tail_tol,
        })));
    }
    Ok(Certified {
        value: acc,
        tail_bound: tail,
        terms,
    })
}

/// Pairing sequence `x_n = ⟨a*, Aⁿ⟩`, `n < N`: the weights that multiply
/// `f⁽ⁿ⁾(z)/n!` in the weak series and index the extended kernel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XVector {
    #[serde(with = "crate::complex_pairs")]
    pub entries: Vec<C64>,
}

impl XVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Unit vector on index 0 of length `n`.
    pub fn unit(n: usize) -> Self {
        let mut entries = vec![ZERO; n.max(1)];
        entries[0] = C64::new(1.0, 0.0);
        Self { entries }
    }

    /// Entries of a general sequence `(A_n)`: `⟨a*, A_n⟩`.
    pub fn from_sequence(a: &DualFunctional, seq: &[AlgebraElement]) -> Result<Self> {
        let star = a.involution();
        let entries = seq.iter().map(|e| pair(&star, e)).collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }

    /// Bilinear pairing `Σ x_n v_n`.
    pub fn dot(&self, v: &[C64]) -> C64 {
        self.entries.iter().zip(v).map(|(x, y)| x * y).sum()
    }
}

pub fn x_vector(a: &DualFunctional, x: &AlgebraElement, n: usize) -> Result<XVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("x_vector length must be at least 1".into()));
    }
    let star = a.involution();
    pair(&star, x)?;
    let mut entries = Vec::with_capacity(n);
    let mut p = AlgebraElement::unit(*x.descriptor());
    for k in 0..n {
        entries.push(pair_same(&star, &p));
        if k + 1 < n {
            p = p.mul_same(x);
        }
    }
    Ok(XVector { entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ell2Verdict {
    /// A geometric or finite (nilpotent) bound proves summability.
    Certified,
    /// No proof, but the partial sums of `|x_n|²` plateau numerically.
    Numeric,
    NotSummable,
}

#[derive(Clone, Debug, Serialize)]
pub struct Ell2Report {
    pub verdict: Ell2Verdict,
    /// Geometric ratio `(d ‖A‖_t)²` of the squared terms.
    pub ratio: f64,
    /// Upper bound on `Σ |⟨a*, Aⁿ⟩|²` when certified.
    pub bound: Option<f64>,
    /// Partial sum of `|⟨a*, Aⁿ⟩|²` over the computed terms.
    pub partial_sum: f64,
    pub terms: usize,
}

const ELL2_NUMERIC_TERMS: usize = 400;
const NILPOTENCE_PROBE: usize = 64;

/// Whether `(⟨a*, Aⁿ⟩)_n` is square summable.
pub fn ell2_check(a: &DualFunctional, x: &AlgebraElement, t: f64) -> Result<Ell2Report> {
    let star = a.involution();
    pair(&star, x)?;
    let witness = StrongAlgebraWitness::unit(t);
    let q = witness.d_t * x.level_norm(t);
    let a_norm = star.dual_norm(t);

    // exact zero power: a finite sequence
    let probe = NILPOTENCE_PROBE.min(x.descriptor().dim() + 1);
    let mut p = AlgebraElement::unit(*x.descriptor());
    let mut partial = 0.0;
    for n in 0..=probe {
        if p.is_zero() {
            return Ok(Ell2Report {
                verdict: Ell2Verdict::Certified,
                ratio: q * q,
                bound: Some(partial),
                partial_sum: partial,
                terms: n,
            });
        }
        partial += pair_same(&star, &p).norm_sqr();
        p = p.mul_same(x);
    }

    if q < 1.0 {
        let x0 = pair_same(&star, &AlgebraElement::unit(*x.descriptor())).norm_sqr();
        let bound = x0 + a_norm * a_norm * q * q / (1.0 - q * q);
        return Ok(Ell2Report {
            verdict: Ell2Verdict::Certified,
            ratio: q * q,
            bound: Some(bound),
            partial_sum: partial,
            terms: probe + 1,
        });
    }

    let mut p = AlgebraElement::unit(*x.descriptor());
    let mut sums = Vec::with_capacity(ELL2_NUMERIC_TERMS);
    let mut s = 0.0;
    for _ in 0..ELL2_NUMERIC_TERMS {
        s += pair_same(&star, &p).norm_sqr();
        if !s.is_finite() {
            break;
        }
        sums.push(s);
        p = p.mul_same(x);
    }
    let plateau = sums.len() == ELL2_NUMERIC_TERMS && {
        let last = sums[sums.len() - 1];
        let earlier = sums[sums.len() - 21];
        last - earlier <= 1e-14 * last.max(f64::MIN_POSITIVE)
    };
    Ok(Ell2Report {
        verdict: if plateau {
            Ell2Verdict::Numeric
        } else {
            Ell2Verdict::NotSummable
        },
        ratio: q * q,
        bound: None,
        partial_sum: sums.last().copied().unwrap_or(f64::INFINITY),
        terms: sums.len(),
    })
}

/// Truncated `Σ A_n f_n`.
pub fn a_valued_sum(seq: &[AlgebraElement], f_vals: &[C64]) -> Result<AlgebraElement> {
    if seq.len() != f_vals.len() {
        return Err(Error::DimensionMismatch {
            expected: seq.len(),
            found: f_vals.len(),
        });
    }
    let Some(first) = seq.first() else {
        return Err(Error::InvalidArgument("empty sequence".into()));
    };
    let mut acc = AlgebraElement::zero(*first.descriptor());
    for (e, f) in seq.iter().zip(f_vals) {
        if e.descriptor() != first.descriptor() {
            return Err(Error::DescriptorMismatch {
                left: first.descriptor().to_string(),
                right: e.descriptor().to_string(),
            });
        }
        acc.add_scaled(*f, e);
    }
    Ok(acc)
}
