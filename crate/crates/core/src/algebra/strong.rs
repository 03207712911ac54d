//! Graded norm inequalities: the strong-algebra product bound and the
//! power bound `‖Aⁿ‖_{h(t)} ≤ d_t^{n−1} ‖A‖_tⁿ` used for tail certificates.

use rand::Rng;
use serde::Serialize;

use super::{AlgebraDescriptor, AlgebraElement, AlgebraKind};
use crate::error::{Error, Result};

/// Constants of the product inequality at level `t`.
///
/// `c_st` bounds `‖AB‖_s / (‖A‖_t ‖B‖_s)` and `d_t = c_{h(t),t}` drives the
/// power bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StrongAlgebraWitness {
    pub t: f64,
    pub h_of_t: f64,
    pub c_st: f64,
    pub d_t: f64,
}

impl StrongAlgebraWitness {
    /// Witness used by the certificates: `h(t) = t`, `c = d = 1`.
    ///
    /// The four families are normed so that this holds: Frobenius and the
    /// quaternion modulus are submultiplicative, ℓ₁ on Grassmann coefficients
    /// is submultiplicative for the wedge product, and the weights `β^{-nt}`
    /// are multiplicative along the Cauchy product. [`Self::verified`] checks
    /// the claim by sampling.
    pub fn unit(t: f64) -> Self {
        Self {
            t,
            h_of_t: t,
            c_st: 1.0,
            d_t: 1.0,
        }
    }

    /// Witness whose constant is the largest product ratio observed over
    /// `samples` random pairs at `s = t`, floored at 1.
    pub fn verified<R: Rng + ?Sized>(descriptor: AlgebraDescriptor, t: f64, samples: usize, rng: &mut R) -> Self {
        let mut worst: f64 = 1.0;
        for _ in 0..samples {
            let a = AlgebraElement::random(descriptor, 1.0, rng);
            let b = AlgebraElement::random(descriptor, 1.0, rng);
            worst = worst.max(product_ratio(&a, &b, t, t));
        }
        let c = if worst <= 1.0 + 1e-12 { 1.0 } else { worst };
        Self {
            t,
            h_of_t: t,
            c_st: c,
            d_t: c,
        }
    }
}

fn product_ratio(a: &AlgebraElement, b: &AlgebraElement, t: f64, s: f64) -> f64 {
    let denom = a.level_norm(t) * b.level_norm(s);
    if denom == 0.0 {
        return 0.0;
    }
    let ab = a.mul_same(b).level_norm(s);
    let ba = b.mul_same(a).level_norm(s);
    ab.max(ba) / denom
}

#[derive(Clone, Debug, Serialize)]
pub struct StrongInequalityReport {
    pub samples: usize,
    pub t: f64,
    pub s: f64,
    /// max over samples of `max(‖AB‖_s, ‖BA‖_s) / (‖A‖_t ‖B‖_s)`
    pub max_ratio: f64,
}

/// Samples random pairs in a weighted-sequence algebra and records the
/// worst product ratio for levels `s ≥ t`.
pub fn verify_strong_inequality<R: Rng + ?Sized>(
    descriptor: AlgebraDescriptor,
    samples: usize,
    t: f64,
    s: f64,
    rng: &mut R,
) -> Result<StrongInequalityReport> {
    if !matches!(descriptor.kind(), AlgebraKind::WeightedSeq { .. }) {
        return Err(Error::InvalidArgument(
            "strong inequality check needs a weighted_seq algebra".into(),
        ));
    }
    if s < t {
        return Err(Error::InvalidArgument(format!("need s >= t, got s = {s}, t = {t}")));
    }
    let mut max_ratio: f64 = 0.0;
    for _ in 0..samples {
        let a = AlgebraElement::random(descriptor, 1.0, rng);
        let b = AlgebraElement::random(descriptor, 1.0, rng);
        max_ratio = max_ratio.max(product_ratio(&a, &b, t, s));
    }
    Ok(StrongInequalityReport {
        samples,
        t,
        s,
        max_ratio,
    })
}

/// `d_t^{n−1} ‖A‖_tⁿ`; `n = 0` gives the norm of the unit.
pub fn power_norm_bound(a: &AlgebraElement, n: usize, witness: &StrongAlgebraWitness) -> f64 {
    if n == 0 {
        return AlgebraElement::unit(*a.descriptor()).level_norm(witness.h_of_t);
    }
    witness.d_t.powi(n as i32 - 1) * a.level_norm(witness.t).powi(n as i32)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PowerBoundCheck {
    pub n: usize,
    pub actual: f64,
    pub bound: f64,
}

impl PowerBoundCheck {
    pub fn holds(&self) -> bool {
        self.actual <= self.bound * (1.0 + 1e-12) + f64::MIN_POSITIVE
    }
}

/// Companion check: computes `‖Aⁿ‖_{h(t)}` directly and pairs it with the bound.
pub fn power_bound_check(a: &AlgebraElement, n: usize, witness: &StrongAlgebraWitness) -> PowerBoundCheck {
    PowerBoundCheck {
        n,
        actual: a.power(n).level_norm(witness.h_of_t),
        bound: power_norm_bound(a, n, witness),
    }
}
