//! Truncated jet vectors `J_z(f) = (f(z), f′(z), f″(z)/2!, …)`, the
//! semi-infinite shift and differentiation matrices cut to `N×N`, and the
//! extension of coefficient-space operators to jets and to the weak series.
//!
//! The function space is realised as Taylor coefficient arrays with the
//! Fock inner product `⟨ζⁿ, ζᵐ⟩ = n! δₙₘ`.

use serde::Serialize;

use crate::algebra::{AlgebraElement, DualFunctional};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::series::{eval_weak, taylor_shift, Certified, EntireFunctionRep, TruncationPolicy};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JetVector {
    #[serde(with = "crate::complex_pair")]
    pub base: C64,
    #[serde(with = "crate::complex_pairs")]
    pub entries: Vec<C64>,
}

impl JetVector {
    pub fn order(&self) -> usize {
        self.entries.len()
    }

    /// Largest entrywise difference over the first `len` entries.
    pub fn max_diff_prefix(&self, other: &Self, len: usize) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .take(len)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `J_z(f)` truncated to `n` entries.
pub fn jet_of(f: &EntireFunctionRep, z: C64, n: usize) -> Result<JetVector> {
    let mut entries = taylor_shift(f, z)?;
    entries.resize(n, ZERO);
    Ok(JetVector { base: z, entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JetTemplate {
    /// `Z`: unit subdiagonal shift.
    Shift,
    /// `S`: entry `(n, n+1) = n + 1`.
    Derivative,
    /// `zI + Z`.
    Multiply(#[serde(with = "crate::complex_pair")] C64),
    /// `D(M) = diag(1, M, M², …)`.
    Scale(f64),
    Generic,
}

/// An `N×N` matrix acting on truncated jets.
#[derive(Clone, Debug, PartialEq)]
pub struct JetOperator {
    template: JetTemplate,
    matrix: CMatrix,
    dirty: usize,
}

impl JetOperator {
    pub fn shift(n: usize) -> Self {
        Self {
            template: JetTemplate::Shift,
            matrix: shift_matrix(n),
            dirty: 0,
        }
    }

    pub fn derivative(n: usize) -> Self {
        Self {
            template: JetTemplate::Derivative,
            matrix: derivative_matrix(n),
            dirty: 1,
        }
    }

    pub fn multiply(z: C64, n: usize) -> Self {
        let m = &CMatrix::identity(n).scale(z) + &shift_matrix(n);
        Self {
            template: JetTemplate::Multiply(z),
            matrix: m,
            dirty: 0,
        }
    }

    pub fn scale(m: f64, n: usize) -> Self {
        let diag: Vec<C64> = (0..n).map(|k| C64::new(m.powi(k as i32), 0.0)).collect();
        Self {
            template: JetTemplate::Scale(m),
            matrix: CMatrix::diagonal(&diag),
            dirty: 0,
        }
    }

    /// Arbitrary square matrix; `dirty` trailing output entries are treated
    /// as truncation artifacts.
    pub fn generic(matrix: CMatrix, dirty: usize) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidArgument("jet operator must be square".into()));
        }
        Ok(Self {
            template: JetTemplate::Generic,
            matrix,
            dirty,
        })
    }

    pub fn template(&self) -> JetTemplate {
        self.template
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    /// Trailing entries of the output that depend on jet entries past the truncation.
    pub fn dirty(&self) -> usize {
        self.dirty
    }

    /// Leading entries of an output that are exact.
    pub fn clean_len(&self) -> usize {
        self.size().saturating_sub(self.dirty)
    }

    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if self.size() != inner.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                found: inner.size(),
            });
        }
        Ok(Self {
            template: JetTemplate::Generic,
            matrix: &self.matrix * &inner.matrix,
            dirty: self.dirty + inner.dirty,
        })
    }
}

/// Matrix–vector product on jets.
pub fn apply(op: &JetOperator, jet: &JetVector) -> Result<JetVector> {
    if op.size() != jet.order() {
        return Err(Error::DimensionMismatch {
            expected: op.size(),
            found: jet.order(),
        });
    }
    Ok(JetVector {
        base: jet.base,
        entries: op.matrix.mul_vec(&jet.entries),
    })
}

fn shift_matrix(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| if i == j + 1 { ONE } else { ZERO })
}

fn derivative_matrix(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| if j == i + 1 { C64::new(j as f64, 0.0) } else { ZERO })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CommutatorReport {
    pub n: usize,
    /// max |SZ − ZS − I| on the leading (N−1)×(N−1) block.
    pub leading_deviation: f64,
    /// Same over the full N×N block; the corner entry is a truncation artifact.
    pub full_deviation: f64,
}

pub fn commutator_check(n: usize) -> Result<CommutatorReport> {
    if n < 3 {
        return Err(Error::InvalidArgument("commutator check needs N >= 3".into()));
    }
    let s = derivative_matrix(n);
    let z = shift_matrix(n);
    let comm = &(&s * &z) - &(&z * &s);
    let id = CMatrix::identity(n);
    Ok(CommutatorReport {
        n,
        leading_deviation: comm.leading_block(n - 1).max_abs_diff(&id.leading_block(n - 1)),
        full_deviation: comm.max_abs_diff(&id),
    })
}

/// A square matrix acting on Taylor coefficient arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientOperator {
    matrix: CMatrix,
}

impl CoefficientOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidArgument("coefficient operator must be square".into()));
        }
        Ok(Self { matrix })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            matrix: CMatrix::identity(m),
        }
    }

    pub fn zero(m: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(m, m),
        }
    }

    /// Multiplication by `ζ`; the top coefficient falls off.
    pub fn multiply_by_z(m: usize) -> Self {
        Self {
            matrix: shift_matrix(m),
        }
    }

    /// `d/dζ`.
    pub fn differentiate(m: usize) -> Self {
        Self {
            matrix: derivative_matrix(m),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if self.dim() != inner.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: inner.dim(),
            });
        }
        Ok(Self {
            matrix: &self.matrix * &inner.matrix,
        })
    }

    /// `T f`, with `f`'s coefficients zero-padded to the operator size.
    pub fn apply(&self, f: &EntireFunctionRep) -> Result<EntireFunctionRep> {
        if f.len() > self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: f.len(),
            });
        }
        let mut c = f.coeffs().to_vec();
        c.resize(self.dim(), ZERO);
        Ok(f.with_coeffs(self.matrix.mul_vec(&c)))
    }

    /// Adjoint under the Fock weight: `T* = W⁻¹ Tᴴ W` with `W = diag(n!)`.
    pub fn fock_adjoint(&self) -> Self {
        let m = self.dim();
        let matrix = CMatrix::from_fn(m, m, |i, j| {
            let t = self.matrix[(j, i)];
            if t == ZERO {
                ZERO
            } else {
                t.conj() * factorial_ratio(j, i)
            }
        });
        Self { matrix }
    }
}

/// `j!/i!` as a running product.
fn factorial_ratio(j: usize, i: usize) -> f64 {
    if j >= i {
        ((i + 1)..=j).map(|k| k as f64).product()
    } else {
        1.0 / ((j + 1)..=i).map(|k| k as f64).product::<f64>()
    }
}

/// `J_z(T f)` truncated to `n` entries.
pub fn extend_operator(t: &CoefficientOperator, f: &EntireFunctionRep, z: C64, n: usize) -> Result<JetVector> {
    jet_of(&t.apply(f)?, z, n)
}

/// Extension of `T` to the weak series: `Σ ⟨a*, Aⁿ⟩ (Tf)⁽ⁿ⁾(z)/n!`, i.e.
/// the weak evaluation of `T f` against `a*`.
pub fn lift_t_a(
    t: &CoefficientOperator,
    f: &EntireFunctionRep,
    z: C64,
    a: &AlgebraElement,
    functional: &DualFunctional,
    pol: &TruncationPolicy,
) -> Result<Certified<C64>> {
    eval_weak(&t.apply(f)?, z, a, &functional.involution(), pol)
}

/// Fock inner product `Σ n! f_n conj(g_n)` over the common length.
pub fn fock_inner(f: &EntireFunctionRep, g: &EntireFunctionRep) -> C64 {
    let mut acc = ZERO;
    let mut fact = 1.0;
    for (n, (a, b)) in f.coeffs().iter().zip(g.coeffs()).enumerate() {
        if n > 0 {
            fact *= n as f64;
        }
        if *a == ZERO || *b == ZERO {
            continue;
        }
        acc += a * b.conj() * fact;
    }
    acc
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::algebra::{AlgebraDescriptor, ScalarField};
    use crate::series::{x_vector, Radius};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_poly(rng: &mut ChaCha8Rng, deg: usize) -> EntireFunctionRep {
        let coeffs = (0..=deg)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        EntireFunctionRep::new(coeffs, Radius::Infinite).unwrap()
    }

    /// (ζ f)⁽ⁿ⁾(z)/n! = z f⁽ⁿ⁾(z)/n! + f⁽ⁿ⁻¹⁾(z)/(n−1)!, by the product rule.
    fn product_rule_jet(f: &EntireFunctionRep, z: C64, n: usize) -> Vec<C64> {
        let j = jet_of(f, z, n).unwrap().entries;
        (0..n).map(|k| z * j[k] + if k > 0 { j[k - 1] } else { ZERO }).collect()
    }

    #[test]
    fn jet_examples() {
        let j = jet_of(&EntireFunctionRep::exp(30), ZERO, 5).unwrap();
        assert_eq!(
            j.entries,
            vec![
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(0.5, 0.0),
                c(1.0 / 6.0, 0.0),
                c(1.0 / 24.0, 0.0)
            ]
        );

        let sq = EntireFunctionRep::polynomial(&[0.0, 0.0, 1.0]);
        let j = jet_of(&sq, c(1.0, 0.0), 5).unwrap();
        assert_eq!(j.entries, vec![c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), ZERO, ZERO]);

        let j = jet_of(&EntireFunctionRep::sin(40), c(std::f64::consts::FRAC_PI_2, 0.0), 5).unwrap();
        let want = [1.0, 0.0, -0.5, 0.0, 1.0 / 24.0];
        for (got, w) in j.entries.iter().zip(want) {
            assert!((got - c(w, 0.0)).norm() <= 1e-14);
        }
    }

    #[test]
    fn derivative_fixes_exp_on_clean_entries() {
        let n = 10;
        let j = jet_of(&EntireFunctionRep::exp(40), ZERO, n).unwrap();
        let s = JetOperator::derivative(n);
        let out = apply(&s, &j).unwrap();
        assert!(out.max_diff_prefix(&j, s.clean_len()) <= 1e-15);
        assert!((out.entries[n - 1] - j.entries[n - 1]).norm() > 0.0);
    }

    #[test]
    fn shift_moves_unit_vector() {
        let jet = JetVector {
            base: ZERO,
            entries: vec![c(1.0, 0.0), ZERO, ZERO, ZERO],
        };
        let out = apply(&JetOperator::shift(4), &jet).unwrap();
        assert_eq!(out.entries, vec![ZERO, c(1.0, 0.0), ZERO, ZERO]);
        assert!(apply(&JetOperator::shift(3), &jet).is_err());
    }

    #[test]
    fn multiplication_matches_product_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_poly(&mut rng, 6);
        let z = c(0.4, -0.9);
        let n = 9;
        let out = apply(&JetOperator::multiply(z, n), &jet_of(&f, z, n).unwrap()).unwrap();
        let oracle = product_rule_jet(&f, z, n);
        for k in 0..n {
            assert!((out.entries[k] - oracle[k]).norm() <= 1e-12);
        }
    }

    #[test]
    fn commutator_examples() {
        let r = commutator_check(8).unwrap();
        assert_eq!(r.leading_deviation, 0.0);
        assert_eq!(r.full_deviation, 8.0);
        assert_eq!(commutator_check(3).unwrap().leading_deviation, 0.0);
        assert!(commutator_check(2).is_err());
    }

    #[test]
    fn extend_operator_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = random_poly(&mut rng, 7);
        let z = c(-0.3, 0.5);
        let n = 10;
        let m = 16;
        let plain = extend_operator(&CoefficientOperator::identity(m), &f, z, n).unwrap();
        assert_eq!(plain, jet_of(&f, z, n).unwrap());

        let mz = extend_operator(&CoefficientOperator::multiply_by_z(m), &f, z, n).unwrap();
        let op = JetOperator::multiply(z, n);
        let via_jet = apply(&op, &jet_of(&f, z, n).unwrap()).unwrap();
        assert!(mz.max_diff_prefix(&via_jet, op.clean_len()) <= 1e-12);

        let dz = extend_operator(&CoefficientOperator::differentiate(m), &f, z, n).unwrap();
        let s = JetOperator::derivative(n);
        let via_jet = apply(&s, &jet_of(&f, z, n).unwrap()).unwrap();
        assert!(dz.max_diff_prefix(&via_jet, s.clean_len()) <= 1e-12);

        assert!(extend_operator(&CoefficientOperator::identity(4), &f, z, n).is_err());
    }

    #[test]
    fn lift_examples() {
        let d = AlgebraDescriptor::matrix(2, ScalarField::Complex).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = AlgebraElement::random(d, 0.5, &mut rng);
        let a = DualFunctional::random(d, 1.0, &mut rng);
        let z = c(0.2, 0.1);
        let f = EntireFunctionRep::exp(60);
        let pol = TruncationPolicy::new(20, 1e-13);
        let m = f.len();

        let id = lift_t_a(&CoefficientOperator::identity(m), &f, z, &x, &a, &pol).unwrap();
        let weak = eval_weak(&f, z, &x, &a.involution(), &pol).unwrap();
        assert_eq!(id.value, weak.value);

        let zero = lift_t_a(&CoefficientOperator::zero(m), &f, z, &x, &a, &pol).unwrap();
        assert_eq!(zero.value, ZERO);

        // exp is a fixed point of d/dζ; the top coefficient 1/59! is lost
        let d_exp = lift_t_a(&CoefficientOperator::differentiate(m), &f, z, &x, &a, &pol).unwrap();
        assert!((d_exp.value - weak.value).norm() <= 1e-12);
    }

    #[test]
    fn fock_inner_examples() {
        let one = EntireFunctionRep::polynomial(&[1.0]);
        assert_eq!(fock_inner(&one, &one), c(1.0, 0.0));
        let zeta = EntireFunctionRep::polynomial(&[0.0, 1.0]);
        assert_eq!(fock_inner(&zeta, &zeta), c(1.0, 0.0));
        let e = EntireFunctionRep::exp(20);
        let partial: f64 = crate::linalg::inverse_factorials(20).iter().sum();
        assert!((fock_inner(&e, &e).re - partial).abs() <= 1e-14);
        assert!((partial - std::f64::consts::E).abs() <= 1e-15);
    }

    #[test]
    fn fock_adjoint_of_derivative_is_multiplication() {
        let m = 12;
        let adj = CoefficientOperator::differentiate(m).fock_adjoint();
        assert_eq!(adj, CoefficientOperator::multiply_by_z(m));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn derivative_realizes_differentiation(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_poly(&mut rng, 8);
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let n = 12;
            let s = JetOperator::derivative(n);
            let lhs = apply(&s, &jet_of(&f, z, n).unwrap()).unwrap();
            let rhs = jet_of(&f.derivative(), z, n).unwrap();
            prop_assert!(lhs.max_diff_prefix(&rhs, n - 1) <= 1e-10);
        }

        #[test]
        fn multiplication_realized_by_shift(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_poly(&mut rng, 8);
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let n = 12;
            let zf = CoefficientOperator::multiply_by_z(f.len() + 1).apply(&f).unwrap();
            let lhs = apply(&JetOperator::multiply(z, n), &jet_of(&f, z, n).unwrap()).unwrap();
            let rhs = jet_of(&zf, z, n).unwrap();
            prop_assert!(lhs.max_diff_prefix(&rhs, n - 1) <= 1e-10);
        }

        #[test]
        fn composition_of_extensions(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_poly(&mut rng, 8);
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (m, n) = (12, 10);
            let t = CoefficientOperator::multiply_by_z(m);
            let s = CoefficientOperator::differentiate(m);
            let ts = t.compose(&s).unwrap();
            let lhs = extend_operator(&ts, &f, z, n).unwrap();
            let rhs = extend_operator(&t, &s.apply(&f).unwrap(), z, n).unwrap();
            prop_assert!(lhs.max_diff_prefix(&rhs, n) <= 1e-10);
            // and at jet level: (zI+Z) S J(f) on clean entries
            let jop = JetOperator::multiply(z, n).compose(&JetOperator::derivative(n)).unwrap();
            let via_jet = apply(&jop, &jet_of(&f, z, n).unwrap()).unwrap();
            prop_assert!(lhs.max_diff_prefix(&via_jet, jop.clean_len()) <= 1e-10);
        }

        #[test]
        fn weighted_adjoint_identity(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = 10;
            let t = CoefficientOperator::new(CMatrix::from_fn(m, m, |_, _| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })).unwrap();
            let f = random_poly(&mut rng, 8);
            let g = random_poly(&mut rng, 8);
            let lhs = fock_inner(&t.apply(&f).unwrap(), &g.with_coeffs({
                let mut v = g.coeffs().to_vec(); v.resize(m, ZERO); v
            }));
            let rhs = fock_inner(&f.with_coeffs({
                let mut v = f.coeffs().to_vec(); v.resize(m, ZERO); v
            }), &t.fock_adjoint().apply(&g).unwrap());
            prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
        }

        #[test]
        fn lift_relation_with_pairing_sequence(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = AlgebraDescriptor::matrix(2, ScalarField::Complex).unwrap();
            let x = AlgebraElement::random(d, 0.4, &mut rng);
            let a = DualFunctional::random(d, 1.0, &mut rng);
            let f = random_poly(&mut rng, 8);
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let n = 12;
            let t = CoefficientOperator::differentiate(n);
            let pol = TruncationPolicy::new(n, 1e-12);
            let lifted = lift_t_a(&t, &f, z, &x, &a, &pol).unwrap().value;
            let jet = extend_operator(&t, &f, z, n).unwrap();
            let xv = x_vector(&a, &x, n).unwrap();
            prop_assert!((lifted - xv.dot(&jet.entries)).norm() <= 1e-10);
        }
    }
}
