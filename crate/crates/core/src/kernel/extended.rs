//! Extended kernels on `(z, A, a)` triples and their closed forms for the
//! Fock kernel over matrix, quaternion and Grassmann algebras.

use serde::{Deserialize, Serialize};

use super::{derivative_block, KernelCoefficients};
use crate::algebra::{pair, AlgebraElement, AlgebraKind, DualFunctional, ScalarField};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::series::{ell2_check, x_vector, Certified, Ell2Report, Ell2Verdict, XVector};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// One argument of an extended kernel: base point, algebra element and functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendedPoint {
    #[serde(with = "crate::complex_pair")]
    pub z: C64,
    #[serde(rename = "A")]
    pub element: AlgebraElement,
    #[serde(rename = "a")]
    pub functional: DualFunctional,
}

impl ExtendedPoint {
    pub fn new(z: C64, element: AlgebraElement, functional: DualFunctional) -> Self {
        Self { z, element, functional }
    }

    /// `z·1 + A`, rejecting a complex base point over a real algebra.
    fn shifted(&self) -> Result<AlgebraElement> {
        let d = *self.element.descriptor();
        if d.field() == ScalarField::Real && self.z.im != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "base point {} is not real but the algebra is over the reals",
                self.z
            )));
        }
        self.element.add(&AlgebraElement::scalar(d, self.z))
    }
}

/// `Σ_{n ≥ len} |x_n| M^{-n}` bound from an ℓ₂ report, using
/// `|⟨a*, Aⁿ⟩| ≤ ‖a*‖′ qⁿ`; infinite when uncertified or when `q ≥ M`.
fn weighted_tail(report: &Ell2Report, point: &ExtendedPoint, len: usize, scale: f64) -> Result<f64> {
    if report.verdict != Ell2Verdict::Certified {
        return Ok(f64::INFINITY);
    }
    let q = report.ratio.sqrt();
    if q < 1.0 && report.terms > len {
        let r = q / scale;
        if r >= 1.0 {
            return Ok(f64::INFINITY);
        }
        let a_norm = point.functional.involution().dual_norm(0.0);
        return Ok(a_norm * r.powi(len as i32) / (1.0 - r));
    }
    // nilpotent: the sequence stops at `report.terms`
    if report.terms <= len {
        return Ok(0.0);
    }
    let full = x_vector(&point.functional, &point.element, report.terms)?;
    Ok(weighted_sum(&full.entries[len..], scale) * scale.powi(-(len as i32)))
}

fn weighted_sum(x: &[C64], scale: f64) -> f64 {
    let mut f = 1.0;
    let mut acc = 0.0;
    for v in x {
        acc += v.norm() * f;
        f /= scale;
    }
    acc
}

fn summable(point: &ExtendedPoint, index: usize) -> Result<Ell2Report> {
    let r = ell2_check(&point.functional, &point.element, 0.0)?;
    if r.verdict == Ell2Verdict::NotSummable {
        return Err(Error::NotSquareSummable { index });
    }
    Ok(r)
}

/// `Σₙₘ ⟨a*, Aⁿ⟩ 𝒦ₙₘ(z, w) conj⟨b*, Bᵐ⟩`, truncated at `order`.
///
/// The tail adds the kernel-coefficient truncation to the dropped index
/// pairs, each bounded by `|𝒦ₙₘ| ≤ C M^{-n-m}` and `|⟨a*, Aⁿ⟩| ≤ ‖a*‖′ qⁿ`.
/// It is infinite when either sequence is only numerically summable.
pub fn extended_kernel(
    k: &KernelCoefficients,
    left: &ExtendedPoint,
    right: &ExtendedPoint,
    order: usize,
) -> Result<Certified<C64>> {
    k.require_scalar()?;
    let ra = summable(left, 0)?;
    let rb = summable(right, 1)?;
    let xa = x_vector(&left.functional, &left.element, order)?;
    let xb = x_vector(&right.functional, &right.element, order)?;
    let block = derivative_block(k, left.z, right.z, order)?;
    let value = block.contract(&xa.entries, &xb.entries);

    // |𝒦ₙₘ| ≤ C M^{-n-m}; bound the dropped (n, m) pairs entrywise
    let (scale, constant) = domination(k, &block, &ra, &rb)?;
    let (below_a, below_b) = (weighted_sum(&xa.entries, scale), weighted_sum(&xb.entries, scale));
    let ta = weighted_tail(&ra, left, order, scale)?;
    let tb = weighted_tail(&rb, right, order, scale)?;
    let seq_tail = if ta == 0.0 && tb == 0.0 {
        0.0
    } else {
        constant * (ta * (below_b + tb) + below_a * tb)
    };
    let coeff_tail = k.weighted_truncation_tail(order, left.z, right.z, 1.0);
    let l1 = |x: &XVector| x.entries.iter().map(|v| v.norm()).sum::<f64>();
    Ok(Certified {
        value,
        tail_bound: seq_tail + coeff_tail * l1(&xa) * l1(&xb),
        terms: order,
    })
}

/// Scale `M` and constant `C = max |𝒦ₙₘ| Mⁿ⁺ᵐ` over the computed blocks.
fn domination(
    k: &KernelCoefficients,
    block: &super::DerivativeKernelBlock,
    ra: &Ell2Report,
    rb: &Ell2Report,
) -> Result<(f64, f64)> {
    let scale = match super::admissible_m0(k, block.z, block.w)? {
        Some(m0) => m0,
        None => (2.0 * ra.ratio.sqrt().max(rb.ratio.sqrt())).max(2.0),
    };
    Ok((scale, super::scaled_block_max(block, scale)))
}

/// Extended kernel on explicit pairing sequences: `Σₙₘ xₐ,ₙ 𝒦ₙₘ(z, w) conj(x_b,ₘ)`.
pub fn extended_kernel_x(k: &KernelCoefficients, z: C64, x_a: &XVector, w: C64, x_b: &XVector) -> Result<C64> {
    k.require_scalar()?;
    let order = x_a.len().max(x_b.len());
    Ok(derivative_block(k, z, w, order)?.contract(&x_a.entries, &x_b.entries))
}

/// `Σ_{k ≥ n} x^k / k!`, or infinity when the ratio test cannot bound it.
fn exp_tail(x: f64, n: usize) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x >= n as f64 + 1.0 {
        return f64::INFINITY;
    }
    let mut term = 1.0;
    for k in 1..=n {
        term *= x / k as f64;
    }
    term / (1.0 - x / (n as f64 + 1.0))
}

/// Fock kernel extended by the un-recentered series
/// `Σₙ ⟨a, (z+A)ⁿ⟩ conj⟨b, (w+B)ⁿ⟩ / n!`.
pub fn fock_extended(left: &ExtendedPoint, right: &ExtendedPoint, order: usize) -> Result<Certified<C64>> {
    let x = left.shifted()?;
    let y = right.shifted()?;
    pair(&left.functional, &x)?;
    pair(&right.functional, &y)?;
    let mut acc = ZERO;
    let mut px = AlgebraElement::unit(*x.descriptor());
    let mut py = AlgebraElement::unit(*y.descriptor());
    let mut inv_fact = 1.0;
    for n in 0..order {
        if n > 0 {
            inv_fact /= n as f64;
            px = px.mul(&x)?;
            py = py.mul(&y)?;
        }
        let fa = pair(&left.functional, &px)?;
        let fb = right
            .functional
            .descriptor()
            .field()
            .conj(pair(&right.functional, &py)?);
        acc += fa * fb * inv_fact;
    }
    let growth = x.level_norm(0.0) * y.level_norm(0.0);
    let scale = left.functional.dual_norm(0.0) * right.functional.dual_norm(0.0);
    Ok(Certified {
        value: acc,
        tail_bound: scale * exp_tail(growth, order),
        terms: order,
    })
}

fn matrix_of(e: &AlgebraElement) -> Result<CMatrix> {
    e.to_matrix()
        .ok_or_else(|| Error::InvalidArgument(format!("expected a matrix algebra, got {}", e.descriptor())))
}

/// `Tr((aᴴ ⊗ b) e^{(zI + A) ⊗ (w̄I + Bᴴ)})` with the exponential summed by
/// `(X ⊗ Y)ᵏ = Xᵏ ⊗ Yᵏ`.
pub fn matrix_trace_kernel(
    a: &DualFunctional,
    big_a: &AlgebraElement,
    z: C64,
    b: &DualFunctional,
    big_b: &AlgebraElement,
    w: C64,
    order: usize,
) -> Result<Certified<C64>> {
    big_a.descriptor().ensure_same(big_b.descriptor())?;
    big_a.descriptor().ensure_same(a.descriptor())?;
    big_b.descriptor().ensure_same(b.descriptor())?;
    let am = matrix_of(big_a)?;
    let bm = matrix_of(big_b)?;
    let n = am.rows();
    let id = CMatrix::identity(n);
    let x = &id.scale(z) + &am;
    let y = &id.scale(w.conj()) + &bm.adjoint();
    let a_mat = CMatrix::from_row_major(n, n, a.coords().to_vec());
    let b_mat = CMatrix::from_row_major(n, n, b.coords().to_vec());
    let weight = a_mat.adjoint().kron(&b_mat);

    let mut e = CMatrix::zeros(n * n, n * n);
    let mut xk = CMatrix::identity(n);
    let mut yk = CMatrix::identity(n);
    let mut inv_fact = 1.0;
    for k in 0..order {
        if k > 0 {
            inv_fact /= k as f64;
            xk = &xk * &x;
            yk = &yk * &y;
        }
        e = &e + &xk.kron(&yk).scale(C64::new(inv_fact, 0.0));
    }
    let value = (&weight * &e).trace();
    let growth = x.frobenius_norm() * y.frobenius_norm();
    Ok(Certified {
        value,
        tail_bound: weight.frobenius_norm() * exp_tail(growth, order),
        terms: order,
    })
}

fn require_quaternion(e: &AlgebraElement) -> Result<()> {
    if e.descriptor().kind() != AlgebraKind::Quaternion {
        return Err(Error::InvalidArgument(format!(
            "expected a quaternion, got {}",
            e.descriptor()
        )));
    }
    Ok(())
}

/// `Σₙ Re(ā (t + p)ⁿ) · Re((q̄ + s)ⁿ b) / n!` for real `t`, `q`.
pub fn quaternion_kernel(
    a: &AlgebraElement,
    p: &AlgebraElement,
    t: f64,
    b: &AlgebraElement,
    s: &AlgebraElement,
    q: f64,
    order: usize,
) -> Result<Certified<f64>> {
    for e in [a, p, b, s] {
        require_quaternion(e)?;
    }
    let d = *a.descriptor();
    let x = p.add(&AlgebraElement::scalar(d, C64::new(t, 0.0)))?;
    let y = s.add(&AlgebraElement::scalar(d, C64::new(q, 0.0)))?;
    let a_bar = a.involution();
    let mut px = AlgebraElement::unit(d);
    let mut py = AlgebraElement::unit(d);
    let mut acc = 0.0;
    let mut inv_fact = 1.0;
    for n in 0..order {
        if n > 0 {
            inv_fact /= n as f64;
            px = px.mul_same(&x);
            py = py.mul_same(&y);
        }
        let left = a_bar.mul_same(&px).coords()[0].re;
        let right = py.mul_same(b).coords()[0].re;
        acc += left * right * inv_fact;
    }
    let growth = x.level_norm(0.0) * y.level_norm(0.0);
    Ok(Certified {
        value: acc,
        tail_bound: a.level_norm(0.0) * b.level_norm(0.0) * exp_tail(growth, order),
        terms: order,
    })
}

/// A quaternion sample `(a, p, t)` for Gram matrices of [`quaternion_kernel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuaternionPoint {
    pub a: AlgebraElement,
    pub p: AlgebraElement,
    pub t: f64,
}

impl QuaternionPoint {
    /// Kernel entry between two samples: the right-hand sample enters as
    /// `b = ā_j, s = p_j, q = t_j`, so that both factors are the same
    /// real functional `Re(ā (t + p)ⁿ)` and the Gram matrix is symmetric.
    pub fn kernel(&self, other: &Self, order: usize) -> Result<Certified<f64>> {
        quaternion_kernel(
            &self.a,
            &self.p,
            self.t,
            &other.a.involution(),
            &other.p,
            other.t,
            order,
        )
    }
}

fn require_grassmann_soul(e: &AlgebraElement) -> Result<usize> {
    let AlgebraKind::Grassmann { generators } = e.descriptor().kind() else {
        return Err(Error::InvalidArgument(format!(
            "expected a Grassmann algebra, got {}",
            e.descriptor()
        )));
    };
    let body = e.body();
    if body != ZERO {
        return Err(Error::NonzeroBody { body: body.norm() });
    }
    Ok(generators)
}

/// `Σ_{n,m ≤ N} 𝒦ₙₘ(z_B, w_B) z_Sⁿ (w_S*)ᵐ` for souls `z_S`, `w_S`.
///
/// Since the soul is nilpotent of order `N + 1`, this is the exact value of
/// `Σ c_jk (z_B + z_S)^j ((w_B + w_S)*)^k`; the Taylor factors `1/(n! m!)`
/// live inside `𝒦ₙₘ`.
pub fn grassmann_closed_form(
    k: &KernelCoefficients,
    z_body: C64,
    z_soul: &AlgebraElement,
    w_body: C64,
    w_soul: &AlgebraElement,
) -> Result<AlgebraElement> {
    k.require_scalar()?;
    z_soul.descriptor().ensure_same(w_soul.descriptor())?;
    let generators = require_grassmann_soul(z_soul)?;
    require_grassmann_soul(w_soul)?;
    let d = *z_soul.descriptor();
    let len = generators + 1;
    let block = derivative_block(k, z_body, w_body, len)?;
    if d.field() == ScalarField::Real && (0..len * len).any(|i| block.scalar(i / len, i % len).im != 0.0) {
        return Err(Error::InvalidArgument(
            "kernel values are complex but the Grassmann algebra is over the reals".into(),
        ));
    }
    let zp = z_soul.powers(len);
    let wp = w_soul.involution().powers(len);
    let mut acc = AlgebraElement::zero(d);
    for n in 0..len {
        for m in 0..len {
            let c = block.scalar(n, m);
            if c == ZERO {
                continue;
            }
            let term = zp[n].mul_same(&wp[m]);
            if !term.is_zero() {
                acc.add_scaled(c, &term);
            }
        }
    }
    Ok(acc)
}

/// Direct evaluation `Σ c_jk z^j (w*)^k` at full Grassmann elements.
pub fn grassmann_direct(k: &KernelCoefficients, z: &AlgebraElement, w: &AlgebraElement) -> Result<AlgebraElement> {
    k.require_scalar()?;
    z.descriptor().ensure_same(w.descriptor())?;
    if !matches!(z.descriptor().kind(), AlgebraKind::Grassmann { .. }) {
        return Err(Error::InvalidArgument(format!(
            "expected a Grassmann algebra, got {}",
            z.descriptor()
        )));
    }
    k.radius().check(z.body().norm())?;
    k.radius().check(w.body().norm())?;
    let size = k.size();
    let zp = z.powers(size);
    let wp = w.involution().powers(size);
    let mut acc = AlgebraElement::zero(*z.descriptor());
    for j in 0..size {
        for kk in 0..size {
            let c = k.scalar_coefficient(j, kk);
            if c != ZERO {
                acc.add_scaled(c, &zp[j].mul_same(&wp[kk]));
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::algebra::AlgebraDescriptor;
    use crate::kernel::{kernel_eval, FOCK_TERMS};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn m2() -> AlgebraDescriptor {
        AlgebraDescriptor::matrix(2, ScalarField::Complex).unwrap()
    }

    fn identity_functional(d: AlgebraDescriptor, n: usize) -> DualFunctional {
        // tr(aᴴ I) = 1 for a = I/n
        DualFunctional::from_element(&AlgebraElement::scalar(d, c(1.0 / n as f64, 0.0)))
    }

    fn random_matrix_point(rng: &mut ChaCha8Rng) -> ExtendedPoint {
        let d = m2();
        let a = AlgebraElement::random(d, 1.0, rng);
        let scale = 0.5 / a.level_norm(0.0);
        ExtendedPoint::new(
            C64::from_polar(0.5 * rng.gen::<f64>(), rng.gen_range(0.0..std::f64::consts::TAU)),
            a.scale(c(scale * rng.gen::<f64>(), 0.0)),
            DualFunctional::random(d, 1.0, rng),
        )
    }

    fn starred(p: &ExtendedPoint) -> ExtendedPoint {
        ExtendedPoint::new(p.z, p.element.clone(), p.functional.involution())
    }

    #[test]
    fn extended_reduces_to_base_kernel() {
        let d = m2();
        let zero = AlgebraElement::zero(d);
        let u = identity_functional(d, 2);
        let (z, w) = (c(0.7, 0.2), c(-0.3, 0.5));
        let f = KernelCoefficients::fock(FOCK_TERMS);
        let left = ExtendedPoint::new(z, zero.clone(), u.clone());
        let right = ExtendedPoint::new(w, zero, u);
        let v = extended_kernel(&f, &left, &right, 12).unwrap();
        let k = kernel_eval(&f, z, w).unwrap().value[(0, 0)];
        assert!((v.value - k).norm() <= 1e-15);
        assert!(v.tail_bound <= 1e-100);

        let fe = fock_extended(&left, &right, 40).unwrap();
        assert!((fe.value - (z * w.conj()).exp()).norm() <= 1e-15);

        let origin = ExtendedPoint::new(ZERO, left.element.clone(), left.functional.clone());
        assert_eq!(fock_extended(&origin, &origin, 10).unwrap().value, c(1.0, 0.0));
    }

    #[test]
    fn extended_rejects_non_summable() {
        let d = m2();
        let big = AlgebraElement::from_matrix(
            &CMatrix::from_row_major(2, 2, vec![c(3.0, 0.0), ZERO, ZERO, c(2.0, 0.0)]),
            ScalarField::Complex,
        )
        .unwrap();
        let a = DualFunctional::coordinate(d, 0).unwrap();
        let good = ExtendedPoint::new(ZERO, AlgebraElement::zero(d), a.clone());
        let bad = ExtendedPoint::new(ZERO, big, a);
        let f = KernelCoefficients::fock(FOCK_TERMS);
        assert!(matches!(
            extended_kernel(&f, &good, &bad, 8),
            Err(Error::NotSquareSummable { index: 1 })
        ));
    }

    #[test]
    fn matrix_trace_examples() {
        let d = m2();
        let u = identity_functional(d, 2);
        let zero = AlgebraElement::zero(d);
        // Tr((aᴴ ⊗ b)(I ⊗ I)) = tr(aᴴ) tr(b) = 1 · 1
        let v = matrix_trace_kernel(&u, &zero, ZERO, &u, &zero, ZERO, 10).unwrap();
        assert!((v.value - c(1.0, 0.0)).norm() <= 1e-15);

        // diagonal A, B with coordinate functionals on the diagonal entries:
        // each pairing picks one eigenvalue, so the value is e^{(z+λᵢ) conj(w+μⱼ)}
        let a_el = AlgebraElement::from_matrix(&CMatrix::diagonal(&[c(0.3, 0.1), c(-0.2, 0.4)]), ScalarField::Complex)
            .unwrap();
        let b_el = AlgebraElement::from_matrix(&CMatrix::diagonal(&[c(0.1, -0.5), c(0.6, 0.0)]), ScalarField::Complex)
            .unwrap();
        let (z, w) = (c(0.2, 0.3), c(-0.1, 0.2));
        for (i, lam) in [(0, c(0.3, 0.1)), (3, c(-0.2, 0.4))] {
            for (j, mu) in [(0, c(0.1, -0.5)), (3, c(0.6, 0.0))] {
                let a = DualFunctional::coordinate(d, i).unwrap();
                let b = DualFunctional::coordinate(d, j).unwrap();
                let v = matrix_trace_kernel(&a, &a_el, z, &b, &b_el, w, 30).unwrap();
                let want = ((z + lam) * (w + mu).conj()).exp();
                assert!((v.value - want).norm() <= 1e-14);
            }
        }
    }

    #[test]
    fn quaternion_examples() {
        let one = AlgebraElement::quaternion(1.0, 0.0, 0.0, 0.0);
        let zero = AlgebraElement::quaternion(0.0, 0.0, 0.0, 0.0);
        let i = AlgebraElement::quaternion(0.0, 1.0, 0.0, 0.0);
        let v = quaternion_kernel(&one, &zero, 0.7, &one, &zero, -0.4, 40).unwrap();
        assert!((v.value - (0.7f64 * -0.4).exp()).abs() <= 1e-15);
        let v = quaternion_kernel(&one, &i, 0.0, &one, &i, 0.0, 40).unwrap();
        // direct quaternion powers: iⁿ cycles 1, i, −1, −i
        let oracle: f64 = (0..40)
            .step_by(2)
            .map(|n| 1.0 / (1..=n).map(|k| k as f64).product::<f64>())
            .sum();
        assert!((v.value - oracle).abs() <= 1e-15);
        assert!((v.value - 1f64.cosh()).abs() <= 1e-15);
        assert!(quaternion_kernel(&one, &i, 0.0, &one, &i, 0.0, 40).unwrap().tail_bound < 1e-40);
    }

    #[test]
    fn quaternion_gram_entries_are_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = AlgebraDescriptor::quaternion();
        let pts: Vec<QuaternionPoint> = (0..6)
            .map(|_| QuaternionPoint {
                a: AlgebraElement::random(d, 1.0, &mut rng),
                p: AlgebraElement::random(d, 0.7, &mut rng),
                t: rng.gen_range(-1.0..1.0),
            })
            .collect();
        for x in &pts {
            for y in &pts {
                let xy = x.kernel(y, 40).unwrap().value;
                let yx = y.kernel(x, 40).unwrap().value;
                assert!((xy - yx).abs() <= 1e-14 * xy.abs().max(1.0));
            }
        }
    }

    fn dyadic_soul(d: AlgebraDescriptor, rng: &mut ChaCha8Rng) -> AlgebraElement {
        let mut coords: Vec<C64> = (0..d.dim())
            .map(|_| c(rng.gen_range(-8..=8) as f64 / 8.0, rng.gen_range(-8..=8) as f64 / 8.0))
            .collect();
        coords[0] = ZERO;
        AlgebraElement::new(d, coords).unwrap()
    }

    #[test]
    fn grassmann_examples() {
        let d = AlgebraDescriptor::grassmann(2, ScalarField::Complex).unwrap();
        let zero = AlgebraElement::zero(d);
        let f = KernelCoefficients::fock(FOCK_TERMS);
        let (zb, wb) = (c(0.4, 0.1), c(-0.2, 0.3));
        let v = grassmann_closed_form(&f, zb, &zero, wb, &zero).unwrap();
        let k = kernel_eval(&f, zb, wb).unwrap().value[(0, 0)];
        assert_eq!(v, AlgebraElement::scalar(d, k));

        assert!(matches!(
            grassmann_closed_form(&f, zb, &AlgebraElement::unit(d), wb, &zero),
            Err(Error::NonzeroBody { .. })
        ));
    }

    #[test]
    fn grassmann_single_generator_three_terms() {
        // N = 1: z_S = αθ, w_S = βθ, θ² = 0, so only 𝒦₀₀, 𝒦₁₀ and 𝒦₀₁ survive:
        // e^{z_B w̄_B} (1 + w̄_B αθ + z_B β̄ θ*) with θ* = θ
        let d = AlgebraDescriptor::grassmann(1, ScalarField::Complex).unwrap();
        let theta = AlgebraElement::grassmann_generator(d, 1).unwrap();
        let (alpha, beta) = (c(0.5, -0.25), c(0.75, 0.5));
        let (zb, wb) = (c(0.3, 0.2), c(-0.1, 0.4));
        let f = KernelCoefficients::fock(FOCK_TERMS);
        let got = grassmann_closed_form(&f, zb, &theta.scale(alpha), wb, &theta.scale(beta)).unwrap();
        let e = (zb * wb.conj()).exp();
        let want = [e, e * (wb.conj() * alpha + zb * beta.conj())];
        assert!((got.coords()[0] - want[0]).norm() <= 1e-15);
        assert!((got.coords()[1] - want[1]).norm() <= 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn cross_oracle_triangle(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (l, r) = (random_matrix_point(&mut rng), random_matrix_point(&mut rng));
            let n = 20;
            let fe = fock_extended(&starred(&l), &starred(&r), n).unwrap();
            let mt = matrix_trace_kernel(
                &l.functional.involution(), &l.element, l.z,
                &r.functional.involution(), &r.element, r.z, n,
            ).unwrap();
            let ek = extended_kernel(&KernelCoefficients::fock(FOCK_TERMS), &l, &r, n).unwrap();
            prop_assert!((fe.value - mt.value).norm() <= 1e-9);
            prop_assert!((fe.value - ek.value).norm() <= 1e-9);
            prop_assert!((mt.value - ek.value).norm() <= 1e-9);
            prop_assert!(fe.tail_bound <= 1e-9 && ek.tail_bound <= 1e-9);
        }

        #[test]
        fn grassmann_closed_form_is_exact(seed in any::<u64>(), gens in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = AlgebraDescriptor::grassmann(gens, ScalarField::Complex).unwrap();
            let zs = dyadic_soul(d, &mut rng);
            let ws = dyadic_soul(d, &mut rng);
            let zb = c(rng.gen_range(-4..=4) as f64 / 4.0, rng.gen_range(-4..=4) as f64 / 4.0);
            let wb = c(rng.gen_range(-4..=4) as f64 / 4.0, rng.gen_range(-4..=4) as f64 / 4.0);
            for k in [KernelCoefficients::polynomial(2), KernelCoefficients::polynomial(3)] {
                let closed = grassmann_closed_form(&k, zb, &zs, wb, &ws).unwrap();
                let z = zs.add(&AlgebraElement::scalar(d, zb)).unwrap();
                let w = ws.add(&AlgebraElement::scalar(d, wb)).unwrap();
                let direct = grassmann_direct(&k, &z, &w).unwrap();
                prop_assert_eq!(closed.max_abs_diff(&direct), 0.0);
            }
            let f = KernelCoefficients::fock(FOCK_TERMS);
            let closed = grassmann_closed_form(&f, zb, &zs, wb, &ws).unwrap();
            let z = zs.add(&AlgebraElement::scalar(d, zb)).unwrap();
            let w = ws.add(&AlgebraElement::scalar(d, wb)).unwrap();
            let direct = grassmann_direct(&f, &z, &w).unwrap();
            prop_assert!(closed.max_abs_diff(&direct) <= 1e-12 * closed.level_norm(0.0).max(1.0));
        }

        #[test]
        fn grassmann_pairing_matches_extended_kernel(seed in any::<u64>(), gens in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = AlgebraDescriptor::grassmann(gens, ScalarField::Complex).unwrap();
            let zs = dyadic_soul(d, &mut rng);
            let zb = c(rng.gen_range(-4..=4) as f64 / 4.0, rng.gen_range(-4..=4) as f64 / 4.0);
            let wb = c(rng.gen_range(-4..=4) as f64 / 4.0, rng.gen_range(-4..=4) as f64 / 4.0);
            let f = KernelCoefficients::fock(FOCK_TERMS);
            let closed = grassmann_closed_form(&f, zb, &zs, wb, &AlgebraElement::zero(d)).unwrap();
            let unit_fn = DualFunctional::coordinate(d, 0).unwrap();
            let right = ExtendedPoint::new(wb, AlgebraElement::zero(d), unit_fn);
            for i in 0..d.dim() {
                let e = DualFunctional::coordinate(d, i).unwrap();
                let left = ExtendedPoint::new(zb, zs.clone(), e.involution());
                let ext = extended_kernel(&f, &left, &right, gens + 1).unwrap();
                prop_assert_eq!(pair(&e, &closed).unwrap(), ext.value);
                prop_assert!(ext.tail_bound <= 1e-100);
            }
        }
    }
}
