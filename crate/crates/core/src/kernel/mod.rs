//! Scalar kernels `K(z, w) = Σ c_jk z^j w̄^k` stored as coefficient grids,
//! their derivative kernels `𝒦ₙₘ = ∂ⁿ⁺ᵐK / (n! m! ∂zⁿ ∂w̄ᵐ)`, and the scaled
//! block operators `D(M) 𝒦(z, w) D(M)`.
//!
//! Derivatives are exact reindexings of the grid,
//! `𝒦ₙₘ(z, w) = Σ_{j≥n, k≥m} C(j,n) C(k,m) c_jk z^{j−n} w̄^{k−m}`,
//! so no numerical differentiation is involved anywhere.

mod extended;
pub(crate) mod factor;
mod json;

pub use extended::{
    extended_kernel, extended_kernel_x, fock_extended, grassmann_closed_form, grassmann_direct, matrix_trace_kernel,
    quaternion_kernel, ExtendedPoint, QuaternionPoint,
};
pub use factor::{factorization_check, FactorizationReport};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{binomial_table, CMatrix};
use crate::series::{Certified, Radius, XVector};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Margin subtracted from the triangle-inequality radius when choosing `M₀`.
pub const RADIUS_MARGIN: f64 = 1e-3;

/// Coefficient count of the `fock` preset.
pub const FOCK_TERMS: usize = 96;
/// Coefficient count of the `geom` preset.
pub const GEOM_TERMS: usize = 400;

/// Which closed form the grid truncates; drives the tail certificates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `e^{z w̄}`, `c_jj = 1/j!`.
    Fock,
    /// `1/(1 − z w̄)`, `c_jj = 1`.
    Geometric,
    /// `(1 + z w̄)^d`, exact.
    Polynomial,
    /// A user grid; the grid itself is the kernel.
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelCoefficients {
    p: usize,
    size: usize,
    /// `c[j][k]` at `j * size + k`, each a `p×p` block.
    blocks: Vec<CMatrix>,
    /// `(j, k)` of the nonzero blocks, row-major.
    support: Vec<(usize, usize)>,
    radius: Radius,
    family: KernelFamily,
}

impl KernelCoefficients {
    /// Builds a kernel from `size × size` blocks, checking `c_jk = c_kjᴴ`.
    pub fn new(p: usize, size: usize, blocks: Vec<CMatrix>, radius: Radius) -> Result<Self> {
        Self::with_family(p, size, blocks, radius, KernelFamily::Custom)
    }

    fn with_family(p: usize, size: usize, blocks: Vec<CMatrix>, radius: Radius, family: KernelFamily) -> Result<Self> {
        if p == 0 || size == 0 {
            return Err(Error::InvalidArgument("kernel grid must be non-empty".into()));
        }
        if blocks.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                found: blocks.len(),
            });
        }
        if let Some(b) = blocks.iter().find(|b| b.rows() != p || b.cols() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: b.rows().max(b.cols()),
            });
        }
        if let Radius::Finite(r) = radius {
            if !(r > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "kernel radius must be positive, got {r}"
                )));
            }
        }
        let scale = blocks.iter().map(CMatrix::max_abs).fold(0.0, f64::max).max(1.0);
        let tolerance = 1e-12 * scale;
        let mut defect: f64 = 0.0;
        for j in 0..size {
            for k in 0..size {
                let d = blocks[j * size + k].max_abs_diff(&blocks[k * size + j].adjoint());
                defect = defect.max(d);
            }
        }
        if defect > tolerance {
            return Err(Error::NonHermitian { defect, tolerance });
        }
        let support = support_of(&blocks, size);
        Ok(Self {
            p,
            size,
            blocks,
            support,
            radius,
            family,
        })
    }

    fn scalar_diagonal(diag: &[f64], radius: Radius, family: KernelFamily) -> Self {
        let size = diag.len();
        let blocks = (0..size * size)
            .map(|i| {
                let (j, k) = (i / size, i % size);
                let v = if j == k { diag[j] } else { 0.0 };
                CMatrix::from_row_major(1, 1, vec![C64::new(v, 0.0)])
            })
            .collect::<Vec<_>>();
        let support = support_of(&blocks, size);
        Self {
            p: 1,
            size,
            blocks,
            support,
            radius,
            family,
        }
    }

    /// `e^{z w̄}` truncated to `terms` coefficients.
    pub fn fock(terms: usize) -> Self {
        let diag = crate::linalg::inverse_factorials(terms.max(1));
        Self::scalar_diagonal(&diag, Radius::Infinite, KernelFamily::Fock)
    }

    /// `1/(1 − z w̄)`, radius 1 in each variable.
    pub fn geom(terms: usize) -> Self {
        Self::scalar_diagonal(&vec![1.0; terms.max(1)], Radius::Finite(1.0), KernelFamily::Geometric)
    }

    /// `(1 + z w̄)^degree`.
    pub fn polynomial(degree: usize) -> Self {
        let table = binomial_table(degree + 1);
        let diag: Vec<f64> = (0..=degree).map(|j| table[degree][j]).collect();
        Self::scalar_diagonal(&diag, Radius::Infinite, KernelFamily::Polynomial)
    }

    /// `fock`, `geom`, `poly2`, or `poly<d>` for any degree.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "fock" => Ok(Self::fock(FOCK_TERMS)),
            "geom" => Ok(Self::geom(GEOM_TERMS)),
            _ => match name.strip_prefix("poly").map(str::parse::<usize>) {
                Some(Ok(d)) if d <= 64 => Ok(Self::polynomial(d)),
                _ => Err(Error::UnsupportedKernel(format!("unknown kernel preset `{name}`"))),
            },
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of coefficients per variable.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> Radius {
        self.radius
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn coefficient(&self, j: usize, k: usize) -> &CMatrix {
        &self.blocks[j * self.size + k]
    }

    /// Scalar coefficient `c_jk` of a `p = 1` kernel.
    pub fn scalar_coefficient(&self, j: usize, k: usize) -> C64 {
        self.blocks[j * self.size + k][(0, 0)]
    }

    pub(crate) fn require_scalar(&self) -> Result<()> {
        if self.p != 1 {
            return Err(Error::UnsupportedKernel(format!(
                "operation needs a scalar kernel, got block size {}",
                self.p
            )));
        }
        Ok(())
    }

    /// Diagonal entries `c_jj` when the grid is diagonal and scalar.
    pub(crate) fn diagonal(&self) -> Option<Vec<C64>> {
        if self.p != 1 {
            return None;
        }
        for j in 0..self.size {
            for k in 0..self.size {
                if j != k && self.scalar_coefficient(j, k) != ZERO {
                    return None;
                }
            }
        }
        Some((0..self.size).map(|j| self.scalar_coefficient(j, j)).collect())
    }

    fn check_point(&self, z: C64, w: C64) -> Result<()> {
        self.radius.check(z.norm())?;
        self.radius.check(w.norm())
    }

    /// Bound on the coefficients dropped from `𝒦ₙₘ(z, w)` by truncating the
    /// closed form at `size` terms. Zero for exact grids.
    pub fn truncation_tail(&self, n: usize, m: usize, z: C64, w: C64) -> f64 {
        self.truncation_tail_max(n + 1, m + 1, z, w, 1.0, Some((n, m)))
    }

    /// `max tail(n, m) · weight^{n+m}` over `n, m < order`.
    pub fn weighted_truncation_tail(&self, order: usize, z: C64, w: C64, weight: f64) -> f64 {
        self.truncation_tail_max(order, order, z, w, weight, None)
    }

    fn truncation_tail_max(
        &self,
        rows: usize,
        cols: usize,
        z: C64,
        w: C64,
        weight: f64,
        only: Option<(usize, usize)>,
    ) -> f64 {
        let diag_ratio: fn(usize) -> f64 = match self.family {
            KernelFamily::Polynomial | KernelFamily::Custom => return 0.0,
            KernelFamily::Fock => |j| 1.0 / (j as f64 + 1.0),
            KernelFamily::Geometric => |_| 1.0,
        };
        let r = z.norm().max(w.norm());
        if r == 0.0 {
            return 0.0;
        }
        let big = self.size;
        // ln of C(J,n) C(J,m) |c_JJ| r^{2J−n−m} at J = size
        let ln_c: f64 = match self.family {
            KernelFamily::Fock => -(1..=big).map(|k| (k as f64).ln()).sum::<f64>(),
            _ => 0.0,
        };
        let mut ln_binom = vec![0.0; rows.max(cols).min(big + 1)];
        for i in 1..ln_binom.len() {
            ln_binom[i] = ln_binom[i - 1] + ((big + 1 - i) as f64 / i as f64).ln();
        }
        let one = |n: usize, m: usize| -> f64 {
            let (nf, mf) = (n as f64, m as f64);
            let ln_t = ln_binom[n] + ln_binom[m] + ln_c + (2.0 * big as f64 - nf - mf) * r.ln();
            let mut term = ln_t.exp();
            let mut sum = 0.0;
            let mut j = big;
            for _ in 0..4000 {
                let jn = j as f64 + 1.0;
                let ratio = jn * jn / ((jn - nf) * (jn - mf)) * r * r * diag_ratio(j);
                sum += term;
                if ratio < 1.0 && term <= 1e-17 * sum.max(f64::MIN_POSITIVE) {
                    return sum + term * ratio / (1.0 - ratio);
                }
                if ratio < 1.0 && term == 0.0 {
                    return sum;
                }
                term *= ratio;
                j += 1;
            }
            f64::INFINITY
        };
        if let Some((n, m)) = only {
            return if n > big || m > big { 0.0 } else { one(n, m) };
        }
        let mut max: f64 = 0.0;
        for n in 0..rows.min(big + 1) {
            for m in 0..cols.min(big + 1) {
                max = max.max(one(n, m) * weight.powi((n + m) as i32));
            }
        }
        max
    }
}

fn support_of(blocks: &[CMatrix], size: usize) -> Vec<(usize, usize)> {
    (0..size * size)
        .filter(|&i| blocks[i].max_abs() != 0.0)
        .map(|i| (i / size, i % size))
        .collect()
}

/// `acc += f · block`, on flat row-major `p×p` storage.
fn accumulate(acc: &mut [C64], block: &CMatrix, f: C64) {
    for (a, c) in acc.iter_mut().zip(block.as_slice()) {
        *a += c * f;
    }
}

/// Direct evaluation `Σ c_jk z^j w̄^k` with the truncation tail.
pub fn kernel_eval(k: &KernelCoefficients, z: C64, w: C64) -> Result<Certified<CMatrix>> {
    k.check_point(z, w)?;
    let zp = powers(z, k.size);
    let wp = powers(w.conj(), k.size);
    let mut acc = vec![ZERO; k.p * k.p];
    for &(j, kk) in &k.support {
        accumulate(&mut acc, k.coefficient(j, kk), zp[j] * wp[kk]);
    }
    Ok(Certified {
        value: CMatrix::from_row_major(k.p, k.p, acc),
        tail_bound: k.truncation_tail(0, 0, z, w),
        terms: k.size,
    })
}

/// `𝒦ₙₘ(z, w)` as a `p×p` block.
pub fn derivative_kernel(k: &KernelCoefficients, z: C64, w: C64, n: usize, m: usize) -> Result<CMatrix> {
    if n >= k.size || m >= k.size {
        return Err(Error::IndexOutOfRange { n, m, size: k.size });
    }
    k.check_point(z, w)?;
    let binom = binomial_table(k.size);
    let zp = powers(z, k.size);
    let wp = powers(w.conj(), k.size);
    let mut acc = vec![ZERO; k.p * k.p];
    for &(j, kk) in &k.support {
        if j >= n && kk >= m {
            let f = zp[j - n] * wp[kk - m] * (binom[j][n] * binom[kk][m]);
            accumulate(&mut acc, k.coefficient(j, kk), f);
        }
    }
    Ok(CMatrix::from_row_major(k.p, k.p, acc))
}

fn powers(x: C64, len: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(len);
    let mut p = C64::new(1.0, 0.0);
    for _ in 0..len {
        out.push(p);
        p *= x;
    }
    out
}

/// All `𝒦ₙₘ(z, w)` for `n, m < order`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeKernelBlock {
    #[serde(with = "crate::complex_pair")]
    pub z: C64,
    #[serde(with = "crate::complex_pair")]
    pub w: C64,
    pub order: usize,
    pub p: usize,
    blocks: Vec<CMatrix>,
}

impl DerivativeKernelBlock {
    pub fn get(&self, n: usize, m: usize) -> &CMatrix {
        &self.blocks[n * self.order + m]
    }

    /// Scalar entry `𝒦ₙₘ` of a `p = 1` block.
    pub fn scalar(&self, n: usize, m: usize) -> C64 {
        self.blocks[n * self.order + m][(0, 0)]
    }

    /// The `(order·p) × (order·p)` matrix with block `(n, m)` at rows `n·p..`.
    pub fn to_matrix(&self) -> CMatrix {
        let p = self.p;
        CMatrix::from_fn(self.order * p, self.order * p, |r, c| {
            self.get(r / p, c / p)[(r % p, c % p)]
        })
    }

    /// `Σₙₘ xₐ,ₙ 𝒦ₙₘ conj(x_b,ₘ)` over the common length, for `p = 1`.
    pub fn contract(&self, x_a: &[C64], x_b: &[C64]) -> C64 {
        let mut acc = ZERO;
        for (n, xa) in x_a.iter().enumerate().take(self.order) {
            if *xa == ZERO {
                continue;
            }
            let mut row = ZERO;
            for (m, xb) in x_b.iter().enumerate().take(self.order) {
                row += self.scalar(n, m) * xb.conj();
            }
            acc += xa * row;
        }
        acc
    }
}

/// `𝒦ₙₘ(z, w)` for all `n, m < order`, via `P_z C P_wᴴ` with
/// `P_z[n][j] = C(j,n) z^{j−n}`.
pub fn derivative_block(k: &KernelCoefficients, z: C64, w: C64, order: usize) -> Result<DerivativeKernelBlock> {
    k.check_point(z, w)?;
    let (size, pp) = (k.size, k.p * k.p);
    let binom = binomial_table(size);
    let zp = powers(z, size);
    let wp = powers(w.conj(), size);
    let live = order.min(size);

    // T[n][k] = Σ_j P_z[n][j] c_jk, stored flat as live × size × (p·p)
    let mut t = vec![ZERO; live * size * pp];
    let mut t_live = vec![false; live * size];
    for &(j, kk) in &k.support {
        for n in 0..live.min(j + 1) {
            let cell = n * size + kk;
            accumulate(
                &mut t[cell * pp..(cell + 1) * pp],
                k.coefficient(j, kk),
                zp[j - n] * binom[j][n],
            );
            t_live[cell] = true;
        }
    }
    // F[m][k] = C(k,m) w̄^{k−m}, independent of n
    let mut f = vec![ZERO; live * size];
    for m in 0..live {
        for kk in m..size {
            f[m * size + kk] = wp[kk - m] * binom[kk][m];
        }
    }
    let mut blocks = vec![CMatrix::zeros(k.p, k.p); order * order];
    let mut acc = vec![ZERO; pp];
    for n in 0..live {
        let row = &t[n * size * pp..(n + 1) * size * pp];
        let live_row = &t_live[n * size..(n + 1) * size];
        for m in 0..live {
            let fm = &f[m * size..(m + 1) * size];
            if pp == 1 {
                let mut sum = ZERO;
                for kk in m..size {
                    sum += row[kk] * fm[kk];
                }
                blocks[n * order + m].as_mut_slice()[0] = sum;
                continue;
            }
            acc.iter_mut().for_each(|a| *a = ZERO);
            for kk in m..size {
                if !live_row[kk] {
                    continue;
                }
                for (a, c) in acc.iter_mut().zip(&row[kk * pp..(kk + 1) * pp]) {
                    *a += c * fm[kk];
                }
            }
            blocks[n * order + m].as_mut_slice().copy_from_slice(&acc);
        }
    }
    Ok(DerivativeKernelBlock {
        z,
        w,
        order,
        p: k.p,
        blocks,
    })
}

/// Derivative block with a constructive operator-norm bound on `ℓ₂`.
#[derive(Clone, Debug, Serialize)]
pub struct ScriptKBlock {
    pub block: DerivativeKernelBlock,
    /// Scale `M > 1` used in the bound.
    pub scale: f64,
    /// `max ‖𝒦ₙₘ‖ M^{n+m}` over the computed blocks.
    pub constant: f64,
    /// `C / (1 − 1/M²)`.
    pub bound: f64,
}

pub fn script_k_block(k: &KernelCoefficients, z: C64, w: C64, order: usize) -> Result<ScriptKBlock> {
    let scale = match radius_estimate(k, z, w, order)?.m0 {
        None => 2.0,
        Some(m0) if m0 > 1.0 => 0.5 * (1.0 + m0),
        Some(m0) => return Err(Error::NoAdmissibleScale { m0 }),
    };
    let block = derivative_block(k, z, w, order)?;
    let constant = scaled_block_max(&block, scale);
    Ok(ScriptKBlock {
        block,
        scale,
        constant,
        bound: constant / (1.0 - 1.0 / (scale * scale)),
    })
}

pub(crate) fn scaled_block_max(block: &DerivativeKernelBlock, scale: f64) -> f64 {
    let mut c: f64 = 0.0;
    for n in 0..block.order {
        for m in 0..block.order {
            c = c.max(block.get(n, m).frobenius_norm() * scale.powi((n + m) as i32));
        }
    }
    c
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RadiusEstimate {
    /// `None` for entire kernels.
    pub m0: Option<f64>,
    /// `max ‖𝒦ₙₘ(z, w)‖ M₀^{n+m}` over `n, m < order`; `None` for entire kernels.
    pub constant: Option<f64>,
}

/// `M₀`, or `None` for entire kernels.
pub(crate) fn admissible_m0(k: &KernelCoefficients, z: C64, w: C64) -> Result<Option<f64>> {
    let Radius::Finite(r) = k.radius else {
        return Ok(None);
    };
    let modulus = z.norm().max(w.norm());
    let m0 = r - modulus - RADIUS_MARGIN;
    if m0 <= 0.0 {
        return Err(Error::RadiusViolation { modulus, radius: r });
    }
    Ok(Some(m0))
}

/// `M₀ = radius − max(|z|, |w|) − ε`, the triangle-inequality margin
/// inside which `Σ |c_jk| (|z| + M)^j (|w| + M)^k` still converges.
pub fn radius_estimate(k: &KernelCoefficients, z: C64, w: C64, order: usize) -> Result<RadiusEstimate> {
    let Some(m0) = admissible_m0(k, z, w)? else {
        return Ok(RadiusEstimate {
            m0: None,
            constant: None,
        });
    };
    let block = derivative_block(k, z, w, order)?;
    Ok(RadiusEstimate {
        m0: Some(m0),
        constant: Some(scaled_block_max(&block, m0)),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaledKernelValue {
    #[serde(with = "crate::complex_pair")]
    pub value: C64,
    /// `|value| ≤ bound` from the `M₀` domination argument.
    pub bound: f64,
    /// Kernel-coefficient truncation tail, weighted by the input vectors.
    pub tail_bound: f64,
    pub m0: Option<f64>,
}

/// `⟨D(M) 𝒦(z, w) D(M) x_b, x_a⟩ = Σ xₐ,ₙ Mⁿ⁺ᵐ 𝒦ₙₘ conj(x_b,ₘ)`.
///
/// The vectors are scaled first and then contracted, so the result equals
/// the unscaled contraction of `(Mⁿ xₙ)` exactly.
pub fn scaled_kernel(
    k: &KernelCoefficients,
    z: C64,
    w: C64,
    m: f64,
    x_b: &XVector,
    x_a: &XVector,
) -> Result<ScaledKernelValue> {
    k.require_scalar()?;
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "scale M must be finite and non-negative, got {m}"
        )));
    }
    let order = x_a.len().max(x_b.len()).max(1);
    let est = radius_estimate(k, z, w, order)?;
    let (bound_scale, ratio) = match est.m0 {
        Some(m0) if m >= m0 => return Err(Error::ScaleOutOfRange { m, m0 }),
        Some(m0) => (m0, m / m0),
        None => {
            let big = (2.0 * m).max(1.0);
            (big, m / big)
        }
    };
    let block = derivative_block(k, z, w, order)?;
    let xa = scale_by_powers(&x_a.entries, m);
    let xb = scale_by_powers(&x_b.entries, m);
    let value = block.contract(&xa, &xb);
    let constant = scaled_block_max(&block, bound_scale);
    let bound = constant / (1.0 - ratio) * x_a.norm() * x_b.norm();
    let tail = k.weighted_truncation_tail(order, z, w, m);
    let l1 = |v: &[C64]| v.iter().map(|x| x.norm()).sum::<f64>();
    Ok(ScaledKernelValue {
        value,
        bound,
        tail_bound: tail * l1(&x_a.entries) * l1(&x_b.entries),
        m0: est.m0,
    })
}

fn scale_by_powers(x: &[C64], m: f64) -> Vec<C64> {
    let mut f = 1.0;
    x.iter()
        .map(|v| {
            let out = v * f;
            f *= m;
            out
        })
        .collect()
}

/// Both sides of `⟨D(M)𝒦(z+h, w+k)D(M) e₀, e₀⟩ = ⟨𝒦(z, w) e(k) e₀, e(h) e₀⟩`,
/// where `e(h) = (1, h̄, h̄², …)`. The right side is truncated at `order`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShiftIdentity {
    #[serde(with = "crate::complex_pair")]
    pub shifted: C64,
    #[serde(with = "crate::complex_pair")]
    pub expanded: C64,
}

pub fn shift_identity(k: &KernelCoefficients, z: C64, w: C64, h: C64, kk: C64, order: usize) -> Result<ShiftIdentity> {
    k.require_scalar()?;
    let shifted = kernel_eval(k, z + h, w + kk)?.value[(0, 0)];
    let block = derivative_block(k, z, w, order)?;
    let hp = powers(h, order);
    let kp = powers(kk, order);
    Ok(ShiftIdentity {
        shifted,
        expanded: block.contract(&hp, &kp),
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_point(rng: &mut ChaCha8Rng, r: f64) -> C64 {
        let rho = r * rng.gen::<f64>().sqrt();
        C64::from_polar(rho, rng.gen_range(0.0..std::f64::consts::TAU))
    }

    fn largest_singular_value(m: &CMatrix) -> f64 {
        let d = DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)]);
        d.singular_values().max()
    }

    #[test]
    fn eval_examples() {
        let f = KernelCoefficients::fock(FOCK_TERMS);
        assert_eq!(kernel_eval(&f, ZERO, ZERO).unwrap().value[(0, 0)], c(1.0, 0.0));
        let e = kernel_eval(&f, c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((e.value[(0, 0)].re - std::f64::consts::E).abs() <= 1e-15);
        assert!(e.tail_bound < 1e-100);

        let g = KernelCoefficients::geom(GEOM_TERMS);
        let v = kernel_eval(&g, c(0.5, 0.0), c(0.5, 0.0)).unwrap();
        assert!((v.value[(0, 0)].re - 4.0 / 3.0).abs() <= 1e-15);
        assert!(v.tail_bound <= 1e-100);
        assert!(matches!(
            kernel_eval(&g, c(1.0, 0.0), ZERO),
            Err(Error::RadiusViolation { .. })
        ));
    }

    #[test]
    fn geometric_tail_matches_closed_form() {
        let g = KernelCoefficients::geom(30);
        let (z, w) = (c(0.6, 0.2), c(0.5, -0.4));
        let x: f64 = z.norm() * w.norm();
        let exact_tail = x.powi(30) / (1.0 - x);
        let got = g.truncation_tail(0, 0, z, w);
        assert!(got >= exact_tail * (1.0 - 1e-12));
        let r = z.norm().max(w.norm());
        assert!(got <= r.powi(60) / (1.0 - r * r) * (1.0 + 1e-9));
        let err = (kernel_eval(&g, z, w).unwrap().value[(0, 0)] - 1.0 / (1.0 - z * w.conj())).norm();
        assert!(err <= got);
    }

    #[test]
    fn derivative_examples() {
        let f = KernelCoefficients::fock(40);
        let inv = crate::linalg::inverse_factorials(8);
        for n in 0..8 {
            for m in 0..8 {
                let v = derivative_kernel(&f, ZERO, ZERO, n, m).unwrap()[(0, 0)];
                let want = if n == m { inv[n] } else { 0.0 };
                assert_eq!(v, c(want, 0.0));
            }
        }
        let (z, w) = (c(0.3, 0.7), c(-0.2, 0.4));
        assert_eq!(
            derivative_kernel(&f, z, w, 0, 0).unwrap(),
            kernel_eval(&f, z, w).unwrap().value
        );
        let p2 = KernelCoefficients::preset("poly2").unwrap();
        assert_eq!(derivative_kernel(&p2, ZERO, ZERO, 2, 2).unwrap()[(0, 0)], c(1.0, 0.0));
        assert!(matches!(
            derivative_kernel(&p2, ZERO, ZERO, 3, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    /// ∂_zⁿ(zᵐ e^{zw̄}) by the Leibniz rule, divided by n! m!:
    /// Σ_{k ≤ min(n,m)} zᵐ⁻ᵏ w̄ⁿ⁻ᵏ e^{zw̄} / (k! (n−k)! (m−k)!).
    fn fock_derivative_oracle(z: C64, w: C64, n: usize, m: usize) -> C64 {
        let wb = w.conj();
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        let mut acc = ZERO;
        for k in 0..=n.min(m) {
            acc += wb.powi((n - k) as i32) * z.powi((m - k) as i32) / (fact(k) * fact(n - k) * fact(m - k));
        }
        acc * (z * wb).exp()
    }

    #[test]
    fn fock_block_matches_closed_form_derivatives() {
        let f = KernelCoefficients::fock(FOCK_TERMS);
        let (z, w) = (c(0.8, -0.3), c(0.1, 0.9));
        let b = derivative_block(&f, z, w, 8).unwrap();
        for n in 0..8 {
            for m in 0..8 {
                let want = fock_derivative_oracle(z, w, n, m);
                assert!((b.scalar(n, m) - want).norm() <= 1e-13, "{n} {m}");
                assert!((derivative_kernel(&f, z, w, n, m).unwrap()[(0, 0)] - want).norm() <= 1e-13);
            }
        }
    }

    #[test]
    fn script_k_examples() {
        let f = KernelCoefficients::fock(FOCK_TERMS);
        let s = script_k_block(&f, ZERO, ZERO, 6).unwrap();
        let inv = crate::linalg::inverse_factorials(6);
        for n in 0..6 {
            assert_eq!(s.block.scalar(n, n), c(inv[n], 0.0));
        }
        assert_eq!(s.scale, 2.0);

        let g = KernelCoefficients::geom(GEOM_TERMS);
        assert!(matches!(
            script_k_block(&g, ZERO, ZERO, 6),
            Err(Error::NoAdmissibleScale { .. })
        ));
    }

    #[test]
    fn script_k_bound_dominates_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        // 1/(1 − zw̄/16) has radius 4 in each variable
        let size = 120;
        let diag: Vec<f64> = (0..size).map(|j| 16f64.powi(-j)).collect();
        let wide = KernelCoefficients::scalar_diagonal(&diag, Radius::Finite(4.0), KernelFamily::Custom);
        for k in [
            KernelCoefficients::fock(FOCK_TERMS),
            KernelCoefficients::polynomial(3),
            wide,
        ] {
            for _ in 0..10 {
                let z = random_point(&mut rng, 1.0);
                let w = random_point(&mut rng, 1.0);
                let s = script_k_block(&k, z, w, 10).unwrap();
                let sigma = largest_singular_value(&s.block.to_matrix());
                assert!(s.bound >= sigma, "{} < {}", s.bound, sigma);
            }
        }
    }

    #[test]
    fn radius_examples() {
        let g = KernelCoefficients::geom(GEOM_TERMS);
        let est = radius_estimate(&g, ZERO, ZERO, 4).unwrap();
        assert_eq!(est.m0, Some(1.0 - RADIUS_MARGIN));
        // domination: |𝒦ₙₘ(0,0)| M₀^{n+m} = δₙₘ M₀^{2n} ≤ 1
        assert!(est.constant.unwrap() <= 1.0);
        let est = radius_estimate(&g, c(0.5, 0.0), ZERO, 4).unwrap();
        assert!(est.m0.unwrap() <= 0.5);
        assert!(radius_estimate(&KernelCoefficients::fock(10), c(5.0, 0.0), ZERO, 4)
            .unwrap()
            .m0
            .is_none());
        assert!(radius_estimate(&g, c(0.9995, 0.0), ZERO, 4).is_err());
    }

    #[test]
    fn scaled_examples() {
        let f = KernelCoefficients::fock(FOCK_TERMS);
        let (z, w) = (c(0.3, 0.1), c(-0.4, 0.2));
        let xa = XVector {
            entries: vec![c(1.0, 0.0), c(0.5, 0.5), c(0.0, -0.2), c(0.1, 0.0)],
        };
        let xb = XVector {
            entries: vec![c(0.7, 0.1), c(0.0, 0.3), c(-0.2, 0.0), c(0.05, 0.05)],
        };
        let one = scaled_kernel(&f, z, w, 1.0, &xb, &xa).unwrap();
        let plain = derivative_block(&f, z, w, 4)
            .unwrap()
            .contract(&xa.entries, &xb.entries);
        assert_eq!(one.value, plain);
        assert!(one.value.norm() <= one.bound);

        let zero = scaled_kernel(&f, z, w, 0.0, &xb, &xa).unwrap();
        let k00 = kernel_eval(&f, z, w).unwrap().value[(0, 0)];
        assert!((zero.value - xa.entries[0] * k00 * xb.entries[0].conj()).norm() <= 1e-15);

        let g = KernelCoefficients::geom(GEOM_TERMS);
        let v = scaled_kernel(&g, ZERO, ZERO, 0.25, &xb, &xa).unwrap();
        // geometric oracle at the origin: 𝒦ₙₘ(0,0) = δₙₘ
        let want: C64 = (0..4)
            .map(|n| xa.entries[n] * 0.25f64.powi(2 * n as i32) * xb.entries[n].conj())
            .sum();
        assert!((v.value - want).norm() <= 1e-15);
        assert!(v.value.norm() <= v.bound);
        assert!(matches!(
            scaled_kernel(&g, ZERO, ZERO, 0.9995, &xb, &xa),
            Err(Error::ScaleOutOfRange { .. })
        ));
    }

    #[test]
    fn preset_parsing() {
        assert_eq!(KernelCoefficients::preset("poly3").unwrap().size(), 4);
        assert!(KernelCoefficients::preset("gauss").is_err());
        let bad = vec![
            CMatrix::from_row_major(1, 1, vec![c(1.0, 0.0)]),
            CMatrix::from_row_major(1, 1, vec![c(0.5, 0.0)]),
            CMatrix::from_row_major(1, 1, vec![c(0.2, 0.0)]),
            CMatrix::from_row_major(1, 1, vec![c(1.0, 0.0)]),
        ];
        assert!(matches!(
            KernelCoefficients::new(1, 2, bad, Radius::Infinite),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn block_kernel_with_p_two() {
        // K(z,w) = e^{zw̄} ⊗ [[2, i],[−i, 1]] plus a z w̄ off-diagonal coupling
        let size = 30;
        let inv = crate::linalg::inverse_factorials(size);
        let h = CMatrix::from_row_major(2, 2, vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]);
        let blocks = (0..size * size)
            .map(|i| {
                let (j, k) = (i / size, i % size);
                if j == k {
                    h.scale(c(inv[j], 0.0))
                } else {
                    CMatrix::zeros(2, 2)
                }
            })
            .collect();
        let k = KernelCoefficients::new(2, size, blocks, Radius::Infinite).unwrap();
        let w = c(0.4, -0.6);
        let b = derivative_block(&k, w, w, 6).unwrap();
        assert!(b.to_matrix().hermitian_defect() <= 1e-14);
        let single = derivative_kernel(&k, w, w, 2, 3).unwrap();
        assert!(single.max_abs_diff(b.get(2, 3)) <= 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn hermitian_blocks_on_diagonal(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = random_point(&mut rng, 1.5);
            for k in [
                KernelCoefficients::fock(FOCK_TERMS),
                KernelCoefficients::polynomial(2),
                KernelCoefficients::polynomial(5),
            ] {
                let b = derivative_block(&k, w, w, 12).unwrap().to_matrix();
                prop_assert!(b.hermitian_defect() <= 1e-12 * b.max_abs().max(1.0));
            }
        }

        #[test]
        fn block_matches_entrywise_formula(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = random_point(&mut rng, 0.7);
            let w = random_point(&mut rng, 0.7);
            let k = KernelCoefficients::geom(200);
            let b = derivative_block(&k, z, w, 6).unwrap();
            for n in 0..6 {
                for m in 0..6 {
                    let single = derivative_kernel(&k, z, w, n, m).unwrap()[(0, 0)];
                    prop_assert!((single - b.scalar(n, m)).norm() <= 1e-10 * single.norm().max(1.0));
                }
            }
        }

        #[test]
        fn shift_identity_holds(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = random_point(&mut rng, 1.0);
            let w = random_point(&mut rng, 1.0);
            let m = rng.gen_range(0.05..1.0);
            let f = KernelCoefficients::fock(FOCK_TERMS);
            let s = shift_identity(&f, z, w, c(m, 0.0), c(m, 0.0), 40).unwrap();
            prop_assert!((s.shifted - s.expanded).norm() <= 1e-12 * s.shifted.norm().max(1.0));
            let h = random_point(&mut rng, 0.5);
            let kk = random_point(&mut rng, 0.5);
            let s = shift_identity(&f, z, w, h, kk, 40).unwrap();
            prop_assert!((s.shifted - s.expanded).norm() <= 1e-12 * s.shifted.norm().max(1.0));
        }

        #[test]
        fn scaling_equals_scaled_sequences(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = random_point(&mut rng, 1.0);
            let w = random_point(&mut rng, 1.0);
            let m = rng.gen_range(0.1..3.0);
            let n = 8;
            let mk = |rng: &mut ChaCha8Rng| XVector {
                entries: (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
            };
            let (xa, xb) = (mk(&mut rng), mk(&mut rng));
            let f = KernelCoefficients::fock(FOCK_TERMS);
            let scaled = scaled_kernel(&f, z, w, m, &xb, &xa).unwrap();
            let xa_m = scale_by_powers(&xa.entries, m);
            let xb_m = scale_by_powers(&xb.entries, m);
            let direct = derivative_block(&f, z, w, n).unwrap().contract(&xa_m, &xb_m);
            prop_assert_eq!(scaled.value, direct);
            prop_assert!(scaled.value.norm() <= scaled.bound);
        }
    }
}
