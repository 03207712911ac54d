//! The factorization `𝒦(z, w) = J_z J_w*` for diagonal kernels.
//!
//! For `K(z, w) = Σ c_j z^j w̄^j` with `c_j ≥ 0`, the functions
//! `D_{m,w}(ζ) = ∂_w̄ᵐ K(ζ, w)/m! = Σ_j c_j C(j,m) w̄^{j−m} ζ^j` lie in `H(K)`,
//! whose inner product is `⟨f, g⟩ = Σ f_j conj(g_j) / c_j`. Three routes to
//! `𝒦ₙₘ(z, w)` are compared: the combinatorial block, the jet
//! `J_z(D_{m,w})[n]` and the inner product `⟨D_{m,w}, D_{n,z}⟩`.

use serde::Serialize;

use super::{derivative_block, KernelCoefficients, KernelFamily};
use crate::error::{Error, Result};
use crate::jet::{fock_inner, jet_of};
use crate::linalg::binomial_table;
use crate::series::EntireFunctionRep;
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FactorizationReport {
    pub order: usize,
    /// max |𝒦ₙₘ − J_z(D_{m,w})ₙ|
    pub jet_deviation: f64,
    /// max |𝒦ₙₘ − ⟨D_{m,w}, D_{n,z}⟩|
    pub inner_product_deviation: f64,
    /// max over samples η of |𝒦(z,w)η − J_z(Σ D_{m,w} ηₘ)|
    pub sample_deviation: f64,
    pub max_deviation: f64,
}

pub(crate) fn weights(k: &KernelCoefficients) -> Result<Vec<f64>> {
    let diag = k.diagonal().ok_or_else(|| {
        Error::UnsupportedKernel("factorization needs a scalar kernel with a diagonal coefficient grid".into())
    })?;
    diag.iter()
        .map(|c| {
            if c.im == 0.0 && c.re >= 0.0 {
                Ok(c.re)
            } else {
                Err(Error::UnsupportedKernel(format!(
                    "diagonal coefficient {c} is not a non-negative real"
                )))
            }
        })
        .collect()
}

/// Coefficients of `D_{m,w}`.
fn d_function(k: &KernelCoefficients, c: &[f64], binom: &[Vec<f64>], m: usize, w: C64) -> EntireFunctionRep {
    let wb = w.conj();
    let mut coeffs = vec![ZERO; c.len()];
    let mut wp = C64::new(1.0, 0.0);
    for j in m..c.len() {
        coeffs[j] = wp * (c[j] * binom[j][m]);
        wp *= wb;
    }
    EntireFunctionRep::new(coeffs, k.radius()).expect("radius already validated")
}

pub(crate) fn h_inner(k: &KernelCoefficients, c: &[f64], f: &EntireFunctionRep, g: &EntireFunctionRep) -> C64 {
    if k.family() == KernelFamily::Fock {
        return fock_inner(f, g);
    }
    f.coeffs()
        .iter()
        .zip(g.coeffs())
        .zip(c)
        .filter(|(_, cj)| **cj != 0.0)
        .map(|((a, b), cj)| a * b.conj() / *cj)
        .sum()
}

/// Compares `𝒦ₙₘ(z, w)` for `n, m < order` with its jet and `H(K)`
/// realizations, and `𝒦(z, w)η` with `J_z(Σ D_{m,w} ηₘ)` for each sample `η`.
pub fn factorization_check(
    k: &KernelCoefficients,
    samples: &[Vec<C64>],
    z: C64,
    w: C64,
    order: usize,
) -> Result<FactorizationReport> {
    let c = weights(k)?;
    if order > k.size() {
        return Err(Error::IndexOutOfRange {
            n: order - 1,
            m: order - 1,
            size: k.size(),
        });
    }
    let block = derivative_block(k, z, w, order)?;
    let binom = binomial_table(k.size());
    let d_w: Vec<EntireFunctionRep> = (0..order).map(|m| d_function(k, &c, &binom, m, w)).collect();
    let d_z: Vec<EntireFunctionRep> = (0..order).map(|n| d_function(k, &c, &binom, n, z)).collect();

    let mut jet_dev: f64 = 0.0;
    let mut ip_dev: f64 = 0.0;
    for (m, dm) in d_w.iter().enumerate() {
        let jet = jet_of(dm, z, order)?;
        for (n, dn) in d_z.iter().enumerate() {
            let want = block.scalar(n, m);
            jet_dev = jet_dev.max((jet.entries[n] - want).norm());
            ip_dev = ip_dev.max((h_inner(k, &c, dm, dn) - want).norm());
        }
    }

    let mut sample_dev: f64 = 0.0;
    for eta in samples {
        if eta.len() != order {
            return Err(Error::DimensionMismatch {
                expected: order,
                found: eta.len(),
            });
        }
        let lhs = block.to_matrix().mul_vec(eta);
        let mut g = EntireFunctionRep::new(vec![ZERO; k.size()], k.radius())?;
        for (dm, e) in d_w.iter().zip(eta) {
            g = EntireFunctionRep::axpy(*e, dm, &g);
        }
        let rhs = jet_of(&g, z, order)?;
        for (a, b) in lhs.iter().zip(&rhs.entries) {
            sample_dev = sample_dev.max((a - b).norm());
        }
    }

    Ok(FactorizationReport {
        order,
        jet_deviation: jet_dev,
        inner_product_deviation: ip_dev,
        sample_deviation: sample_dev,
        max_deviation: jet_dev.max(ip_dev).max(sample_dev),
    })
}
