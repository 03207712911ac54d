//! Extended reproducing kernels over topological algebras.
//!
//! The crate evaluates analytic functions at algebra elements through their
//! power series, `f(z + A) = Σ Aⁿ f⁽ⁿ⁾(z)/n!`, builds the derivative-kernel
//! block operators and jet functions attached to a scalar kernel, and
//! checks positivity, factorization and operator identities numerically at
//! finite truncation order.
//!
//! Modules:
//!
//! - [`algebra`]: matrix, quaternion, Grassmann and weighted-sequence algebras
//!   with involution, duality pairing and graded norms.
//! - [`series`]: Taylor re-centering, `f(z + A)`, weak evaluation, pairing
//!   sequences and square-summability checks.
//! - [`jet`]: jet vectors, the shift/differentiation matrices and operator
//!   extensions.
//! - [`kernel`]: kernel coefficient grids, derivative kernels, extended
//!   kernels and their closed forms.
//! - [`psd`]: Gram assembly and Hermitian eigenvalue checks.
//! - [`cli`]: the JSON-config batch front end used by the `akx` binary.

pub mod algebra;
pub mod cli;
pub mod error;
pub mod jet;
pub mod kernel;
pub mod linalg;
pub mod psd;
pub mod series;

pub use num_complex::Complex64 as C64;

pub use algebra::{pair, AlgebraDescriptor, AlgebraElement, AlgebraKind, DualFunctional, ScalarField};
pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use series::{EntireFunctionRep, Radius, TruncationPolicy};

/// Serde helper: a complex number as `[re, im]`.
pub mod complex_pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::C64;

    pub fn serialize<S: Serializer>(c: &C64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

/// Serde helper: a complex vector as `[[re, im], ...]`.
pub mod complex_pairs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::C64;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}
