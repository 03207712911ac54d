//! The JSON run file.
//!
//! One flat object. `command` picks the operation; the remaining fields are
//! its inputs, and a field that the chosen command does not read is an
//! error rather than silently ignored.

use std::path::PathBuf;

use serde::Deserialize;

use crate::algebra::{AlgebraDescriptor, AlgebraElement, DualFunctional};
use crate::kernel::KernelCoefficients;
use crate::psd::PointScales;
use crate::series::{EntireFunctionRep, TruncationPolicy};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Eval,
    Jet,
    Kernel,
    Gram,
    Check,
    Opcheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Jet => "jet",
            Command::Kernel => "kernel",
            Command::Gram => "gram",
            Command::Check => "check",
            Command::Opcheck => "opcheck",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// `"exp"` or an inline `{"coeffs": [[re, im], ...], "radius": ...}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Preset(String),
    Inline(EntireFunctionRep),
}

impl FunctionSpec {
    pub fn build(&self, terms: usize) -> crate::Result<EntireFunctionRep> {
        match self {
            FunctionSpec::Preset(name) => EntireFunctionRep::preset(name, terms),
            FunctionSpec::Inline(f) => Ok(f.clone()),
        }
    }
}

/// `"fock"`, `"geom"`, `"poly<d>"` or an inline coefficient grid.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum KernelSpec {
    Preset(String),
    Grid(KernelCoefficients),
}

impl KernelSpec {
    pub fn build(&self) -> crate::Result<KernelCoefficients> {
        match self {
            KernelSpec::Preset(name) => KernelCoefficients::preset(name),
            KernelSpec::Grid(k) => Ok(k.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelOpName {
    /// `K(z, w)` on `[z, w]` pairs.
    Eval,
    /// Derivative block `𝒦ₙₘ(z, w)`, `n, m < N`, with its operator bound.
    Block,
    /// `⟨D(M) 𝒦 D(M) x_b, x_a⟩` on extended-point pairs.
    Scaled,
    Extended,
    FockExtended,
    MatrixTrace,
    Quaternion,
    Grassmann,
    Factorization,
}

impl KernelOpName {
    pub fn name(self) -> &'static str {
        match self {
            KernelOpName::Eval => "eval",
            KernelOpName::Block => "block",
            KernelOpName::Scaled => "scaled",
            KernelOpName::Extended => "extended",
            KernelOpName::FockExtended => "fock_extended",
            KernelOpName::MatrixTrace => "matrix_trace",
            KernelOpName::Quaternion => "quaternion",
            KernelOpName::Grassmann => "grassmann",
            KernelOpName::Factorization => "factorization",
        }
    }

    /// Whether the op reads a kernel coefficient grid.
    pub fn needs_kernel(self) -> bool {
        !matches!(
            self,
            KernelOpName::FockExtended | KernelOpName::MatrixTrace | KernelOpName::Quaternion
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
pub enum OpName {
    Z,
    S,
    Mz,
    #[serde(rename = "dz")]
    Dz,
    #[serde(rename = "DM")]
    Dm,
}

impl OpName {
    pub fn name(self) -> &'static str {
        match self {
            OpName::Z => "Z",
            OpName::S => "S",
            OpName::Mz => "Mz",
            OpName::Dz => "dz",
            OpName::Dm => "DM",
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpTemplate {
    pub op: OpName,
    #[serde(rename = "M")]
    pub m: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesSpec {
    pub z_radius: Option<f64>,
    pub element_norm: Option<f64>,
    pub functional_scale: Option<f64>,
}

impl ScalesSpec {
    pub fn resolve(spec: Option<Self>) -> PointScales {
        let d = PointScales::default();
        match spec {
            None => d,
            Some(s) => PointScales {
                z_radius: s.z_radius.unwrap_or(d.z_radius),
                element_norm: s.element_norm.unwrap_or(d.element_norm),
                functional_scale: s.functional_scale.unwrap_or(d.functional_scale),
            },
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub algebra: Option<AlgebraDescriptor>,
    pub function: Option<FunctionSpec>,
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub truncation: TruncationPolicy,
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputSpec,

    /// Base point for `eval`, `jet` and `opcheck`; defaults to 0.
    pub z: Option<[f64; 2]>,
    #[serde(rename = "A")]
    pub element: Option<AlgebraElement>,
    #[serde(rename = "a")]
    pub functional: Option<DualFunctional>,

    pub kernel_op: Option<KernelOpName>,
    /// Argument pairs for `kernel`; the shape of each side depends on `kernel_op`.
    pub pairs: Option<Vec<[serde_json::Value; 2]>>,
    /// Explicit sample points for `gram` / `check`.
    pub points: Option<Vec<serde_json::Value>>,
    /// Number of seeded sample points for `gram` / `check`.
    pub samples: Option<usize>,
    pub scales: Option<ScalesSpec>,
    #[serde(rename = "M")]
    pub m: Option<f64>,

    pub ops: Option<Vec<OpTemplate>>,
    /// Second function for the adjoint identities in `opcheck`; defaults to `function`.
    pub g: Option<FunctionSpec>,
}

impl RunConfig {
    pub fn base_point(&self) -> C64 {
        self.z.map(|[re, im]| C64::new(re, im)).unwrap_or_default()
    }

    /// Names of fields that are set but not read by `command`.
    pub fn stray_fields(&self) -> Vec<&'static str> {
        let used: &[&str] = match self.command {
            Command::Eval => &["algebra", "function", "z", "A", "a"],
            Command::Jet => &["function", "z"],
            Command::Kernel => &["kernel", "kernel_op", "pairs", "M"],
            Command::Gram | Command::Check => &["algebra", "kernel", "kernel_op", "points", "samples", "scales"],
            Command::Opcheck => &["function", "g", "z", "ops"],
        };
        let present = [
            ("algebra", self.algebra.is_some()),
            ("function", self.function.is_some()),
            ("kernel", self.kernel.is_some()),
            ("z", self.z.is_some()),
            ("A", self.element.is_some()),
            ("a", self.functional.is_some()),
            ("kernel_op", self.kernel_op.is_some()),
            ("pairs", self.pairs.is_some()),
            ("points", self.points.is_some()),
            ("samples", self.samples.is_some()),
            ("scales", self.scales.is_some()),
            ("M", self.m.is_some()),
            ("ops", self.ops.is_some()),
            ("g", self.g.is_some()),
        ];
        present
            .into_iter()
            .filter(|(name, set)| *set && !used.contains(name))
            .map(|(name, _)| name)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_eval() {
        let c: RunConfig = serde_json::from_str(
            r#"{"command": "eval", "function": "exp",
                "A": {"kind": "matrix", "n": 2, "field": "real", "coords": [[0,0],[1,0],[0,0],[0,0]]}}"#,
        )
        .unwrap();
        assert_eq!(c.command, Command::Eval);
        assert_eq!(c.truncation, TruncationPolicy::default());
        assert!(c.stray_fields().is_empty());
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad = r#"{"command": "eval", "fnction": "exp"}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
        let bad = r#"{"command": "opcheck", "ops": [{"op": "Z", "N": 3}]}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
        let bad = r#"{"command": "evaluate"}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
    }

    #[test]
    fn flags_fields_of_other_commands() {
        let c: RunConfig = serde_json::from_str(r#"{"command": "jet", "function": "exp", "kernel": "fock"}"#).unwrap();
        assert_eq!(c.stray_fields(), vec!["kernel"]);
    }

    #[test]
    fn inline_specs() {
        let c: RunConfig = serde_json::from_str(
            r#"{"command": "kernel", "kernel": {"p": 1, "c": [[[1,0]]], "radius": "inf"},
                "kernel_op": "eval", "pairs": [[[0,0],[0,0]]]}"#,
        )
        .unwrap();
        assert!(matches!(c.kernel, Some(KernelSpec::Grid(_))));
        let c: RunConfig =
            serde_json::from_str(r#"{"command": "jet", "function": {"coeffs": [[1,0],[2,0]], "radius": "inf"}}"#)
                .unwrap();
        assert!(matches!(c.function, Some(FunctionSpec::Inline(_))));
    }
}
