//! `opcheck`: operator identities on jets for a polynomial `f`.
//!
//! Each template pairs a coefficient-level operator `T` with its jet-side
//! matrix `T̃` and reports `max |J_z(T f) − T̃ J_z(f)|` over the clean
//! entries, together with the Fock adjoint identity
//! `⟨T f, g⟩ = ⟨f, T* g⟩`. Presets are cut to `N` coefficients here, so
//! both sides are finite polynomials.

use serde_json::{json, Value};

use super::commands::{refusal, refused};
use super::config::{OpName, OpTemplate, RunConfig};
use super::render::{self, cx, num};
use super::{Artifact, CliResult, ConfigError};
use crate::jet::{apply, commutator_check, extend_operator, fock_inner, jet_of, CoefficientOperator, JetOperator};
use crate::linalg::{binomial_table, CMatrix};
use crate::series::EntireFunctionRep;
use crate::C64;

const TOLERANCE: f64 = 1e-10;

struct Check {
    identity: &'static str,
    deviation: f64,
    tolerance: f64,
}

impl Check {
    /// Tolerance relative to the size of the compared values, floored at 1.
    fn new(identity: &'static str, deviation: f64, magnitude: f64) -> Self {
        Self {
            identity,
            deviation,
            tolerance: TOLERANCE * magnitude.max(1.0),
        }
    }

    fn pass(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn prefix_deviation(a: &[C64], b: &[C64], len: usize) -> (f64, f64) {
    let dev = a
        .iter()
        .zip(b)
        .take(len)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    (
        dev,
        max_abs(&a[..len.min(a.len())]).max(max_abs(&b[..len.min(b.len())])),
    )
}

/// `J_z(T f)` against `T̃ J_z(f)` on the clean entries of `T̃`.
fn extension(
    identity: &'static str,
    t: &CoefficientOperator,
    jet_op: &JetOperator,
    f: &EntireFunctionRep,
    z: C64,
) -> crate::Result<Check> {
    let n = jet_op.size();
    let lhs = extend_operator(t, f, z, n)?;
    let rhs = apply(jet_op, &jet_of(f, z, n)?)?;
    let (dev, mag) = prefix_deviation(&lhs.entries, &rhs.entries, jet_op.clean_len());
    Ok(Check::new(identity, dev, mag))
}

fn adjoint(t: &CoefficientOperator, f: &EntireFunctionRep, g: &EntireFunctionRep) -> crate::Result<Check> {
    let lhs = fock_inner(&t.apply(f)?, g);
    let rhs = fock_inner(f, &t.fock_adjoint().apply(g)?);
    Ok(Check::new(
        "<Tf, g> = <f, T* g>",
        (lhs - rhs).norm(),
        lhs.norm().max(rhs.norm()),
    ))
}

/// `f(ζ) ↦ f(z + M(ζ − z))`: entry `(k, j) = C(j, k) Mᵏ (z(1 − M))^{j−k}`.
fn dilation(m_scale: f64, z: C64, dim: usize) -> crate::Result<CoefficientOperator> {
    let binom = binomial_table(dim);
    let c = z * (1.0 - m_scale);
    CoefficientOperator::new(CMatrix::from_fn(dim, dim, |k, j| {
        if j < k {
            C64::new(0.0, 0.0)
        } else {
            c.powu((j - k) as u32) * (binom[j][k] * m_scale.powi(k as i32))
        }
    }))
}

fn checks_for(
    t: &OpTemplate,
    f: &EntireFunctionRep,
    g: &EntireFunctionRep,
    z: C64,
    n: usize,
) -> CliResult<crate::Result<Vec<Check>>> {
    let dim = f.len().max(g.len()) + 1;
    if t.m.is_some() != (t.op == OpName::Dm) {
        return Err(ConfigError(format!(
            "op `{}`: field `M` is used by `DM` only, and required there",
            t.op.name()
        )));
    }
    let run = || -> crate::Result<Vec<Check>> {
        Ok(match t.op {
            OpName::Z => {
                let shift = CoefficientOperator::new(
                    CoefficientOperator::multiply_by_z(dim).matrix() - &CMatrix::identity(dim).scale(z),
                )?;
                vec![
                    extension("J((ζ - z) f) = Z J(f)", &shift, &JetOperator::shift(n), f, z)?,
                    adjoint(&shift, f, g)?,
                ]
            }
            OpName::S => {
                let c = commutator_check(n)?;
                vec![
                    extension(
                        "J(f') = S J(f)",
                        &CoefficientOperator::differentiate(dim),
                        &JetOperator::derivative(n),
                        f,
                        z,
                    )?,
                    Check {
                        identity: "SZ - ZS = I on the leading block",
                        deviation: c.leading_deviation,
                        tolerance: 0.0,
                    },
                ]
            }
            OpName::Mz => {
                let mz = CoefficientOperator::multiply_by_z(dim);
                vec![
                    extension("J(ζ f) = (zI + Z) J(f)", &mz, &JetOperator::multiply(z, n), f, z)?,
                    adjoint(&mz, f, g)?,
                ]
            }
            OpName::Dz => {
                let d = CoefficientOperator::differentiate(dim);
                let mz = CoefficientOperator::multiply_by_z(dim);
                let dm = d.compose(&mz)?;
                let md = mz.compose(&d)?;
                let comm = CoefficientOperator::new(dm.matrix() - md.matrix())?.apply(f)?;
                let (dev, mag) = prefix_deviation(comm.coeffs(), f.coeffs(), f.len());
                let lhs = extend_operator(&dm, f, z, n)?;
                let rhs = extend_operator(&d, &mz.apply(f)?, z, n)?;
                let (cdev, cmag) = prefix_deviation(&lhs.entries, &rhs.entries, n);
                vec![
                    adjoint(&d, f, g)?,
                    Check::new("(d/dζ ζ - ζ d/dζ) f = f", dev, mag),
                    Check::new("J((d/dζ ζ) f) = J(d/dζ (ζ f))", cdev, cmag),
                ]
            }
            OpName::Dm => {
                let m = t.m.expect("checked above");
                let d = dilation(m, z, dim)?;
                vec![
                    extension("J(f(z + M(ζ - z))) = D(M) J(f)", &d, &JetOperator::scale(m, n), f, z)?,
                    adjoint(&d, f, g)?,
                ]
            }
        })
    };
    Ok(run())
}

pub(crate) fn run(cfg: &RunConfig) -> CliResult<Artifact> {
    let n = cfg.truncation.order;
    if n < 3 {
        return Err(ConfigError("opcheck needs truncation N >= 3".into()));
    }
    let spec = cfg
        .function
        .as_ref()
        .ok_or_else(|| ConfigError("command `opcheck` requires field `function`".into()))?;
    let f = spec.build(n)?;
    let g = cfg.g.as_ref().unwrap_or(spec).build(n)?;
    let z = cfg.base_point();
    let ops = cfg.ops.clone().unwrap_or_else(|| {
        [OpName::Z, OpName::S, OpName::Mz, OpName::Dz]
            .into_iter()
            .map(|op| OpTemplate { op, m: None })
            .chain(std::iter::once(OpTemplate {
                op: OpName::Dm,
                m: Some(2.0),
            }))
            .collect()
    });

    let mut results = Vec::new();
    let mut rows = Vec::new();
    let mut all_pass = true;
    for t in &ops {
        let checks = match refusal(checks_for(t, &f, &g, z, n)?)? {
            Ok(c) => c,
            Err(e) => return Ok(refused(cfg, &e)),
        };
        let mut entry = json!({ "op": t.op.name() });
        if let Some(m) = t.m {
            entry["M"] = num(m);
        }
        entry["checks"] = Value::Array(
            checks
                .iter()
                .map(|c| {
                    json!({
                        "identity": c.identity,
                        "deviation": num(c.deviation),
                        "tolerance": num(c.tolerance),
                        "pass": c.pass(),
                    })
                })
                .collect(),
        );
        for c in &checks {
            all_pass &= c.pass();
            rows.push(vec![
                t.op.name().to_string(),
                format!("\"{}\"", c.identity),
                render::float(c.deviation),
                render::float(c.tolerance),
                c.pass().to_string(),
            ]);
        }
        results.push(entry);
    }
    Ok(Artifact {
        json: json!({
            "command": "opcheck",
            "status": if all_pass { "certified" } else { "not_certified" },
            "base": cx(z),
            "order": n,
            "results": results,
        }),
        csv: Some(render::table_csv(
            &["op", "identity", "deviation", "tolerance", "pass"],
            &rows,
        )),
        summary: format!(
            "opcheck: {} template(s) at N = {n}, {}",
            ops.len(),
            if all_pass {
                "all identities hold"
            } else {
                "some identities fail"
            }
        ),
        certified: all_pass,
    })
}
