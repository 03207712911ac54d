use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use super::config::{Command, KernelOpName, RunConfig, ScalesSpec};
use super::render::{self, cx, cx_list, num};
use super::{opcheck, Artifact, CliResult, ConfigError};
use crate::algebra::{AlgebraElement, AlgebraKind};
use crate::error::Error;
use crate::jet::jet_of;
use crate::kernel::{
    extended_kernel, factorization_check, fock_extended, grassmann_closed_form, kernel_eval, matrix_trace_kernel,
    scaled_kernel, script_k_block, ExtendedPoint, KernelCoefficients, QuaternionPoint,
};
use crate::psd::{
    gram, psd_report, ExtendedKernelOp, FockExtendedOp, MatrixTraceOp, PsdReport, QuaternionOp, SamplePlan,
    ScalarKernelOp, Verdict,
};
use crate::series::{eval_ext, eval_weak, x_vector, Certified, PartialSum};
use crate::C64;

/// Deviation allowed in the factorization check.
const FACTORIZATION_TOLERANCE: f64 = 1e-10;

pub(crate) fn dispatch(cfg: &RunConfig) -> CliResult<Artifact> {
    match cfg.command {
        Command::Eval => eval(cfg),
        Command::Jet => jet(cfg),
        Command::Kernel => kernel(cfg),
        Command::Gram | Command::Check => gram_or_check(cfg),
        Command::Opcheck => opcheck::run(cfg),
    }
}

/// Splits library errors into refusals (exit 2) and input errors (exit 1).
pub(crate) fn refusal<T>(r: crate::Result<T>) -> CliResult<Result<T, Error>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e) if e.is_certification_failure() => Ok(Err(e)),
        Err(e) => Err(e.into()),
    }
}

fn error_details(e: &Error) -> Value {
    match e {
        Error::NonConvergence(nc) => json!({
            "partial": match &nc.partial {
                PartialSum::Element(el) => render::element(el),
                PartialSum::Scalar(c) => cx(*c),
            },
            "tail_bound": num(nc.tail_bound),
            "terms": nc.terms,
            "tail_tol": num(nc.tail_tol),
        }),
        Error::NotSquareSummable { index } => json!({ "index": index }),
        Error::NoAdmissibleScale { m0 } => json!({ "m0": num(*m0) }),
        Error::ScaleOutOfRange { m, m0 } => json!({ "M": num(*m), "m0": num(*m0) }),
        Error::RadiusViolation { modulus, radius } => json!({ "modulus": num(*modulus), "radius": num(*radius) }),
        _ => Value::Null,
    }
}

pub(crate) fn refused(cfg: &RunConfig, e: &Error) -> Artifact {
    Artifact {
        json: json!({
            "command": cfg.command.name(),
            "status": "not_certified",
            "error": e.to_string(),
            "details": error_details(e),
        }),
        csv: None,
        summary: format!("{}: not certified: {e}", cfg.command.name()),
        certified: false,
    }
}

fn status(certified: bool) -> &'static str {
    if certified {
        "certified"
    } else {
        "not_certified"
    }
}

fn required<'a, T>(v: &'a Option<T>, field: &str, cfg: &RunConfig) -> CliResult<&'a T> {
    v.as_ref()
        .ok_or_else(|| ConfigError(format!("command `{}` requires field `{field}`", cfg.command.name())))
}

fn certified_json<T>(c: &Certified<T>, value: Value) -> Value {
    json!({ "value": value, "tail_bound": num(c.tail_bound), "terms": c.terms })
}

fn eval(cfg: &RunConfig) -> CliResult<Artifact> {
    let pol = cfg.truncation;
    let f = required(&cfg.function, "function", cfg)?.build(pol.max_terms)?;
    let a = required(&cfg.element, "A", cfg)?;
    if let Some(d) = &cfg.algebra {
        d.ensure_same(a.descriptor())?;
    }
    let z = cfg.base_point();
    let strong = match refusal(eval_ext(&f, z, a, &pol))? {
        Ok(v) => v,
        Err(e) => return Ok(refused(cfg, &e)),
    };
    let weak = match &cfg.functional {
        None => None,
        Some(functional) => match refusal(eval_weak(&f, z, a, functional, &pol))? {
            Ok(v) => Some(v),
            Err(e) => return Ok(refused(cfg, &e)),
        },
    };

    let mut rows: Vec<Vec<String>> = strong
        .value
        .coords()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            vec![
                format!("strong_{i}"),
                render::float(c.re),
                render::float(c.im),
                render::float(strong.tail_bound),
            ]
        })
        .collect();
    let mut out = json!({
        "command": "eval",
        "status": "certified",
        "z": cx(z),
        "tail_tol": num(pol.tail_tol),
        "strong": certified_json(&strong, render::element(&strong.value)),
    });
    let mut summary = format!(
        "eval: f(z + A) in {} terms, tail bound {:e}",
        strong.terms, strong.tail_bound
    );
    if let Some(w) = &weak {
        out["weak"] = certified_json(w, cx(w.value));
        rows.push(vec![
            "weak".into(),
            render::float(w.value.re),
            render::float(w.value.im),
            render::float(w.tail_bound),
        ]);
        summary.push_str(&format!("; weak value {} (tail bound {:e})", w.value, w.tail_bound));
    }
    Ok(Artifact {
        json: out,
        csv: Some(render::table_csv(&["entry", "re", "im", "tail_bound"], &rows)),
        summary,
        certified: true,
    })
}

fn jet(cfg: &RunConfig) -> CliResult<Artifact> {
    let pol = cfg.truncation;
    let f = required(&cfg.function, "function", cfg)?.build(pol.max_terms)?;
    let z = cfg.base_point();
    let jet = match refusal(jet_of(&f, z, pol.order))? {
        Ok(j) => j,
        Err(e) => return Ok(refused(cfg, &e)),
    };
    let rows: Vec<Vec<String>> = jet
        .entries
        .iter()
        .enumerate()
        .map(|(n, c)| vec![n.to_string(), render::float(c.re), render::float(c.im)])
        .collect();
    Ok(Artifact {
        // entries are exact Taylor coefficients of the stored coefficient array
        json: json!({
            "command": "jet",
            "status": "certified",
            "base": cx(z),
            "order": jet.order(),
            "coefficients": f.len(),
            "entries": cx_list(&jet.entries),
            "tail_bound": 0.0,
        }),
        csv: Some(render::table_csv(&["n", "re", "im"], &rows)),
        summary: format!("jet: {} entries at {z}", jet.order()),
        certified: true,
    })
}

fn parse<T: DeserializeOwned>(v: &Value, what: &str) -> CliResult<T> {
    serde_json::from_value(v.clone()).map_err(|e| ConfigError(format!("{what}: {e}")))
}

fn complex(v: &Value, what: &str) -> CliResult<C64> {
    let [re, im]: [f64; 2] = parse(v, what)?;
    Ok(C64::new(re, im))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GrassmannPoint {
    #[serde(with = "crate::complex_pair")]
    z: C64,
    #[serde(rename = "A")]
    soul: AlgebraElement,
}

fn soul_tail(k: &KernelCoefficients, z: &GrassmannPoint, w: &GrassmannPoint) -> f64 {
    let AlgebraKind::Grassmann { generators } = z.soul.descriptor().kind() else {
        return f64::INFINITY;
    };
    // |z_Sⁿ| ≤ ‖z_S‖ⁿ in the submultiplicative coefficient norm, and z_S^{N+1} = 0
    let geometric = |s: &AlgebraElement| {
        let r = s.level_norm(0.0);
        (0..=generators as i32).map(|n| r.powi(n)).sum::<f64>()
    };
    k.weighted_truncation_tail(generators + 1, z.z, w.z, 1.0) * geometric(&z.soul) * geometric(&w.soul)
}

/// JSON entry, scalar `(value, tail)` when there is one, and whether it certified.
type PairOutcome = (Value, Option<(C64, f64)>, bool);

fn kernel(cfg: &RunConfig) -> CliResult<Artifact> {
    let op = *required(&cfg.kernel_op, "kernel_op", cfg)?;
    let pairs = required(&cfg.pairs, "pairs", cfg)?;
    let k = match (&cfg.kernel, op.needs_kernel()) {
        (Some(spec), true) => Some(spec.build()?),
        (None, true) => {
            return Err(ConfigError(format!(
                "kernel_op `{}` requires field `kernel`",
                op.name()
            )))
        }
        (Some(_), false) => {
            return Err(ConfigError(format!(
                "kernel_op `{}` does not use field `kernel`",
                op.name()
            )))
        }
        (None, false) => None,
    };
    if cfg.m.is_some() != (op == KernelOpName::Scaled) {
        return Err(ConfigError(
            "field `M` is used by kernel_op `scaled` only, and required there".into(),
        ));
    }
    let order = cfg.truncation.order;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));

    let mut results = Vec::with_capacity(pairs.len());
    // (value, tail) per pair for the CSV view; None once a value is not scalar
    let mut scalars: Option<Vec<(C64, f64)>> = Some(Vec::new());
    let mut all_ok = true;
    for (i, [left, right]) in pairs.iter().enumerate() {
        let what = |side: &str| format!("pairs[{i}].{side}");
        let outcome: crate::Result<PairOutcome> = match op {
            KernelOpName::Eval => {
                let k = k.as_ref().expect("checked above");
                let (z, w) = (complex(left, &what("0"))?, complex(right, &what("1"))?);
                kernel_eval(k, z, w).map(|c| {
                    let scalar = (k.p() == 1).then(|| (c.value[(0, 0)], c.tail_bound));
                    let value = match scalar {
                        Some((v, _)) => cx(v),
                        None => render::matrix(&c.value, false),
                    };
                    (
                        json!({ "z": cx(z), "w": cx(w), "value": value, "tail_bound": num(c.tail_bound) }),
                        scalar,
                        true,
                    )
                })
            }
            KernelOpName::Block => {
                let k = k.as_ref().expect("checked above");
                let (z, w) = (complex(left, &what("0"))?, complex(right, &what("1"))?);
                script_k_block(k, z, w, order).map(|b| {
                    let tail = k.weighted_truncation_tail(order, z, w, 1.0);
                    let v = json!({
                        "z": cx(z), "w": cx(w),
                        "block": render::matrix(&b.block.to_matrix(), false),
                        "scale": num(b.scale), "constant": num(b.constant), "bound": num(b.bound),
                        "tail_bound": num(tail),
                    });
                    (v, None, true)
                })
            }
            KernelOpName::Scaled => {
                let k = k.as_ref().expect("checked above");
                let m = cfg.m.expect("checked above");
                let l: ExtendedPoint = parse(left, &what("0"))?;
                let r: ExtendedPoint = parse(right, &what("1"))?;
                let xa = x_vector(&l.functional, &l.element, order)?;
                let xb = x_vector(&r.functional, &r.element, order)?;
                scaled_kernel(k, l.z, r.z, m, &xb, &xa).map(|s| {
                    let v = json!({
                        "value": cx(s.value), "bound": num(s.bound), "tail_bound": num(s.tail_bound),
                        "m0": s.m0.map(num).unwrap_or(json!("inf")), "M": num(m),
                    });
                    (v, Some((s.value, s.tail_bound)), true)
                })
            }
            KernelOpName::Extended | KernelOpName::FockExtended | KernelOpName::MatrixTrace => {
                let l: ExtendedPoint = parse(left, &what("0"))?;
                let r: ExtendedPoint = parse(right, &what("1"))?;
                let c = match op {
                    KernelOpName::Extended => extended_kernel(k.as_ref().expect("checked above"), &l, &r, order),
                    KernelOpName::FockExtended => fock_extended(&l, &r, order),
                    _ => matrix_trace_kernel(&l.functional, &l.element, l.z, &r.functional, &r.element, r.z, order),
                };
                c.map(|c| (certified_json(&c, cx(c.value)), Some((c.value, c.tail_bound)), true))
            }
            KernelOpName::Quaternion => {
                let l: QuaternionPoint = parse(left, &what("0"))?;
                let r: QuaternionPoint = parse(right, &what("1"))?;
                l.kernel(&r, order).map(|c| {
                    let v = C64::new(c.value, 0.0);
                    (certified_json(&c, cx(v)), Some((v, c.tail_bound)), true)
                })
            }
            KernelOpName::Grassmann => {
                let k = k.as_ref().expect("checked above");
                let l: GrassmannPoint = parse(left, &what("0"))?;
                let r: GrassmannPoint = parse(right, &what("1"))?;
                grassmann_closed_form(k, l.z, &l.soul, r.z, &r.soul).map(|e| {
                    let v = json!({ "value": render::element(&e), "tail_bound": num(soul_tail(k, &l, &r)) });
                    (v, None, true)
                })
            }
            KernelOpName::Factorization => {
                let k = k.as_ref().expect("checked above");
                let (z, w) = (complex(left, &what("0"))?, complex(right, &what("1"))?);
                let etas: Vec<Vec<C64>> = (0..3)
                    .map(|_| {
                        (0..order)
                            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                            .collect()
                    })
                    .collect();
                factorization_check(k, &etas, z, w, order).map(|r| {
                    let pass = r.max_deviation <= FACTORIZATION_TOLERANCE;
                    let v = json!({
                        "z": cx(z), "w": cx(w),
                        "jet_deviation": num(r.jet_deviation),
                        "inner_product_deviation": num(r.inner_product_deviation),
                        "sample_deviation": num(r.sample_deviation),
                        "max_deviation": num(r.max_deviation),
                        "tolerance": FACTORIZATION_TOLERANCE,
                        "pass": pass,
                    });
                    (v, None, pass)
                })
            }
        };
        match refusal(outcome)? {
            Ok((v, scalar, ok)) => {
                all_ok &= ok;
                match (scalar, scalars.as_mut()) {
                    (Some(s), Some(list)) => list.push(s),
                    _ => scalars = None,
                }
                results.push(v);
            }
            Err(e) => {
                all_ok = false;
                scalars = None;
                results.push(json!({ "index": i, "error": e.to_string(), "details": error_details(&e) }));
            }
        }
    }

    let csv = scalars.map(|list| {
        let rows: Vec<Vec<String>> = list
            .iter()
            .enumerate()
            .map(|(i, (v, t))| {
                vec![
                    i.to_string(),
                    render::float(v.re),
                    render::float(v.im),
                    render::float(*t),
                ]
            })
            .collect();
        render::table_csv(&["pair", "re", "im", "tail_bound"], &rows)
    });
    Ok(Artifact {
        json: json!({
            "command": "kernel",
            "kernel_op": op.name(),
            "status": status(all_ok),
            "order": order,
            "results": results,
        }),
        csv,
        summary: format!(
            "kernel: {} on {} pair(s), {}",
            op.name(),
            pairs.len(),
            if all_ok {
                "all certified"
            } else {
                "some pairs not certified"
            }
        ),
        certified: all_ok,
    })
}

/// Sample points, explicit (parsed as `R`) or seeded.
fn points<R: DeserializeOwned, P>(
    cfg: &RunConfig,
    explicit: impl Fn(R) -> P,
    seeded: impl FnOnce(usize, u64) -> crate::Result<Vec<P>>,
) -> CliResult<Vec<P>> {
    match (&cfg.points, cfg.samples) {
        (Some(list), None) => list
            .iter()
            .enumerate()
            .map(|(i, v)| parse(v, &format!("points[{i}]")).map(&explicit))
            .collect(),
        (None, Some(n)) => Ok(seeded(n, cfg.seed.unwrap_or(0))?),
        _ => Err(ConfigError(format!(
            "command `{}` needs exactly one of `points` and `samples`",
            cfg.command.name()
        ))),
    }
}

fn report_json(r: &PsdReport) -> Value {
    json!({
        "size": r.size,
        "min_eigenvalue": num(r.min_eigenvalue),
        "hermitian_defect": num(r.hermitian_defect),
        "tolerance": num(r.tolerance),
        "verdict": match r.verdict { Verdict::Pass => "pass", Verdict::Fail => "fail" },
    })
}

fn gram_or_check(cfg: &RunConfig) -> CliResult<Artifact> {
    let op = cfg.kernel_op.unwrap_or(if cfg.algebra.is_some() {
        KernelOpName::Extended
    } else {
        KernelOpName::Eval
    });
    let k = match (&cfg.kernel, op.needs_kernel()) {
        (Some(spec), true) => Some(spec.build()?),
        (None, true) => {
            return Err(ConfigError(format!(
                "kernel_op `{}` requires field `kernel`",
                op.name()
            )))
        }
        (Some(_), false) => {
            return Err(ConfigError(format!(
                "kernel_op `{}` does not use field `kernel`",
                op.name()
            )))
        }
        (None, false) => None,
    };
    let order = cfg.truncation.order;
    let scales = ScalesSpec::resolve(cfg.scales);
    let seed = cfg.seed.unwrap_or(0);
    let algebra = || {
        cfg.algebra
            .ok_or_else(|| Error::InvalidArgument("seeded extended samples need field `algebra`".into()))
    };

    let (g, pts) = match op {
        KernelOpName::Eval => {
            let k = k.as_ref().expect("checked above");
            let pts: Vec<C64> = points(
                cfg,
                |[re, im]: [f64; 2]| C64::new(re, im),
                |n, s| Ok(SamplePlan::scalar(n, s, scales.z_radius)?.points),
            )?;
            (refusal(gram(&ScalarKernelOp(k), &pts))?, cx_list(&pts))
        }
        KernelOpName::Extended | KernelOpName::FockExtended | KernelOpName::MatrixTrace => {
            let pts: Vec<ExtendedPoint> = points(
                cfg,
                |p| p,
                |n, s| Ok(SamplePlan::extended(algebra()?, n, s, scales)?.points),
            )?;
            let g = match op {
                KernelOpName::Extended => {
                    let kernel = k.as_ref().expect("checked above");
                    refusal(gram(&ExtendedKernelOp { kernel, order }, &pts))?
                }
                KernelOpName::FockExtended => refusal(gram(&FockExtendedOp { order }, &pts))?,
                _ => refusal(gram(&MatrixTraceOp { order }, &pts))?,
            };
            (g, serde_json::to_value(&pts).map_err(crate::Error::from)?)
        }
        KernelOpName::Quaternion => {
            let pts: Vec<QuaternionPoint> = points(cfg, |p| p, |n, s| Ok(SamplePlan::quaternion(n, s)?.points))?;
            (
                refusal(gram(&QuaternionOp { order }, &pts))?,
                serde_json::to_value(&pts).map_err(crate::Error::from)?,
            )
        }
        other => {
            return Err(ConfigError(format!(
                "kernel_op `{}` has no Gram matrix; use eval, extended, fock_extended, matrix_trace or quaternion",
                other.name()
            )))
        }
    };
    let g = match g {
        Ok(g) => g,
        Err(e) => return Ok(refused(cfg, &e)),
    };
    let report = psd_report(&g)?;
    let pass = report.verdict == Verdict::Pass;
    let summary = format!(
        "{}: {}x{} Gram of {}, min eigenvalue {:e}, Hermitian defect {:e}, tolerance {:e}: {}",
        cfg.command.name(),
        report.size,
        report.size,
        op.name(),
        report.min_eigenvalue,
        report.hermitian_defect,
        report.tolerance,
        if pass { "pass" } else { "fail" }
    );
    let mut out = json!({
        "command": cfg.command.name(),
        "status": status(pass),
        "kernel_op": op.name(),
        "seed": seed,
        "order": order,
        "report": report_json(&report),
    });
    let csv = if cfg.command == Command::Gram {
        out["points"] = pts;
        out["gram"] = render::matrix(&g, false);
        render::matrix_csv(&g)
    } else {
        let row = vec![
            report.size.to_string(),
            render::float(report.min_eigenvalue),
            render::float(report.hermitian_defect),
            render::float(report.tolerance),
            if pass { "pass" } else { "fail" }.to_string(),
        ];
        render::table_csv(
            &["size", "min_eigenvalue", "hermitian_defect", "tolerance", "verdict"],
            &[row],
        )
    };
    Ok(Artifact {
        json: out,
        csv: Some(csv),
        summary,
        certified: pass,
    })
}
