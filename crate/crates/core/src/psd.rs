//! Gram matrices of kernels over sampled arguments, Hermitian eigenvalues
//! by cyclic Jacobi rotations, and positivity verdicts.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{AlgebraDescriptor, AlgebraElement, AlgebraKind, DualFunctional, ScalarField};
use crate::error::{Error, Result};
use crate::jet::jet_of;
use crate::kernel::factor::{h_inner, weights};
use crate::kernel::{
    extended_kernel, fock_extended, kernel_eval, matrix_trace_kernel, ExtendedPoint, KernelCoefficients,
    QuaternionPoint,
};
use crate::linalg::{binomial_table, CMatrix};
use crate::series::{ell2_check, Ell2Verdict, EntireFunctionRep};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest sample plan accepted.
pub const MAX_SAMPLES: usize = 512;

/// Relative PSD tolerance, scaled by `max(1, largest diagonal entry)`.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Environment variable capping the Gram worker threads.
pub const THREADS_ENV: &str = "AKX_THREADS";

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("failed to start worker threads")
    })
}

/// A kernel evaluated on pairs of sample points.
pub trait KernelOp: Sync {
    type Point: Sync;

    fn eval(&self, x: &Self::Point, y: &Self::Point) -> Result<C64>;

    /// Per-point precondition, checked before any entry is computed.
    fn validate(&self, _x: &Self::Point) -> Result<()> {
        Ok(())
    }
}

/// The scalar kernel `K(z, w)` of a `p = 1` grid.
pub struct ScalarKernelOp<'a>(pub &'a KernelCoefficients);

impl KernelOp for ScalarKernelOp<'_> {
    type Point = C64;

    fn eval(&self, x: &C64, y: &C64) -> Result<C64> {
        self.0.require_scalar()?;
        Ok(kernel_eval(self.0, *x, *y)?.value[(0, 0)])
    }
}

/// [`fock_extended`] truncated at `order` terms.
pub struct FockExtendedOp {
    pub order: usize,
}

impl KernelOp for FockExtendedOp {
    type Point = ExtendedPoint;

    fn eval(&self, x: &ExtendedPoint, y: &ExtendedPoint) -> Result<C64> {
        Ok(fock_extended(x, y, self.order)?.value)
    }
}

/// [`extended_kernel`] of a scalar grid truncated at `order`.
pub struct ExtendedKernelOp<'a> {
    pub kernel: &'a KernelCoefficients,
    pub order: usize,
}

impl KernelOp for ExtendedKernelOp<'_> {
    type Point = ExtendedPoint;

    fn eval(&self, x: &ExtendedPoint, y: &ExtendedPoint) -> Result<C64> {
        Ok(extended_kernel(self.kernel, x, y, self.order)?.value)
    }

    fn validate(&self, x: &ExtendedPoint) -> Result<()> {
        let r = ell2_check(&x.functional, &x.element, 0.0)?;
        if r.verdict == Ell2Verdict::NotSummable {
            return Err(Error::NotSquareSummable { index: 0 });
        }
        Ok(())
    }
}

/// [`matrix_trace_kernel`] truncated at `order`.
pub struct MatrixTraceOp {
    pub order: usize,
}

impl KernelOp for MatrixTraceOp {
    type Point = ExtendedPoint;

    fn eval(&self, x: &ExtendedPoint, y: &ExtendedPoint) -> Result<C64> {
        Ok(matrix_trace_kernel(
            &x.functional,
            &x.element,
            x.z,
            &y.functional,
            &y.element,
            y.z,
            self.order,
        )?
        .value)
    }
}

/// [`QuaternionPoint::kernel`] truncated at `order`.
pub struct QuaternionOp {
    pub order: usize,
}

impl KernelOp for QuaternionOp {
    type Point = QuaternionPoint;

    fn eval(&self, x: &QuaternionPoint, y: &QuaternionPoint) -> Result<C64> {
        Ok(C64::new(x.kernel(y, self.order)?.value, 0.0))
    }
}

/// Sample points generated deterministically from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplePlan<P> {
    pub seed: u64,
    pub points: Vec<P>,
}

/// Ranges for random extended points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointScales {
    /// Base points are uniform in the disk (or interval, over the reals) of this radius.
    pub z_radius: f64,
    /// Algebra elements are scaled to a norm uniform in `[0, element_norm]`.
    pub element_norm: f64,
    /// Functional coordinates are uniform in `[-s, s]`.
    pub functional_scale: f64,
}

impl Default for PointScales {
    fn default() -> Self {
        Self {
            z_radius: 0.5,
            element_norm: 0.5,
            functional_scale: 1.0,
        }
    }
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 || count > MAX_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "sample count must be in 1..={MAX_SAMPLES}, got {count}"
        )));
    }
    Ok(())
}

fn random_base<R: Rng>(rng: &mut R, radius: f64, field: ScalarField) -> C64 {
    match field {
        ScalarField::Real => C64::new(rng.gen_range(-radius..=radius), 0.0),
        ScalarField::Complex => C64::from_polar(
            radius * rng.gen::<f64>().sqrt(),
            rng.gen_range(0.0..std::f64::consts::TAU),
        ),
    }
}

impl<P: Clone> SamplePlan<P> {
    pub fn count(&self) -> usize {
        self.points.len()
    }

    /// The plan with points reordered so that point `i` is old point `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.points.len()];
        if perm.len() != self.points.len()
            || perm
                .iter()
                .any(|&i| i >= seen.len() || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::InvalidArgument("not a permutation of the sample plan".into()));
        }
        Ok(Self {
            seed: self.seed,
            points: perm.iter().map(|&i| self.points[i].clone()).collect(),
        })
    }
}

impl SamplePlan<ExtendedPoint> {
    /// `(z, A, a)` triples over `descriptor`.
    pub fn extended(descriptor: AlgebraDescriptor, count: usize, seed: u64, scales: PointScales) -> Result<Self> {
        check_count(count)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..count)
            .map(|_| {
                let z = random_base(&mut rng, scales.z_radius, descriptor.field());
                let raw = match descriptor.kind() {
                    AlgebraKind::Grassmann { .. } => AlgebraElement::random_soul(descriptor, 1.0, &mut rng),
                    _ => AlgebraElement::random(descriptor, 1.0, &mut rng),
                };
                let norm = raw.level_norm(0.0);
                let target = scales.element_norm * rng.gen::<f64>();
                let element = if norm > 0.0 {
                    raw.scale(C64::new(target / norm, 0.0))
                } else {
                    raw
                };
                let functional = DualFunctional::random(descriptor, scales.functional_scale, &mut rng);
                ExtendedPoint::new(z, element, functional)
            })
            .collect();
        Ok(Self { seed, points })
    }
}

impl SamplePlan<QuaternionPoint> {
    /// `(a, p, t)` with `|p| ≤ 0.7` and `t ∈ [-1, 1]`.
    pub fn quaternion(count: usize, seed: u64) -> Result<Self> {
        check_count(count)?;
        let d = AlgebraDescriptor::quaternion();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..count)
            .map(|_| {
                let a = AlgebraElement::random(d, 1.0, &mut rng);
                let p = AlgebraElement::random(d, 1.0, &mut rng);
                let p = p.scale(C64::new(
                    0.7 * rng.gen::<f64>() / p.level_norm(0.0).max(f64::MIN_POSITIVE),
                    0.0,
                ));
                QuaternionPoint {
                    a,
                    p,
                    t: rng.gen_range(-1.0..=1.0),
                }
            })
            .collect();
        Ok(Self { seed, points })
    }
}

impl SamplePlan<C64> {
    /// Points uniform in the disk of `radius`.
    pub fn scalar(count: usize, seed: u64, radius: f64) -> Result<Self> {
        check_count(count)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..count)
            .map(|_| random_base(&mut rng, radius, ScalarField::Complex))
            .collect();
        Ok(Self { seed, points })
    }
}

/// `G[i][j] = kernel(pointᵢ, pointⱼ)`, every entry computed independently.
pub fn gram<K: KernelOp>(op: &K, points: &[K::Point]) -> Result<CMatrix> {
    check_count(points.len())?;
    for (i, p) in points.iter().enumerate() {
        op.validate(p).map_err(|e| match e {
            Error::NotSquareSummable { .. } => Error::NotSquareSummable { index: i },
            other => other,
        })?;
    }
    let n = points.len();
    let entries: Vec<C64> = pool().install(|| {
        (0..n * n)
            .into_par_iter()
            .map(|idx| op.eval(&points[idx / n], &points[idx % n]))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(CMatrix::from_row_major(n, n, entries))
}

/// `1e-9 · max(1, max |G_ii|)`.
pub fn default_tolerance(g: &CMatrix) -> f64 {
    let diag = (0..g.rows()).map(|i| g[(i, i)].norm()).fold(0.0, f64::max);
    PSD_TOLERANCE * diag.max(1.0)
}

fn symmetrized(g: &CMatrix) -> CMatrix {
    let h = g.adjoint();
    CMatrix::from_fn(g.rows(), g.cols(), |i, j| (g[(i, j)] + h[(i, j)]) * 0.5)
}

const JACOBI_SWEEPS: usize = 100;

/// Eigenvalues of a Hermitian matrix in ascending order, by cyclic Jacobi
/// rotations. Only the upper triangle's Hermitian part is used.
pub fn hermitian_eigenvalues(g: &CMatrix) -> Result<Vec<f64>> {
    if !g.is_square() {
        return Err(Error::InvalidArgument("eigenvalues need a square matrix".into()));
    }
    let n = g.rows();
    let mut a = symmetrized(g).into_vec();
    for i in 0..n {
        a[i * n + i].im = 0.0;
    }
    let frob: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-16 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let abs = apq.norm();
                if abs == 0.0 || abs <= 1e-300 {
                    continue;
                }
                // unitary diagonal scaling makes a_pq real and positive
                let phase = apq / abs;
                for r in 0..n {
                    a[r * n + q] *= phase.conj();
                }
                for r in 0..n {
                    a[q * n + r] *= phase;
                }
                let (app, aqq) = (a[p * n + p].re, a[q * n + q].re);
                let theta = (aqq - app) / (2.0 * abs);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let (x, y) = (a[r * n + p], a[r * n + q]);
                    a[r * n + p] = x * c - y * s;
                    a[r * n + q] = x * s + y * c;
                }
                for r in 0..n {
                    let (x, y) = (a[p * n + r], a[q * n + r]);
                    a[p * n + r] = x * c - y * s;
                    a[q * n + r] = x * s + y * c;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Smallest eigenvalue, refusing matrices that are not Hermitian within
/// [`default_tolerance`].
pub fn min_eigenvalue(g: &CMatrix) -> Result<f64> {
    let tolerance = default_tolerance(g);
    let defect = g.hermitian_defect();
    if defect > tolerance {
        return Err(Error::NonHermitian { defect, tolerance });
    }
    Ok(hermitian_eigenvalues(g)?[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PsdReport {
    pub size: usize,
    pub min_eigenvalue: f64,
    pub hermitian_defect: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Pass iff `min_eigenvalue ≥ −tolerance` and `hermitian_defect ≤ tolerance`.
pub fn psd_report(g: &CMatrix) -> Result<PsdReport> {
    let tolerance = default_tolerance(g);
    let hermitian_defect = g.hermitian_defect();
    let min_eigenvalue = hermitian_eigenvalues(g)?[0];
    let ok = min_eigenvalue >= -tolerance && hermitian_defect <= tolerance;
    Ok(PsdReport {
        size: g.rows(),
        min_eigenvalue,
        hermitian_defect,
        tolerance,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct JetIsometryReport {
    pub pairs: usize,
    pub max_deviation: f64,
}

/// Compares `⟨f, g⟩` in `H(K)` with the jet-space pairing `η^H J_w(f)`,
/// where `η` solves `g = Σ_{m<N} D_{m,w} ηₘ` on the first `N` coefficients.
///
/// The two agree exactly once `deg f < N`: only the first `N` jet entries of
/// `f` are nonzero, and `g`'s coefficients up to `N` are matched.
pub fn jet_isometry_check(
    k: &KernelCoefficients,
    f_set: &[EntireFunctionRep],
    g_set: &[EntireFunctionRep],
    w_samples: &[C64],
    order: usize,
) -> Result<JetIsometryReport> {
    let c = weights(k)?;
    if order == 0 || order > c.len() || c[..order].contains(&0.0) {
        return Err(Error::UnsupportedKernel(format!(
            "kernel needs {order} positive diagonal coefficients for the jet isometry"
        )));
    }
    let binom = binomial_table(order);
    let mut max_dev: f64 = 0.0;
    let mut pairs = 0;
    for w in w_samples {
        let wb = w.conj();
        let wp: Vec<C64> = std::iter::successors(Some(C64::new(1.0, 0.0)), |p| Some(p * wb))
            .take(order)
            .collect();
        for g in g_set {
            // forward substitution in g_j = c_j Σ_{m ≤ j} C(j,m) w̄^{j−m} ηₘ
            let mut eta = vec![ZERO; order];
            for j in 0..order {
                let gj = g.coeffs().get(j).copied().unwrap_or(ZERO);
                let known: C64 = (0..j).map(|m| eta[m] * wp[j - m] * binom[j][m]).sum();
                eta[j] = gj / c[j] - known;
            }
            for f in f_set {
                let jet = jet_of(f, *w, order)?;
                let rhs: C64 = eta.iter().zip(&jet.entries).map(|(e, x)| e.conj() * x).sum();
                let lhs = h_inner(k, &c, f, g);
                max_dev = max_dev.max((lhs - rhs).norm());
                pairs += 1;
            }
        }
    }
    Ok(JetIsometryReport {
        pairs,
        max_deviation: max_dev,
    })
}
