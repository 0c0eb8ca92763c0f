//! Geometry of a single fiber: the cone of positive-definite symmetric
//! 2-tensors at one base point with the metric
//! `⟨b, c⟩⁰_a = tr(A⁻¹BA⁻¹C)·det A`, its completion (the cone closure with
//! the whole boundary collapsed to a point), and numerical distances.
//!
//! Tensors are expressed in a frame that is orthonormal for the reference
//! metric, so `A = a` throughout this module.

pub mod path;
mod tensor;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lbfgs::LbfgsOptions;
use crate::linalg::Mat;
use crate::scalar::Real;

pub use path::{Midpoint, SegmentRule};
pub use tensor::{packed_len, CompletionPoint, Definiteness, SpdTensor, SymTensor};

fn require_spd<T: Real>(a: &SymTensor<T>) -> Result<Mat<T>> {
    let eps = T::default_eps_pd();
    let min = a.min_eigenvalue();
    if min > eps {
        Ok(a.to_mat())
    } else {
        Err(Error::DegenerateBase {
            min_eig: min.to_f64().unwrap_or(f64::NAN),
            eps: eps.to_f64().unwrap_or(f64::NAN),
        })
    }
}

fn same_dim<T: Real>(a: &SymTensor<T>, b: &SymTensor<T>) -> Result<()> {
    if a.dim() == b.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(a.dim(), b.dim()))
    }
}

/// `tr_a(bc) = tr(A⁻¹BA⁻¹C)`.
pub fn trace_product<T: Real>(a: &SymTensor<T>, b: &SymTensor<T>, c: &SymTensor<T>) -> Result<T> {
    same_dim(a, b)?;
    same_dim(a, c)?;
    let inv = require_spd(a)?.inverse().ok_or(Error::DegenerateBase {
        min_eig: 0.0,
        eps: 0.0,
    })?;
    let p = inv.mul(&b.to_mat());
    let q = inv.mul(&c.to_mat());
    Ok(p.trace_of_product(&q))
}

/// `|b|⁰_a = sqrt(tr_a(b²)·det A)`.
pub fn fiber_norm0<T: Real>(a: &SymTensor<T>, b: &SymTensor<T>) -> Result<T> {
    let tr = trace_product(a, b, b)?;
    Ok((tr.max(T::zero()) * a.det()).sqrt())
}

/// Distance from an interior point to the collapsed boundary: `(2/√n)·√det A`.
pub fn dist_to_boundary<T: Real>(a: &SpdTensor<T>) -> T {
    cone_radius(a.as_sym())
}

/// `(2/√n)·√det A` for any semi-definite tensor (zero on the boundary).
pub fn cone_radius<T: Real>(a: &SymTensor<T>) -> T {
    let n = T::from_usize_lossy(a.dim());
    T::lit(2.0) / n.sqrt() * a.det().max(T::zero()).sqrt()
}

/// t-uniform polygon in the fiber. Endpoints may be degenerate (boundary
/// approach); interior nodes must be positive definite.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberPath<T> {
    nodes: Vec<SymTensor<T>>,
}

impl<T: Real> FiberPath<T> {
    pub fn new(nodes: Vec<SymTensor<T>>) -> Result<Self> {
        Self::with_eps(nodes, T::default_eps_pd())
    }

    pub fn with_eps(nodes: Vec<SymTensor<T>>, eps: T) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidPath("a path needs at least two nodes".into()));
        }
        let n = nodes[0].dim();
        let last = nodes.len() - 1;
        for (i, t) in nodes.iter().enumerate() {
            if t.dim() != n {
                return Err(Error::DimensionMismatch(n, t.dim()));
            }
            let kind = t
                .classify(eps)
                .map_err(|e| Error::InvalidPath(format!("node {i}: {e}")))?;
            if kind == Definiteness::Degenerate && i != 0 && i != last {
                return Err(Error::InvalidPath(format!("interior node {i} is not positive definite")));
            }
        }
        Ok(FiberPath { nodes })
    }

    /// Samples `f` at `t = i/k`, `i = 0..=k`.
    pub fn sample(k: usize, f: impl Fn(T) -> SymTensor<T>) -> Result<Self> {
        let kk = T::from_usize_lossy(k.max(1));
        Self::new((0..=k).map(|i| f(T::from_usize_lossy(i) / kk)).collect())
    }

    pub fn nodes(&self) -> &[SymTensor<T>] {
        &self.nodes
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        FiberPath { nodes }
    }

    pub(crate) fn mats(&self) -> Vec<Mat<T>> {
        path::to_mats(&self.nodes)
    }

    fn from_mats(m: &[Mat<T>]) -> Self {
        FiberPath {
            nodes: m.iter().map(SymTensor::from_mat).collect(),
        }
    }
}

/// Midpoint-rule length `Σ |a_{i+1} − a_i|⁰` evaluated at `(a_i + a_{i+1})/2`.
pub fn fiber_path_length<T: Real>(p: &FiberPath<T>) -> Result<T> {
    path::discrete_length(&SegmentRule::fiber(), &p.mats())
        .ok_or_else(|| Error::InvalidPath("segment with singular midpoint".into()))
}

/// Length of the piecewise-linear curve through the nodes, integrated with
/// Gauss–Legendre on each segment (an upper estimate of the distance).
pub fn fiber_polygon_length<T: Real>(p: &FiberPath<T>) -> Result<T> {
    path::piecewise_linear_length(&SegmentRule::fiber(), &p.mats())
        .ok_or_else(|| Error::InvalidPath("segment with singular interior point".into()))
}

#[derive(Clone, Debug)]
pub struct ThetaOptions<T> {
    /// Segment counts of the coarse-to-fine refinement.
    pub k_levels: Vec<usize>,
    pub max_iter: usize,
    /// Relative change in length that stops a level.
    pub rel_tol: T,
    pub eps_pd: T,
    /// Absolute slack for quadrature-level comparisons.
    pub quad_tol: T,
    /// Relative slack accepted in triangle-inequality checks.
    pub tri_tol: T,
    /// Keep the winning interior path in the result.
    pub keep_path: bool,
}

impl<T: Real> Default for ThetaOptions<T> {
    fn default() -> Self {
        ThetaOptions {
            k_levels: vec![16, 64, 256],
            max_iter: 500,
            rel_tol: T::lit(1e-8),
            eps_pd: T::default_eps_pd(),
            quad_tol: T::lit(1e-9),
            tri_tol: T::lit(0.02),
            keep_path: false,
        }
    }
}

impl<T: Real> ThetaOptions<T> {
    /// Cheaper budget for field-level sums over many distinct cells.
    pub fn coarse() -> Self {
        ThetaOptions {
            k_levels: vec![16, 64],
            ..Default::default()
        }
    }

    fn lbfgs(&self) -> LbfgsOptions<T> {
        LbfgsOptions {
            memory: 8,
            max_iter: self.max_iter,
            rel_tol: self.rel_tol,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaCandidate {
    Identical,
    BothBoundary,
    /// One endpoint is the boundary class; the value is the cone radius.
    BoundaryEndpoint,
    Linear,
    LogLinear,
    /// Conformal ray to the target determinant, then log-linear.
    ConformalDet,
    /// Through the collapsed boundary: `r₀ + r₁`.
    BoundaryDetour,
    /// A caller-supplied seed.
    Custom,
}

#[derive(Clone, Debug)]
pub struct ThetaResult<T> {
    pub value: T,
    pub candidate: ThetaCandidate,
    pub converged: bool,
    pub iterations: usize,
    pub path: Option<FiberPath<T>>,
}

impl<T: Real> ThetaResult<T> {
    fn exact(value: T, candidate: ThetaCandidate) -> Self {
        ThetaResult {
            value,
            candidate,
            converged: true,
            iterations: 0,
            path: None,
        }
    }
}

fn log_euclidean<T: Real>(l0: &Mat<T>, l1: &Mat<T>, s: T) -> Mat<T> {
    l0.scale(T::one() - s).add(&l1.scale(s)).sym_apply(|x| x.exp())
}

/// Seed paths with `k` segments between two interior points.
pub(crate) fn seed_paths<T: Real>(a0: &Mat<T>, a1: &Mat<T>, k: usize) -> Vec<(ThetaCandidate, Vec<Mat<T>>)> {
    let k = k.max(2);
    let kk = T::from_usize_lossy(k);
    let ts: Vec<T> = (0..=k).map(|i| T::from_usize_lossy(i) / kk).collect();
    let linear: Vec<Mat<T>> = ts.iter().map(|&t| a0.scale(T::one() - t).add(&a1.scale(t))).collect();
    let mut out = vec![(ThetaCandidate::Linear, linear)];

    let l0 = a0.sym_apply(|x| x.ln());
    let l1 = a1.sym_apply(|x| x.ln());
    let mut loglin: Vec<Mat<T>> = ts.iter().map(|&t| log_euclidean(&l0, &l1, t)).collect();
    loglin[0] = *a0;
    loglin[k] = *a1;
    out.push((ThetaCandidate::LogLinear, loglin));

    let n = T::from_usize_lossy(a0.n);
    let c = (a1.det() / a0.det()).powf(T::one() / n);
    let half = k / 2;
    let scaled = a0.scale(c);
    let ls = scaled.sym_apply(|x| x.ln());
    let mut conf = Vec::with_capacity(k + 1);
    for i in 0..=k {
        if i <= half {
            let s = T::from_usize_lossy(i) / T::from_usize_lossy(half);
            conf.push(a0.scale(T::one() + s * (c - T::one())));
        } else {
            let s = T::from_usize_lossy(i - half) / T::from_usize_lossy(k - half);
            conf.push(log_euclidean(&ls, &l1, s));
        }
    }
    conf[k] = *a1;
    out.push((ThetaCandidate::ConformalDet, conf));
    out
}

struct Refined<T> {
    candidate: ThetaCandidate,
    length: T,
    nodes: Vec<Mat<T>>,
    converged: bool,
    iterations: usize,
}

fn refine_seed<T: Real>(
    candidate: ThetaCandidate,
    seed: &[Mat<T>],
    opts: &ThetaOptions<T>,
) -> Vec<Refined<T>> {
    let rule = SegmentRule::fiber();
    let finest = *opts.k_levels.last().unwrap_or(&seed.len());
    let mut out = Vec::with_capacity(2);
    let raw = path::resample(seed, finest.max(1));
    if let Some(len) = path::piecewise_linear_length(&rule, &raw) {
        out.push(Refined {
            candidate,
            length: len,
            nodes: raw,
            converged: true,
            iterations: 0,
        });
    }
    let opt = path::optimize_path(&rule, seed, &opts.k_levels, &opts.lbfgs());
    if let Some(len) = path::piecewise_linear_length(&rule, &opt.nodes) {
        out.push(Refined {
            candidate,
            length: len,
            nodes: opt.nodes,
            converged: opt.converged,
            iterations: opt.iterations,
        });
    }
    out
}

fn pick_best<T: Real>(all: Vec<Refined<T>>) -> Option<Refined<T>> {
    let mut best: Option<Refined<T>> = None;
    for r in all {
        match &best {
            Some(b) if !(r.length < b.length) => {}
            _ => best = Some(r),
        }
    }
    best
}

/// Estimate of the distance in the completed fiber.
///
/// Interior pairs: the minimum over optimized seed paths (entrywise-linear,
/// log-linear, conformal-then-log-linear) and the detour through the
/// boundary class. Reported path lengths are accurate lengths of actual
/// polygons, so the value never falls below the true distance by more than
/// rounding. The computation is done in a canonical argument order, making
/// the result exactly symmetric.
pub fn theta_distance<T: Real>(
    p0: &CompletionPoint<T>,
    p1: &CompletionPoint<T>,
    opts: &ThetaOptions<T>,
) -> Result<ThetaResult<T>> {
    let (a0, a1) = match (p0, p1) {
        (CompletionPoint::BoundaryClass, CompletionPoint::BoundaryClass) => {
            return Ok(ThetaResult::exact(T::zero(), ThetaCandidate::BothBoundary))
        }
        (CompletionPoint::Interior(a), CompletionPoint::BoundaryClass)
        | (CompletionPoint::BoundaryClass, CompletionPoint::Interior(a)) => {
            return Ok(ThetaResult::exact(
                dist_to_boundary(a),
                ThetaCandidate::BoundaryEndpoint,
            ))
        }
        (CompletionPoint::Interior(a0), CompletionPoint::Interior(a1)) => (a0.as_sym(), a1.as_sym()),
    };
    same_dim(a0, a1)?;
    if a0 == a1 {
        return Ok(ThetaResult::exact(T::zero(), ThetaCandidate::Identical));
    }
    let flipped = a1.key() < a0.key();
    let (a0, a1) = if flipped { (a1, a0) } else { (a0, a1) };
    let (m0, m1) = (a0.to_mat(), a1.to_mat());
    let first = *opts.k_levels.first().unwrap_or(&16);

    let seeds = seed_paths(&m0, &m1, first);
    let refined: Vec<Refined<T>> = seeds
        .par_iter()
        .map(|(cand, seed)| refine_seed(*cand, seed, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let best = pick_best(refined);
    let detour = cone_radius(a0) + cone_radius(a1);

    let result = match best {
        Some(b) if b.length <= detour => {
            let path = if opts.keep_path {
                let p = FiberPath::from_mats(&b.nodes);
                Some(if flipped { p.reversed() } else { p })
            } else {
                None
            };
            ThetaResult {
                value: b.length,
                candidate: b.candidate,
                converged: b.converged,
                iterations: b.iterations,
                path,
            }
        }
        _ => ThetaResult::exact(detour, ThetaCandidate::BoundaryDetour),
    };
    Ok(result)
}

/// [`theta_distance`] on semi-definite tensors, classifying each with `opts.eps_pd`.
pub fn theta_between<T: Real>(
    a0: &SymTensor<T>,
    a1: &SymTensor<T>,
    opts: &ThetaOptions<T>,
) -> Result<ThetaResult<T>> {
    same_dim(a0, a1)?;
    let p0 = CompletionPoint::classify(a0, opts.eps_pd)?;
    let p1 = CompletionPoint::classify(a1, opts.eps_pd)?;
    theta_distance(&p0, &p1, opts)
}

/// Runs the path optimizer from an arbitrary seed and reports the better of
/// the seed and its refinement. A degenerate endpoint stands for the
/// boundary class and is replaced by its representative, zero.
pub fn refine_fiber_path<T: Real>(seed: &FiberPath<T>, opts: &ThetaOptions<T>) -> Result<ThetaResult<T>> {
    let mut mats = seed.mats();
    let n = seed.nodes()[0].dim();
    for idx in [0, mats.len() - 1] {
        if CompletionPoint::classify(&seed.nodes()[idx], opts.eps_pd)?.is_boundary() {
            mats[idx] = Mat::zeros(n);
        }
    }
    let best = pick_best(refine_seed(ThetaCandidate::Custom, &mats, opts))
        .ok_or_else(|| Error::InvalidPath("seed has an undefined segment".into()))?;
    Ok(ThetaResult {
        value: best.length,
        candidate: ThetaCandidate::Custom,
        converged: best.converged,
        iterations: best.iterations,
        path: Some(FiberPath::from_mats(&best.nodes)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym2(a: f64, b: f64, c: f64) -> SymTensor<f64> {
        SymTensor::from_packed(2, &[a, b, c]).unwrap()
    }

    #[test]
    fn trace_product_basics() {
        let i = SymTensor::<f64>::identity(2);
        assert_eq!(trace_product(&i, &i, &i).unwrap(), 2.0);
        let two = SymTensor::<f64>::scaled_identity(2, 2.0);
        assert!((trace_product(&two, &i, &i).unwrap() - 0.5).abs() < 1e-15);
        let z = SymTensor::<f64>::zero(2);
        assert!(matches!(trace_product(&z, &i, &i), Err(Error::DegenerateBase { .. })));
    }

    #[test]
    fn norm0_examples() {
        let i = SymTensor::<f64>::identity(2);
        assert!((fiber_norm0(&i, &i).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let four = SymTensor::<f64>::scaled_identity(2, 4.0);
        assert!((fiber_norm0(&four, &i).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(fiber_norm0(&four, &SymTensor::zero(2)).unwrap(), 0.0);
    }

    #[test]
    fn boundary_distance_closed_form() {
        assert!((dist_to_boundary(&SpdTensor::<f64>::identity(2)) - 2f64.sqrt()).abs() < 1e-15);
        assert!((dist_to_boundary(&SpdTensor::<f64>::identity(3)) - 2.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(cone_radius(&SymTensor::<f64>::diagonal(&[1.0, 0.0])), 0.0);
    }

    #[test]
    fn path_validation() {
        let i = SymTensor::<f64>::identity(2);
        let z = SymTensor::<f64>::zero(2);
        assert!(FiberPath::new(vec![i]).is_err());
        assert!(FiberPath::new(vec![i, z]).is_ok());
        assert!(matches!(FiberPath::new(vec![i, z, i]), Err(Error::InvalidPath(_))));
        assert!(FiberPath::new(vec![i, sym2(1.0, 2.0, 1.0)]).is_err());
    }

    #[test]
    fn theta_trivial_cases() {
        let opts = ThetaOptions::<f64>::default();
        let i = CompletionPoint::Interior(SpdTensor::identity(2));
        let b = CompletionPoint::BoundaryClass;
        assert_eq!(theta_distance(&i, &i, &opts).unwrap().value, 0.0);
        assert_eq!(theta_distance(&b, &b, &opts).unwrap().value, 0.0);
        assert!((theta_distance(&i, &b, &opts).unwrap().value - 2f64.sqrt()).abs() < 1e-15);
    }
}
