//! Distances between tensor fields: the integrated fiber distance `Θ_Y`,
//! the L² length of discrete paths, conformal geodesics and the bracket
//! `[d_lower, d_upper]` for the L² distance `d`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fiber::path::{self, Node, SegmentRule};
use crate::fiber::{theta_between, SymTensor, ThetaOptions};
use crate::field::{radon_nikodym, volume, carrier, CellMask, GridDomain, MetricField, ScalarField, SemimetricField};
use crate::lbfgs::LbfgsOptions;
use crate::linalg::Mat;
use crate::scalar::{pairwise_sum, Real};

/// t-uniform sequence of fields on a common domain, `t ∈ [0, 1]`.
#[derive(Clone, Debug)]
pub struct FieldPath<T> {
    nodes: Vec<SemimetricField<T>>,
}

impl<T: Real> FieldPath<T> {
    pub fn new(nodes: Vec<SemimetricField<T>>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidPath("a path needs at least two nodes".into()));
        }
        for f in &nodes[1..] {
            nodes[0].check_same_domain(f)?;
        }
        Ok(FieldPath { nodes })
    }

    /// Samples `f(t)` at `t = i/segments`.
    pub fn from_fn(segments: usize, f: impl Fn(T) -> Result<SemimetricField<T>>) -> Result<Self> {
        let k = T::from_usize_lossy(segments.max(1));
        let nodes = (0..=segments.max(1))
            .map(|i| f(T::from_usize_lossy(i) / k))
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes)
    }

    /// Entrywise `(1 − t)·f0 + t·f1`.
    pub fn linear(f0: &SemimetricField<T>, f1: &SemimetricField<T>, segments: usize) -> Result<Self> {
        f0.check_same_domain(f1)?;
        Self::from_fn(segments, |t| {
            f0.map_cells(|i, c| c.scale(T::one() - t).add(&f1.cell(i).scale(t)))
        })
    }

    /// Per cell `exp((1 − t)·log A₀ + t·log A₁)` in the reference frame, or
    /// the conformal ray where one endpoint is deflated.
    pub fn log_linear(f0: &SemimetricField<T>, f1: &SemimetricField<T>, segments: usize) -> Result<Self> {
        f0.check_same_domain(f1)?;
        let d = f0.domain().clone();
        let n = d.dim();
        let per_cell: Vec<Vec<Mat<T>>> = (0..f0.len())
            .into_par_iter()
            .map(|i| log_linear_seed(&f0.frame_cell(i).to_mat(), &f1.frame_cell(i).to_mat(), n, segments))
            .collect();
        assemble(&d, &per_cell)
    }

    pub fn nodes(&self) -> &[SemimetricField<T>] {
        &self.nodes
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> &SemimetricField<T> {
        &self.nodes[0]
    }

    pub fn end(&self) -> &SemimetricField<T> {
        &self.nodes[self.nodes.len() - 1]
    }

    pub fn domain(&self) -> &Arc<GridDomain<T>> {
        self.nodes[0].domain()
    }

    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        FieldPath { nodes }
    }

    fn cell_track(&self, i: usize) -> Vec<Mat<T>> {
        let d = self.domain();
        self.nodes.iter().map(|f| d.to_frame_mat(i, f.cell(i))).collect()
    }
}

/// Builds a path from per-cell node lists written in the reference frame.
fn assemble<T: Real>(domain: &Arc<GridDomain<T>>, per_cell: &[Vec<Mat<T>>]) -> Result<FieldPath<T>> {
    let steps = per_cell.first().map_or(0, |p| p.len());
    let nodes = (0..steps)
        .map(|t| {
            let cells = per_cell
                .iter()
                .enumerate()
                .map(|(i, p)| domain.from_frame(i, &SymTensor::from_mat(&p[t])))
                .collect();
            SemimetricField::new(domain.clone(), cells)
        })
        .collect::<Result<Vec<_>>>()?;
    FieldPath::new(nodes)
}

fn is_zero_mat<T: Real>(m: &Mat<T>) -> bool {
    m.max_abs() == T::zero()
}

fn ts<T: Real>(segments: usize) -> Vec<T> {
    let k = T::from_usize_lossy(segments);
    (0..=segments).map(|i| T::from_usize_lossy(i) / k).collect()
}

fn ray<T: Real>(a: &Mat<T>, ratio: T, n: usize, segments: usize) -> Vec<Mat<T>> {
    let q = ratio.powf(T::from_usize_lossy(n) / T::lit(4.0));
    let e = T::lit(4.0) / T::from_usize_lossy(n);
    ts::<T>(segments)
        .into_iter()
        .map(|t| a.scale((T::one() + t * (q - T::one())).max(T::zero()).powf(e)))
        .collect()
}

fn linear_seed<T: Real>(a: &Mat<T>, b: &Mat<T>, segments: usize) -> Vec<Mat<T>> {
    ts::<T>(segments)
        .into_iter()
        .map(|t| a.scale(T::one() - t).add(&b.scale(t)))
        .collect()
}

fn log_linear_seed<T: Real>(a: &Mat<T>, b: &Mat<T>, n: usize, segments: usize) -> Vec<Mat<T>> {
    match (is_zero_mat(a), is_zero_mat(b)) {
        (true, true) => vec![*a; segments + 1],
        (false, true) => ray(a, T::zero(), n, segments),
        (true, false) => {
            let mut p = ray(b, T::zero(), n, segments);
            p.reverse();
            p
        }
        (false, false) => {
            let la = a.sym_apply(|x| x.ln());
            let lb = b.sym_apply(|x| x.ln());
            let mut p: Vec<Mat<T>> = ts::<T>(segments)
                .into_iter()
                .map(|t| la.scale(T::one() - t).add(&lb.scale(t)).sym_apply(|x| x.exp()))
                .collect();
            p[0] = *a;
            p[segments] = *b;
            p
        }
    }
}

/// `ρ` with `b = ρ·a`, if there is one (up to rounding).
fn conformal_ratio<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Option<T> {
    if is_zero_mat(b) {
        return Some(T::zero());
    }
    if is_zero_mat(a) {
        return None;
    }
    let rho = b.trace() / a.trace();
    let tol = T::lit(64.0) * T::epsilon() * b.max_abs();
    (rho > T::zero() && b.sub(&a.scale(rho)).max_abs() <= tol).then_some(rho)
}

/// Per-cell L² segment norms squared, one entry per segment.
fn cell_segments<T: Real>(track: &[Mat<T>], cell: usize) -> Result<Vec<T>> {
    let rule = SegmentRule::<T>::l2();
    let last = track.len() - 1;
    let nodes: Vec<Node<T>> = track.iter().map(|m| Node::from_mat(*m, true)).collect();
    let mut out = Vec::with_capacity(last);
    for (s, w) in track.windows(2).enumerate() {
        let diff = w[1].sub(&w[0]);
        if is_zero_mat(&diff) {
            out.push(T::zero());
            continue;
        }
        for (idx, m) in [(s, &w[0]), (s + 1, &w[1])] {
            if idx != 0 && idx != last && is_zero_mat(m) {
                return Err(Error::InvalidPath(format!(
                    "cell {cell} is deflated at interior node {idx} but keeps moving"
                )));
            }
        }
        let v = rule.segment_sq(&nodes[s], &nodes[s + 1]).ok_or_else(|| {
            Error::InvalidPath(format!("cell {cell}: segment {s} joins two deflated tensors"))
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Discrete L² length `Σ_t (Σ_cells tr_{g_t}((Δg)²)·√det G_t·μ)^{1/2}`, with
/// `g_t` evaluated at the root-mean midpoint of each segment.
///
/// A cell may be deflated at an interior node only while it does not move.
pub fn path_length_l2<T: Real>(p: &FieldPath<T>) -> Result<T> {
    Ok(segment_norms_l2(p)?.into_iter().map(|s| s.sqrt()).fold(T::zero(), |a, b| a + b))
}

/// Squared norms of the individual segments of [`path_length_l2`].
pub fn segment_norms_l2<T: Real>(p: &FieldPath<T>) -> Result<Vec<T>> {
    let d = p.domain();
    let table: Vec<Vec<T>> = (0..d.len())
        .into_par_iter()
        .map(|i| cell_segments(&p.cell_track(i), i))
        .collect::<Result<_>>()?;
    let mu = d.cell_measures();
    Ok((0..p.segments())
        .map(|s| {
            let col: Vec<T> = table.iter().zip(mu).map(|(row, &m)| row[s] * m).collect();
            pairwise_sum(&col)
        })
        .collect())
}

/// `g_t = (1 + n·t·ρ/4)^{4/n}·g₀`, with the factor clamped at zero (such cells are deflated).
pub fn conformal_geodesic<T: Real>(f0: &MetricField<T>, rho: &ScalarField<T>, t: T) -> Result<SemimetricField<T>> {
    check_scalar(f0, rho)?;
    let n = T::from_usize_lossy(f0.dim());
    let e = T::lit(4.0) / n;
    f0.map_cells(|i, c| {
        let base = (T::one() + n * t * rho.get(i) / T::lit(4.0)).max(T::zero());
        c.scale(base.powf(e))
    })
}

/// `ψ(ζ) = (1 + n·ζ/4)^{4/n}·g̃`; requires `ζ ≥ −4/n`.
pub fn psi_map<T: Real>(f: &SemimetricField<T>, zeta: &ScalarField<T>) -> Result<SemimetricField<T>> {
    check_scalar(f, zeta)?;
    let n = T::from_usize_lossy(f.dim());
    let floor = -T::lit(4.0) / n;
    if let Some(z) = zeta.values().iter().find(|&&z| z < floor) {
        return Err(Error::Domain(format!("zeta = {z} is below -4/n")));
    }
    let e = T::lit(4.0) / n;
    f.map_cells(|i, c| c.scale((T::one() + n * zeta.get(i) / T::lit(4.0)).max(T::zero()).powf(e)))
}

/// `λ = (4/n)(ρ^{n/4} − 1)`, the argument with `ψ(λ) = ρ·g̃`.
pub fn psi_preimage<T: Real>(n: usize, rho: &ScalarField<T>) -> ScalarField<T> {
    let nn = T::from_usize_lossy(n);
    let values = rho
        .values()
        .iter()
        .map(|&r| T::lit(4.0) / nn * (r.max(T::zero()).powf(nn / T::lit(4.0)) - T::one()))
        .collect();
    ScalarField::from_values(values)
}

/// The path `t ↦ ψ((1 − t)·κ + t·λ)`.
pub fn psi_segment<T: Real>(
    f: &SemimetricField<T>,
    kappa: &ScalarField<T>,
    lambda: &ScalarField<T>,
    segments: usize,
) -> Result<FieldPath<T>> {
    check_scalar(f, kappa)?;
    check_scalar(f, lambda)?;
    FieldPath::from_fn(segments, |t| {
        let z: Vec<T> = kappa
            .values()
            .iter()
            .zip(lambda.values())
            .map(|(&k, &l)| k * (T::one() - t) + l * t)
            .collect();
        psi_map(f, &ScalarField::from_values(z))
    })
}

fn check_scalar<T: Real>(f: &SemimetricField<T>, s: &ScalarField<T>) -> Result<()> {
    if f.len() == s.len() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            expected: f.len(),
            got: s.len(),
        })
    }
}

type PairKey = ([u64; 7], [u64; 7]);

/// Memo of fiber distances keyed by the bit patterns of the (frame) tensor pair.
#[derive(Default)]
pub struct ThetaCache {
    map: Mutex<HashMap<PairKey, (f64, bool)>>,
}

impl ThetaCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn pair_key<T: Real>(a: &SymTensor<T>, b: &SymTensor<T>) -> PairKey {
    let (ka, kb) = (a.key(), b.key());
    if kb < ka {
        (kb, ka)
    } else {
        (ka, kb)
    }
}

#[derive(Clone, Debug)]
pub struct ThetaY<T> {
    pub value: T,
    /// `θ` per cell (zero outside `Y`).
    pub per_cell: ScalarField<T>,
    pub converged: bool,
    pub distinct_pairs: usize,
}

/// `Θ_Y(f0, f1) = ∫_Y θ(f0(x), f1(x)) dμ_g`.
pub fn theta_y<T: Real>(
    f0: &SemimetricField<T>,
    f1: &SemimetricField<T>,
    y: &CellMask,
    opts: &ThetaOptions<T>,
) -> Result<ThetaY<T>> {
    theta_y_cached(f0, f1, y, opts, &ThetaCache::new())
}

pub fn theta_m<T: Real>(f0: &SemimetricField<T>, f1: &SemimetricField<T>, opts: &ThetaOptions<T>) -> Result<ThetaY<T>> {
    theta_y(f0, f1, &CellMask::full(f0.len()), opts)
}

pub fn theta_y_cached<T: Real>(
    f0: &SemimetricField<T>,
    f1: &SemimetricField<T>,
    y: &CellMask,
    opts: &ThetaOptions<T>,
    cache: &ThetaCache,
) -> Result<ThetaY<T>> {
    f0.check_same_domain(f1)?;
    if y.len() != f0.len() {
        return Err(Error::ShapeMismatch {
            expected: f0.len(),
            got: y.len(),
        });
    }
    let frames: Vec<Option<(SymTensor<T>, SymTensor<T>)>> = (0..f0.len())
        .map(|i| {
            let same = f0.cell(i) == f1.cell(i);
            (y.get(i) && !same).then(|| (f0.frame_cell(i), f1.frame_cell(i)))
        })
        .collect();
    let mut todo: HashMap<PairKey, (SymTensor<T>, SymTensor<T>)> = HashMap::new();
    let mut distinct = 0;
    {
        let known = cache.map.lock().expect("cache lock");
        let mut seen = std::collections::HashSet::new();
        for (a, b) in frames.iter().flatten() {
            let k = pair_key(a, b);
            if seen.insert(k) {
                distinct += 1;
                if !known.contains_key(&k) {
                    todo.insert(k, (*a, *b));
                }
            }
        }
    }
    let mut work: Vec<(PairKey, (SymTensor<T>, SymTensor<T>))> = todo.into_iter().collect();
    work.sort_by_key(|x| x.0);
    let computed: Vec<(PairKey, (f64, bool))> = work
        .par_iter()
        .map(|(k, (a, b))| {
            theta_between(a, b, opts).map(|r| (*k, (r.value.to_f64().unwrap_or(f64::NAN), r.converged)))
        })
        .collect::<Result<_>>()?;
    let known = {
        let mut m = cache.map.lock().expect("cache lock");
        m.extend(computed);
        m.clone()
    };
    let mut converged = true;
    let per_cell: Vec<T> = frames
        .iter()
        .map(|p| match p {
            None => T::zero(),
            Some((a, b)) => {
                let (v, c) = known[&pair_key(a, b)];
                converged &= c;
                T::from_f64(v).unwrap_or(T::nan())
            }
        })
        .collect();
    let per_cell = ScalarField::from_values(per_cell);
    let value = per_cell.integrate(f0.domain().cell_measures());
    Ok(ThetaY {
        value,
        per_cell,
        converged,
        distinct_pairs: distinct,
    })
}

#[derive(Clone, Debug)]
pub struct DBoundOptions<T> {
    /// Segment counts of the path refinement, coarse to fine.
    pub t_levels: Vec<usize>,
    pub max_iter: usize,
    pub rel_tol: T,
    pub theta: ThetaOptions<T>,
}

impl<T: Real> Default for DBoundOptions<T> {
    fn default() -> Self {
        DBoundOptions {
            t_levels: vec![8, 16, 32],
            max_iter: 500,
            rel_tol: T::lit(1e-6),
            theta: ThetaOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathCandidate {
    Linear,
    LogLinear,
    Conformal,
    /// Per cell the lowest-energy of the optimized seeds.
    Optimized,
}

#[derive(Clone, Debug)]
pub struct LowerBound<T> {
    pub value: T,
    /// Best `(4/√n)|√Vol(Y, f1) − √Vol(Y, f0)|`.
    pub volume_bound: T,
    /// Positive root of `√n·d² + 2√V·d = Θ_M`, `V = min(V₀, V₁)`.
    pub theta_bound: T,
    pub theta_m: T,
}

#[derive(Clone, Debug)]
pub struct DBoundResult<T> {
    pub upper: T,
    pub lower: T,
    pub witness_path: FieldPath<T>,
    pub witness: PathCandidate,
    /// Length of every candidate that was evaluated.
    pub candidates: Vec<(PathCandidate, T)>,
    pub lower_detail: LowerBound<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> DBoundResult<T> {
    pub fn gap(&self) -> T {
        self.upper - self.lower
    }
}

/// Lower bound on `d` from volumes alone.
pub fn d_lower_volume<T: Real>(f0: &SemimetricField<T>, f1: &SemimetricField<T>) -> Result<T> {
    f0.check_same_domain(f1)?;
    let len = f0.len();
    let x0 = f0.deflated_mask();
    let x1 = f1.deflated_mask();
    let rn0 = radon_nikodym(f0);
    let rn1 = radon_nikodym(f1);
    let sets = [
        CellMask::full(len),
        carrier(f0, f1, T::zero())?,
        x0.difference(x1),
        x1.difference(x0),
        x0.symmetric_difference(x1),
        CellMask::from_fn(len, |i| rn1.get(i) > rn0.get(i)),
        CellMask::from_fn(len, |i| rn1.get(i) < rn0.get(i)),
    ];
    let c = T::lit(4.0) / T::from_usize_lossy(f0.dim()).sqrt();
    let mut best = T::zero();
    for y in &sets {
        let b = c * (volume(f1, y)?.sqrt() - volume(f0, y)?.sqrt()).abs();
        best = best.max(b);
    }
    Ok(best)
}

/// Positive root `d` of `√n·d² + 2√V·d = Θ`.
pub fn invert_theta_bound<T: Real>(n: usize, v: T, theta: T) -> T {
    let sn = T::from_usize_lossy(n).sqrt();
    ((v + sn * theta).max(T::zero()).sqrt() - v.max(T::zero()).sqrt()) / sn
}

pub fn d_lower<T: Real>(f0: &SemimetricField<T>, f1: &SemimetricField<T>, opts: &ThetaOptions<T>) -> Result<LowerBound<T>> {
    d_lower_cached(f0, f1, opts, &ThetaCache::new())
}

pub fn d_lower_cached<T: Real>(
    f0: &SemimetricField<T>,
    f1: &SemimetricField<T>,
    opts: &ThetaOptions<T>,
    cache: &ThetaCache,
) -> Result<LowerBound<T>> {
    let volume_bound = d_lower_volume(f0, f1)?;
    let theta_m = theta_y_cached(f0, f1, &CellMask::full(f0.len()), opts, cache)?.value;
    let v = crate::field::total_volume(f0).min(crate::field::total_volume(f1));
    let theta_bound = invert_theta_bound(f0.dim(), v, theta_m);
    Ok(LowerBound {
        value: volume_bound.max(theta_bound),
        volume_bound,
        theta_bound,
        theta_m,
    })
}

struct CellPlan<T> {
    linear: Vec<Mat<T>>,
    log_linear: Vec<Mat<T>>,
    conformal: Option<Vec<Mat<T>>>,
    best: Vec<Mat<T>>,
    iterations: usize,
    converged: bool,
}

fn plan_cell<T: Real>(a: &Mat<T>, b: &Mat<T>, n: usize, opts: &DBoundOptions<T>) -> CellPlan<T> {
    let fine = *opts.t_levels.last().unwrap_or(&32);
    let coarse = *opts.t_levels.first().unwrap_or(&fine);
    let linear = linear_seed(a, b, fine);
    let log_linear = log_linear_seed(a, b, n, fine);
    let ratio = if a == b { Some(T::one()) } else { conformal_ratio(a, b) };
    let conformal = ratio.map(|r| if a == b { vec![*a; fine + 1] } else { ray(a, r, n, fine) });
    if a == b || (is_zero_mat(a) && is_zero_mat(b)) {
        return CellPlan {
            best: linear.clone(),
            linear,
            log_linear,
            conformal,
            iterations: 0,
            converged: true,
        };
    }
    let rule = SegmentRule::<T>::l2();
    let lb = LbfgsOptions {
        memory: 8,
        max_iter: opts.max_iter,
        rel_tol: opts.rel_tol,
    };
    let mut seeds = vec![linear_seed(a, b, coarse), log_linear_seed(a, b, n, coarse)];
    if let Some(r) = ratio {
        seeds.push(ray(a, r, n, coarse));
    }
    let mut options: Vec<Vec<Mat<T>>> = vec![linear.clone(), log_linear.clone()];
    options.extend(conformal.clone());
    let mut iterations = 0;
    let mut converged = true;
    for s in &seeds {
        let out = path::optimize_path(&rule, s, &opts.t_levels, &lb);
        iterations += out.iterations;
        converged &= out.converged;
        options.push(out.nodes);
    }
    let mut best = 0;
    let mut best_e = T::infinity();
    for (k, o) in options.iter().enumerate() {
        let e = path::discrete_energy(&rule, o).unwrap_or(T::infinity());
        if e < best_e {
            best_e = e;
            best = k;
        }
    }
    CellPlan {
        best: options.swap_remove(best),
        linear,
        log_linear,
        conformal,
        iterations,
        converged,
    }
}

/// Upper bound on `d` as the shortest of several discrete paths, together
/// with the lower bounds.
pub fn d_upper<T: Real>(f0: &SemimetricField<T>, f1: &SemimetricField<T>, opts: &DBoundOptions<T>) -> Result<DBoundResult<T>> {
    d_bounds_cached(f0, f1, opts, &ThetaCache::new())
}

pub fn d_bounds_cached<T: Real>(
    f0: &SemimetricField<T>,
    f1: &SemimetricField<T>,
    opts: &DBoundOptions<T>,
    cache: &ThetaCache,
) -> Result<DBoundResult<T>> {
    f0.check_same_domain(f1)?;
    let d = f0.domain().clone();
    let n = d.dim();
    let frames: Vec<(Mat<T>, Mat<T>)> = (0..f0.len())
        .map(|i| (f0.frame_cell(i).to_mat(), f1.frame_cell(i).to_mat()))
        .collect();

    let mut index: HashMap<([u64; 7], [u64; 7]), usize> = HashMap::new();
    let mut unique: Vec<(Mat<T>, Mat<T>)> = Vec::new();
    let slot: Vec<usize> = frames
        .iter()
        .map(|(a, b)| {
            let key = (SymTensor::from_mat(a).key(), SymTensor::from_mat(b).key());
            *index.entry(key).or_insert_with(|| {
                unique.push((*a, *b));
                unique.len() - 1
            })
        })
        .collect();
    let plans: Vec<CellPlan<T>> = unique.par_iter().map(|(a, b)| plan_cell(a, b, n, opts)).collect();

    let iterations = plans.iter().map(|p| p.iterations).sum();
    let converged = plans.iter().all(|p| p.converged);
    let build = |pick: &dyn Fn(&CellPlan<T>) -> Option<Vec<Mat<T>>>| -> Option<Vec<Vec<Mat<T>>>> {
        slot.iter().map(|&s| pick(&plans[s])).collect()
    };

    let mut candidates = Vec::new();
    let mut best: Option<(T, PathCandidate, FieldPath<T>)> = None;
    let choices: [(PathCandidate, &dyn Fn(&CellPlan<T>) -> Option<Vec<Mat<T>>>); 4] = [
        (PathCandidate::Linear, &|p| Some(p.linear.clone())),
        (PathCandidate::LogLinear, &|p| Some(p.log_linear.clone())),
        (PathCandidate::Conformal, &|p| p.conformal.clone()),
        (PathCandidate::Optimized, &|p| Some(p.best.clone())),
    ];
    for (kind, pick) in choices {
        let Some(per_cell) = build(pick) else { continue };
        let path = match assemble(&d, &per_cell) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let Ok(len) = path_length_l2(&path) else { continue };
        candidates.push((kind, len));
        if best.as_ref().is_none_or(|b| len < b.0) {
            best = Some((len, kind, path));
        }
    }
    let (upper, witness, witness_path) =
        best.ok_or_else(|| Error::InvalidPath("no admissible candidate path".into()))?;
    let lower_detail = d_lower_cached(f0, f1, &opts.theta, cache)?;
    Ok(DBoundResult {
        upper,
        lower: lower_detail.value,
        witness_path,
        witness,
        candidates,
        lower_detail,
        iterations,
        converged,
    })
}
