//! Discrete paths of tensors at one base point: segment rules, quadrature and
//! the node optimizer shared by the fiber distance and the per-cell part of
//! the L² path search.

use crate::lbfgs::{self, LbfgsOptions, Objective};
use crate::linalg::Mat;
use crate::scalar::Real;

use super::tensor::{packed_len, SymTensor};

/// Where a segment's metric is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Midpoint {
    /// `(a + b) / 2`
    Arithmetic,
    /// `((√a + √b) / 2)²`, rescaled in three dimensions so that segments
    /// along rays of the cone are integrated exactly with the L² weight.
    RootMean,
}

/// Norm `|d|²_m = tr((m⁻¹d)²) · det(m)^p` evaluated at a segment midpoint.
#[derive(Clone, Copy, Debug)]
pub struct SegmentRule<T> {
    pub det_power: T,
    pub midpoint: Midpoint,
}

impl<T: Real> SegmentRule<T> {
    /// Pointwise metric whose distance is the fiber distance θ.
    pub fn fiber() -> Self {
        SegmentRule {
            det_power: T::one(),
            midpoint: Midpoint::Arithmetic,
        }
    }

    /// Pointwise integrand of the L² length functional (volume density √det).
    pub fn l2() -> Self {
        SegmentRule {
            det_power: T::lit(0.5),
            midpoint: Midpoint::RootMean,
        }
    }

    #[inline]
    fn det_weight(&self, det: T) -> T {
        if self.det_power == T::one() {
            det
        } else if self.det_power == T::lit(0.5) {
            det.sqrt()
        } else {
            det.powf(self.det_power)
        }
    }

    /// `tr((m⁻¹d)²)·det(m)^p`; `None` when `m` is singular and `d ≠ 0`.
    #[inline]
    pub fn density(&self, m: &Mat<T>, d: &Mat<T>) -> Option<T> {
        if d.max_abs() == T::zero() {
            return Some(T::zero());
        }
        let det = m.det();
        if !(det > T::zero()) {
            return None;
        }
        let p = m.inverse()?.mul(d);
        let tr = p.trace_of_product(&p).max(T::zero());
        Some(tr * self.det_weight(det))
    }

    #[inline]
    pub(crate) fn segment_sq(&self, a: &Node<T>, b: &Node<T>) -> Option<T> {
        let d = b.mat.sub(&a.mat);
        let m = match self.midpoint {
            Midpoint::Arithmetic => a.mat.add(&b.mat).scale(T::lit(0.5)),
            Midpoint::RootMean => {
                let r = a.root.add(&b.root).scale(T::lit(0.5));
                let r = r.mul(&r);
                if r.n == 2 {
                    r
                } else {
                    r.scale(ray_correction(&a.mat, &b.mat, &r))
                }
            }
        };
        self.density(&m, &d)
    }

    /// Length of the straight segment `a + s(b − a)`, `s ∈ [0, 1]`, by
    /// five-point Gauss–Legendre quadrature.
    pub fn gl_segment_length(&self, a: &Mat<T>, b: &Mat<T>) -> Option<T> {
        const X: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let d = b.sub(a);
        if d.max_abs() == T::zero() {
            return Some(T::zero());
        }
        let mut acc = T::zero();
        for (&x, &w) in X.iter().zip(W.iter()) {
            let s = T::lit(0.5 * (1.0 + x));
            let m = a.add(&d.scale(s));
            acc += T::lit(0.5 * w) * self.density(&m, &d)?.sqrt();
        }
        Some(acc)
    }

    pub(crate) fn needs_root(&self) -> bool {
        self.midpoint == Midpoint::RootMean
    }
}

/// Factor taking the root-mean midpoint `r` of a segment to the point where
/// the L² integrand along the ray through its endpoints equals its mean:
/// with `s = det^{1/n}`, `p = n/4` and `q = p − 1`, the exact mean of `s^q`
/// over `[s₀, s₁]` is `(s₁^p − s₀^p)/(p(s₁ − s₀))`.
fn ray_correction<T: Real>(a: &Mat<T>, b: &Mat<T>, r: &Mat<T>) -> T {
    let n = T::from_usize_lossy(a.n);
    let inv_n = T::one() / n;
    let s0 = a.det().max(T::zero()).powf(inv_n);
    let s1 = b.det().max(T::zero()).powf(inv_n);
    let sr = r.det().max(T::zero()).powf(inv_n);
    let hi = s0.max(s1);
    if !(sr > T::zero()) || (s1 - s0).abs() <= T::epsilon().cbrt() * hi {
        return T::one();
    }
    let p = n / T::lit(4.0);
    let mean = (s1.powf(p) - s0.powf(p)) / (p * (s1 - s0));
    mean.powf(T::one() / (p - T::one())) / sr
}

/// A path node with its square root cached (used by the root-mean rule).
#[derive(Clone, Copy, Debug)]
pub(crate) struct Node<T> {
    pub mat: Mat<T>,
    pub root: Mat<T>,
}

impl<T: Real> Node<T> {
    pub fn from_mat(m: Mat<T>, with_root: bool) -> Self {
        let root = if with_root {
            m.sym_apply(|l| l.max(T::zero()).sqrt())
        } else {
            m
        };
        Node { mat: m, root }
    }

    pub fn from_log(s: &Mat<T>, with_root: bool) -> Self {
        let e = s.sym_eigen();
        let mat = e.rebuild(|l| l.exp());
        let root = if with_root { e.rebuild(|l| (l * T::lit(0.5)).exp()) } else { mat };
        Node { mat, root }
    }
}

/// Sum of midpoint-rule segment norms; `None` if a segment is undefined.
pub fn discrete_length<T: Real>(rule: &SegmentRule<T>, nodes: &[Mat<T>]) -> Option<T> {
    let nodes: Vec<Node<T>> = nodes.iter().map(|m| Node::from_mat(*m, rule.needs_root())).collect();
    let mut acc = T::zero();
    for w in nodes.windows(2) {
        acc += rule.segment_sq(&w[0], &w[1])?.sqrt();
    }
    Some(acc)
}

/// Discrete energy `K·Σ|Δ|²`; at fixed endpoints its minimizers are
/// constant-speed length minimizers.
pub fn discrete_energy<T: Real>(rule: &SegmentRule<T>, nodes: &[Mat<T>]) -> Option<T> {
    let nodes: Vec<Node<T>> = nodes.iter().map(|m| Node::from_mat(*m, rule.needs_root())).collect();
    let mut acc = T::zero();
    for w in nodes.windows(2) {
        acc += rule.segment_sq(&w[0], &w[1])?;
    }
    Some(acc * T::from_usize_lossy(nodes.len() - 1))
}

/// Length of the piecewise-linear interpolant through `nodes`, integrated
/// accurately on every segment.
pub fn piecewise_linear_length<T: Real>(rule: &SegmentRule<T>, nodes: &[Mat<T>]) -> Option<T> {
    let mut acc = T::zero();
    for w in nodes.windows(2) {
        acc += rule.gl_segment_length(&w[0], &w[1])?;
    }
    Some(acc)
}

/// Entrywise-linear resampling of a t-uniform node list to `segments` segments.
pub fn resample<T: Real>(nodes: &[Mat<T>], segments: usize) -> Vec<Mat<T>> {
    let old = nodes.len() - 1;
    if old == segments {
        return nodes.to_vec();
    }
    (0..=segments)
        .map(|j| {
            if j == 0 {
                return nodes[0];
            }
            if j == segments {
                return nodes[old];
            }
            let t = T::from_usize_lossy(j) / T::from_usize_lossy(segments) * T::from_usize_lossy(old);
            let i = t.floor().to_usize().unwrap_or(0).min(old - 1);
            let s = t - T::from_usize_lossy(i);
            nodes[i].scale(T::one() - s).add(&nodes[i + 1].scale(s))
        })
        .collect()
}

fn pack<T: Real>(m: &Mat<T>, out: &mut [T]) {
    let mut k = 0;
    for i in 0..m.n {
        for j in i..m.n {
            out[k] = m.m[i][j];
            k += 1;
        }
    }
}

fn unpack<T: Real>(n: usize, x: &[T]) -> Mat<T> {
    let mut m = Mat::zeros(n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m.m[i][j] = x[k];
            m.m[j][i] = x[k];
            k += 1;
        }
    }
    m
}

/// Energy `K·Σ|Δ|²` of a path with fixed endpoints; interior nodes are
/// parametrized by their matrix logarithms so every iterate stays definite.
struct PathEnergy<T: Real> {
    rule: SegmentRule<T>,
    n: usize,
    start: Node<T>,
    end: Node<T>,
    segments: usize,
}

impl<T: Real> PathEnergy<T> {
    fn block(&self) -> usize {
        packed_len(self.n)
    }

    fn nodes(&self, x: &[T]) -> Vec<Node<T>> {
        let b = self.block();
        let with_root = self.rule.needs_root();
        let mut out = Vec::with_capacity(self.segments + 1);
        out.push(self.start);
        for chunk in x.chunks(b) {
            out.push(Node::from_log(&unpack(self.n, chunk), with_root));
        }
        out.push(self.end);
        out
    }

    fn seg(&self, a: &Node<T>, b: &Node<T>) -> T {
        self.rule.segment_sq(a, b).unwrap_or(T::infinity())
    }

    fn step(&self, xi: T) -> T {
        T::epsilon().cbrt() * T::one().max(xi.abs())
    }
}

impl<T: Real> Objective<T> for PathEnergy<T> {
    fn value(&self, x: &[T]) -> T {
        let nodes = self.nodes(x);
        let sum: T = nodes.windows(2).map(|w| self.seg(&w[0], &w[1])).sum();
        sum * T::from_usize_lossy(self.segments)
    }

    fn gradient(&self, x: &[T], g: &mut [T]) {
        let b = self.block();
        let nodes = self.nodes(x);
        let with_root = self.rule.needs_root();
        let k = T::from_usize_lossy(self.segments);
        let mut local = [T::zero(); 6];
        for (j, chunk) in x.chunks(b).enumerate() {
            let node_idx = j + 1;
            let prev = &nodes[node_idx - 1];
            let next = &nodes[node_idx + 1];
            for c in 0..b {
                local[..b].copy_from_slice(chunk);
                let h = self.step(chunk[c]);
                local[c] = chunk[c] + h;
                let plus = Node::from_log(&unpack(self.n, &local[..b]), with_root);
                let fp = self.seg(prev, &plus) + self.seg(&plus, next);
                local[c] = chunk[c] - h;
                let minus = Node::from_log(&unpack(self.n, &local[..b]), with_root);
                let fm = self.seg(prev, &minus) + self.seg(&minus, next);
                g[j * b + c] = k * (fp - fm) / (h + h);
            }
        }
    }

    fn monitor(&self, x: &[T]) -> T {
        let nodes = self.nodes(x);
        nodes.windows(2).map(|w| self.seg(&w[0], &w[1]).sqrt()).sum()
    }
}

#[derive(Clone, Debug)]
pub struct OptimizedPath<T> {
    pub nodes: Vec<Mat<T>>,
    pub converged: bool,
    pub iterations: usize,
}

/// Refines a seed path level by level (`levels` = segment counts, coarse to
/// fine), warm-starting each level from the previous one.
pub fn optimize_path<T: Real>(
    rule: &SegmentRule<T>,
    seed: &[Mat<T>],
    levels: &[usize],
    opts: &LbfgsOptions<T>,
) -> OptimizedPath<T> {
    let n = seed[0].n;
    let with_root = rule.needs_root();
    let mut nodes = seed.to_vec();
    let mut converged = true;
    let mut iterations = 0;
    for &segments in levels {
        nodes = resample(&nodes, segments.max(1));
        if segments < 2 {
            continue;
        }
        let problem = PathEnergy {
            rule: *rule,
            n,
            start: Node::from_mat(nodes[0], with_root),
            end: Node::from_mat(nodes[segments], with_root),
            segments,
        };
        let b = packed_len(n);
        let mut x0 = vec![T::zero(); (segments - 1) * b];
        for (j, m) in nodes[1..segments].iter().enumerate() {
            let log = m.sym_apply(|l| l.max(T::min_positive_value()).ln());
            pack(&log, &mut x0[j * b..(j + 1) * b]);
        }
        let out = lbfgs::minimize(&problem, x0, opts);
        iterations += out.iterations;
        converged = out.converged;
        nodes = problem.nodes(&out.x).into_iter().map(|nd| nd.mat).collect();
    }
    OptimizedPath {
        nodes,
        converged,
        iterations,
    }
}

/// Node matrices of a tensor list.
pub fn to_mats<T: Real>(nodes: &[SymTensor<T>]) -> Vec<Mat<T>> {
    nodes.iter().map(|t| t.to_mat()).collect()
}
