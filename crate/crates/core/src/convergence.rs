//! Convergence diagnostics for finite sequences of fields.
//!
//! Asymptotic statements are turned into tail tests over the last few terms
//! (see [`tail_trend`]); every threshold is configurable and reported.

use rayon::prelude::*;

use crate::distances::{theta_y_cached, ThetaCache};
use crate::error::{Error, Result};
use crate::fiber::ThetaOptions;
use crate::field::{pointwise_gap, radon_nikodym, total_volume, CellMask, ScalarField, SemimetricField};
use crate::scalar::{pairwise_sum, Real};

/// Terms `g_1, g_2, …` and an optional limit candidate on a shared domain.
#[derive(Clone, Debug)]
pub struct MetricSequence<T> {
    terms: Vec<SemimetricField<T>>,
    limit: Option<SemimetricField<T>>,
}

impl<T: Real> MetricSequence<T> {
    pub fn new(terms: Vec<SemimetricField<T>>, limit: Option<SemimetricField<T>>) -> Result<Self> {
        if terms.len() < 2 {
            return Err(Error::Sequence("need at least two terms".into()));
        }
        for f in terms[1..].iter().chain(limit.iter()) {
            terms[0].check_same_domain(f)?;
        }
        Ok(MetricSequence { terms, limit })
    }

    pub fn terms(&self) -> &[SemimetricField<T>] {
        &self.terms
    }

    pub fn limit(&self) -> Option<&SemimetricField<T>> {
        self.limit.as_ref()
    }

    fn require_limit(&self) -> Result<&SemimetricField<T>> {
        self.limit.as_ref().ok_or_else(|| Error::Sequence("missing limit candidate".into()))
    }
}

fn check_eps<T: Real>(eps: T) -> Result<()> {
    if eps > T::zero() {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps must be positive, got {eps}")))
    }
}

fn weighted_sum_where<T: Real>(mask: impl Fn(usize) -> bool, w: impl Fn(usize) -> T, len: usize) -> T {
    let v: Vec<T> = (0..len).map(|i| if mask(i) { w(i) } else { T::zero() }).collect();
    pairwise_sum(&v)
}

/// `μ_g{ |f_k − f_0|_g ≥ ε }`.
pub fn in_measure_gap<T: Real>(fk: &SemimetricField<T>, f0: &SemimetricField<T>, eps: T) -> Result<T> {
    in_measure_gap_on(fk, f0, eps, &CellMask::full(f0.len()))
}

/// [`in_measure_gap`] restricted to the cells of `mask`.
pub fn in_measure_gap_on<T: Real>(fk: &SemimetricField<T>, f0: &SemimetricField<T>, eps: T, mask: &CellMask) -> Result<T> {
    check_eps(eps)?;
    let gap = pointwise_gap(f0, fk)?;
    let mu = f0.domain().cell_measures();
    Ok(weighted_sum_where(|i| mask.get(i) && gap.get(i) >= eps, |i| mu[i], f0.len()))
}

/// [`in_measure_gap`] measured with `μ_ν` instead of `μ_g`.
pub fn in_measure_gap_under<T: Real>(
    fk: &SemimetricField<T>,
    f0: &SemimetricField<T>,
    eps: T,
    nu: &SemimetricField<T>,
) -> Result<T> {
    check_eps(eps)?;
    f0.check_same_domain(nu)?;
    let gap = pointwise_gap(f0, fk)?;
    let rn = radon_nikodym(nu);
    let mu = f0.domain().cell_measures();
    Ok(weighted_sum_where(|i| gap.get(i) >= eps, |i| rn.get(i) * mu[i], f0.len()))
}

/// Positive and negative parts of `rn₀ − rn_k` integrated against `μ_g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformGap<T> {
    pub positive: T,
    pub negative: T,
}

impl<T: Real> UniformGap<T> {
    /// `sup_E |μ₀(E) − μ_k(E)|`, attained on a sign set.
    pub fn sup(&self) -> T {
        self.positive.max(self.negative)
    }

    /// `‖rn₀ − rn_k‖_{L¹}`.
    pub fn l1(&self) -> T {
        self.positive + self.negative
    }
}

pub fn density_gap_parts<T: Real>(rn_k: &ScalarField<T>, rn_0: &ScalarField<T>, mu: &[T]) -> UniformGap<T> {
    let diff: Vec<T> = rn_0.values().iter().zip(rn_k.values()).map(|(&a, &b)| a - b).collect();
    let len = diff.len();
    UniformGap {
        positive: weighted_sum_where(|i| diff[i] > T::zero(), |i| diff[i] * mu[i], len),
        negative: weighted_sum_where(|i| diff[i] < T::zero(), |i| -diff[i] * mu[i], len),
    }
}

pub fn uniform_measure_gap<T: Real>(fk: &SemimetricField<T>, f0: &SemimetricField<T>) -> Result<UniformGap<T>> {
    f0.check_same_domain(fk)?;
    Ok(density_gap_parts(&radon_nikodym(fk), &radon_nikodym(f0), f0.domain().cell_measures()))
}

/// `∫ |rn_k − rn₀| dμ_g`.
pub fn l1_density_gap<T: Real>(fk: &SemimetricField<T>, f0: &SemimetricField<T>) -> Result<T> {
    Ok(uniform_measure_gap(fk, f0)?.l1())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbsContinuityRow<T> {
    pub delta: T,
    /// Per member: the integral over its greedy worst-case set of measure ≤ δ.
    pub per_member: Vec<T>,
    pub worst: T,
}

impl<T: Real> AbsContinuityRow<T> {
    pub fn passes(&self, eps: T) -> bool {
        self.worst < eps
    }
}

/// For each δ, the largest `∫_E ρ dμ` over cell sets `E` with `μ(E) ≤ δ`,
/// found by taking cells in decreasing order of density.
pub fn uniform_abs_continuity<T: Real>(family: &[ScalarField<T>], mu: &[T], deltas: &[T]) -> Result<Vec<AbsContinuityRow<T>>> {
    if family.is_empty() {
        return Err(Error::Sequence("empty family".into()));
    }
    let orders: Vec<Vec<usize>> = family
        .iter()
        .map(|rho| {
            let mut idx: Vec<usize> = (0..rho.len()).collect();
            idx.sort_by(|&a, &b| rho.get(b).partial_cmp(&rho.get(a)).unwrap_or(std::cmp::Ordering::Equal));
            idx
        })
        .collect();
    Ok(deltas
        .iter()
        .map(|&delta| {
            let per_member: Vec<T> = family
                .iter()
                .zip(&orders)
                .map(|(rho, order)| {
                    let mut used = T::zero();
                    let mut acc = Vec::new();
                    for &i in order {
                        if used + mu[i] > delta * (T::one() + T::epsilon() * T::lit(16.0)) {
                            break;
                        }
                        used += mu[i];
                        acc.push(rho.get(i) * mu[i]);
                    }
                    pairwise_sum(&acc)
                })
                .collect();
            let worst = per_member.iter().fold(T::zero(), |a, &b| a.max(b));
            AbsContinuityRow { delta, per_member, worst }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    Vanishing,
    Persisting,
    Inconclusive,
}

/// Aitken Δ² extrapolation of the last three values.
pub fn aitken_limit<T: Real>(x: &[T]) -> Option<T> {
    let k = x.len();
    if k < 3 {
        return None;
    }
    let (a, b, c) = (x[k - 3], x[k - 2], x[k - 1]);
    let den = (c - b) - (b - a);
    (den > T::zero()).then(|| c - (c - b) * (c - b) / den)
}

/// Classifies the last `window` values of a nonnegative series.
///
/// Vanishing: strictly decreasing with an Aitken-extrapolated limit at most
/// `tol`, or nonincreasing and already below `tol`. Persisting: every tail
/// value at least `tol`, and a decreasing tail must extrapolate to at least
/// half its last value. Values at or below `floor` count as zero.
pub fn tail_trend<T: Real>(series: &[T], tol: T, floor: T, window: usize) -> Trend {
    if series.is_empty() {
        return Trend::Inconclusive;
    }
    let start = series.len().saturating_sub(window.max(2));
    let tail: Vec<T> = series[start..]
        .iter()
        .map(|&v| if v <= floor { T::zero() } else { v })
        .collect();
    let last = tail[tail.len() - 1];
    let strictly = tail.windows(2).all(|w| w[1] < w[0]);
    let nonincreasing = tail.windows(2).all(|w| w[1] <= w[0]);
    let limit = aitken_limit(&tail);
    if strictly && limit.is_some_and(|l| l <= tol) {
        return Trend::Vanishing;
    }
    if nonincreasing && last < tol {
        return Trend::Vanishing;
    }
    // a strictly decreasing tail only persists if it is visibly levelling off
    let levelling = !strictly || limit.is_some_and(|l| l >= T::lit(0.5) * last);
    if levelling && tail.iter().all(|&v| v >= tol) {
        return Trend::Persisting;
    }
    Trend::Inconclusive
}

#[derive(Clone, Debug)]
pub struct CauchyReport<T> {
    /// `(k, k+1, Θ_M(g_k, g_{k+1}))`, zero-based indices.
    pub consecutive: Vec<(usize, usize, T)>,
    /// `(2^m − 1, 2^{m+1} − 1, Θ_M)` for every pair inside the sequence.
    pub geometric: Vec<(usize, usize, T)>,
    /// Partial sums of the consecutive gaps.
    pub partial_sums: Vec<T>,
    pub converged: bool,
}

pub fn theta_cauchy_report<T: Real>(s: &MetricSequence<T>, opts: &ThetaOptions<T>) -> Result<CauchyReport<T>> {
    theta_cauchy_report_cached(s, opts, &ThetaCache::new())
}

pub fn theta_cauchy_report_cached<T: Real>(
    s: &MetricSequence<T>,
    opts: &ThetaOptions<T>,
    cache: &ThetaCache,
) -> Result<CauchyReport<T>> {
    let terms = s.terms();
    let full = CellMask::full(terms[0].len());
    let mut converged = true;
    let mut theta = |i: usize, j: usize| -> Result<T> {
        let r = theta_y_cached(&terms[i], &terms[j], &full, opts, cache)?;
        converged &= r.converged;
        Ok(r.value)
    };
    let mut consecutive = Vec::new();
    for k in 0..terms.len() - 1 {
        consecutive.push((k, k + 1, theta(k, k + 1)?));
    }
    let mut geometric = Vec::new();
    let mut i = 0usize;
    while 2 * i + 1 < terms.len() {
        let j = 2 * i + 1;
        geometric.push((i, j, theta(i, j)?));
        i = j;
    }
    let mut acc = T::zero();
    let partial_sums = consecutive
        .iter()
        .map(|&(_, _, v)| {
            acc += v;
            acc
        })
        .collect();
    Ok(CauchyReport {
        consecutive,
        geometric,
        partial_sums,
        converged,
    })
}

#[derive(Clone, Debug)]
pub struct ClassifyOptions<T> {
    pub eps_grid: Vec<T>,
    /// Defaults to `1e-2·Vol(M, g)`.
    pub tol_meas: Option<T>,
    /// Defaults to `1e-2·Vol(M, g)`.
    pub tol_vol: Option<T>,
    /// Defaults to `1e-2·Vol(M, g)`.
    pub tol_theta: Option<T>,
    pub window: usize,
    pub theta: ThetaOptions<T>,
    /// Compute the `Θ_M` gaps (needed when the limit has deflated cells).
    pub with_theta: bool,
}

impl<T: Real> Default for ClassifyOptions<T> {
    fn default() -> Self {
        ClassifyOptions {
            eps_grid: [1e-3, 1e-2, 1e-1, 1.0].iter().map(|&e| T::lit(e)).collect(),
            tol_meas: None,
            tol_vol: None,
            tol_theta: None,
            window: 4,
            theta: ThetaOptions::default(),
            with_theta: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    NotConverged,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictBasis {
    /// Convergence in measure and of the volume measures.
    Measure,
    /// The limit has deflated cells; only the `Θ_M` gaps were used.
    ThetaTrend,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport<T> {
    pub eps_grid: Vec<T>,
    /// Row per term, column per ε.
    pub in_measure_gaps: Vec<Vec<T>>,
    pub l1_density_gaps: Vec<T>,
    pub uniform_measure_gaps: Vec<T>,
    /// Empty when not computed.
    pub theta_gaps: Vec<T>,
    pub in_measure_trends: Vec<Trend>,
    pub uniform_trend: Trend,
    pub theta_trend: Option<Trend>,
    pub tol_meas: T,
    pub tol_vol: T,
    pub tol_theta: T,
    pub floor: T,
    pub verdict: Verdict,
    pub basis: VerdictBasis,
}

fn combine(trends: &[Trend]) -> Verdict {
    if trends.iter().all(|&t| t == Trend::Vanishing) {
        Verdict::Converged
    } else if trends.contains(&Trend::Persisting) {
        Verdict::NotConverged
    } else {
        Verdict::Inconclusive
    }
}

fn verdict_of(t: Trend) -> Verdict {
    combine(&[t])
}

pub fn classify_d_convergence<T: Real>(s: &MetricSequence<T>, opts: &ClassifyOptions<T>) -> Result<ConvergenceReport<T>> {
    let limit = s.require_limit()?;
    for &e in &opts.eps_grid {
        check_eps(e)?;
    }
    let vol = limit.domain().total_measure();
    let scale = T::lit(1e-2) * vol;
    let tol_meas = opts.tol_meas.unwrap_or(scale);
    let tol_vol = opts.tol_vol.unwrap_or(scale);
    let tol_theta = opts.tol_theta.unwrap_or(scale);
    let floor = T::lit(1e-12) * vol;

    let rows: Vec<(Vec<T>, UniformGap<T>)> = s
        .terms()
        .par_iter()
        .map(|fk| {
            let gap = pointwise_gap(limit, fk)?;
            let mu = limit.domain().cell_measures();
            let meas = opts
                .eps_grid
                .iter()
                .map(|&e| weighted_sum_where(|i| gap.get(i) >= e, |i| mu[i], mu.len()))
                .collect();
            Ok((meas, uniform_measure_gap(fk, limit)?))
        })
        .collect::<Result<_>>()?;
    let in_measure_gaps: Vec<Vec<T>> = rows.iter().map(|r| r.0.clone()).collect();
    let uniform_measure_gaps: Vec<T> = rows.iter().map(|r| r.1.sup()).collect();
    let l1_density_gaps: Vec<T> = rows.iter().map(|r| r.1.l1()).collect();

    let limit_deflated = !limit.deflated_mask().none();
    let theta_gaps = if opts.with_theta || limit_deflated {
        let cache = ThetaCache::new();
        let full = CellMask::full(limit.len());
        s.terms()
            .iter()
            .map(|fk| Ok(theta_y_cached(fk, limit, &full, &opts.theta, &cache)?.value))
            .collect::<Result<Vec<T>>>()?
    } else {
        Vec::new()
    };
    let theta_trend = (!theta_gaps.is_empty()).then(|| tail_trend(&theta_gaps, tol_theta, floor, opts.window));

    let in_measure_trends: Vec<Trend> = (0..opts.eps_grid.len())
        .map(|j| {
            let col: Vec<T> = in_measure_gaps.iter().map(|r| r[j]).collect();
            tail_trend(&col, tol_meas, floor, opts.window)
        })
        .collect();
    let uniform_trend = tail_trend(&uniform_measure_gaps, tol_vol, floor, opts.window);

    let (verdict, basis) = if limit_deflated {
        (verdict_of(theta_trend.unwrap_or(Trend::Inconclusive)), VerdictBasis::ThetaTrend)
    } else {
        let mut all = in_measure_trends.clone();
        all.push(uniform_trend);
        (combine(&all), VerdictBasis::Measure)
    };
    Ok(ConvergenceReport {
        eps_grid: opts.eps_grid.clone(),
        in_measure_gaps,
        l1_density_gaps,
        uniform_measure_gaps,
        theta_gaps,
        in_measure_trends,
        uniform_trend,
        theta_trend,
        tol_meas,
        tol_vol,
        tol_theta,
        floor,
        verdict,
        basis,
    })
}

#[derive(Clone, Debug)]
pub struct OmegaOptions<T> {
    pub theta: ThetaOptions<T>,
    pub window: usize,
    /// Determinant level under which a vanishing cell counts as deflating.
    pub det_tol: T,
    /// Defaults to `1e-2·Vol(M, g)`.
    pub tol_theta: Option<T>,
    /// Threshold for the sup-norm of pointwise differences off the deflating set.
    pub tol_point: T,
}

impl<T: Real> Default for OmegaOptions<T> {
    fn default() -> Self {
        OmegaOptions {
            theta: ThetaOptions::default(),
            window: 4,
            det_tol: T::lit(1e-3),
            tol_theta: None,
            tol_point: T::lit(1e-2),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OmegaReport<T> {
    pub cauchy: CauchyReport<T>,
    pub cauchy_pass: bool,
    /// Cells whose determinant tends to zero along the tail.
    pub deflating: CellMask,
    pub limit_deflated: CellMask,
    pub masks_agree: bool,
    /// Per term: `sup |g_k − g₀|_g` over cells outside the deflating set.
    pub off_deflating_sup: Vec<T>,
    pub pointwise_pass: bool,
    /// Largest ratio of successive consecutive gaps over the tail.
    pub step_ratio: Option<T>,
    pub summable_pass: bool,
}

impl<T> OmegaReport<T> {
    pub fn all_pass(&self) -> bool {
        self.cauchy_pass && self.masks_agree && self.pointwise_pass && self.summable_pass
    }
}

/// Diagnostics for the four conditions of ω-convergence. Summability of
/// the steps is checked on the `Θ_M` gaps, a proxy for the L² distance.
pub fn omega_report<T: Real>(s: &MetricSequence<T>, opts: &OmegaOptions<T>) -> Result<OmegaReport<T>> {
    let limit = s.require_limit()?;
    let vol = limit.domain().total_measure();
    let floor = T::lit(1e-12) * vol;
    let tol_theta = opts.tol_theta.unwrap_or(T::lit(1e-2) * vol);
    let cauchy = theta_cauchy_report(s, &opts.theta)?;
    let gaps: Vec<T> = cauchy.consecutive.iter().map(|c| c.2).collect();
    let cauchy_pass = tail_trend(&gaps, tol_theta, floor, opts.window) == Trend::Vanishing;

    let terms = s.terms();
    let len = limit.len();
    let dets: Vec<ScalarField<T>> = terms
        .iter()
        .map(|f| ScalarField::from_values((0..len).map(|i| f.frame_cell(i).det().max(T::zero())).collect()))
        .collect();
    let deflating = CellMask::from_fn(len, |i| {
        let series: Vec<T> = dets.iter().map(|d| d.get(i)).collect();
        tail_trend(&series, opts.det_tol, T::zero(), opts.window) == Trend::Vanishing
    });
    let limit_deflated = limit.deflated_mask().clone();
    let masks_agree = deflating == limit_deflated;

    let off_deflating_sup: Vec<T> = terms
        .par_iter()
        .map(|f| {
            let gap = pointwise_gap(limit, f)?;
            Ok((0..len)
                .filter(|&i| !deflating.get(i))
                .fold(T::zero(), |a, i| a.max(gap.get(i))))
        })
        .collect::<Result<_>>()?;
    let pointwise_pass = tail_trend(&off_deflating_sup, opts.tol_point, T::zero(), opts.window) == Trend::Vanishing;

    let start = gaps.len().saturating_sub(opts.window);
    let tail = &gaps[start..];
    let step_ratio = tail
        .windows(2)
        .filter(|w| w[0] > floor)
        .map(|w| w[1] / w[0])
        .fold(None, |acc: Option<T>, r| Some(acc.map_or(r, |a| a.max(r))));
    let all_zero = tail.iter().all(|&g| g <= floor);
    let summable_pass = all_zero
        || (step_ratio.is_some_and(|r| r < T::one())
            && tail.windows(2).all(|w| w[0] > floor || w[1] <= floor)
            && tail_trend(&gaps, tol_theta, floor, opts.window) == Trend::Vanishing);
    Ok(OmegaReport {
        cauchy,
        cauchy_pass,
        deflating,
        limit_deflated,
        masks_agree,
        off_deflating_sup,
        pointwise_pass,
        step_ratio,
        summable_pass,
    })
}

/// `|‖λ‖_{g_k} − ‖λ‖_{g₀}|` per term.
pub fn scalar_norm_gaps<T: Real>(s: &MetricSequence<T>, lambda: &ScalarField<T>) -> Result<Vec<T>> {
    let limit = s.require_limit()?;
    let base = crate::field::scalar_norm(limit, lambda)?;
    s.terms()
        .iter()
        .map(|f| Ok((crate::field::scalar_norm(f, lambda)? - base).abs()))
        .collect()
}

/// Total volume per term, for reporting.
pub fn volumes<T: Real>(s: &MetricSequence<T>) -> Vec<T> {
    s.terms().iter().map(total_volume).collect()
}
