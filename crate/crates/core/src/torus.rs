//! Degenerating metric sequences on the flat 2-torus `[-1, 1]²` and the
//! geometric probes that react to them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fiber::SymTensor;
use crate::field::{make_grid, GrefSpec, GridDomain, MetricField, ScalarField};
use crate::scalar::Real;

fn smoothstep<T: Real>(u: T) -> T {
    let u = u.max(T::zero()).min(T::one());
    u * u * (T::lit(3.0) - T::lit(2.0) * u)
}

fn require_2d<T: Real>(d: &GridDomain<T>) -> Result<()> {
    if d.dim() == 2 {
        Ok(())
    } else {
        Err(Error::InvalidGrid("torus examples live on a two-dimensional grid".into()))
    }
}

/// Profile `f_s(t) = 1 + (s⁻⁴ − 1)·w((2s − |t|)/s)`, `w` the clamped smoothstep.
pub fn cusp_profile<T: Real>(s: T, t: T) -> T {
    let w = smoothstep((T::lit(2.0) * s - t.abs()) / s);
    T::one() + (s.powi(-4) - T::one()) * w
}

/// `diag(f(x), 1/f(x))` with `f = f_{1/k}`: `diag(k⁴, k⁻⁴)` on `|x| ≤ 1/k`,
/// the identity on `|x| ≥ 2/k`.
pub fn cusp_metric<T: Real>(domain: &Arc<GridDomain<T>>, k: usize) -> Result<MetricField<T>> {
    require_2d(domain)?;
    if k < 2 {
        return Err(Error::Domain(format!("cusp needs k >= 2, got {k}")));
    }
    let cells_per = T::one() / T::from_usize_lossy(k) / domain.spacing(0);
    if cells_per < T::lit(8.0) {
        return Err(Error::UnderResolved(format!(
            "k = {k} needs at least 8 cells across 1/k (have {cells_per})"
        )));
    }
    let s = T::one() / T::from_usize_lossy(k);
    MetricField::from_fn(domain.clone(), |p| {
        let f = cusp_profile(s, p[0]);
        SymTensor::diagonal(&[f, T::one() / f])
    })
}

/// `diag(h, 1/h)` with `h = 1 + (1/k − 1)·w_x·w_y`: `diag(1/k, k)` on
/// `E_k = [−3/4, 3/4] × [−1/k, 1/k]`, the identity outside
/// `U_k = [−7/8, 7/8] × [−9/(8k), 9/(8k)]`.
pub fn inj_metric<T: Real>(domain: &Arc<GridDomain<T>>, k: usize) -> Result<MetricField<T>> {
    require_2d(domain)?;
    if k < 4 {
        return Err(Error::Domain(format!("injectivity example needs k >= 4, got {k}")));
    }
    let kk = T::from_usize_lossy(k);
    if T::one() / kk < T::lit(2.0) * domain.spacing(1) {
        return Err(Error::UnderResolved(format!("k = {k} needs 1/k >= 2h")));
    }
    let eighth = T::lit(0.125);
    MetricField::from_fn(domain.clone(), |p| {
        let wx = smoothstep((T::lit(0.875) - p[0].abs()) / eighth);
        let wy = smoothstep((T::lit(1.125) / kk - p[1].abs()) / (eighth / kk));
        let h = T::one() + (T::one() / kk - T::one()) * wx * wy;
        SymTensor::diagonal(&[h, T::one() / h])
    })
}

/// Cells of `E_k` and `U_k` as masks.
pub fn inj_regions<T: Real>(domain: &GridDomain<T>, k: usize) -> (crate::field::CellMask, crate::field::CellMask) {
    let kk = T::from_usize_lossy(k);
    let e = crate::field::CellMask::from_centers(domain, |p| {
        p[0].abs() <= T::lit(0.75) && p[1].abs() <= T::one() / kk
    });
    let u = crate::field::CellMask::from_centers(domain, |p| {
        p[0].abs() <= T::lit(0.875) && p[1].abs() <= T::lit(1.125) / kk
    });
    (e, u)
}

fn quad<T: Real>(g: &SymTensor<T>, v: [T; 2]) -> T {
    g.get(0, 0) * v[0] * v[0] + T::lit(2.0) * g.get(0, 1) * v[0] * v[1] + g.get(1, 1) * v[1] * v[1]
}

/// `Σ √(Δᵀ g Δ)` over polyline segments, `g` taken at the cell nearest each
/// segment midpoint.
pub fn curve_length<T: Real>(f: &MetricField<T>, polyline: &[[T; 2]]) -> Result<T> {
    require_2d(f.domain())?;
    let d = f.domain();
    let half = T::lit(0.5);
    Ok(polyline
        .windows(2)
        .map(|w| {
            let mid = [(w[0][0] + w[1][0]) * half, (w[0][1] + w[1][1]) * half];
            let g = f.cell(d.locate(&mid));
            quad(g, [w[1][0] - w[0][0], w[1][1] - w[0][1]]).max(T::zero()).sqrt()
        })
        .fold(T::zero(), |a, b| a + b))
}

/// `pieces` equal segments from `p` to `q`.
pub fn straight_polyline<T: Real>(p: [T; 2], q: [T; 2], pieces: usize) -> Vec<[T; 2]> {
    let k = T::from_usize_lossy(pieces.max(1));
    (0..=pieces.max(1))
        .map(|i| {
            let t = T::from_usize_lossy(i) / k;
            [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
        })
        .collect()
}

/// Graph connectivity used by the grid distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    /// Both axes periodic.
    Torus,
    /// The first axis is cut at `x = ±1` (the universal cover in `x`).
    CutAtSeam,
}

const STENCIL: [(i64, i64); 16] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
    (1, 2),
    (2, 1),
    (-1, 2),
    (-2, 1),
    (1, -2),
    (2, -1),
    (-1, -2),
    (-2, -1),
];

#[derive(Clone, Copy, PartialEq)]
struct Entry<T> {
    dist: T,
    node: usize,
}

impl<T: Real> Eq for Entry<T> {}

impl<T: Real> Ord for Entry<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        o.dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| o.node.cmp(&self.node))
    }
}

impl<T: Real> PartialOrd for Entry<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn neighbor(ix: usize, iy: usize, dx: i64, dy: i64, nx: usize, ny: usize, topo: Topology) -> Option<(usize, usize)> {
    let x = ix as i64 + dx;
    let y = (iy as i64 + dy).rem_euclid(ny as i64) as usize;
    let x = match topo {
        Topology::Torus => x.rem_euclid(nx as i64) as usize,
        Topology::CutAtSeam => {
            if x < 0 || x >= nx as i64 {
                return None;
            }
            x as usize
        }
    };
    Some((x, y))
}

/// Single-source shortest distances in the 16-neighbor grid graph. An edge
/// costs the average of `√(vᵀ g v)` at its two end cells, `v` the
/// coordinate displacement.
pub fn distance_field<T: Real>(f: &MetricField<T>, source: usize, topo: Topology) -> Result<Vec<T>> {
    require_2d(f.domain())?;
    let d = f.domain();
    let (nx, ny) = (d.dims()[0], d.dims()[1]);
    let (hx, hy) = (d.spacing(0), d.spacing(1));
    let half = T::lit(0.5);
    let costs: Vec<[T; 16]> = f
        .cells()
        .par_iter()
        .map(|g| {
            let mut c = [T::zero(); 16];
            for (slot, &(dx, dy)) in c.iter_mut().zip(STENCIL.iter()) {
                let v = [T::from_i64(dx).unwrap_or(T::zero()) * hx, T::from_i64(dy).unwrap_or(T::zero()) * hy];
                *slot = quad(g, v).max(T::zero()).sqrt() * half;
            }
            c
        })
        .collect();
    let mut dist = vec![T::infinity(); d.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = T::zero();
    heap.push(Entry {
        dist: T::zero(),
        node: source,
    });
    while let Some(Entry { dist: du, node: u }) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        let (ix, iy) = (u / ny, u % ny);
        for (e, &(dx, dy)) in STENCIL.iter().enumerate() {
            let Some((jx, jy)) = neighbor(ix, iy, dx, dy, nx, ny, topo) else {
                continue;
            };
            let v = jx * ny + jy;
            let nd = du + costs[u][e] + costs[v][e];
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry { dist: nd, node: v });
            }
        }
    }
    Ok(dist)
}

/// Grid-graph distance between the cells containing `p` and `q`.
pub fn surface_distance<T: Real>(f: &MetricField<T>, p: [T; 2], q: [T; 2], topo: Topology) -> Result<T> {
    let d = f.domain();
    let src = d.locate(&p);
    let dst = d.locate(&q);
    Ok(distance_field(f, src, topo)?[dst])
}

/// Ratio of grid distance to exact distance on the flat torus at this
/// resolution, worst case over a fan of directions.
pub fn metrication_factor<T: Real>(res: usize) -> Result<T> {
    let d = make_grid::<T>(2, res, GrefSpec::Identity)?;
    let f = MetricField::reference(d.clone());
    let src = d.locate(&[T::zero(), T::zero()]);
    let dist = distance_field(&f, src, Topology::Torus)?;
    let c0 = d.center(src);
    let mut worst = T::one();
    for i in 0..d.len() {
        let c = d.center(i);
        let (dx, dy) = (c[0] - c0[0], c[1] - c0[1]);
        let e = (dx * dx + dy * dy).sqrt();
        if e > T::lit(0.25) && e < T::lit(0.9) {
            worst = worst.max(dist[i] / e);
        }
    }
    Ok(worst)
}

/// Second derivatives by periodic central differences.
struct Stencil<'a, T> {
    v: &'a [T],
    nx: usize,
    ny: usize,
    hx: T,
    hy: T,
}

impl<T: Real> Stencil<'_, T> {
    fn at(&self, ix: i64, iy: i64) -> T {
        let x = ix.rem_euclid(self.nx as i64) as usize;
        let y = iy.rem_euclid(self.ny as i64) as usize;
        self.v[x * self.ny + y]
    }

    fn du(&self, x: i64, y: i64) -> T {
        (self.at(x + 1, y) - self.at(x - 1, y)) / (T::lit(2.0) * self.hx)
    }

    fn dv(&self, x: i64, y: i64) -> T {
        (self.at(x, y + 1) - self.at(x, y - 1)) / (T::lit(2.0) * self.hy)
    }

    fn duu(&self, x: i64, y: i64) -> T {
        (self.at(x + 1, y) - T::lit(2.0) * self.at(x, y) + self.at(x - 1, y)) / (self.hx * self.hx)
    }

    fn dvv(&self, x: i64, y: i64) -> T {
        (self.at(x, y + 1) - T::lit(2.0) * self.at(x, y) + self.at(x, y - 1)) / (self.hy * self.hy)
    }

    fn duv(&self, x: i64, y: i64) -> T {
        (self.at(x + 1, y + 1) - self.at(x + 1, y - 1) - self.at(x - 1, y + 1) + self.at(x - 1, y - 1))
            / (T::lit(4.0) * self.hx * self.hy)
    }
}

fn det3<T: Real>(m: [[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Gaussian curvature from the Brioschi formula with periodic central differences.
pub fn gaussian_curvature<T: Real>(f: &MetricField<T>) -> Result<ScalarField<T>> {
    require_2d(f.domain())?;
    let d = f.domain();
    let (nx, ny) = (d.dims()[0], d.dims()[1]);
    if nx < 32 || ny < 32 {
        return Err(Error::UnderResolved("curvature needs resolution >= 32".into()));
    }
    let comp = |i: usize, j: usize| -> Vec<T> { f.cells().iter().map(|c| c.get(i, j)).collect() };
    let (ev, fv, gv) = (comp(0, 0), comp(0, 1), comp(1, 1));
    let mk = |v| Stencil {
        v,
        nx,
        ny,
        hx: d.spacing(0),
        hy: d.spacing(1),
    };
    let (e, ff, g) = (mk(&ev), mk(&fv), mk(&gv));
    let half = T::lit(0.5);
    let values = (0..d.len())
        .into_par_iter()
        .map(|i| {
            let (x, y) = ((i / ny) as i64, (i % ny) as i64);
            let (ee, fff, gg) = (ev[i], fv[i], gv[i]);
            let (eu, ev_) = (e.du(x, y), e.dv(x, y));
            let (fu, fv_) = (ff.du(x, y), ff.dv(x, y));
            let (gu, gv_) = (g.du(x, y), g.dv(x, y));
            let a = [
                [-half * e.dvv(x, y) + ff.duv(x, y) - half * g.duu(x, y), half * eu, fu - half * ev_],
                [fv_ - half * gu, ee, fff],
                [half * gv_, fff, gg],
            ];
            let b = [[T::zero(), half * ev_, half * gu], [half * ev_, ee, fff], [half * gu, fff, gg]];
            let w = ee * gg - fff * fff;
            (det3(a) - det3(b)) / (w * w)
        })
        .collect();
    Ok(ScalarField::from_values(values))
}

/// Sample points `(−1 + 2i/m, −1 + 2j/m)` for the smallest `m` with `m² ≥ samples`.
pub fn sample_points<T: Real>(samples: usize) -> Vec<[T; 2]> {
    let m = (1..).find(|m| m * m >= samples.max(1)).unwrap_or(1);
    let step = T::lit(2.0) / T::from_usize_lossy(m);
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            out.push([
                -T::one() + step * T::from_usize_lossy(i),
                -T::one() + step * T::from_usize_lossy(j),
            ]);
        }
    }
    out
}

/// Largest grid distance from any of the sample points to any cell.
pub fn diameter_estimate<T: Real>(f: &MetricField<T>, samples: usize) -> Result<T> {
    if samples < 4 {
        return Err(Error::Domain("diameter needs at least 4 samples".into()));
    }
    let d = f.domain();
    let eccs: Vec<T> = sample_points::<T>(samples)
        .par_iter()
        .map(|p| {
            let dist = distance_field(f, d.locate(p), Topology::Torus)?;
            Ok(dist.iter().fold(T::zero(), |a, &b| a.max(b)))
        })
        .collect::<Result<_>>()?;
    Ok(eccs.into_iter().fold(T::zero(), |a, b| a.max(b)))
}

/// Shortest loop that winds once around the `x` direction, estimated by
/// closing cut-graph paths from the left to the right column at the given rows.
pub fn seam_loop_length<T: Real>(f: &MetricField<T>, rows: &[usize]) -> Result<T> {
    require_2d(f.domain())?;
    let d = f.domain();
    let (nx, ny) = (d.dims()[0], d.dims()[1]);
    let hx = d.spacing(0);
    let lens: Vec<T> = rows
        .par_iter()
        .map(|&r| {
            let r = r % ny;
            let dist = distance_field(f, r, Topology::CutAtSeam)?;
            let last = (nx - 1) * ny + r;
            let seam = half_sum(quad(f.cell(r), [hx, T::zero()]), quad(f.cell(last), [hx, T::zero()]));
            Ok(dist[last] + seam)
        })
        .collect::<Result<_>>()?;
    Ok(lens.into_iter().fold(T::infinity(), |a, b| a.min(b)))
}

fn half_sum<T: Real>(a: T, b: T) -> T {
    (a.max(T::zero()).sqrt() + b.max(T::zero()).sqrt()) * T::lit(0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Probe {
    Curvature,
    Distance,
    Diameter,
    Injectivity,
}

impl std::str::FromStr for Probe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "curvature" => Ok(Probe::Curvature),
            "distance" => Ok(Probe::Distance),
            "diameter" => Ok(Probe::Diameter),
            "injectivity" => Ok(Probe::Injectivity),
            other => Err(Error::Domain(format!("unknown probe {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeResult<T> {
    pub quantity: String,
    pub ks: Vec<usize>,
    pub values: Vec<T>,
    /// The same quantity for the flat metric.
    pub flat_value: T,
    /// Extra per-k column (the seam-loop estimate for the injectivity probe).
    pub secondary: Option<(String, Vec<T>)>,
}

impl<T: Real> ProbeResult<T> {
    /// The last value is farther from the flat value than the first.
    pub fn diverges(&self) -> bool {
        match (self.values.first(), self.values.last()) {
            (Some(&a), Some(&b)) => (b - self.flat_value).abs() > (a - self.flat_value).abs(),
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ProbeOptions {
    pub res: usize,
    pub diameter_samples: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            res: 256,
            diameter_samples: 16,
        }
    }
}

fn sup_abs<T: Real>(s: &ScalarField<T>) -> T {
    s.values().iter().fold(T::zero(), |a, &b| a.max(b.abs()))
}

fn probe_value<T: Real>(probe: Probe, f: &MetricField<T>, opts: &ProbeOptions) -> Result<(T, Option<T>)> {
    let half = T::lit(0.5);
    Ok(match probe {
        Probe::Curvature => (sup_abs(&gaussian_curvature(f)?), None),
        Probe::Distance => (surface_distance(f, [-half, T::zero()], [half, T::zero()], Topology::CutAtSeam)?, None),
        Probe::Diameter => (diameter_estimate(f, opts.diameter_samples)?, None),
        Probe::Injectivity => {
            let pieces = 4 * f.domain().dims()[0];
            let gamma = straight_polyline([-T::one(), T::zero()], [T::one(), T::zero()], pieces);
            let ny = f.domain().dims()[1];
            let rows = [ny / 2 - 1, ny / 2, 0, ny / 4];
            (curve_length(f, &gamma)?, Some(seam_loop_length(f, &rows)?))
        }
    })
}

/// Runs one probe over the cusp (curvature, distance, diameter) or the
/// injectivity (injectivity) sequence.
pub fn run_probe<T: Real>(probe: Probe, ks: &[usize], opts: &ProbeOptions) -> Result<ProbeResult<T>> {
    let d = make_grid::<T>(2, opts.res, GrefSpec::Identity)?;
    let rows: Vec<(T, Option<T>)> = ks
        .par_iter()
        .map(|&k| {
            let f = match probe {
                Probe::Injectivity => inj_metric(&d, k)?,
                _ => cusp_metric(&d, k)?,
            };
            probe_value(probe, &f, opts)
        })
        .collect::<Result<_>>()?;
    let flat = probe_value(probe, &MetricField::reference(d), opts)?;
    let (quantity, secondary_name) = match probe {
        Probe::Curvature => ("sup_abs_curvature", None),
        Probe::Distance => ("crossing_distance", None),
        Probe::Diameter => ("diameter", None),
        Probe::Injectivity => ("gamma_length", Some("seam_loop")),
    };
    Ok(ProbeResult {
        quantity: quantity.into(),
        ks: ks.to_vec(),
        values: rows.iter().map(|r| r.0).collect(),
        flat_value: flat.0,
        secondary: secondary_name.map(|n| (n.to_string(), rows.iter().map(|r| r.1.unwrap_or(T::nan())).collect())),
    })
}
