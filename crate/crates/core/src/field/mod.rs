//! Tensor fields sampled one per cell on a periodic grid.

mod domain;
pub mod io;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fiber::{Definiteness, SymTensor};
use crate::scalar::{pairwise_sum, Real};

pub use domain::{make_grid, GrefSpec, GridDomain, MIN_RESOLUTION};

/// Boolean per cell.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellMask {
    bits: Vec<bool>,
}

impl CellMask {
    pub fn new(bits: Vec<bool>) -> Self {
        CellMask { bits }
    }

    pub fn full(len: usize) -> Self {
        CellMask { bits: vec![true; len] }
    }

    pub fn empty(len: usize) -> Self {
        CellMask { bits: vec![false; len] }
    }

    pub fn from_fn(len: usize, f: impl Fn(usize) -> bool) -> Self {
        CellMask {
            bits: (0..len).map(f).collect(),
        }
    }

    /// Cells whose center satisfies `pred`.
    pub fn from_centers<T: Real>(domain: &GridDomain<T>, pred: impl Fn(&[T]) -> bool) -> Self {
        Self::from_fn(domain.len(), |i| pred(&domain.center(i)))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn none(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn iter_set(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    fn zip(&self, o: &Self, f: impl Fn(bool, bool) -> bool) -> Self {
        assert_eq!(self.len(), o.len(), "mask shapes differ");
        CellMask {
            bits: self.bits.iter().zip(&o.bits).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn union(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a || b)
    }

    pub fn intersection(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a && b)
    }

    pub fn difference(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a != b)
    }

    pub fn complement(&self) -> Self {
        CellMask {
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    pub fn is_subset(&self, o: &Self) -> bool {
        self.bits.iter().zip(&o.bits).all(|(&a, &b)| !a || b)
    }

    /// Sum of cell measures of the set cells.
    pub fn measure<T: Real>(&self, domain: &GridDomain<T>) -> T {
        masked_sum(self, domain.cell_measures())
    }

    fn check<T: Real>(&self, domain: &GridDomain<T>) -> Result<()> {
        if self.len() == domain.len() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: domain.len(),
                got: self.len(),
            })
        }
    }
}

fn masked_sum<T: Real>(mask: &CellMask, values: &[T]) -> T {
    let v: Vec<T> = values
        .iter()
        .zip(mask.bits())
        .map(|(&x, &b)| if b { x } else { T::zero() })
        .collect();
    pairwise_sum(&v)
}

/// Real value per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(domain: &GridDomain<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::ShapeMismatch {
                expected: domain.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ScalarField { values })
    }

    /// Wraps values without checking them against a domain.
    pub fn from_values(values: Vec<T>) -> Self {
        ScalarField { values }
    }

    pub fn constant(domain: &GridDomain<T>, c: T) -> Self {
        ScalarField {
            values: vec![c; domain.len()],
        }
    }

    pub fn from_fn(domain: &GridDomain<T>, f: impl Fn(&[T]) -> T) -> Self {
        ScalarField {
            values: (0..domain.len()).map(|i| f(&domain.center(i))).collect(),
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> T {
        self.values[i]
    }

    /// `∫ v dμ` against per-cell weights.
    pub fn integrate(&self, weights: &[T]) -> T {
        let v: Vec<T> = self.values.iter().zip(weights).map(|(&a, &w)| a * w).collect();
        pairwise_sum(&v)
    }
}

/// Positive semi-definite tensor per cell with an explicit deflated mask.
/// Tensors are stored in coordinates; deflated cells hold the zero tensor.
#[derive(Clone, Debug)]
pub struct SemimetricField<T> {
    domain: Arc<GridDomain<T>>,
    cells: Vec<SymTensor<T>>,
    deflated: CellMask,
}

impl<T: Real> PartialEq for SemimetricField<T> {
    fn eq(&self, o: &Self) -> bool {
        self.domain.same_as(&o.domain) && self.cells == o.cells && self.deflated == o.deflated
    }
}

impl<T: Real> SemimetricField<T> {
    pub fn new(domain: Arc<GridDomain<T>>, cells: Vec<SymTensor<T>>) -> Result<Self> {
        Self::with_eps(domain, cells, T::default_eps_pd())
    }

    /// Classifies each cell in the reference-orthonormal frame: a minimum
    /// eigenvalue at or below `eps_pd` marks the cell deflated and its tensor
    /// is replaced by zero.
    pub fn with_eps(domain: Arc<GridDomain<T>>, mut cells: Vec<SymTensor<T>>, eps_pd: T) -> Result<Self> {
        if cells.len() != domain.len() {
            return Err(Error::ShapeMismatch {
                expected: domain.len(),
                got: cells.len(),
            });
        }
        let n = domain.dim();
        let kinds: Vec<Result<Definiteness>> = cells
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                if c.dim() != n {
                    return Err(Error::DimensionMismatch(n, c.dim()));
                }
                domain.to_frame(i, c).classify(eps_pd)
            })
            .collect();
        let mut bits = Vec::with_capacity(cells.len());
        for (c, k) in cells.iter_mut().zip(kinds) {
            let deflated = k? == Definiteness::Degenerate;
            if deflated {
                *c = SymTensor::zero(n);
            }
            bits.push(deflated);
        }
        Ok(SemimetricField {
            domain,
            cells,
            deflated: CellMask::new(bits),
        })
    }

    /// Like [`SemimetricField::new`], additionally forcing the cells in `mask` to be deflated.
    pub fn with_mask(domain: Arc<GridDomain<T>>, mut cells: Vec<SymTensor<T>>, mask: &CellMask) -> Result<Self> {
        mask.check(&domain)?;
        let n = domain.dim();
        for i in mask.iter_set() {
            if i < cells.len() {
                cells[i] = SymTensor::zero(n);
            }
        }
        Self::new(domain, cells)
    }

    pub fn from_fn(domain: Arc<GridDomain<T>>, f: impl Fn(&[T]) -> SymTensor<T>) -> Result<Self> {
        let cells = (0..domain.len()).map(|i| f(&domain.center(i))).collect();
        Self::new(domain, cells)
    }

    pub fn constant(domain: Arc<GridDomain<T>>, t: SymTensor<T>) -> Result<Self> {
        let cells = vec![t; domain.len()];
        Self::new(domain, cells)
    }

    /// The reference metric itself.
    pub fn reference(domain: Arc<GridDomain<T>>) -> Self {
        let cells = (0..domain.len()).map(|i| domain.gref_at(i)).collect();
        Self::new(domain, cells).expect("reference metric is positive definite")
    }

    pub fn zero(domain: Arc<GridDomain<T>>) -> Self {
        let n = domain.dim();
        let len = domain.len();
        SemimetricField {
            domain,
            cells: vec![SymTensor::zero(n); len],
            deflated: CellMask::full(len),
        }
    }

    pub fn domain(&self) -> &Arc<GridDomain<T>> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[SymTensor<T>] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &SymTensor<T> {
        &self.cells[i]
    }

    /// Cell `i` in the reference-orthonormal frame (`G̃ = g⁻¹g̃` up to similarity).
    pub fn frame_cell(&self, i: usize) -> SymTensor<T> {
        self.domain.to_frame(i, &self.cells[i])
    }

    pub fn deflated_mask(&self) -> &CellMask {
        &self.deflated
    }

    pub fn is_deflated(&self, i: usize) -> bool {
        self.deflated.get(i)
    }

    pub fn map_cells(&self, f: impl Fn(usize, &SymTensor<T>) -> SymTensor<T>) -> Result<Self> {
        let cells = self.cells.iter().enumerate().map(|(i, c)| f(i, c)).collect();
        Self::new(self.domain.clone(), cells)
    }

    /// Pointwise conformal scaling `ρ·g̃`; cells with `ρ = 0` become deflated.
    pub fn scaled(&self, rho: &ScalarField<T>) -> Result<Self> {
        if rho.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: rho.len(),
            });
        }
        if rho.values().iter().any(|&r| r < T::zero()) {
            return Err(Error::Domain("scale factor must be nonnegative".into()));
        }
        self.map_cells(|i, c| c.scale(rho.get(i)))
    }

    pub fn into_metric(self) -> Result<MetricField<T>> {
        MetricField::try_from(self)
    }

    pub(crate) fn check_same_domain(&self, o: &Self) -> Result<()> {
        if self.domain.same_as(&o.domain) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }
}

/// Field with every cell positive definite.
#[derive(Clone, Debug)]
pub struct MetricField<T>(SemimetricField<T>);

impl<T: Real> PartialEq for MetricField<T> {
    fn eq(&self, o: &Self) -> bool {
        self.0 == o.0
    }
}

impl<T: Real> TryFrom<SemimetricField<T>> for MetricField<T> {
    type Error = Error;

    fn try_from(f: SemimetricField<T>) -> Result<Self> {
        if let Some(i) = f.deflated.iter_set().next() {
            let min = f.domain.to_frame(i, &f.cells[i]).min_eigenvalue();
            return Err(Error::DegenerateBase {
                min_eig: min.to_f64().unwrap_or(f64::NAN),
                eps: T::default_eps_pd().to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(MetricField(f))
    }
}

impl<T: Real> MetricField<T> {
    pub fn new(domain: Arc<GridDomain<T>>, cells: Vec<SymTensor<T>>) -> Result<Self> {
        SemimetricField::new(domain, cells)?.into_metric()
    }

    pub fn from_fn(domain: Arc<GridDomain<T>>, f: impl Fn(&[T]) -> SymTensor<T>) -> Result<Self> {
        SemimetricField::from_fn(domain, f)?.into_metric()
    }

    pub fn constant(domain: Arc<GridDomain<T>>, t: SymTensor<T>) -> Result<Self> {
        SemimetricField::constant(domain, t)?.into_metric()
    }

    pub fn reference(domain: Arc<GridDomain<T>>) -> Self {
        MetricField(SemimetricField::reference(domain))
    }

    pub fn as_semi(&self) -> &SemimetricField<T> {
        &self.0
    }

    pub fn into_semi(self) -> SemimetricField<T> {
        self.0
    }
}

impl<T> std::ops::Deref for MetricField<T> {
    type Target = SemimetricField<T>;

    fn deref(&self) -> &SemimetricField<T> {
        &self.0
    }
}

impl<T> AsRef<SemimetricField<T>> for MetricField<T> {
    fn as_ref(&self) -> &SemimetricField<T> {
        &self.0
    }
}

/// `√det G̃` per cell, the density of `μ_g̃` against `μ_g`.
pub fn radon_nikodym<T: Real>(f: &SemimetricField<T>) -> ScalarField<T> {
    let values = (0..f.len())
        .into_par_iter()
        .map(|i| {
            if f.is_deflated(i) {
                T::zero()
            } else {
                f.frame_cell(i).det().max(T::zero()).sqrt()
            }
        })
        .collect();
    ScalarField { values }
}

/// `Vol(Y, g̃)`.
pub fn volume<T: Real>(f: &SemimetricField<T>, mask: &CellMask) -> Result<T> {
    mask.check(f.domain())?;
    let rn = radon_nikodym(f);
    let w: Vec<T> = rn
        .values()
        .iter()
        .zip(f.domain().cell_measures())
        .map(|(&r, &m)| r * m)
        .collect();
    Ok(masked_sum(mask, &w))
}

pub fn total_volume<T: Real>(f: &SemimetricField<T>) -> T {
    volume(f, &CellMask::full(f.len())).expect("full mask matches")
}

pub fn deflated_set<T: Real>(f: &SemimetricField<T>) -> CellMask {
    f.deflated_mask().clone()
}

fn differs<T: Real>(a: &SymTensor<T>, b: &SymTensor<T>, eps_eq: T) -> bool {
    if eps_eq == T::zero() {
        a != b
    } else {
        a.sub(b).max_abs_entry() > eps_eq
    }
}

/// Cells where the stored tensors differ by more than `eps_eq` (entrywise; `0` means bitwise).
pub fn carrier<T: Real>(f0: &SemimetricField<T>, f1: &SemimetricField<T>, eps_eq: T) -> Result<CellMask> {
    f0.check_same_domain(f1)?;
    Ok(CellMask::from_fn(f0.len(), |i| differs(f0.cell(i), f1.cell(i), eps_eq)))
}

/// Pointwise `|f1 − f0|_g` per cell.
pub fn pointwise_gap<T: Real>(f0: &SemimetricField<T>, f1: &SemimetricField<T>) -> Result<ScalarField<T>> {
    f0.check_same_domain(f1)?;
    let d = f0.domain();
    let values = (0..f0.len())
        .into_par_iter()
        .map(|i| d.to_frame(i, &f1.cell(i).sub(f0.cell(i))).frobenius())
        .collect();
    Ok(ScalarField { values })
}

/// `‖f1 − f0‖` in the `L²` inner product at the fixed reference metric.
pub fn l2_distance<T: Real>(f0: &SemimetricField<T>, f1: &SemimetricField<T>) -> Result<T> {
    let gap = pointwise_gap(f0, f1)?;
    let sq: Vec<T> = gap
        .values()
        .iter()
        .zip(f0.domain().cell_measures())
        .map(|(&g, &m)| g * g * m)
        .collect();
    Ok(pairwise_sum(&sq).sqrt())
}

/// `‖λ‖_g̃ = (∫ λ² dμ_g̃)^{1/2}` for a scalar function.
pub fn scalar_norm<T: Real>(f: &SemimetricField<T>, lambda: &ScalarField<T>) -> Result<T> {
    if lambda.len() != f.len() {
        return Err(Error::ShapeMismatch {
            expected: f.len(),
            got: lambda.len(),
        });
    }
    let rn = radon_nikodym(f);
    let v: Vec<T> = (0..f.len())
        .map(|i| lambda.get(i) * lambda.get(i) * rn.get(i) * f.domain().cell_measure(i))
        .collect();
    Ok(pairwise_sum(&v).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmenabilityBounds<T> {
    /// `sup |g̃_ij|` over cells and coordinate entries.
    pub sup_coeff: T,
    /// `inf λ_min(G̃)` over cells.
    pub min_eig: T,
}

impl<T: Real> AmenabilityBounds<T> {
    pub fn is_amenable(&self, zeta: T, c: T) -> bool {
        self.min_eig >= zeta && self.sup_coeff <= c
    }

    pub fn is_quasi_amenable(&self, c: T) -> bool {
        self.sup_coeff <= c
    }
}

pub fn amenability_bounds<T: Real>(f: &SemimetricField<T>) -> AmenabilityBounds<T> {
    let per: Vec<(T, T)> = (0..f.len())
        .into_par_iter()
        .map(|i| (f.cell(i).max_abs_entry(), f.frame_cell(i).min_eigenvalue()))
        .collect();
    let sup_coeff = per.iter().fold(T::zero(), |a, p| a.max(p.0));
    let min_eig = per.iter().fold(T::infinity(), |a, p| a.min(p.1));
    AmenabilityBounds { sup_coeff, min_eig }
}

/// Same deflated cells, and agreement (within `eps_eq`) everywhere else.
pub fn semimetric_equiv<T: Real>(f0: &SemimetricField<T>, f1: &SemimetricField<T>, eps_eq: T) -> Result<bool> {
    f0.check_same_domain(f1)?;
    if f0.deflated_mask() != f1.deflated_mask() {
        return Ok(false);
    }
    Ok((0..f0.len()).all(|i| f0.is_deflated(i) || !differs(f0.cell(i), f1.cell(i), eps_eq)))
}
