use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fiber::SymTensor;
use crate::linalg::Mat;
use crate::scalar::{pairwise_sum, Real};

/// Reference metric on the grid.
#[derive(Clone, Debug, PartialEq)]
pub enum GrefSpec<T> {
    Identity,
    Constant(SymTensor<T>),
    PerCell(Vec<SymTensor<T>>),
}

/// Uniform periodic grid on `[-1, 1]^dim` with a reference metric.
///
/// Cells are indexed row-major with the first axis slowest, so for two axes
/// the flat index is `ix * ny + iy`. Cell `i` along an axis is centered at
/// `-1 + (i + 1/2)·h` with `h = 2/res`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain<T> {
    dims: Vec<usize>,
    gref: GrefSpec<T>,
    measure: Vec<T>,
    /// `L⁻¹` with `g = L·Lᵀ`, per cell; `None` for the identity.
    frames: Option<Vec<Mat<T>>>,
}

pub const MIN_RESOLUTION: usize = 4;

pub fn make_grid<T: Real>(dim: usize, resolution: usize, gref: GrefSpec<T>) -> Result<Arc<GridDomain<T>>> {
    GridDomain::new(vec![resolution; dim], gref).map(Arc::new)
}

impl<T: Real> GridDomain<T> {
    pub fn new(dims: Vec<usize>, gref: GrefSpec<T>) -> Result<Self> {
        if !(2..=3).contains(&dims.len()) {
            return Err(Error::InvalidGrid(format!("{} axes (expected 2 or 3)", dims.len())));
        }
        if let Some(r) = dims.iter().find(|&&r| r < MIN_RESOLUTION) {
            return Err(Error::InvalidGrid(format!("resolution {r} < {MIN_RESOLUTION}")));
        }
        let n = dims.len();
        let cells: usize = dims.iter().product();
        let base: T = dims
            .iter()
            .fold(T::one(), |acc, &r| acc * T::lit(2.0) / T::from_usize_lossy(r));
        let frame_of = |g: &SymTensor<T>| -> Result<(T, Mat<T>)> {
            if g.dim() != n {
                return Err(Error::DimensionMismatch(n, g.dim()));
            }
            let l = g.to_mat().cholesky().ok_or_else(|| {
                Error::InvalidGrid("reference metric must be positive definite".into())
            })?;
            let linv = l.inverse().ok_or_else(|| Error::InvalidGrid("singular reference metric".into()))?;
            Ok((g.det().sqrt(), linv))
        };
        let (measure, frames) = match &gref {
            GrefSpec::Identity => (vec![base; cells], None),
            GrefSpec::Constant(g) => {
                let (sd, linv) = frame_of(g)?;
                (vec![base * sd; cells], Some(vec![linv; cells]))
            }
            GrefSpec::PerCell(gs) => {
                if gs.len() != cells {
                    return Err(Error::ShapeMismatch {
                        expected: cells,
                        got: gs.len(),
                    });
                }
                let mut measure = Vec::with_capacity(cells);
                let mut frames = Vec::with_capacity(cells);
                for g in gs {
                    let (sd, linv) = frame_of(g)?;
                    measure.push(base * sd);
                    frames.push(linv);
                }
                (measure, Some(frames))
            }
        };
        Ok(GridDomain {
            dims,
            gref,
            measure,
            frames,
        })
    }

    /// Base dimension, which is also the fiber dimension of tensor fields on it.
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn gref(&self) -> &GrefSpec<T> {
        &self.gref
    }

    pub fn has_identity_gref(&self) -> bool {
        self.frames.is_none()
    }

    pub fn spacing(&self, axis: usize) -> T {
        T::lit(2.0) / T::from_usize_lossy(self.dims[axis])
    }

    pub fn cell_measure(&self, i: usize) -> T {
        self.measure[i]
    }

    pub fn cell_measures(&self) -> &[T] {
        &self.measure
    }

    pub fn total_measure(&self) -> T {
        pairwise_sum(&self.measure)
    }

    /// Reference metric at cell `i` in coordinates.
    pub fn gref_at(&self, i: usize) -> SymTensor<T> {
        match &self.gref {
            GrefSpec::Identity => SymTensor::identity(self.dim()),
            GrefSpec::Constant(g) => *g,
            GrefSpec::PerCell(gs) => gs[i],
        }
    }

    /// Writes a coordinate tensor at cell `i` in the orthonormal frame.
    pub fn to_frame(&self, i: usize, t: &SymTensor<T>) -> SymTensor<T> {
        match &self.frames {
            None => *t,
            Some(f) => SymTensor::from_mat(&t.to_mat().congruence(&f[i])),
        }
    }

    pub fn to_frame_mat(&self, i: usize, t: &SymTensor<T>) -> Mat<T> {
        match &self.frames {
            None => t.to_mat(),
            Some(f) => t.to_mat().congruence(&f[i]),
        }
    }

    /// Inverse of [`GridDomain::to_frame`].
    pub fn from_frame(&self, i: usize, t: &SymTensor<T>) -> SymTensor<T> {
        match &self.frames {
            None => *t,
            Some(f) => {
                let l = f[i].inverse().expect("frame is invertible");
                SymTensor::from_mat(&t.to_mat().congruence(&l))
            }
        }
    }

    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for a in (0..self.dims.len()).rev() {
            idx[a] = i % self.dims[a];
            i /= self.dims[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &r)| acc * r + i)
    }

    /// Cell center coordinates.
    pub fn center(&self, i: usize) -> Vec<T> {
        self.multi_index(i)
            .iter()
            .enumerate()
            .map(|(a, &k)| -T::one() + (T::from_usize_lossy(k) + T::lit(0.5)) * self.spacing(a))
            .collect()
    }

    /// Cell containing point `p`, after periodic reduction to `[-1, 1)`.
    pub fn locate(&self, p: &[T]) -> usize {
        let idx: Vec<usize> = p
            .iter()
            .enumerate()
            .map(|(a, &x)| {
                let two = T::lit(2.0);
                let mut y = (x + T::one()) % two;
                if y < T::zero() {
                    y += two;
                }
                let k = (y / self.spacing(a)).floor().to_usize().unwrap_or(0);
                k.min(self.dims[a] - 1)
            })
            .collect();
        self.flat_index(&idx)
    }

    pub fn same_as(&self, other: &Self) -> bool {
        std::ptr::eq(self, other) || self == other
    }
}
