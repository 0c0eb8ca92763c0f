//! Riemannian metrics on grids: the fiber geometry of positive semidefinite
//! tensors, distances between metric fields, convergence diagnostics for
//! metric sequences and the degenerating examples on the flat torus.
//!
//! Every routine is generic over [`Real`] (`f32` or `f64`). The aliases below
//! fix the precision for callers that do not care.

pub mod convergence;
pub mod distances;
pub mod error;
pub mod fiber;
pub mod field;
pub mod lbfgs;
pub mod linalg;
pub mod scalar;
pub mod torus;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Sym = fiber::SymTensor<f64>;
pub type Spd = fiber::SpdTensor<f64>;
pub type Grid = field::GridDomain<f64>;
pub type Semimetric = field::SemimetricField<f64>;
pub type Metric = field::MetricField<f64>;

pub type Sym32 = fiber::SymTensor<f32>;
pub type Spd32 = fiber::SpdTensor<f32>;
pub type Grid32 = field::GridDomain<f32>;
pub type Semimetric32 = field::SemimetricField<f32>;
pub type Metric32 = field::MetricField<f32>;
