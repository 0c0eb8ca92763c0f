use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{Mat, SymEigen};
use crate::scalar::Real;

/// Number of stored entries of a symmetric `n × n` tensor.
pub const fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Symmetric 2-tensor at one base point, stored as its upper triangle in
/// row-major order (`g11, g12, g22` for `n = 2`).
#[derive(Clone, Copy, PartialEq)]
pub struct SymTensor<T> {
    n: usize,
    packed: [T; 6],
}

impl<T: Real> SymTensor<T> {
    pub fn from_packed(n: usize, entries: &[T]) -> Result<Self> {
        check_dim(n)?;
        if entries.len() != packed_len(n) {
            return Err(Error::ShapeMismatch {
                expected: packed_len(n),
                got: entries.len(),
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut packed = [T::zero(); 6];
        packed[..entries.len()].copy_from_slice(entries);
        Ok(SymTensor { n, packed })
    }

    /// Takes the upper triangle of `m`; the lower triangle is ignored.
    pub fn from_mat(m: &Mat<T>) -> Self {
        let n = m.n;
        let mut packed = [T::zero(); 6];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                packed[k] = m.m[i][j];
                k += 1;
            }
        }
        SymTensor { n, packed }
    }

    pub fn zero(n: usize) -> Self {
        SymTensor {
            n,
            packed: [T::zero(); 6],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, T::one())
    }

    pub fn scaled_identity(n: usize, c: T) -> Self {
        Self::diagonal(&vec![c; n])
    }

    pub fn diagonal(d: &[T]) -> Self {
        Self::from_mat(&Mat::diagonal(d.len(), d))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entries(&self) -> &[T] {
        &self.packed[..packed_len(self.n)]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.packed[packed_index(self.n, i, j)]
    }

    pub fn to_mat(&self) -> Mat<T> {
        let n = self.n;
        let mut m = Mat::zeros(n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                m.m[i][j] = self.packed[k];
                m.m[j][i] = self.packed[k];
                k += 1;
            }
        }
        m
    }

    fn zip(&self, o: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.n, o.n);
        let mut out = *self;
        for k in 0..packed_len(self.n) {
            out.packed[k] = f(self.packed[k], o.packed[k]);
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for k in 0..packed_len(self.n) {
            out.packed[k] *= s;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries().iter().all(|&x| x == T::zero())
    }

    pub fn max_abs_entry(&self) -> T {
        self.entries().iter().fold(T::zero(), |a, &b| a.max(b.abs()))
    }

    pub fn eigen(&self) -> SymEigen<T> {
        self.to_mat().sym_eigen()
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigen().min()
    }

    pub fn det(&self) -> T {
        self.to_mat().det()
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.get(i, i)).fold(T::zero(), |a, b| a + b)
    }

    /// Frobenius norm, which is `|h|_g` when the tensor is written in a
    /// `g`-orthonormal frame.
    pub fn frobenius(&self) -> T {
        let m = self.to_mat();
        m.trace_of_product(&m).sqrt()
    }

    pub fn map_eigen(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_mat(&self.to_mat().sym_apply(f))
    }

    /// Bit-exact identity used for memoization and canonical ordering.
    pub fn key(&self) -> [u64; 7] {
        let mut k = [0u64; 7];
        k[0] = self.n as u64;
        for (slot, v) in k[1..].iter_mut().zip(self.packed.iter()) {
            *slot = v.key_bits();
        }
        k
    }

    /// Symmetric positive semi-definite up to `eps` (scaled by the largest eigenvalue).
    pub fn classify(&self, eps: T) -> Result<Definiteness> {
        let e = self.eigen();
        let tol = eps * T::one().max(e.max().abs());
        if e.min() > eps {
            Ok(Definiteness::PositiveDefinite)
        } else if e.min() >= -tol {
            Ok(Definiteness::Degenerate)
        } else {
            Err(Error::NotPsd(e.min().to_f64().unwrap_or(f64::NAN)))
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for SymTensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym{}{:?}", self.n, &self.packed[..packed_len(self.n)])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Definiteness {
    PositiveDefinite,
    Degenerate,
}

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

/// A point of the open cone: symmetric with all eigenvalues above `eps_pd`.
#[derive(Clone, Copy, PartialEq)]
pub struct SpdTensor<T> {
    inner: SymTensor<T>,
}

impl<T: Real> SpdTensor<T> {
    pub fn new(t: SymTensor<T>) -> Result<Self> {
        Self::with_eps(t, T::default_eps_pd())
    }

    pub fn with_eps(t: SymTensor<T>, eps: T) -> Result<Self> {
        let min = t.min_eigenvalue();
        if min > eps {
            Ok(SpdTensor { inner: t })
        } else {
            Err(Error::DegenerateBase {
                min_eig: min.to_f64().unwrap_or(f64::NAN),
                eps: eps.to_f64().unwrap_or(f64::NAN),
            })
        }
    }

    pub fn identity(n: usize) -> Self {
        SpdTensor {
            inner: SymTensor::identity(n),
        }
    }

    pub fn from_packed(n: usize, entries: &[T]) -> Result<Self> {
        Self::new(SymTensor::from_packed(n, entries)?)
    }

    pub fn as_sym(&self) -> &SymTensor<T> {
        &self.inner
    }

    pub fn into_sym(self) -> SymTensor<T> {
        self.inner
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn det(&self) -> T {
        self.inner.det()
    }
}

impl<T: fmt::Debug> fmt::Debug for SpdTensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Spd{:?}", self.inner)
    }
}

impl<T> AsRef<SymTensor<T>> for SpdTensor<T> {
    fn as_ref(&self) -> &SymTensor<T> {
        &self.inner
    }
}

/// A point of the completed fiber: the open cone plus one extra point that
/// stands for every positive semi-definite, non-definite tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CompletionPoint<T> {
    Interior(SpdTensor<T>),
    BoundaryClass,
}

impl<T: Real> CompletionPoint<T> {
    /// Interior if all eigenvalues exceed `eps`, boundary class if the tensor
    /// is semi-definite, error otherwise.
    pub fn classify(t: &SymTensor<T>, eps: T) -> Result<Self> {
        match t.classify(eps)? {
            Definiteness::PositiveDefinite => Ok(CompletionPoint::Interior(SpdTensor { inner: *t })),
            Definiteness::Degenerate => Ok(CompletionPoint::BoundaryClass),
        }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, CompletionPoint::BoundaryClass)
    }

    /// Canonical representative: the tensor itself, or zero for the boundary class.
    pub fn representative(&self, n: usize) -> SymTensor<T> {
        match self {
            CompletionPoint::Interior(a) => *a.as_sym(),
            CompletionPoint::BoundaryClass => SymTensor::zero(n),
        }
    }
}
