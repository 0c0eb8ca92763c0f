//! Dense linear algebra for the 2×2 and 3×3 matrices that live at a single
//! base point. Everything is stack allocated; `n` is the active size.

use crate::scalar::Real;

pub const MAX_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat<T> {
    pub n: usize,
    pub m: [[T; MAX_DIM]; MAX_DIM],
}

impl<T: Real> Mat<T> {
    pub fn zeros(n: usize) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&n));
        Mat {
            n,
            m: [[T::zero(); MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(n, &[T::one(); MAX_DIM])
    }

    pub fn diagonal(n: usize, d: &[T]) -> Self {
        let mut out = Self::zeros(n);
        for i in 0..n {
            out.m[i][i] = d[i];
        }
        out
    }

    #[inline]
    pub fn add(&self, o: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.m[i][j] += o.m[i][j];
            }
        }
        out
    }

    #[inline]
    pub fn sub(&self, o: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.m[i][j] -= o.m[i][j];
            }
        }
        out
    }

    #[inline]
    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.m[i][j] *= s;
            }
        }
        out
    }

    #[inline]
    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.m[i][k];
                for j in 0..n {
                    out.m[i][j] += a * o.m[k][j];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.m[i][j] = self.m[j][i];
            }
        }
        out
    }

    #[inline]
    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.m[i][i]).fold(T::zero(), |a, b| a + b)
    }

    /// `tr(self · o)` without forming the product.
    #[inline]
    pub fn trace_of_product(&self, o: &Self) -> T {
        let mut acc = T::zero();
        for i in 0..self.n {
            for k in 0..self.n {
                acc += self.m[i][k] * o.m[k][i];
            }
        }
        acc
    }

    #[inline]
    pub fn det(&self) -> T {
        let m = &self.m;
        match self.n {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            _ => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        }
    }

    /// Cofactor inverse; `None` when the determinant is exactly zero or not finite.
    #[inline]
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() || !d.is_finite() {
            return None;
        }
        let m = &self.m;
        let mut out = Self::zeros(self.n);
        match self.n {
            1 => out.m[0][0] = T::one() / d,
            2 => {
                out.m[0][0] = m[1][1] / d;
                out.m[0][1] = -m[0][1] / d;
                out.m[1][0] = -m[1][0] / d;
                out.m[1][1] = m[0][0] / d;
            }
            _ => {
                out.m[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
                out.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
                out.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
                out.m[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
                out.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
                out.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
                out.m[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
                out.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
                out.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
            }
        }
        Some(out)
    }

    /// Lower-triangular `L` with `self = L·Lᵀ`; `None` unless positive definite.
    pub fn cholesky(&self) -> Option<Self> {
        let n = self.n;
        let mut l = Self::zeros(n);
        for j in 0..n {
            let mut d = self.m[j][j];
            for k in 0..j {
                d -= l.m[j][k] * l.m[j][k];
            }
            if !(d > T::zero()) {
                return None;
            }
            let djj = d.sqrt();
            l.m[j][j] = djj;
            for i in j + 1..n {
                let mut s = self.m[i][j];
                for k in 0..j {
                    s -= l.m[i][k] * l.m[j][k];
                }
                l.m[i][j] = s / djj;
            }
        }
        Some(l)
    }

    /// `P·self·Pᵀ`, symmetrized.
    pub fn congruence(&self, p: &Self) -> Self {
        let r = p.mul(self).mul(&p.transpose());
        r.add(&r.transpose()).scale(T::lit(0.5))
    }

    pub fn frobenius_norm(&self) -> T {
        self.trace_of_product(&self.transpose()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                acc = acc.max(self.m[i][j].abs());
            }
        }
        acc
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    pub fn sym_eigen(&self) -> SymEigen<T> {
        jacobi(self)
    }

    /// `V f(Λ) Vᵀ` for a symmetric matrix.
    pub fn sym_apply(&self, f: impl Fn(T) -> T) -> Self {
        self.sym_eigen().rebuild(f)
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors stored as columns.
#[derive(Clone, Copy, Debug)]
pub struct SymEigen<T> {
    pub values: [T; MAX_DIM],
    pub vectors: Mat<T>,
}

impl<T: Real> SymEigen<T> {
    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        self.values[self.vectors.n - 1]
    }

    pub fn rebuild(&self, f: impl Fn(T) -> T) -> Mat<T> {
        let n = self.vectors.n;
        let v = &self.vectors.m;
        let mut fl = [T::zero(); MAX_DIM];
        for k in 0..n {
            fl[k] = f(self.values[k]);
        }
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = T::zero();
                for k in 0..n {
                    acc += v[i][k] * fl[k] * v[j][k];
                }
                out.m[i][j] = acc;
                out.m[j][i] = acc;
            }
        }
        out
    }
}

fn jacobi<T: Real>(a: &Mat<T>) -> SymEigen<T> {
    let n = a.n;
    let mut m = *a;
    let mut v = Mat::identity(n);
    let scale = m.max_abs();
    if scale > T::zero() && scale.is_finite() {
        let tiny = T::epsilon() * T::epsilon() * scale * scale;
        for _sweep in 0..64 {
            let mut off = T::zero();
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m.m[p][q] * m.m[p][q];
                }
            }
            if off <= tiny {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m.m[p][q];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (m.m[q][q] - m.m[p][p]) / (apq + apq);
                    let t = if theta.abs() > T::lit(1e150) {
                        T::one() / (theta + theta)
                    } else {
                        let s = if theta >= T::zero() { T::one() } else { -T::one() };
                        s / (theta.abs() + (theta * theta + T::one()).sqrt())
                    };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    m.m[p][p] -= t * apq;
                    m.m[q][q] += t * apq;
                    m.m[p][q] = T::zero();
                    m.m[q][p] = T::zero();
                    for r in 0..n {
                        if r != p && r != q {
                            let g = m.m[r][p];
                            let h = m.m[r][q];
                            m.m[r][p] = c * g - s * h;
                            m.m[p][r] = m.m[r][p];
                            m.m[r][q] = s * g + c * h;
                            m.m[q][r] = m.m[r][q];
                        }
                        let g = v.m[r][p];
                        let h = v.m[r][q];
                        v.m[r][p] = c * g - s * h;
                        v.m[r][q] = s * g + c * h;
                    }
                }
            }
        }
    }
    // ascending order
    let mut idx = [0usize, 1, 2];
    let diag = [m.m[0][0], m.m[1][1], m.m[2][2]];
    idx[..n].sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap_or(std::cmp::Ordering::Equal));
    let mut values = [T::zero(); MAX_DIM];
    let mut vectors = Mat::zeros(n);
    for (k, &i) in idx[..n].iter().enumerate() {
        values[k] = diag[i];
        for r in 0..n {
            vectors.m[r][k] = v.m[r][i];
        }
    }
    SymEigen { values, vectors }
}
