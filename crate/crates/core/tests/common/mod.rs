#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use riemet::fiber::SymTensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_dmat(t: &SymTensor<f64>) -> DMatrix<f64> {
    let n = t.dim();
    DMatrix::from_fn(n, n, |i, j| t.get(i, j))
}

fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(f));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Closed-form fiber distance: the fiber is a metric cone over the
/// unit-determinant slice, so
/// θ² = r₀² + r₁² − 2r₀r₁cos(min(φ, π)) with r = (2/√n)√det A and
/// φ = (√n/2)·‖log(Ã₀^{-1/2}Ã₁Ã₀^{-1/2})‖_F on the normalized tensors.
pub fn cone_theta(a0: &SymTensor<f64>, a1: &SymTensor<f64>) -> f64 {
    let n = a0.dim() as f64;
    let m0 = to_dmat(a0);
    let m1 = to_dmat(a1);
    let d0 = m0.determinant().max(0.0);
    let d1 = m1.determinant().max(0.0);
    let r0 = 2.0 / n.sqrt() * d0.sqrt();
    let r1 = 2.0 / n.sqrt() * d1.sqrt();
    if d0 <= 0.0 || d1 <= 0.0 {
        return r0 + r1;
    }
    let n0 = &m0 / d0.powf(1.0 / n);
    let n1 = &m1 / d1.powf(1.0 / n);
    let s = sym_fn(&n0, |x| 1.0 / x.sqrt());
    let mid = &s * n1 * &s;
    let l = sym_fn(&(0.5 * (&mid + mid.transpose())), f64::ln);
    let phi = n.sqrt() / 2.0 * l.norm();
    (r0 * r0 + r1 * r1 - 2.0 * r0 * r1 * phi.min(std::f64::consts::PI).cos()).max(0.0).sqrt()
}

/// SPD tensor with log-eigenvalues uniform in ±`spread` and a random rotation.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> SymTensor<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = g.qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        rng.gen_range(-spread..spread).exp()
    }));
    let m = &q * d * q.transpose();
    let mut packed = Vec::new();
    for i in 0..n {
        for j in i..n {
            packed.push(0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    SymTensor::from_packed(n, &packed).unwrap()
}
