//! Limited-memory BFGS with Armijo backtracking.
//!
//! Termination is driven by a caller-supplied monitored quantity (for path
//! problems: the discrete length) rather than the objective itself.

use std::collections::VecDeque;

use crate::scalar::Real;

pub trait Objective<T: Real> {
    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T], g: &mut [T]);
    /// Quantity whose relative change stops the iteration.
    fn monitor(&self, x: &[T]) -> T {
        self.value(x)
    }
}

#[derive(Clone, Debug)]
pub struct LbfgsOptions<T> {
    pub memory: usize,
    pub max_iter: usize,
    pub rel_tol: T,
}

impl<T: Real> Default for LbfgsOptions<T> {
    fn default() -> Self {
        LbfgsOptions {
            memory: 8,
            max_iter: 500,
            rel_tol: T::lit(1e-8),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LbfgsOutcome<T> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn minimize<T: Real, O: Objective<T>>(obj: &O, x0: Vec<T>, opts: &LbfgsOptions<T>) -> LbfgsOutcome<T> {
    let dim = x0.len();
    let mut x = x0;
    let mut fx = obj.value(&x);
    if dim == 0 || !fx.is_finite() {
        return LbfgsOutcome {
            x,
            value: fx,
            iterations: 0,
            converged: dim == 0,
        };
    }
    let mut g = vec![T::zero(); dim];
    obj.gradient(&x, &mut g);
    let mut mon = obj.monitor(&x);
    let mut history: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::with_capacity(opts.memory);
    let c1 = T::lit(1e-4);
    let half = T::lit(0.5);
    let mut trial = vec![T::zero(); dim];
    let mut d = vec![T::zero(); dim];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        let gnorm = dot(&g, &g).sqrt();
        if gnorm == T::zero() || !gnorm.is_finite() {
            converged = gnorm == T::zero();
            break;
        }
        // two-loop recursion
        d.copy_from_slice(&g);
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = *rho * dot(s, &d);
            for (di, &yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => T::one().min(T::one() / gnorm),
        };
        for di in d.iter_mut() {
            *di *= gamma;
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
            let b = *rho * dot(y, &d);
            for (di, &si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        for di in d.iter_mut() {
            *di = -*di;
        }
        let mut slope = dot(&g, &d);
        if !(slope < T::zero()) {
            history.clear();
            let scale = T::one().min(T::one() / gnorm);
            for (di, &gi) in d.iter_mut().zip(&g) {
                *di = -gi * scale;
            }
            slope = dot(&g, &d);
        }

        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..50 {
            for i in 0..dim {
                trial[i] = x[i] + step * d[i];
            }
            let ft = obj.value(&trial);
            if ft.is_finite() && ft <= fx + c1 * step * slope {
                accepted = Some(ft);
                break;
            }
            step *= half;
        }
        let Some(ft) = accepted else {
            if history.is_empty() {
                // no descent along the gradient at finite-difference resolution
                converged = true;
                break;
            }
            history.clear();
            continue;
        };

        let mut g_new = vec![T::zero(); dim];
        obj.gradient(&trial, &mut g_new);
        let s: Vec<T> = (0..dim).map(|i| trial[i] - x[i]).collect();
        let y: Vec<T> = (0..dim).map(|i| g_new[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > T::epsilon() * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, T::one() / sy));
        }
        std::mem::swap(&mut x, &mut trial);
        g = g_new;
        fx = ft;
        let mon_new = obj.monitor(&x);
        let change = (mon - mon_new).abs();
        mon = mon_new;
        if change <= opts.rel_tol * mon.abs() {
            converged = true;
            break;
        }
    }

    LbfgsOutcome {
        x,
        value: fx,
        iterations,
        converged,
    }
}
