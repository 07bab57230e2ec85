//! Limited-memory BFGS with a backtracking Armijo line search.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// A smooth objective. `eval` writes the gradient and returns the value.
pub trait Objective {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Sufficient-decrease constant.
    pub armijo_c1: f64,
    /// Step shrink factor per backtrack.
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iters: 500,
            grad_tol: 1e-7,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each accepted step, starting with the initial
    /// point.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two-loop recursion: `d = -H g`.
fn direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, d: &mut [f64]) {
    d.copy_from_slice(g);
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, d);
        for (di, yi) in d.iter_mut().zip(y) {
            *di -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        d.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, d);
        for (di, si) in d.iter_mut().zip(s) {
            *di += (a - b) * si;
        }
    }
    d.iter_mut().for_each(|v| *v = -*v);
}

pub fn minimize<O: Objective + ?Sized>(obj: &O, x0: &[f64], opts: &LbfgsOptions) -> Result<LbfgsReport> {
    let n = obj.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut f = obj.eval(&x, &mut g)?;
    if !f.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    let mut history = vec![f];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut d = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut iterations = 0;
    let mut gnorm = norm(&g);

    while gnorm > opts.grad_tol && iterations < opts.max_iters {
        direction(&g, &pairs, &mut d);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = -gnorm * gnorm;
        }
        let mut step = if pairs.is_empty() {
            (1.0 / gnorm).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            let f_new = obj.eval(&x_new, &mut g_new)?;
            if f_new.is_finite() && f_new <= f + opts.armijo_c1 * step * slope {
                accepted = Some(f_new);
                break;
            }
            step *= opts.backtrack;
        }
        let Some(f_new) = accepted else {
            if pairs.is_empty() {
                // no decrease even along steepest descent
                break;
            }
            pairs.clear();
            continue;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * norm(&s) * norm(&y) && sy > 0.0 {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        gnorm = norm(&g);
        history.push(f);
        iterations += 1;
    }

    Ok(LbfgsReport {
        x,
        value: f,
        grad_norm: gnorm,
        iterations,
        converged: gnorm <= opts.grad_tol,
        history,
    })
}
