//! Local descent with finite-difference gradients.
//!
//! Objectives here are entropies of parameterized states: cheap to evaluate,
//! not analytically differentiated, and only locally optimized. Callers run
//! several restarts and keep the best.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    pub fd_step: f64,
    /// Stop when the objective improves by less than `stall_tol` over this
    /// many iterations.
    pub stall_window: usize,
    pub stall_tol: f64,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            fd_step: 1e-5,
            stall_window: 50,
            stall_tol: 1e-9,
            memory: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// False only when the iteration cap was hit.
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central-difference gradient, coordinates evaluated in parallel.
pub fn gradient<F>(f: &F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut xp = x.to_vec();
            xp[i] += h;
            let fp = f(&xp)?;
            xp[i] -= 2.0 * h;
            let fm = f(&xp)?;
            Ok((fp - fm) / (2.0 * h))
        })
        .collect()
}

/// L-BFGS with Armijo backtracking. Stops early once `value <= target`.
pub fn minimize<F>(
    f: &F,
    x0: Vec<f64>,
    config: &OptimizerConfig,
    target: Option<f64>,
) -> Result<Minimum>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let mut x = x0;
    let mut fx = f(&x)?;
    if x.is_empty() {
        return Ok(Minimum {
            x,
            value: fx,
            iterations: 0,
            converged: true,
        });
    }
    let mut g = gradient(f, &x, config.fd_step)?;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut history = vec![fx];

    for iter in 0..config.max_iterations {
        if target.is_some_and(|t| fx <= t) {
            return Ok(Minimum {
                x,
                value: fx,
                iterations: iter,
                converged: true,
            });
        }
        let mut d = two_loop(&g, &s_hist, &y_hist);
        if dot(&d, &g) >= 0.0 {
            d = g.iter().map(|v| -v).collect();
            s_hist.clear();
            y_hist.clear();
        }
        let step = match line_search(f, &x, fx, &g, &d)? {
            Some(step) => step,
            None if !s_hist.is_empty() => {
                s_hist.clear();
                y_hist.clear();
                let sd: Vec<f64> = g.iter().map(|v| -v).collect();
                match line_search(f, &x, fx, &g, &sd)? {
                    Some(step) => {
                        d = sd;
                        step
                    }
                    None => break,
                }
            }
            None => break,
        };
        let (alpha, f_new) = step;
        let x_new: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
        let g_new = gradient(f, &x_new, config.fd_step)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > config.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
        let n = history.len();
        if n > config.stall_window && history[n - 1 - config.stall_window] - fx < config.stall_tol {
            return Ok(Minimum {
                x,
                value: fx,
                iterations: iter + 1,
                converged: true,
            });
        }
    }
    let iterations = history.len() - 1;
    Ok(Minimum {
        x,
        value: fx,
        iterations,
        converged: iterations < config.max_iterations,
    })
}

fn two_loop(g: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q = g.to_vec();
    let m = s_hist.len();
    let mut alphas = vec![0.0; m];
    for i in (0..m).rev() {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        alphas[i] = rho * dot(&s_hist[i], &q);
        for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
            *qj -= alphas[i] * yj;
        }
    }
    if m > 0 {
        let gamma = dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1]);
        for qj in q.iter_mut() {
            *qj *= gamma;
        }
    }
    for i in 0..m {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        let beta = rho * dot(&y_hist[i], &q);
        for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
            *qj += (alphas[i] - beta) * sj;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Returns `(alpha, f(x + alpha d))` for the first Armijo-acceptable step with
/// an actual decrease.
fn line_search<F>(f: &F, x: &[f64], fx: f64, g: &[f64], d: &[f64]) -> Result<Option<(f64, f64)>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let slope = dot(g, d);
    let norm = dot(d, d).sqrt();
    if norm == 0.0 || slope >= 0.0 {
        return Ok(None);
    }
    let mut alpha = (1.0f64).min(1.0 / norm);
    for _ in 0..40 {
        let trial: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let ft = f(&trial)?;
        if ft < fx && ft <= fx + 1e-4 * alpha * slope {
            return Ok(Some((alpha, ft)));
        }
        alpha *= 0.5;
    }
    Ok(None)
}
