//! Full-batch limited-memory BFGS with Armijo backtracking.
//!
//! Margins `z = X w + b` are carried between iterations: along a search
//! direction `p` they move linearly (`z + alpha * X p`), so each backtracking
//! trial costs O(n) instead of a full pass over the features.

use std::collections::VecDeque;

use super::problem::LogisticProblem;
use crate::error::{Error, Result};

const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Margins are recomputed from scratch this often to bound drift.
const REFRESH_EVERY: usize = 25;

pub(crate) struct Solution {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check(value: f64, iteration: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteObjective { iteration })
    }
}

pub(crate) fn minimize(
    problem: &LogisticProblem<'_>,
    theta0: Vec<f64>,
    max_iterations: usize,
    tolerance: f64,
) -> Result<Solution> {
    let mut theta = theta0;
    let mut z = problem.margins(&theta);
    let mut f = check(problem.objective_from_margins(&theta, &z), 0)?;
    let mut g = problem.gradient(&theta, &z);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iterations {
        iterations += 1;
        if g.iter().all(|v| v.abs() <= f64::EPSILON * f.abs().max(1.0)) {
            converged = true;
            break;
        }

        let mut p = direction(&g, &history);
        let mut slope = dot(&g, &p);
        if slope >= 0.0 {
            history.clear();
            p = g.iter().map(|v| -v).collect();
            slope = dot(&g, &p);
        }
        let mut alpha = if history.is_empty() {
            (1.0 / p.iter().map(|v| v * v).sum::<f64>().sqrt()).min(1.0)
        } else {
            1.0
        };

        let dz = problem.margins(&p);
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = theta.iter().zip(&p).map(|(t, d)| t + alpha * d).collect();
            let zt: Vec<f64> = z.iter().zip(&dz).map(|(z, d)| z + alpha * d).collect();
            let ft = problem.objective_from_margins(&trial, &zt);
            if ft.is_finite() && ft <= f + ARMIJO * alpha * slope {
                accepted = Some((trial, zt, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((next, mut zn, mut fn_)) = accepted else {
            // No decrease is representable along a descent direction.
            converged = true;
            break;
        };
        if iterations % REFRESH_EVERY == 0 {
            zn = problem.margins(&next);
            fn_ = problem.objective_from_margins(&next, &zn);
        }
        let fn_ = check(fn_, iterations)?;
        let gn = problem.gradient(&next, &zn);

        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let decrease = (f - fn_) / f.abs().max(fn_.abs()).max(1.0);
        theta = next;
        z = zn;
        f = fn_;
        g = gn;
        // A small decrease alone can be a short step far from the optimum,
        // so the gradient must be small on the same relative scale.
        let scale = tolerance * f.abs().max(1.0);
        if decrease <= tolerance && dot(&g, &g) <= scale * scale {
            converged = true;
            break;
        }
    }

    Ok(Solution {
        theta,
        objective: f,
        iterations,
        converged,
    })
}

/// Two-loop recursion: `-H g` for the implicit inverse-Hessian estimate.
fn direction(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    for qi in &mut q {
        *qi = -*qi;
    }
    q
}
