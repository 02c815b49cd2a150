//! Projected gradient descent on finite-difference gradients.

use super::problem::Objective;

/// Step used for central differences.
pub const FD_STEP: f64 = 1e-5;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const MAX_STEP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentSettings {
    pub max_iters: usize,
    /// Trial step length for the first iteration; later iterations use the
    /// Barzilai–Borwein estimate.
    pub initial_step: f64,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
    pub fd_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentOutcome {
    pub x: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    /// Cost at the start and after every accepted step.
    pub trace: Vec<f64>,
}

/// Minimizes `obj` from `x0` with backtracking (Armijo) line search. Each
/// accepted point is canonicalized (angles wrapped, other coordinates
/// clamped to the box).
/// The returned cost never exceeds the cost at `x0`.
pub fn descend<O: Objective + ?Sized>(obj: &O, x0: &[f64], s: &DescentSettings) -> DescentOutcome {
    let bounds = obj.bounds();
    let mut x = x0.to_vec();
    // Costs always come from `obj.cost` so that every comparison uses one route.
    let mut f = obj.cost(&x);
    let mut g = obj.cost_and_gradient(&x, s.fd_step).1;
    let mut trace = vec![f];
    let mut alpha = s.initial_step;
    let mut iterations = 0;
    while iterations < s.max_iters {
        let gnorm2: f64 = g.iter().map(|v| v * v).sum();
        if gnorm2.sqrt() < s.tolerance || !gnorm2.is_finite() {
            break;
        }
        let mut step = alpha;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            // Clamp only; wrapping is deferred so the step stays a plain difference.
            let trial: Vec<f64> = x
                .iter()
                .zip(&g)
                .enumerate()
                .map(|(i, (xi, gi))| {
                    let v = xi - step * gi;
                    if obj.is_periodic(i) {
                        v
                    } else {
                        v.clamp(bounds[i].0, bounds[i].1)
                    }
                })
                .collect();
            let decrease: f64 = g
                .iter()
                .zip(trial.iter().zip(&x))
                .map(|(gi, (t, xi))| gi * (xi - t))
                .sum();
            if decrease > 0.0 {
                let ft = obj.cost(&trial);
                if ft <= f - ARMIJO * decrease {
                    accepted = Some(trial);
                    break;
                }
            }
            step *= 0.5;
        }
        let Some(trial) = accepted else { break };
        let delta: Vec<f64> = trial.iter().zip(&x).map(|(t, xi)| t - xi).collect();
        let mut next = trial;
        obj.canonicalize(&mut next);
        // Wrapping can move the last bits of the cost; never accept a rise.
        let f_next = obj.cost(&next);
        if f_next > f {
            break;
        }
        let g_next = obj.cost_and_gradient(&next, s.fd_step).1;
        iterations += 1;
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = delta.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = delta.iter().map(|a| a * a).sum();
        alpha = if sy > 0.0 {
            (ss / sy).min(MAX_STEP)
        } else {
            s.initial_step
        };
        let stalled = f - f_next <= 1e-15 * f.abs().max(1.0);
        x = next;
        f = f_next;
        g = g_next;
        trace.push(f);
        if stalled {
            break;
        }
    }
    DescentOutcome {
        x,
        cost: f,
        iterations,
        trace,
    }
}
