//! Sequential minimal optimization over a box-constrained dual with one
//! equality constraint.
//!
//! Solves `min 1/2 a^T Q a + p^T a` subject to `0 <= a_i <= upper_i` and
//! `y^T a = const`, where `Q_ij = y_i y_j K_ij`. The binary soft-margin dual
//! uses `p = -1`, `upper = C`, starting from `a = 0`; the one-class dual uses
//! `p = 0`, `y = +1`, `upper = 1/(nu m)`, starting from a feasible stack.
//!
//! Working pairs are picked by the maximal-violating-pair rule with a
//! second-order gain estimate for the partner, and iteration stops when the
//! duality-gap measure `m(a) - M(a)` falls below the tolerance. The whole
//! routine is deterministic in the input order.

// index loops mirror the reference statement of the algorithm
#![allow(clippy::needless_range_loop)]

pub(crate) struct SmoProblem<'a> {
    /// Raw kernel matrix `K_ij` (labels are applied internally).
    pub kernel: &'a [Vec<f64>],
    /// Labels in {-1, +1}.
    pub labels: &'a [f64],
    /// Linear term of the objective.
    pub linear: &'a [f64],
    /// Per-variable upper bound.
    pub upper: &'a [f64],
    /// Stopping tolerance on the violating-pair gap.
    pub tol: f64,
    /// Hard cap on pair updates.
    pub max_iter: usize,
}

pub(crate) struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Equality-constraint multiplier; decision is `sum_i y_i a_i K(x_i, x) - rho`.
    pub rho: f64,
    /// Objective value `1/2 a^T Q a + p^T a` at the returned point.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

const TAU: f64 = 1e-12;

pub(crate) fn solve(problem: &SmoProblem<'_>, initial: Vec<f64>) -> SmoSolution {
    let n = problem.labels.len();
    debug_assert_eq!(problem.kernel.len(), n);
    debug_assert_eq!(problem.linear.len(), n);
    debug_assert_eq!(problem.upper.len(), n);
    debug_assert_eq!(initial.len(), n);

    let y = problem.labels;
    let k = problem.kernel;
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];

    let mut alpha = initial;
    let mut grad: Vec<f64> = problem.linear.to_vec();
    for i in 0..n {
        if alpha[i] != 0.0 {
            for j in 0..n {
                grad[j] += alpha[i] * q(i, j);
            }
        }
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < problem.max_iter {
        match select_working_pair(&alpha, &grad, y, k, problem.upper, problem.tol) {
            None => {
                converged = true;
                break;
            }
            Some((i, j)) => {
                update_pair(i, j, &mut alpha, &mut grad, y, k, problem.upper, &q);
                iterations += 1;
            }
        }
    }

    let rho = calculate_rho(&alpha, &grad, y, problem.upper);
    let objective = 0.5
        * alpha
            .iter()
            .zip(grad.iter().zip(problem.linear))
            .map(|(a, (g, p))| a * (g + p))
            .sum::<f64>();

    SmoSolution {
        alpha,
        rho,
        objective,
        iterations,
        converged,
    }
}

/// Maximal violating pair with second-order partner selection.
fn select_working_pair(
    alpha: &[f64],
    grad: &[f64],
    y: &[f64],
    k: &[Vec<f64>],
    upper: &[f64],
    tol: f64,
) -> Option<(usize, usize)> {
    let n = alpha.len();

    // i maximizes -y_t grad_t over I_up = {y=+1, a<U} u {y=-1, a>0}
    let mut gmax = f64::NEG_INFINITY;
    let mut i_idx: Option<usize> = None;
    for t in 0..n {
        let in_up = if y[t] > 0.0 { alpha[t] < upper[t] } else { alpha[t] > 0.0 };
        if in_up {
            let v = -y[t] * grad[t];
            if v >= gmax {
                gmax = v;
                i_idx = Some(t);
            }
        }
    }
    let i = i_idx?;

    // j in I_low minimizing the second-order objective estimate
    let mut gmax2 = f64::NEG_INFINITY;
    let mut obj_min = f64::INFINITY;
    let mut j_idx: Option<usize> = None;
    for t in 0..n {
        let in_low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < upper[t] };
        if !in_low {
            continue;
        }
        let yg = y[t] * grad[t];
        if yg >= gmax2 {
            gmax2 = yg;
        }
        let grad_diff = gmax + yg;
        if grad_diff > 0.0 {
            // curvature along the feasible direction for the pair (i, t)
            let quad = (k[i][i] + k[t][t] - 2.0 * k[i][t]).max(TAU);
            let obj = -(grad_diff * grad_diff) / quad;
            if obj <= obj_min {
                obj_min = obj;
                j_idx = Some(t);
            }
        }
    }

    if gmax + gmax2 < tol {
        return None;
    }
    j_idx.map(|j| (i, j))
}

#[allow(clippy::too_many_arguments)]
fn update_pair(
    i: usize,
    j: usize,
    alpha: &mut [f64],
    grad: &mut [f64],
    y: &[f64],
    k: &[Vec<f64>],
    upper: &[f64],
    q: &dyn Fn(usize, usize) -> f64,
) {
    let quad = (k[i][i] + k[j][j] - 2.0 * k[i][j]).max(TAU);
    let old_i = alpha[i];
    let old_j = alpha[j];
    let (ci, cj) = (upper[i], upper[j]);

    if y[i] != y[j] {
        let delta = (-grad[i] - grad[j]) / quad;
        let diff = alpha[i] - alpha[j];
        alpha[i] += delta;
        alpha[j] += delta;
        if diff > 0.0 {
            if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = diff;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = -diff;
        }
        if diff > ci - cj {
            if alpha[i] > ci {
                alpha[i] = ci;
                alpha[j] = ci - diff;
            }
        } else if alpha[j] > cj {
            alpha[j] = cj;
            alpha[i] = cj + diff;
        }
    } else {
        let delta = (grad[i] - grad[j]) / quad;
        let sum = alpha[i] + alpha[j];
        alpha[i] -= delta;
        alpha[j] += delta;
        if sum > ci {
            if alpha[i] > ci {
                alpha[i] = ci;
                alpha[j] = sum - ci;
            }
        } else if alpha[j] < 0.0 {
            alpha[j] = 0.0;
            alpha[i] = sum;
        }
        if sum > cj {
            if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = sum - cj;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = sum;
        }
    }

    let d_i = alpha[i] - old_i;
    let d_j = alpha[j] - old_j;
    for t in 0..grad.len() {
        grad[t] += q(t, i) * d_i + q(t, j) * d_j;
    }
}

/// Equality-constraint multiplier: averaged over free variables when any
/// exist, otherwise the midpoint of the feasible bracket.
fn calculate_rho(alpha: &[f64], grad: &[f64], y: &[f64], upper: &[f64]) -> f64 {
    let mut upper_bound = f64::INFINITY;
    let mut lower_bound = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= upper[t] {
            if y[t] < 0.0 {
                upper_bound = upper_bound.min(yg);
            } else {
                lower_bound = lower_bound.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper_bound = upper_bound.min(yg);
            } else {
                lower_bound = lower_bound.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (upper_bound + lower_bound) / 2.0
    }
}
