//! Levenberg-Marquardt on a real residual vector.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmOptions {
    pub max_iters: usize,
    /// Stop once `‖r‖²` drops below this.
    pub cost_tol: f64,
    /// Stop once a step changes `‖r‖²` by less than this relative amount.
    pub rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    /// `‖r(x)‖²`.
    pub cost: f64,
    pub iterations: usize,
}

fn sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Forward-difference Jacobian, one column per parameter.
pub fn fd_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], r: &[f64], step: f64) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(r.len(), x.len());
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        let orig = xp[k];
        xp[k] = orig + step;
        let rp = f(&xp);
        xp[k] = orig;
        for (i, (a, b)) in rp.iter().zip(r).enumerate() {
            j[(i, k)] = (a - b) / step;
        }
    }
    j
}

/// Minimizes `‖r(x)‖²` from `x0`. `jacobian(x, r)` must return the
/// `len(r) x len(x)` derivative at `x`.
pub fn levenberg_marquardt(
    x0: Vec<f64>,
    residual: &dyn Fn(&[f64]) -> Vec<f64>,
    jacobian: &dyn Fn(&[f64], &[f64]) -> DMatrix<f64>,
    opts: &LmOptions,
) -> LmOutcome {
    let mut x = x0;
    let mut r = residual(&x);
    let mut cost = sq(&r);
    let mut mu: Option<f64> = None;
    let mut iterations = 0;
    while iterations < opts.max_iters && cost > opts.cost_tol && cost.is_finite() {
        iterations += 1;
        let j = jacobian(&x, &r);
        let a = j.tr_mul(&j);
        let g = j.tr_mul(&DVector::from_column_slice(&r));
        let diag_max = a.diagonal().iter().cloned().fold(0.0, f64::max);
        let mut damping = *mu.get_or_insert(1e-3 * diag_max.max(1e-12));
        let mut accepted = false;
        for _ in 0..30 {
            let mut m = a.clone();
            for k in 0..m.nrows() {
                m[(k, k)] += damping * (a[(k, k)] + 1e-9 * diag_max.max(1e-12));
            }
            let Some(chol) = m.cholesky() else {
                damping *= 4.0;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let tr = residual(&trial);
            let tc = sq(&tr);
            if tc.is_finite() && tc < cost {
                let rel = (cost - tc) / cost.max(f64::MIN_POSITIVE);
                x = trial;
                r = tr;
                cost = tc;
                damping = (damping / 3.0).max(1e-15);
                accepted = true;
                mu = Some(damping);
                if rel < opts.rel_tol {
                    return LmOutcome { x, cost, iterations };
                }
                break;
            }
            damping *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    LmOutcome { x, cost, iterations }
}
