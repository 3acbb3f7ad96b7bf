//! Dense Newton iteration with a forward-difference Jacobian.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Bound on both the residual ∞-norm and the scaled iterate change.
    pub tol: f64,
    pub max_iter: usize,
    /// Per-variable difference step is `fd_rel_step · max(1, |x|)`.
    pub fd_rel_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

#[inline]
fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Solves `f(x) = 0` from `x0`. Converged when the update satisfies
/// `|dx_i| ≤ tol · max(1, |x_i|)` for all `i` and `‖f(x)‖∞ ≤ tol`.
pub fn solve<F>(mut f: F, x0: Vec<f64>, cfg: &NewtonConfig) -> Result<NewtonOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let n = x0.len();
    let mut x = x0;
    let mut r = vec![0.0; n];
    let mut rp = vec![0.0; n];
    let mut xp = x.clone();
    let mut jac = DMatrix::<f64>::zeros(n, n);
    let mut history = Vec::new();
    f(&x, &mut r)?;
    for it in 1..=cfg.max_iter {
        if !r.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("Newton residual"));
        }
        for c in 0..n {
            let h = cfg.fd_rel_step * x[c].abs().max(1.0);
            xp.copy_from_slice(&x);
            xp[c] += h;
            let h = xp[c] - x[c];
            f(&xp, &mut rp)?;
            for row in 0..n {
                jac[(row, c)] = (rp[row] - r[row]) / h;
            }
        }
        let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
        let dx = jac.clone().lu().solve(&rhs).ok_or(Error::SingularJacobian)?;
        if !dx.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        let mut small = true;
        for i in 0..n {
            x[i] += dx[i];
            if dx[i].abs() > cfg.tol * x[i].abs().max(1.0) {
                small = false;
            }
        }
        f(&x, &mut r)?;
        let rn = inf_norm(&r);
        history.push(rn);
        if small && rn <= cfg.tol {
            return Ok(NewtonOutcome { x, iterations: it, residual_norm: rn });
        }
    }
    Err(Error::MaxIterationsExceeded { iterations: cfg.max_iter, residual_history: history })
}
