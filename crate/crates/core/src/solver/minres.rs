//! Preconditioned MINRES for symmetric indefinite systems with a positive
//! diagonal preconditioner.

use crate::error::{Error, Result};
use crate::sparse::dot;

#[derive(Debug, Clone)]
pub struct MinresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub primal_history: Vec<f64>,
    pub constraint_history: Vec<f64>,
    pub converged: bool,
}

/// Solves `K x = b` from `x = 0`. `apply` computes `y = K x`; `precond` is
/// the inverse diagonal of the preconditioner. `check` evaluates the true
/// residuals `(primal, constraint, done)` and is called whenever the
/// recurrence estimate falls below `tol`, and at the end.
pub fn minres<F, C>(
    apply: F,
    precond: &[f64],
    b: &[f64],
    tol: f64,
    max_iter: usize,
    check: C,
) -> Result<MinresOutcome>
where
    F: Fn(&[f64], &mut [f64]),
    C: Fn(&[f64]) -> (f64, f64, bool),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut out = MinresOutcome {
        x: Vec::new(),
        iterations: 0,
        primal_history: Vec::new(),
        constraint_history: Vec::new(),
        converged: false,
    };

    let mut r1 = b.to_vec();
    let mut y: Vec<f64> = r1.iter().zip(precond).map(|(r, p)| r * p).collect();
    let beta1 = dot(&r1, &y).sqrt();
    if !beta1.is_finite() {
        return Err(Error::Diverged { iteration: 0 });
    }
    if beta1 == 0.0 {
        let (p, c, _) = check(&x);
        out.primal_history.push(p);
        out.constraint_history.push(c);
        out.converged = true;
        out.x = x;
        return Ok(out);
    }

    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut next_check = 0;

    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        for i in 0..n {
            v[i] = s * y[i];
        }
        apply(&v, &mut y);
        if itn >= 2 {
            let f = beta / oldb;
            for i in 0..n {
                y[i] -= f * r1[i];
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for i in 0..n {
            y[i] -= f * r2[i];
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        for i in 0..n {
            y[i] = r2[i] * precond[i];
        }
        oldb = beta;
        let bb = dot(&r2, &y);
        if !(bb >= 0.0) || !bb.is_finite() {
            return Err(Error::Diverged { iteration: itn });
        }
        beta = bb.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        if !phi.is_finite() {
            return Err(Error::Diverged { iteration: itn });
        }
        out.iterations = itn;

        let small = phibar / beta1 <= tol;
        if (small && itn >= next_check) || beta == 0.0 || itn == max_iter {
            let (p, c, done) = check(&x);
            out.primal_history.push(p);
            out.constraint_history.push(c);
            if done {
                out.converged = true;
                break;
            }
            if beta == 0.0 {
                break;
            }
            next_check = itn + 10;
        }
    }
    out.x = x;
    Ok(out)
}
