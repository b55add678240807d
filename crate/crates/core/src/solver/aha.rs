//! Arrow-Hurwicz iteration
//!
//! ```text
//! sigma <- sigma + delta (B u - g)
//! u     <- u + omega (f - A_g u - B^T sigma)
//! ```
//!
//! with `A_g = A + gamma B^T B` and `f = rhs_u + gamma B^T g`. `gamma = 0`
//! is the plain iteration. Both variants share the fixed point of the KKT
//! system.

use super::{default_max_iter, SolveResult, DEFAULT_TOL};
use crate::assembly::SaddleSystem;
use crate::dof::FormVector;
use crate::error::{invalid, Error, Result};
use crate::sparse::{dot, norm};

const POWER_ITERATIONS: usize = 20;

/// Weight of the `gamma B^T B` term added to `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Augmentation {
    None,
    /// `gamma = lambda(A) / lambda(B B^T)`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AhaParams {
    /// Multiplier step. Defaults to `gamma`, or to `omega` without augmentation.
    pub delta: Option<f64>,
    /// Primal step. Defaults to `1 / lambda(A_g)`.
    pub omega: Option<f64>,
    pub tol: f64,
    pub max_iter: Option<usize>,
    /// Spectral estimate of `A`.
    pub lambda_hat: Option<f64>,
    pub augmentation: Augmentation,
}

impl Default for AhaParams {
    fn default() -> Self {
        Self {
            delta: None,
            omega: None,
            tol: DEFAULT_TOL,
            max_iter: None,
            lambda_hat: None,
            augmentation: Augmentation::Auto,
        }
    }
}

/// Step sizes after defaults are filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedSteps {
    pub delta: f64,
    pub omega: f64,
    pub gamma: f64,
    pub lambda_hat: f64,
    pub max_iter: usize,
}

fn power_estimate(n: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0)
        .collect();
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let nrm = norm(&x);
        if nrm == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= nrm);
        let y = apply(&x);
        lambda = dot(&x, &y);
        x = y;
    }
    lambda
}

impl AhaParams {
    pub fn resolve(&self, system: &SaddleSystem) -> Result<ResolvedSteps> {
        if !(self.tol > 0.0) {
            return Err(invalid("tol must be positive"));
        }
        for (name, v) in [
            ("delta", self.delta),
            ("omega", self.omega),
            ("lambda_hat", self.lambda_hat),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(format!("{name} must be positive")));
                }
            }
        }
        if self.max_iter == Some(0) {
            return Err(invalid("max_iter must be positive"));
        }
        let lambda_hat = match self.lambda_hat {
            Some(l) => l,
            None => power_estimate(system.n_u(), |x| system.a.mul_vec(x)),
        };
        let gamma = match self.augmentation {
            Augmentation::None => 0.0,
            Augmentation::Fixed(g) if g >= 0.0 && g.is_finite() => g,
            Augmentation::Fixed(_) => {
                return Err(invalid("augmentation weight must be non-negative"))
            }
            Augmentation::Auto => {
                let lb = power_estimate(system.n_sigma(), |s| {
                    system.b.mul_vec(&system.b.transpose_mul_vec(s))
                });
                if lb > 0.0 {
                    lambda_hat / lb
                } else {
                    0.0
                }
            }
        };
        let omega = match self.omega {
            Some(w) => w,
            None => {
                let l = if gamma > 0.0 {
                    power_estimate(system.n_u(), |x| {
                        let mut y = system.a.mul_vec(x);
                        let btb = system.b.transpose_mul_vec(&system.b.mul_vec(x));
                        y.iter_mut().zip(btb).for_each(|(a, b)| *a += gamma * b);
                        y
                    })
                } else {
                    lambda_hat
                };
                if l > 0.0 {
                    1.0 / l
                } else {
                    1.0
                }
            }
        };
        let delta = self
            .delta
            .unwrap_or(if gamma > 0.0 { gamma } else { omega });
        let max_iter = self
            .max_iter
            .unwrap_or_else(|| default_max_iter(system.n_u() + system.n_sigma()));
        Ok(ResolvedSteps {
            delta,
            omega,
            gamma,
            lambda_hat,
            max_iter,
        })
    }
}

pub fn arrow_hurwicz(system: &SaddleSystem, params: &AhaParams) -> Result<SolveResult> {
    let steps = params.resolve(system)?;
    let (nu, ns) = (system.n_u(), system.n_sigma());
    let g = &system.rhs_sigma;
    let bt = system.b.transpose();
    let mut f = system.rhs_u.clone();
    if steps.gamma > 0.0 {
        for (fi, v) in f.iter_mut().zip(system.b.transpose_mul_vec(g)) {
            *fi += steps.gamma * v;
        }
    }
    let rhs_scale = match norm(&system.rhs_u) {
        s if s > 0.0 => s,
        _ => 1.0,
    };

    let mut u = vec![0.0; nu];
    let mut sigma = vec![0.0; ns];
    let mut bts = vec![0.0; nu];
    let mut au = vec![0.0; nu];
    let mut bu = vec![0.0; ns];
    let mut primal_history = Vec::new();
    let mut constraint_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for k in 0..=steps.max_iter {
        system.a.matvec(&u, &mut au);
        system.b.matvec(&u, &mut bu);
        if k > 0 {
            let r: f64 = (0..nu)
                .map(|i| (system.rhs_u[i] - au[i] - bts[i]).powi(2))
                .sum::<f64>()
                .sqrt();
            let c: f64 = (0..ns).map(|i| (bu[i] - g[i]).powi(2)).sum::<f64>().sqrt();
            let primal = r / rhs_scale;
            let constraint = c / norm(&u).max(1.0);
            if !primal.is_finite() || !constraint.is_finite() {
                return Err(Error::Diverged { iteration: k });
            }
            primal_history.push(primal);
            constraint_history.push(constraint);
            iterations = k;
            if primal <= params.tol && constraint <= params.tol {
                converged = true;
                break;
            }
            if k == steps.max_iter {
                break;
            }
        }
        for i in 0..ns {
            sigma[i] += steps.delta * (bu[i] - g[i]);
        }
        bt.matvec(&sigma, &mut bts);
        if steps.gamma > 0.0 {
            let btbu = bt.mul_vec(&bu);
            for i in 0..nu {
                u[i] += steps.omega * (f[i] - au[i] - steps.gamma * btbu[i] - bts[i]);
            }
        } else {
            for i in 0..nu {
                u[i] += steps.omega * (f[i] - au[i] - bts[i]);
            }
        }
    }

    log::debug!("arrow-hurwicz: {iterations} iterations, converged={converged}, steps={steps:?}");
    Ok(SolveResult {
        u: FormVector::new(1, u),
        sigma: FormVector::new(0, sigma),
        iterations,
        primal_history,
        constraint_history,
        converged,
    })
}
