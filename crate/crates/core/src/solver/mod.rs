//! Solvers for the constrained saddle-point system.
//!
//! [`arrow_hurwicz`] is the primary method. [`krylov_reference`] and
//! [`mixed_full_solve`] use preconditioned MINRES and serve as
//! cross-checks, and [`dense_solve`] is a direct oracle for tiny meshes.

mod aha;
mod minres;

pub use aha::{arrow_hurwicz, AhaParams, Augmentation};
pub use minres::{minres, MinresOutcome};

use nalgebra::{DMatrix, DVector};

use crate::assembly::{self, SaddleSystem};
use crate::dof::{DofMap, FormVector};
use crate::error::{invalid, Error, Result};
use crate::mesh::Mesh4;
use crate::sparse::{norm, SparseOperator};

pub const DEFAULT_TOL: f64 = 1e-8;

/// Dense solves are refused above this many unknowns.
pub const DENSE_SOLVE_LIMIT: usize = 6000;

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: FormVector,
    pub sigma: FormVector,
    pub iterations: usize,
    /// `|rhs_u - A u - B^T sigma| / |rhs_u|` per iteration.
    pub primal_history: Vec<f64>,
    /// `|B u - rhs_sigma| / max(1, |u|)` per iteration.
    pub constraint_history: Vec<f64>,
    pub converged: bool,
}

impl SolveResult {
    pub fn primal_residual(&self) -> f64 {
        self.primal_history.last().copied().unwrap_or(f64::NAN)
    }

    pub fn constraint_residual(&self) -> f64 {
        self.constraint_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// Default iteration cap, `200 sqrt(n)` bounded by `5e5`.
pub fn default_max_iter(n_free: usize) -> usize {
    ((200.0 * (n_free as f64).sqrt()).ceil() as usize).clamp(1, 500_000)
}

/// Residuals of `(u, sigma)` for the KKT system. With `mixed`, the second
/// block row is `B u - M0 sigma`.
pub fn residuals(system: &SaddleSystem, u: &[f64], sigma: &[f64], mixed: bool) -> (f64, f64) {
    let au = system.a.mul_vec(u);
    let bts = system.b.transpose_mul_vec(sigma);
    let r: Vec<f64> = (0..u.len())
        .map(|i| system.rhs_u[i] - au[i] - bts[i])
        .collect();
    let mut c = system.b.mul_vec(u);
    if mixed {
        if let Some(m0) = &system.mass0 {
            for (ci, v) in c.iter_mut().zip(m0.mul_vec(sigma)) {
                *ci -= v;
            }
        }
    }
    for (ci, g) in c.iter_mut().zip(&system.rhs_sigma) {
        *ci -= g;
    }
    let scale = norm(&system.rhs_u);
    let primal = norm(&r) / if scale > 0.0 { scale } else { 1.0 };
    (primal, norm(&c) / norm(u).max(1.0))
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl KrylovParams {
    pub fn for_system(system: &SaddleSystem) -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: 20 * default_max_iter(system.n_u() + system.n_sigma()),
        }
    }
}

fn diag_inverse(d: &[f64]) -> Result<Vec<f64>> {
    d.iter()
        .map(|&v| {
            if v > 0.0 && v.is_finite() {
                Ok(1.0 / v)
            } else {
                Err(invalid("preconditioner diagonal is not positive"))
            }
        })
        .collect()
}

fn block_solve(system: &SaddleSystem, params: KrylovParams, mixed: bool) -> Result<SolveResult> {
    let (nu, ns) = (system.n_u(), system.n_sigma());
    let m0 = if mixed {
        Some(
            system
                .mass0
                .as_ref()
                .ok_or_else(|| invalid("mixed solve needs the 0-form mass matrix"))?,
        )
    } else {
        None
    };
    let da = system.a.diagonal();
    let inv_a = diag_inverse(&da)?;
    let schur: Vec<f64> = match m0 {
        Some(m) => m.diagonal(),
        None => (0..ns)
            .map(|i| system.b.row(i).map(|(c, v)| v * v * inv_a[c]).sum())
            .collect(),
    };
    let mut precond = inv_a;
    precond.extend(diag_inverse(&schur)?);

    let bt = system.b.transpose();
    let apply = |x: &[f64], y: &mut [f64]| {
        let (xu, xs) = x.split_at(nu);
        let (yu, ys) = y.split_at_mut(nu);
        system.a.matvec(xu, yu);
        for (yi, v) in yu.iter_mut().zip(bt.mul_vec(xs)) {
            *yi += v;
        }
        system.b.matvec(xu, ys);
        if let Some(m) = m0 {
            for (yi, v) in ys.iter_mut().zip(m.mul_vec(xs)) {
                *yi -= v;
            }
        }
    };
    let rhs: Vec<f64> = system
        .rhs_u
        .iter()
        .chain(&system.rhs_sigma)
        .copied()
        .collect();
    let check = |x: &[f64]| {
        let (p, c) = residuals(system, &x[..nu], &x[nu..], mixed);
        (p, c, p <= params.tol && c <= params.tol)
    };
    let out = minres(apply, &precond, &rhs, params.tol, params.max_iter, check)?;
    let (u, s) = out.x.split_at(nu);
    Ok(SolveResult {
        u: FormVector::new(1, u.to_vec()),
        sigma: FormVector::new(0, s.to_vec()),
        iterations: out.iterations,
        primal_history: out.primal_history,
        constraint_history: out.constraint_history,
        converged: out.converged,
    })
}

/// Preconditioned MINRES on `[A B^T; B 0]`.
pub fn krylov_reference(system: &SaddleSystem, params: KrylovParams) -> Result<SolveResult> {
    block_solve(system, params, false)
}

/// Preconditioned MINRES on the mixed system `[A B^T; B -M0]`.
pub fn mixed_solve_system(system: &SaddleSystem, params: KrylovParams) -> Result<SolveResult> {
    block_solve(system, params, true)
}

/// Assembles, reduces and solves the mixed system for a full load vector.
pub fn mixed_full_solve(
    mesh: &Mesh4,
    dof0: &DofMap,
    dof1: &DofMap,
    load: &[f64],
) -> Result<SolveResult> {
    let ops = assembly::assemble_operators(mesh, dof0, dof1)?;
    let system = assembly::reduce_with_bc(&ops, load, dof0, dof1)?;
    mixed_solve_system(&system, KrylovParams::for_system(&system))
}

fn dense(m: &SparseOperator) -> DMatrix<f64> {
    m.to_dense()
}

/// Direct LU solve of the KKT (or mixed) system. Returns `(u, sigma)`.
pub fn dense_solve(system: &SaddleSystem, mixed: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let (nu, ns) = (system.n_u(), system.n_sigma());
    let n = nu + ns;
    if n > DENSE_SOLVE_LIMIT {
        return Err(Error::TooLarge {
            size: n,
            limit: DENSE_SOLVE_LIMIT,
        });
    }
    let mut k = DMatrix::zeros(n, n);
    let a = dense(&system.a);
    let b = dense(&system.b);
    k.view_mut((0, 0), (nu, nu)).copy_from(&a);
    k.view_mut((nu, 0), (ns, nu)).copy_from(&b);
    k.view_mut((0, nu), (nu, ns)).copy_from(&b.transpose());
    if mixed {
        let m0 = system
            .mass0
            .as_ref()
            .ok_or_else(|| invalid("mixed solve needs the 0-form mass matrix"))?;
        k.view_mut((nu, nu), (ns, ns)).copy_from(&(-dense(m0)));
    }
    let rhs = DVector::from_iterator(n, system.rhs_u.iter().chain(&system.rhs_sigma).copied());
    let x = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| invalid("saddle matrix is singular"))?;
    Ok((
        x.rows(0, nu).iter().copied().collect(),
        x.rows(nu, ns).iter().copied().collect(),
    ))
}

/// `sqrt(x^T M x)`.
pub fn mass_norm(mass: &SparseOperator, x: &[f64]) -> f64 {
    crate::sparse::dot(x, &mass.mul_vec(x)).max(0.0).sqrt()
}
