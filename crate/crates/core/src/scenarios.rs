//! Manufactured-solution convergence study and the coil/electrode
//! demonstration, with the error norm and rate computation they need.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::assembly::{self, SourceField, LOAD_QUADRATURE};
use crate::dof::{build_dofmap, BcSpec, DofMap, FormVector};
use crate::error::{invalid, Error, Result};
use crate::mesh::{Mesh4, DIM};
use crate::quadrature::QuadratureRule;
use crate::reference::{Form1Value, ReferenceCell, N_EDGES};
use crate::solver::{self, AhaParams, KrylovParams, SolveResult};

/// Source data of the manufactured solution, as printed.
pub fn example1_source(p: [f64; DIM]) -> Form1Value {
    let [t, x, y, z] = p;
    let (sx, sy, sz) = ((PI * x).sin(), (PI * y).sin(), (PI * z).sin());
    let (cx, cy, cz) = ((PI * x).cos(), (PI * y).cos(), (PI * z).cos());
    let (ct, st) = ((2.0 * PI * t).cos(), (2.0 * PI * t).sin());
    let k = 3.0 * PI * PI;
    Form1Value::new(
        -k * sx * sy * sz * ct,
        k * cx * sy * sz * st,
        k * sx * cy * sz * st,
        -2.0 * k * sx * sy * cz * st,
    )
}

/// The load actually paired with [`example1_exact`]: the printed source with
/// the charge density negated, so that `-lap phi = rho` holds.
pub fn example1_load_source(p: [f64; DIM]) -> Form1Value {
    let f = example1_source(p);
    Form1Value::new(-f.t, f.x, f.y, f.z)
}

pub fn example1_exact(p: [f64; DIM]) -> Form1Value {
    let [t, x, y, z] = p;
    let (sx, sy, sz) = ((PI * x).sin(), (PI * y).sin(), (PI * z).sin());
    let (cx, cy, cz) = ((PI * x).cos(), (PI * y).cos(), (PI * z).cos());
    let (ct, st) = ((2.0 * PI * t).cos(), (2.0 * PI * t).sin());
    Form1Value::new(
        sx * sy * sz * ct,
        cx * sy * sz * st,
        sx * cy * sz * st,
        -2.0 * sx * sy * cz * st,
    )
}

/// `E = |u - u_h|` in L2 over the whole mesh by tensor Gauss quadrature.
/// `u_h` holds all 1-form DOFs, boundary values included.
pub fn error_norm(
    mesh: &Mesh4,
    u_h: &[f64],
    exact: &(dyn Fn([f64; DIM]) -> Form1Value + Sync),
    q: usize,
) -> Result<f64> {
    if u_h.len() != mesh.num_edges() {
        return Err(invalid("solution length does not match the mesh"));
    }
    let cell = ReferenceCell::new(mesh.spacings())?;
    let quad = QuadratureRule::new(q, mesh.spacings())?;
    let basis: Vec<[Form1Value; N_EDGES]> =
        quad.points().iter().map(|p| cell.edge_values(p)).collect();
    let sum: f64 = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let ids = mesh.cell_edges(c);
            let center = mesh.cell_center(c);
            let mut acc = 0.0;
            for ((p, w), vals) in quad.iter().zip(&basis) {
                let uh = vals
                    .iter()
                    .zip(ids)
                    .fold(Form1Value::ZERO, |a, (b, d)| a + *b * u_h[d]);
                let x = std::array::from_fn(|a| center[a] + p[a]);
                acc += w * (exact(x) - uh).norm_sq();
            }
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    /// Number of cells.
    pub n: usize,
    pub h: f64,
    pub e: f64,
    /// Rate against the previous record.
    pub rate: Option<f64>,
}

/// `log(E_prev / E) / log(h_prev / h)` for consecutive records.
pub fn convergence_rates(records: &mut [ConvergenceRecord]) {
    for i in 0..records.len() {
        records[i].rate = if i == 0 {
            None
        } else {
            let (a, b) = (records[i - 1], records[i]);
            Some((a.e / b.e).ln() / (a.h / b.h).ln())
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverChoice {
    Aha(AhaParams),
    Krylov,
    Mixed,
}

impl SolverChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::Aha(_) => "aha",
            SolverChoice::Krylov => "krylov",
            SolverChoice::Mixed => "mixed",
        }
    }
}

/// A solved problem with boundary values re-attached.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: FormVector,
    pub sigma: FormVector,
    pub result: SolveResult,
}

/// Assembles, solves and expands a problem on `mesh`.
pub fn solve_problem(
    mesh: &Mesh4,
    dof0: &DofMap,
    dof1: &DofMap,
    source: &dyn SourceField,
    q: usize,
    solver: SolverChoice,
) -> Result<Solution> {
    let system = assembly::assemble_system(mesh, dof0, dof1, source, q)?;
    let result = match solver {
        SolverChoice::Aha(p) => solver::arrow_hurwicz(&system, &p)?,
        SolverChoice::Krylov => {
            solver::krylov_reference(&system, KrylovParams::for_system(&system))?
        }
        SolverChoice::Mixed => {
            solver::mixed_solve_system(&system, KrylovParams::for_system(&system))?
        }
    };
    let u = dof1.expand(result.u.values())?;
    let sigma = dof0.expand(result.sigma.values())?;
    Ok(Solution { u, sigma, result })
}

/// Example 1 on the unit hypercube with `n` divisions per axis.
pub fn solve_example1(mesh: &Mesh4, solver: SolverChoice) -> Result<Solution> {
    let bc = BcSpec::homogeneous();
    let dof0 = build_dofmap(mesh, 0, &bc)?;
    let dof1 = build_dofmap(mesh, 1, &bc)?;
    solve_problem(
        mesh,
        &dof0,
        &dof1,
        &example1_load_source,
        LOAD_QUADRATURE,
        solver,
    )
}

/// Runs Example 1 on uniform meshes with `levels[i]` divisions per axis.
/// Fails if a solve does not converge.
pub fn convergence_study(levels: &[usize], solver: SolverChoice) -> Result<Vec<ConvergenceRecord>> {
    if levels.is_empty() {
        return Err(invalid("no refinement levels"));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("levels must increase"));
    }
    let mut out = Vec::with_capacity(levels.len());
    for &n in levels {
        let mesh = Mesh4::new([n; DIM], [1.0; DIM], false)?;
        let sol = solve_example1(&mesh, solver)?;
        if !sol.result.converged {
            return Err(Error::Diverged {
                iteration: sol.result.iterations,
            });
        }
        let e = error_norm(&mesh, sol.u.values(), &example1_exact, LOAD_QUADRATURE)?;
        log::info!(
            "level {n}: E = {e:.6e} after {} iterations",
            sol.result.iterations
        );
        out.push(ConvergenceRecord {
            n: mesh.num_cells(),
            h: mesh.h(),
            e,
            rate: None,
        });
    }
    convergence_rates(&mut out);
    Ok(out)
}

/// Coil and electrode setup of the second demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct Example2Config {
    pub coil_inner: f64,
    pub coil_outer: f64,
    /// The coil occupies the cell layer containing this height.
    pub coil_z: f64,
    pub j0: f64,
    pub electrode_lo: [f64; 2],
    pub electrode_hi: [f64; 2],
    pub v0: f64,
    /// Period of the drive; the default is the time extent of the mesh.
    pub period: Option<f64>,
}

impl Default for Example2Config {
    fn default() -> Self {
        Self {
            coil_inner: 0.3,
            coil_outer: 0.4,
            coil_z: 2.0 / 3.0,
            j0: 1.0,
            electrode_lo: [0.25, 0.25],
            electrode_hi: [0.75, 0.75],
            v0: 100.0,
            period: None,
        }
    }
}

/// Azimuthal coil current around the vertical line through `(0.5, 0.5)`.
#[derive(Debug, Clone, Copy)]
pub struct CoilSource {
    pub inner: f64,
    pub outer: f64,
    pub z_lo: f64,
    pub z_hi: f64,
    pub j0: f64,
    pub period: f64,
}

impl CoilSource {
    pub fn in_coil(&self, p: [f64; DIM]) -> bool {
        let r = (p[1] - 0.5).hypot(p[2] - 0.5);
        r >= self.inner && r <= self.outer && p[3] >= self.z_lo && p[3] <= self.z_hi
    }
}

impl SourceField for CoilSource {
    fn eval(&self, p: [f64; DIM]) -> Form1Value {
        if !self.in_coil(p) {
            return Form1Value::ZERO;
        }
        let theta = (p[2] - 0.5).atan2(p[1] - 0.5);
        let a = self.j0 * (2.0 * PI * p[0] / self.period).sin();
        Form1Value::new(0.0, -a * theta.sin(), a * theta.cos(), 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct Example2Setup {
    pub source: CoilSource,
    pub bc0: BcSpec,
    pub bc1: BcSpec,
    /// Layer index of the coil along z.
    pub coil_layer: usize,
}

pub fn example2_setup(config: &Example2Config, mesh: &Mesh4) -> Result<Example2Setup> {
    let ext = mesh.extents();
    let s = mesh.spacings();
    let period = config.period.unwrap_or(ext[0]);
    let inside = |v: f64, axis: usize| (0.0..=ext[axis]).contains(&v);
    if !(config.coil_inner >= 0.0 && config.coil_inner < config.coil_outer) {
        return Err(invalid("coil radii must satisfy 0 <= inner < outer"));
    }
    if !(0.5 - config.coil_outer >= 0.0 && 0.5 + config.coil_outer <= ext[1].min(ext[2]))
        || !inside(config.coil_z, 3)
    {
        return Err(invalid("coil lies outside the domain"));
    }
    let lo = config.electrode_lo;
    let hi = config.electrode_hi;
    if !(lo[0] < hi[0]
        && lo[1] < hi[1]
        && inside(lo[0], 1)
        && inside(hi[0], 1)
        && inside(lo[1], 2)
        && inside(hi[1], 2))
    {
        return Err(invalid("electrode lies outside the bottom face"));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(invalid("period must be positive"));
    }

    let nz = mesh.divisions()[3];
    let coil_layer = ((config.coil_z / s[3]).floor() as usize).min(nz - 1);
    let source = CoilSource {
        inner: config.coil_inner,
        outer: config.coil_outer,
        z_lo: coil_layer as f64 * s[3],
        z_hi: (coil_layer + 1) as f64 * s[3],
        j0: config.j0,
        period,
    };

    let tol = 1e-12 * ext.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut values = BTreeMap::new();
    for id in 0..mesh.num_edges() {
        let e = mesh.entity(1, id)?;
        if e.kind != 0 || e.anchor[3] != 0 || !mesh.is_lateral(&e) {
            continue;
        }
        let p = mesh.point(e.anchor);
        let on = (0..2).all(|k| p[k + 1] >= lo[k] - tol && p[k + 1] <= hi[k] + tol);
        if on {
            let t_mid = p[0] + 0.5 * s[0];
            values.insert(id, config.v0 * (2.0 * PI * t_mid / period).sin());
        }
    }
    Ok(Example2Setup {
        source,
        bc0: BcSpec::homogeneous(),
        bc1: BcSpec::with_values(values, Some(0.0)),
        coil_layer,
    })
}

/// Cell means of a 1-form: `(phi, [A_x, A_y, A_z])` per cell.
pub fn cell_averages(mesh: &Mesh4, u: &[f64]) -> Result<Vec<(f64, [f64; 3])>> {
    if u.len() != mesh.num_edges() {
        return Err(invalid("solution length does not match the mesh"));
    }
    let cell = ReferenceCell::new(mesh.spacings())?;
    let quad = QuadratureRule::new(2, mesh.spacings())?;
    let basis: Vec<[Form1Value; N_EDGES]> =
        quad.points().iter().map(|p| cell.edge_values(p)).collect();
    let vol = mesh.cell_volume();
    Ok((0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let ids = mesh.cell_edges(c);
            let mut acc = Form1Value::ZERO;
            for ((_, w), vals) in quad.iter().zip(&basis) {
                let v = vals
                    .iter()
                    .zip(ids)
                    .fold(Form1Value::ZERO, |a, (b, d)| a + *b * u[d]);
                acc = acc + v * (w / vol);
            }
            (acc.t, [acc.x, acc.y, acc.z])
        })
        .collect())
}

/// Outcome of the qualitative checks on an Example 2 solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Example2Report {
    /// Per time slab, whether the largest `|phi|` cell mean sits above the electrode.
    pub phi_extremum_on_electrode: Vec<bool>,
    /// `max |A|` over coil-layer cells divided by `max |A|` over cells with `|z - coil_z| > 0.25`.
    pub coil_concentration: f64,
}

pub fn example2_report(
    mesh: &Mesh4,
    config: &Example2Config,
    setup: &Example2Setup,
    u: &[f64],
) -> Result<Example2Report> {
    let avg = cell_averages(mesh, u)?;
    let nt = mesh.divisions()[0];
    let mut best = vec![(f64::NEG_INFINITY, false); nt];
    let (mut near, mut far) = (0.0f64, 0.0f64);
    for (c, (phi, a)) in avg.iter().enumerate() {
        let anchor = mesh.cell_anchor(c);
        let center = mesh.cell_center(c);
        let on_electrode = anchor[3] == 0
            && (0..2).all(|k| {
                center[k + 1] >= config.electrode_lo[k] && center[k + 1] <= config.electrode_hi[k]
            });
        let slot = &mut best[anchor[0]];
        if phi.abs() > slot.0 {
            *slot = (phi.abs(), on_electrode);
        }
        let mag = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        if anchor[3] == setup.coil_layer {
            near = near.max(mag);
        }
        if (center[3] - config.coil_z).abs() > 0.25 {
            far = far.max(mag);
        }
    }
    Ok(Example2Report {
        phi_extremum_on_electrode: best.into_iter().map(|(_, on)| on).collect(),
        coil_concentration: if far > 0.0 { near / far } else { f64::INFINITY },
    })
}

/// Builds, solves and checks Example 2.
pub fn solve_example2(
    mesh: &Mesh4,
    config: &Example2Config,
    solver: SolverChoice,
) -> Result<(Solution, Example2Report)> {
    let setup = example2_setup(config, mesh)?;
    let dof0 = build_dofmap(mesh, 0, &setup.bc0)?;
    let dof1 = build_dofmap(mesh, 1, &setup.bc1)?;
    let sol = solve_problem(mesh, &dof0, &dof1, &setup.source, LOAD_QUADRATURE, solver)?;
    let report = example2_report(mesh, config, &setup, sol.u.values())?;
    Ok((sol, report))
}
