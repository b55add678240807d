//! Global matrices and load vectors of the saddle-point system
//!
//! ```text
//! [ A  B^T ] [ u     ]   [ rhs_u     ]
//! [ B  0   ] [ sigma ] = [ rhs_sigma ]
//! ```
//!
//! with `A = <D1 u, D1 v>`, `B = <D0 tau, v>` and `rhs_u = <F, v>`, reduced to
//! free DOFs. Rows are assembled by gathering contributions of the incident
//! cells in increasing cell order, so the result does not depend on how work
//! is split across threads.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dof::DofMap;
use crate::error::{invalid, Result};
use crate::incidence::{self, CellMap, Incidence};
use crate::mesh::{Mesh4, DIM};
use crate::quadrature::QuadratureRule;
use crate::reference::{self, Form1Value, LocalMatrices, ReferenceCell, N_EDGES};
use crate::sparse::SparseOperator;

/// Default Gauss points per axis for load vectors and error integrals.
pub const LOAD_QUADRATURE: usize = 4;

/// A time-space source `F = rho dt + j`, evaluated at `(t, x, y, z)`.
pub trait SourceField: Sync {
    fn eval(&self, point: [f64; DIM]) -> Form1Value;
}

impl<F> SourceField for F
where
    F: Fn([f64; DIM]) -> Form1Value + Sync,
{
    fn eval(&self, point: [f64; DIM]) -> Form1Value {
        self(point)
    }
}

/// Unreduced operators on all DOFs.
#[derive(Debug, Clone)]
pub struct Operators {
    /// `<D1 u, D1 v>` on 1-forms.
    pub stiffness: SparseOperator,
    /// `<D0 tau, v>`, rows are 0-form DOFs.
    pub constraint: SparseOperator,
    pub mass0: SparseOperator,
    pub mass1: SparseOperator,
}

/// Saddle system on free DOFs.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub a: SparseOperator,
    pub b: SparseOperator,
    pub rhs_u: Vec<f64>,
    pub rhs_sigma: Vec<f64>,
    pub mass0: Option<SparseOperator>,
    pub mass1: Option<SparseOperator>,
}

impl SaddleSystem {
    pub fn n_u(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_sigma(&self) -> usize {
        self.b.nrows()
    }
}

struct MeshTopology {
    nodes: CellMap<{ reference::N_NODES }>,
    edges: CellMap<N_EDGES>,
    node_inc: Incidence,
    edge_inc: Incidence,
}

impl MeshTopology {
    fn new(mesh: &Mesh4) -> Self {
        let nodes = incidence::cell_nodes(mesh);
        let edges = incidence::cell_edges(mesh);
        let node_inc = Incidence::new(mesh.num_nodes(), &nodes);
        let edge_inc = Incidence::new(mesh.num_edges(), &edges);
        Self {
            nodes,
            edges,
            node_inc,
            edge_inc,
        }
    }
}

fn gather<const C: usize>(
    row_inc: &Incidence,
    col_map: &CellMap<C>,
    n_cols: usize,
    local: &DMatrix<f64>,
) -> SparseOperator {
    let rows = (0..row_inc.len())
        .into_par_iter()
        .map(|r| {
            let mut row = Vec::new();
            for &(cell, li) in row_inc.of(r) {
                let ids = col_map.cell(cell);
                for j in 0..C {
                    let v = local[(li, j)];
                    if v != 0.0 {
                        row.push((ids[j], v));
                    }
                }
            }
            row
        })
        .collect();
    SparseOperator::from_rows(n_cols, rows).expect("cell ids in range")
}

fn check_map(mesh: &Mesh4, map: &DofMap, degree: usize) -> Result<()> {
    if map.degree() != degree || map.total() != mesh.entity_count(degree) {
        return Err(invalid(format!(
            "DOF map of degree {degree} does not belong to this mesh"
        )));
    }
    Ok(())
}

fn local(mesh: &Mesh4) -> Result<LocalMatrices> {
    reference::local_matrices(mesh.spacings(), 2)
}

pub fn assemble_operators(mesh: &Mesh4, dof0: &DofMap, dof1: &DofMap) -> Result<Operators> {
    check_map(mesh, dof0, 0)?;
    check_map(mesh, dof1, 1)?;
    let lm = local(mesh)?;
    let topo = MeshTopology::new(mesh);
    let (n0, n1) = (mesh.num_nodes(), mesh.num_edges());
    Ok(Operators {
        stiffness: gather::<N_EDGES>(&topo.edge_inc, &topo.edges, n1, &lm.stiffness),
        constraint: gather::<N_EDGES>(&topo.node_inc, &topo.edges, n1, &lm.constraint),
        mass0: gather::<{ reference::N_NODES }>(&topo.node_inc, &topo.nodes, n0, &lm.mass0),
        mass1: gather::<N_EDGES>(&topo.edge_inc, &topo.edges, n1, &lm.mass1),
    })
}

/// `<D1 u, D1 v>` over all 1-form DOFs.
pub fn assemble_stiffness(mesh: &Mesh4, dof1: &DofMap) -> Result<SparseOperator> {
    check_map(mesh, dof1, 1)?;
    let lm = local(mesh)?;
    let edges = incidence::cell_edges(mesh);
    let inc = Incidence::new(mesh.num_edges(), &edges);
    Ok(gather::<N_EDGES>(
        &inc,
        &edges,
        mesh.num_edges(),
        &lm.stiffness,
    ))
}

/// `B[tau, v] = <D0 tau, v>` over all DOFs.
pub fn assemble_constraint(mesh: &Mesh4, dof0: &DofMap, dof1: &DofMap) -> Result<SparseOperator> {
    check_map(mesh, dof0, 0)?;
    check_map(mesh, dof1, 1)?;
    let lm = local(mesh)?;
    let nodes = incidence::cell_nodes(mesh);
    let edges = incidence::cell_edges(mesh);
    let inc = Incidence::new(mesh.num_nodes(), &nodes);
    Ok(gather::<N_EDGES>(
        &inc,
        &edges,
        mesh.num_edges(),
        &lm.constraint,
    ))
}

/// Integrals `<F, E_i>` of every cell, indexed by local edge.
pub fn cell_loads(mesh: &Mesh4, source: &dyn SourceField, q: usize) -> Result<Vec<[f64; N_EDGES]>> {
    if q < 2 {
        return Err(invalid("load quadrature needs at least 2 points per axis"));
    }
    let cell = ReferenceCell::new(mesh.spacings())?;
    let quad = QuadratureRule::new(q, mesh.spacings())?;
    let basis: Vec<[Form1Value; N_EDGES]> =
        quad.points().iter().map(|p| cell.edge_values(p)).collect();
    Ok((0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let center = mesh.cell_center(c);
            let mut out = [0.0; N_EDGES];
            for ((p, w), vals) in quad.iter().zip(&basis) {
                let x = std::array::from_fn(|a| center[a] + p[a]);
                let f = source.eval(x);
                for (o, v) in out.iter_mut().zip(vals) {
                    *o += w * f.dot(v);
                }
            }
            out
        })
        .collect())
}

/// Load vector `<F, v>` over all 1-form DOFs.
pub fn assemble_load(
    mesh: &Mesh4,
    dof1: &DofMap,
    source: &dyn SourceField,
    q: usize,
) -> Result<Vec<f64>> {
    check_map(mesh, dof1, 1)?;
    let per_cell = cell_loads(mesh, source, q)?;
    let edges = incidence::cell_edges(mesh);
    let inc = Incidence::new(mesh.num_edges(), &edges);
    Ok((0..mesh.num_edges())
        .into_par_iter()
        .map(|e| inc.of(e).iter().map(|&(c, l)| per_cell[c][l]).sum())
        .collect())
}

/// Eliminates constrained DOFs, moving the lifting to the right-hand sides.
pub fn reduce_with_bc(
    ops: &Operators,
    load: &[f64],
    dof0: &DofMap,
    dof1: &DofMap,
) -> Result<SaddleSystem> {
    if load.len() != dof1.total() {
        return Err(invalid("load vector does not match the 1-form DOF map"));
    }
    let lift1 = dof1.constrained_values()?;
    let lift0 = dof0.constrained_values()?;
    let (f1, f0) = (dof1.free_dofs(), dof0.free_dofs());
    let c1_map = dof1.constrained_map();

    let a = ops.stiffness.select(f1, dof1.free_map(), dof1.n_free());
    let b = ops.constraint.select(f0, dof1.free_map(), dof1.n_free());

    let mut rhs_u = dof1.restrict(load);
    let a_fc = ops.stiffness.select(f1, &c1_map, lift1.len());
    for (r, v) in rhs_u.iter_mut().zip(a_fc.mul_vec(&lift1)) {
        *r -= v;
    }
    if lift0.iter().any(|&v| v != 0.0) {
        // sigma lifting enters through B^T
        let b_cf = ops
            .constraint
            .select(&dof0.constrained_dofs(), dof1.free_map(), dof1.n_free());
        for (r, v) in rhs_u.iter_mut().zip(b_cf.transpose_mul_vec(&lift0)) {
            *r -= v;
        }
    }
    let b_fc = ops.constraint.select(f0, &c1_map, lift1.len());
    let rhs_sigma = b_fc.mul_vec(&lift1).into_iter().map(|v| -v).collect();

    Ok(SaddleSystem {
        a,
        b,
        rhs_u,
        rhs_sigma,
        mass0: Some(ops.mass0.select(f0, dof0.free_map(), dof0.n_free())),
        mass1: Some(ops.mass1.select(f1, dof1.free_map(), dof1.n_free())),
    })
}

/// Assembles and reduces the full system for a source field.
pub fn assemble_system(
    mesh: &Mesh4,
    dof0: &DofMap,
    dof1: &DofMap,
    source: &dyn SourceField,
    q: usize,
) -> Result<SaddleSystem> {
    let ops = assemble_operators(mesh, dof0, dof1)?;
    let load = assemble_load(mesh, dof1, source, q)?;
    reduce_with_bc(&ops, &load, dof0, dof1)
}
