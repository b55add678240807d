//! Degrees of freedom of discrete 0-, 1- and 2-forms and the global
//! derivative matrices between them.
//!
//! DOFs coincide with mesh entities: node values for 0-forms, tangential
//! values at edge midlines for 1-forms and face-center values for 2-forms.
//! Essential boundary data lives on the lateral boundary only.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::incidence::{self, Incidence};
use crate::mesh::{Mesh4, DIM};
use crate::reference::{Form1Value, RefPoint, ReferenceCell};
use crate::sparse::SparseOperator;

/// Boundary values for the constrained DOFs of one form degree.
///
/// Explicit values take precedence over `fill`; a constrained DOF with
/// neither has no lifting value, which is an error once a system is reduced.
#[derive(Debug, Clone, Default)]
pub struct BcSpec {
    pub values: BTreeMap<usize, f64>,
    pub fill: Option<f64>,
}

impl BcSpec {
    pub fn homogeneous() -> Self {
        Self {
            values: BTreeMap::new(),
            fill: Some(0.0),
        }
    }

    pub fn with_values(values: BTreeMap<usize, f64>, fill: Option<f64>) -> Self {
        Self { values, fill }
    }
}

#[derive(Debug, Clone)]
pub struct DofMap {
    degree: usize,
    constrained: Vec<bool>,
    lifting: Vec<Option<f64>>,
    free: Vec<usize>,
    free_index: Vec<Option<usize>>,
}

impl DofMap {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn total(&self) -> usize {
        self.constrained.len()
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn n_constrained(&self) -> usize {
        self.total() - self.n_free()
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn constrained_dofs(&self) -> Vec<usize> {
        (0..self.total()).filter(|&i| self.constrained[i]).collect()
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_index[dof]
    }

    /// Column map `dof -> free position` for [`SparseOperator::select`].
    pub fn free_map(&self) -> &[Option<usize>] {
        &self.free_index
    }

    /// Column map `dof -> constrained position`.
    pub fn constrained_map(&self) -> Vec<Option<usize>> {
        let mut k = 0;
        self.constrained
            .iter()
            .map(|&c| {
                if c {
                    k += 1;
                    Some(k - 1)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn lifting(&self, dof: usize) -> Option<f64> {
        self.lifting[dof]
    }

    /// Lifting values of the constrained DOFs in increasing DOF order.
    pub fn constrained_values(&self) -> Result<Vec<f64>> {
        self.constrained_dofs()
            .into_iter()
            .map(|d| {
                self.lifting[d]
                    .ok_or_else(|| invalid(format!("no lifting value for constrained DOF {d}")))
            })
            .collect()
    }

    /// Full vector from free values plus the lifting on constrained DOFs.
    pub fn expand(&self, free_values: &[f64]) -> Result<FormVector> {
        if free_values.len() != self.n_free() {
            return Err(invalid(format!(
                "expected {} free values, got {}",
                self.n_free(),
                free_values.len()
            )));
        }
        let mut values = vec![0.0; self.total()];
        for d in 0..self.total() {
            values[d] = match self.free_index[d] {
                Some(k) => free_values[k],
                None => self.lifting[d]
                    .ok_or_else(|| invalid(format!("no lifting value for constrained DOF {d}")))?,
            };
        }
        Ok(FormVector::new(self.degree, values))
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&d| full[d]).collect()
    }
}

/// Coefficients of a discrete k-form.
#[derive(Debug, Clone, PartialEq)]
pub struct FormVector {
    degree: usize,
    values: Vec<f64>,
}

impl FormVector {
    pub fn new(degree: usize, values: Vec<f64>) -> Self {
        Self { degree, values }
    }

    pub fn zeros(degree: usize, len: usize) -> Self {
        Self::new(degree, vec![0.0; len])
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub fn build_dofmap(mesh: &Mesh4, degree: usize, bc: &BcSpec) -> Result<DofMap> {
    if degree > 2 {
        return Err(invalid(format!(
            "DOF maps exist for degrees 0, 1, 2; got {degree}"
        )));
    }
    let total = mesh.entity_count(degree);
    let constrained: Vec<bool> = if degree == 2 {
        vec![false; total]
    } else {
        (0..total)
            .into_par_iter()
            .map(|id| mesh.entity(degree, id).map(|e| mesh.is_lateral(&e)))
            .collect::<Result<_>>()?
    };
    for &d in bc.values.keys() {
        if d >= total || !constrained[d] {
            return Err(invalid(format!(
                "boundary value given for unconstrained DOF {d}"
            )));
        }
    }
    let lifting = (0..total)
        .map(|d| {
            if constrained[d] {
                bc.values.get(&d).copied().or(bc.fill)
            } else {
                None
            }
        })
        .collect();
    let free: Vec<usize> = (0..total).filter(|&d| !constrained[d]).collect();
    let mut free_index = vec![None; total];
    for (k, &d) in free.iter().enumerate() {
        free_index[d] = Some(k);
    }
    Ok(DofMap {
        degree,
        constrained,
        lifting,
        free,
        free_index,
    })
}

fn check_maps(mesh: &Mesh4, from: &DofMap, to: &DofMap) -> Result<()> {
    if from.total() != mesh.entity_count(from.degree) || to.total() != mesh.entity_count(to.degree)
    {
        return Err(invalid("DOF maps were built on a different mesh"));
    }
    if to.degree != from.degree + 1 {
        return Err(invalid(format!(
            "no derivative from degree {} to {}",
            from.degree, to.degree
        )));
    }
    Ok(())
}

/// Copies the local row of the first incident cell into every global row.
fn gather_rows<const R: usize, const C: usize>(
    n_rows: usize,
    n_cols: usize,
    rows: &incidence::CellMap<R>,
    cols: &incidence::CellMap<C>,
    local: &DMatrix<f64>,
) -> SparseOperator {
    let inc = Incidence::new(n_rows, rows);
    let entries = (0..n_rows)
        .into_par_iter()
        .map(|r| {
            let &(cell, li) = inc.of(r).first().expect("every entity touches a cell");
            let ids = cols.cell(cell);
            (0..C)
                .filter(|&j| local[(li, j)] != 0.0)
                .map(|j| (ids[j], local[(li, j)]))
                .collect()
        })
        .collect();
    SparseOperator::from_rows(n_cols, entries).expect("cell ids in range")
}

/// Spatial gradient from nodal values to edge values.
pub fn assemble_d0(mesh: &Mesh4, dof0: &DofMap, dof1: &DofMap) -> Result<SparseOperator> {
    check_maps(mesh, dof0, dof1)?;
    let cell = ReferenceCell::new(mesh.spacings())?;
    Ok(gather_rows(
        dof1.total(),
        dof0.total(),
        &incidence::cell_edges(mesh),
        &incidence::cell_nodes(mesh),
        &cell.d0_local(),
    ))
}

/// `dt ^ grad(phi) + rot(A)` from edge values to face values.
pub fn assemble_d1(mesh: &Mesh4, dof1: &DofMap, dof2: &DofMap) -> Result<SparseOperator> {
    check_maps(mesh, dof1, dof2)?;
    let cell = ReferenceCell::new(mesh.spacings())?;
    Ok(gather_rows(
        dof2.total(),
        dof1.total(),
        &incidence::cell_faces(mesh),
        &incidence::cell_edges(mesh),
        &cell.d1_local(),
    ))
}

/// Pointwise evaluation of discrete 0- and 1-forms given by full DOF vectors.
pub struct FieldEvaluator<'a> {
    mesh: &'a Mesh4,
    cell: ReferenceCell,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(mesh: &'a Mesh4) -> Self {
        let cell = ReferenceCell::new(mesh.spacings()).expect("mesh spacings are positive");
        Self { mesh, cell }
    }

    pub fn reference(&self) -> &ReferenceCell {
        &self.cell
    }

    pub fn form0_in_cell(&self, values: &[f64], cell: usize, p: &RefPoint) -> f64 {
        let ids = self.mesh.cell_nodes(cell);
        self.cell
            .node_values(p)
            .iter()
            .zip(ids)
            .map(|(b, d)| b * values[d])
            .sum()
    }

    /// Spatial gradient of a 0-form inside a cell, as a 1-form.
    pub fn grad0_in_cell(&self, values: &[f64], cell: usize, p: &RefPoint) -> Form1Value {
        let ids = self.mesh.cell_nodes(cell);
        let coeffs = std::array::from_fn(|j| values[ids[j]]);
        self.cell.apply_d0(&coeffs, p)
    }

    pub fn form1_in_cell(&self, values: &[f64], cell: usize, p: &RefPoint) -> Form1Value {
        let ids = self.mesh.cell_edges(cell);
        self.cell
            .edge_values(p)
            .iter()
            .zip(ids)
            .fold(Form1Value::ZERO, |acc, (b, d)| acc + *b * values[d])
    }

    pub fn form1(&self, values: &[f64], point: [f64; DIM]) -> Option<Form1Value> {
        let (cell, p) = self.mesh.locate(point)?;
        Some(self.form1_in_cell(values, cell, &p))
    }

    pub fn form0(&self, values: &[f64], point: [f64; DIM]) -> Option<f64> {
        let (cell, p) = self.mesh.locate(point)?;
        Some(self.form0_in_cell(values, cell, &p))
    }
}

/// Interpolates a 0-form by nodal values.
pub fn interpolate_form0(mesh: &Mesh4, f: impl Fn([f64; DIM]) -> f64 + Sync) -> Vec<f64> {
    (0..mesh.num_nodes())
        .into_par_iter()
        .map(|id| {
            let e = mesh.entity(0, id).expect("node id in range");
            f(mesh.point(e.anchor))
        })
        .collect()
}

/// Interpolates a 1-form by the tangential component at edge midpoints.
pub fn interpolate_form1(mesh: &Mesh4, f: impl Fn([f64; DIM]) -> Form1Value + Sync) -> Vec<f64> {
    let s = mesh.spacings();
    (0..mesh.num_edges())
        .into_par_iter()
        .map(|id| {
            let e = mesh.entity(1, id).expect("edge id in range");
            let axis = e.kind;
            let mut p = mesh.point(e.anchor);
            p[axis] += 0.5 * s[axis];
            f(p).component(axis)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicReport {
    /// Dimension of `{v free : A v = 0, B v = 0}`.
    pub harmonic_dim: usize,
    /// Smallest singular value of `[[A, B^T], [B, 0]]` on free DOFs.
    pub min_singular_value: f64,
    pub free_dofs: usize,
}

/// Largest total 1-form DOF count accepted by [`harmonic_diagnostics`].
pub const DENSE_LIMIT: usize = 2000;

/// Dense nullspace and conditioning diagnostics of the reduced saddle system.
pub fn harmonic_diagnostics(mesh: &Mesh4, dof0: &DofMap, dof1: &DofMap) -> Result<HarmonicReport> {
    if dof1.total() > DENSE_LIMIT {
        return Err(Error::TooLarge {
            size: dof1.total(),
            limit: DENSE_LIMIT,
        });
    }
    let ops = crate::assembly::assemble_operators(mesh, dof0, dof1)?;
    let a = ops
        .stiffness
        .select(dof1.free_dofs(), dof1.free_map(), dof1.n_free())
        .to_dense();
    let b = ops
        .constraint
        .select(dof0.free_dofs(), dof1.free_map(), dof1.n_free())
        .to_dense();
    let (n, m) = (a.nrows(), b.nrows());

    let a_scale = a.amax().max(f64::MIN_POSITIVE);
    let b_scale = b.amax().max(f64::MIN_POSITIVE);
    let mut stacked = DMatrix::zeros(n + m, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&(&a / a_scale));
    stacked.view_mut((n, 0), (m, n)).copy_from(&(&b / b_scale));
    let harmonic_dim = if n == 0 {
        0
    } else {
        let sv = stacked.singular_values();
        let smax = sv.max();
        n - sv.iter().filter(|&&s| s > 1e-10 * smax).count()
    };

    let mut saddle = DMatrix::zeros(n + m, n + m);
    saddle.view_mut((0, 0), (n, n)).copy_from(&a);
    saddle.view_mut((n, 0), (m, n)).copy_from(&b);
    saddle.view_mut((0, n), (n, m)).copy_from(&b.transpose());
    let min_singular_value = if n + m == 0 {
        0.0
    } else {
        saddle.singular_values().min()
    };

    Ok(HarmonicReport {
        harmonic_dim,
        min_singular_value,
        free_dofs: n,
    })
}
