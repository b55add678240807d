//! Lowest-order cubical reference element on the centered 4-rectangle.
//!
//! Nodal functions `P1..P16` span the multilinear 0-forms and the edge
//! functions `E1..E32` span the 1-forms `phi dt + A1 dx + A2 dy + A3 dz`.
//! Every basis function is a product of one factor per axis, either the
//! constant 1 or `(1 +/- 2 xi / delta)`, which makes values, derivatives and
//! the incidence between local entities exact.
//!
//! Local numbering follows the printed basis:
//! * node `j` sits at offsets `x = bit0, y = bit1, z = bit2, t = bit3`;
//! * edges `0..8` are time-directed (`x, y, z` from bits 0..2), edges `8..16`
//!   are `x`-directed (`y, z, t`), `16..24` are `y`-directed (`z, x, t`) and
//!   `24..32` are `z`-directed (`x, y, t`);
//! * faces come in groups of four per 2-form component `tx, ty, tz, yz, zx,
//!   xy`, with bits 0 and 1 giving the offsets of the two axes the face does
//!   not span, in ascending axis order.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::mesh::DIM;
use crate::quadrature::QuadratureRule;

pub const N_NODES: usize = 16;
pub const N_EDGES: usize = 32;
pub const N_FACES: usize = 24;

/// Ordered axis pair of each 2-form component `dx_p ^ dx_q`.
pub const FACE_AXES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2)];

const EDGE_TRANSVERSE: [[usize; 3]; 4] = [[1, 2, 3], [2, 3, 0], [3, 1, 0], [1, 2, 0]];
const FACE_FREE: [[usize; 2]; 6] = [[2, 3], [1, 3], [1, 2], [0, 1], [0, 2], [0, 3]];

/// A point of the centered reference cell, `(t, x, y, z)`.
pub type RefPoint = [f64; DIM];

pub fn node_offset(j: usize) -> [usize; DIM] {
    [(j >> 3) & 1, j & 1, (j >> 1) & 1, (j >> 2) & 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalEdge {
    pub axis: usize,
    pub offset: [usize; DIM],
}

pub fn local_edge(e: usize) -> LocalEdge {
    let axis = e / 8;
    let mut offset = [0; DIM];
    for (bit, &a) in EDGE_TRANSVERSE[axis].iter().enumerate() {
        offset[a] = (e >> bit) & 1;
    }
    LocalEdge { axis, offset }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalFace {
    pub kind: usize,
    pub offset: [usize; DIM],
}

pub fn local_face(f: usize) -> LocalFace {
    let kind = f / 4;
    let mut offset = [0; DIM];
    for (bit, &a) in FACE_FREE[kind].iter().enumerate() {
        offset[a] = (f >> bit) & 1;
    }
    LocalFace { kind, offset }
}

/// Components of a 1-form against `dt, dx, dy, dz`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Form1Value {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Form1Value {
    pub const ZERO: Self = Self {
        t: 0.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    pub fn from_array(c: [f64; DIM]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [f64; DIM] {
        [self.t, self.x, self.y, self.z]
    }

    pub fn component(&self, axis: usize) -> f64 {
        self.to_array()[axis]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.t * other.t + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }
}

impl std::ops::Sub for Form1Value {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(
            self.t - rhs.t,
            self.x - rhs.x,
            self.y - rhs.y,
            self.z - rhs.z,
        )
    }
}

impl std::ops::Add for Form1Value {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.t + rhs.t,
            self.x + rhs.x,
            self.y + rhs.y,
            self.z + rhs.z,
        )
    }
}

impl std::ops::Mul<f64> for Form1Value {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.t * s, self.x * s, self.y * s, self.z * s)
    }
}

/// Components of a 2-form against
/// `dt^dx, dt^dy, dt^dz, dy^dz, dz^dx, dx^dy`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Form2Value(pub [f64; 6]);

impl Form2Value {
    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

#[derive(Debug, Clone, Copy)]
enum Factor {
    One,
    /// `1 + s * 2 xi / delta` with `s = +/-1`.
    Lin(f64),
}

#[derive(Debug, Clone, Copy)]
struct Monomial {
    scale: f64,
    factors: [Factor; DIM],
}

impl Monomial {
    /// Basis function spanning `axes` with the given corner offsets.
    fn new(scale: f64, spans: u8, offset: [usize; DIM]) -> Self {
        let factors = std::array::from_fn(|a| {
            if spans & (1 << a) != 0 {
                Factor::One
            } else {
                Factor::Lin(2.0 * offset[a] as f64 - 1.0)
            }
        });
        Self { scale, factors }
    }

    fn factor(&self, a: usize, p: &RefPoint, s: &[f64; DIM]) -> f64 {
        match self.factors[a] {
            Factor::One => 1.0,
            Factor::Lin(sign) => 1.0 + sign * 2.0 * p[a] / s[a],
        }
    }

    fn value(&self, p: &RefPoint, s: &[f64; DIM]) -> f64 {
        (0..DIM).fold(self.scale, |acc, a| acc * self.factor(a, p, s))
    }

    fn derivative(&self, axis: usize, p: &RefPoint, s: &[f64; DIM]) -> f64 {
        match self.factors[axis] {
            Factor::One => 0.0,
            Factor::Lin(sign) => (0..DIM)
                .filter(|&a| a != axis)
                .fold(self.scale * sign * 2.0 / s[axis], |acc, a| {
                    acc * self.factor(a, p, s)
                }),
        }
    }
}

/// Per-cell matrices of the lowest-order element.
#[derive(Debug, Clone)]
pub struct LocalMatrices {
    /// 16x16 mass of 0-forms.
    pub mass0: DMatrix<f64>,
    /// 32x32 mass of 1-forms.
    pub mass1: DMatrix<f64>,
    /// 32x32 `<D1 E_i, D1 E_j>`.
    pub stiffness: DMatrix<f64>,
    /// 16x32 `<D0 P_i, E_j>`.
    pub constraint: DMatrix<f64>,
    /// 32x16 coefficients of `D0 P_j` in the edge basis.
    pub d0: DMatrix<f64>,
    /// 24x32 coefficients of `D1 E_j` in the face basis.
    pub d1: DMatrix<f64>,
}

/// The reference 4-rectangle with given side lengths.
#[derive(Debug, Clone)]
pub struct ReferenceCell {
    spacings: [f64; DIM],
    nodes: [Monomial; N_NODES],
    edges: [Monomial; N_EDGES],
    faces: [Monomial; N_FACES],
}

impl ReferenceCell {
    pub fn new(spacings: [f64; DIM]) -> Result<Self> {
        if spacings.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(invalid("reference cell spacings must be positive"));
        }
        let nodes = std::array::from_fn(|j| Monomial::new(1.0 / 16.0, 0, node_offset(j)));
        let edges = std::array::from_fn(|e| {
            let le = local_edge(e);
            Monomial::new(1.0 / 8.0, 1 << le.axis, le.offset)
        });
        let faces = std::array::from_fn(|f| {
            let lf = local_face(f);
            let (p, q) = FACE_AXES[lf.kind];
            Monomial::new(0.25, (1 << p) | (1 << q), lf.offset)
        });
        Ok(Self {
            spacings,
            nodes,
            edges,
            faces,
        })
    }

    pub fn spacings(&self) -> [f64; DIM] {
        self.spacings
    }

    /// Corner of local node `j`.
    pub fn node_point(&self, j: usize) -> RefPoint {
        let o = node_offset(j);
        std::array::from_fn(|a| (o[a] as f64 - 0.5) * self.spacings[a])
    }

    /// Midpoint of local edge `e`.
    pub fn edge_midpoint(&self, e: usize) -> RefPoint {
        let le = local_edge(e);
        std::array::from_fn(|a| {
            if a == le.axis {
                0.0
            } else {
                (le.offset[a] as f64 - 0.5) * self.spacings[a]
            }
        })
    }

    /// Center of local face `f`.
    pub fn face_midpoint(&self, f: usize) -> RefPoint {
        let lf = local_face(f);
        let (p, q) = FACE_AXES[lf.kind];
        std::array::from_fn(|a| {
            if a == p || a == q {
                0.0
            } else {
                (lf.offset[a] as f64 - 0.5) * self.spacings[a]
            }
        })
    }

    pub fn node_values(&self, p: &RefPoint) -> [f64; N_NODES] {
        std::array::from_fn(|j| self.nodes[j].value(p, &self.spacings))
    }

    /// Spatial gradients `(d/dx, d/dy, d/dz)` of the nodal functions.
    pub fn node_gradients(&self, p: &RefPoint) -> [[f64; 3]; N_NODES] {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| self.nodes[j].derivative(k + 1, p, &self.spacings))
        })
    }

    pub fn edge_values(&self, p: &RefPoint) -> [Form1Value; N_EDGES] {
        std::array::from_fn(|e| {
            let mut c = [0.0; DIM];
            c[e / 8] = self.edges[e].value(p, &self.spacings);
            Form1Value::from_array(c)
        })
    }

    pub fn face_values(&self, p: &RefPoint) -> [Form2Value; N_FACES] {
        std::array::from_fn(|f| {
            let mut c = [0.0; 6];
            c[f / 4] = self.faces[f].value(p, &self.spacings);
            Form2Value(c)
        })
    }

    /// `D1 E_e` for every edge function: `dt ^ grad(phi) + rot(A)` with
    /// spatial derivatives only.
    pub fn edge_d1_values(&self, p: &RefPoint) -> [Form2Value; N_EDGES] {
        std::array::from_fn(|e| {
            let comp = e / 8;
            let basis = &self.edges[e];
            let mut c = [0.0; 6];
            for (kind, &(a, b)) in FACE_AXES.iter().enumerate() {
                if a == 0 {
                    if comp == 0 {
                        c[kind] = basis.derivative(b, p, &self.spacings);
                    }
                } else if comp == b {
                    c[kind] += basis.derivative(a, p, &self.spacings);
                } else if comp == a {
                    c[kind] -= basis.derivative(b, p, &self.spacings);
                }
            }
            Form2Value(c)
        })
    }

    /// `D0 sigma` for nodal coefficients: the spatial gradient as a 1-form.
    pub fn apply_d0(&self, coefficients: &[f64; N_NODES], p: &RefPoint) -> Form1Value {
        let grads = self.node_gradients(p);
        let mut g = [0.0; 3];
        for (c, grad) in coefficients.iter().zip(&grads) {
            for k in 0..3 {
                g[k] += c * grad[k];
            }
        }
        Form1Value::new(0.0, g[0], g[1], g[2])
    }

    pub fn apply_d1(&self, coefficients: &[f64; N_EDGES], p: &RefPoint) -> Form2Value {
        let d1 = self.edge_d1_values(p);
        let mut out = [0.0; 6];
        for (c, v) in coefficients.iter().zip(&d1) {
            for k in 0..6 {
                out[k] += c * v.0[k];
            }
        }
        Form2Value(out)
    }

    /// Coefficients of `D0 P_j` in the edge basis (32x16).
    pub fn d0_local(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(N_EDGES, N_NODES);
        for e in 8..N_EDGES {
            let le = local_edge(e);
            for j in 0..N_NODES {
                let o = node_offset(j);
                let same = (0..DIM).all(|a| a == le.axis || o[a] == le.offset[a]);
                if same {
                    m[(e, j)] = (2.0 * o[le.axis] as f64 - 1.0) / self.spacings[le.axis];
                }
            }
        }
        m
    }

    /// Coefficients of `D1 E_e` in the face basis (24x32).
    pub fn d1_local(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(N_FACES, N_EDGES);
        for f in 0..N_FACES {
            let lf = local_face(f);
            let (p, q) = FACE_AXES[lf.kind];
            let free = FACE_FREE[lf.kind];
            for e in 0..N_EDGES {
                let le = local_edge(e);
                if !free.iter().all(|&a| le.offset[a] == lf.offset[a]) {
                    continue;
                }
                let sign = |axis: usize| (2.0 * le.offset[axis] as f64 - 1.0) / self.spacings[axis];
                m[(f, e)] = if p == 0 {
                    if le.axis == 0 {
                        sign(q)
                    } else {
                        0.0
                    }
                } else if le.axis == q {
                    sign(p)
                } else if le.axis == p {
                    -sign(q)
                } else {
                    0.0
                };
            }
        }
        m
    }

    pub fn local_matrices(&self, quad: &QuadratureRule) -> LocalMatrices {
        let mut mass0 = DMatrix::zeros(N_NODES, N_NODES);
        let mut mass1 = DMatrix::zeros(N_EDGES, N_EDGES);
        let mut stiffness = DMatrix::zeros(N_EDGES, N_EDGES);
        let mut constraint = DMatrix::zeros(N_NODES, N_EDGES);

        for (p, w) in quad.iter() {
            let pv = self.node_values(p);
            let pg = self.node_gradients(p);
            let ev = self.edge_values(p);
            let dv = self.edge_d1_values(p);
            for i in 0..N_NODES {
                for j in 0..N_NODES {
                    mass0[(i, j)] += w * pv[i] * pv[j];
                }
                let grad = Form1Value::new(0.0, pg[i][0], pg[i][1], pg[i][2]);
                for j in 8..N_EDGES {
                    constraint[(i, j)] += w * grad.dot(&ev[j]);
                }
            }
            for i in 0..N_EDGES {
                for j in 0..N_EDGES {
                    if i / 8 == j / 8 {
                        mass1[(i, j)] += w * ev[i].dot(&ev[j]);
                    }
                    stiffness[(i, j)] += w * dv[i].dot(&dv[j]);
                }
            }
        }

        LocalMatrices {
            mass0,
            mass1,
            stiffness,
            constraint,
            d0: self.d0_local(),
            d1: self.d1_local(),
        }
    }
}

/// Local matrices of a cell with the given spacings using `q` Gauss points
/// per axis. `q = 2` is exact.
pub fn local_matrices(spacings: [f64; DIM], q: usize) -> Result<LocalMatrices> {
    let cell = ReferenceCell::new(spacings)?;
    let quad = QuadratureRule::new(q, spacings)?;
    Ok(cell.local_matrices(&quad))
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: [f64; 4] = [1.0; 4];

    #[test]
    fn node_values_at_center_and_corner() {
        let cell = ReferenceCell::new([0.5, 1.0, 2.0, 4.0]).unwrap();
        let v = cell.node_values(&[0.0; 4]);
        assert!(v.iter().all(|&x| (x - 1.0 / 16.0).abs() < 1e-15));
        let s = cell.spacings();
        let corner = [-s[0] / 2.0, -s[1] / 2.0, -s[2] / 2.0, -s[3] / 2.0];
        let v = cell.node_values(&corner);
        assert_eq!(v[0], 1.0);
        assert!(v[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn edge_values_at_center() {
        let cell = ReferenceCell::new(UNIT).unwrap();
        for (e, v) in cell.edge_values(&[0.0; 4]).iter().enumerate() {
            for a in 0..4 {
                let expect = if a == e / 8 { 0.125 } else { 0.0 };
                assert_eq!(v.component(a), expect);
            }
        }
    }

    #[test]
    fn first_x_edge_is_one_on_its_midline() {
        let cell = ReferenceCell::new([1.0, 2.0, 3.0, 4.0]).unwrap();
        // E9: y = -dy/2, z = -dz/2, t = -dt/2, any x
        let p = [-0.5, 0.3, -1.5, -2.0];
        let v = cell.edge_values(&p)[8];
        assert!((v.x - 1.0).abs() < 1e-15);
        assert_eq!(v.t, 0.0);
    }

    #[test]
    fn time_edges_do_not_depend_on_time() {
        let cell = ReferenceCell::new(UNIT).unwrap();
        let a = cell.edge_values(&[-0.4, 0.1, 0.2, -0.3]);
        let b = cell.edge_values(&[0.45, 0.1, 0.2, -0.3]);
        for e in 0..8 {
            assert_eq!(a[e], b[e]);
        }
        for e in 8..32 {
            assert_eq!(a[e].t, 0.0);
        }
    }

    #[test]
    fn d1_of_constant_phi_is_zero() {
        let cell = ReferenceCell::new(UNIT).unwrap();
        let mut c = [0.0; 32];
        c[..8].fill(3.0);
        assert!(cell.apply_d1(&c, &[0.1, -0.2, 0.3, 0.05]).max_abs() < 1e-15);
    }

    #[test]
    fn d1_ignores_time_variation_of_a() {
        // A = (t-linear, 0, 0): upper time edges 1, lower 0
        let cell = ReferenceCell::new(UNIT).unwrap();
        let mut c = [0.0; 32];
        for e in 8..32 {
            if local_edge(e).offset[0] == 1 {
                c[e] = 1.0;
            }
        }
        assert!(cell.apply_d1(&c, &[0.2, -0.1, 0.0, 0.4]).max_abs() < 1e-15);
    }

    #[test]
    fn time_edge_stiffness_diagonal() {
        let m = local_matrices(UNIT, 2).unwrap();
        for e in 0..8 {
            assert!((m.stiffness[(e, e)] - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn mass_factors() {
        // 1D linear element: diag d/3, offdiag d/6; nodes 0 and 1 differ only in x
        let s = [0.5, 2.0, 1.0, 1.0];
        let m = local_matrices(s, 2).unwrap();
        let other: f64 = (1.0 / 3.0) * (1.0 / 3.0) * (0.5 / 3.0);
        assert!((m.mass0[(0, 0)] - 2.0 / 3.0 * other).abs() < 1e-14);
        assert!((m.mass0[(0, 1)] - 2.0 / 6.0 * other).abs() < 1e-14);
    }

    #[test]
    fn rejects_zero_quadrature() {
        assert!(local_matrices(UNIT, 0).is_err());
    }

    #[test]
    fn complex_property_on_reference_cell() {
        let cell = ReferenceCell::new([0.3, 0.7, 1.1, 0.9]).unwrap();
        let (d1, d0) = (cell.d1_local(), cell.d0_local());
        for f in 0..N_FACES {
            for j in 0..N_NODES {
                let mut sum = 0.0;
                for e in 0..N_EDGES {
                    sum += d1[(f, e)] * d0[(e, j)];
                }
                assert_eq!(sum, 0.0, "face {f} node {j}");
            }
        }
    }
}
