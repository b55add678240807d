//! Structured tensor-product mesh of the space-time box `(0,T) x Omega`.
//!
//! Axis order is always `(t, x, y, z)`. Entities of dimension `k` are
//! identified by an orientation (the set of `k` axes they span) and the
//! lattice coordinates of their lowest corner. Ids are computed, never
//! stored: orientation-major, then lexicographic in `(t, x, y, z)` with `z`
//! varying fastest.

use crate::error::{invalid, Result};
use crate::reference::{self, FACE_AXES};

/// Number of axes of the space-time box.
pub const DIM: usize = 4;

/// Axis masks of each entity orientation, per dimension.
///
/// Edges are ordered `t, x, y, z`; faces follow the 2-form component order
/// `tx, ty, tz, yz, zx, xy`.
const ORIENTATIONS: [&[u8]; 5] = [
    &[0b0000],
    &[0b0001, 0b0010, 0b0100, 0b1000],
    &[
        face_mask(0),
        face_mask(1),
        face_mask(2),
        face_mask(3),
        face_mask(4),
        face_mask(5),
    ],
    &[0b0111, 0b1011, 0b1101, 0b1110],
    &[0b1111],
];

const fn face_mask(kind: usize) -> u8 {
    (1 << FACE_AXES[kind].0) | (1 << FACE_AXES[kind].1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entity {
    pub dim: usize,
    /// Index into the orientation list of `dim`.
    pub kind: usize,
    /// Bit `a` set when the entity spans axis `a`.
    pub mask: u8,
    /// Lattice coordinates of the lowest corner.
    pub anchor: [usize; DIM],
}

impl Entity {
    pub fn spans(&self, axis: usize) -> bool {
        self.mask & (1 << axis) != 0
    }
}

#[derive(Debug, Clone)]
struct Block {
    mask: u8,
    shape: [usize; DIM],
    offset: usize,
    count: usize,
}

/// Axis-aligned box in `(t, x, y, z)` naming a region of the closure of `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub name: String,
    pub lo: [f64; DIM],
    pub hi: [f64; DIM],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryClass {
    Interior,
    /// On `(0,T) x dOmega`; carries the first region containing the entity.
    Lateral(Option<String>),
}

impl BoundaryClass {
    pub fn is_lateral(&self) -> bool {
        matches!(self, BoundaryClass::Lateral(_))
    }
}

#[derive(Debug, Clone)]
pub struct Mesh4 {
    divisions: [usize; DIM],
    extents: [f64; DIM],
    spacings: [f64; DIM],
    time_periodic: bool,
    blocks: [Vec<Block>; 5],
    counts: [usize; 5],
    regions: Vec<Region>,
}

impl Mesh4 {
    pub fn new(divisions: [usize; DIM], extents: [f64; DIM], time_periodic: bool) -> Result<Self> {
        if let Some(a) = divisions.iter().position(|&n| n == 0) {
            return Err(invalid(format!(
                "division along axis {a} must be at least 1"
            )));
        }
        if let Some(a) = extents.iter().position(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(invalid(format!(
                "extent along axis {a} must be positive, got {}",
                extents[a]
            )));
        }
        if time_periodic && divisions[0] < 2 {
            return Err(invalid("a time-periodic mesh needs at least 2 time slabs"));
        }

        let mut spacings = [0.0; DIM];
        for a in 0..DIM {
            spacings[a] = extents[a] / divisions[a] as f64;
        }

        let mut blocks: [Vec<Block>; 5] = Default::default();
        let mut counts = [0; 5];
        for dim in 0..=DIM {
            let mut offset = 0;
            for &mask in ORIENTATIONS[dim] {
                let mut shape = [0; DIM];
                for a in 0..DIM {
                    let spans = mask & (1 << a) != 0;
                    shape[a] = if spans || (a == 0 && time_periodic) {
                        divisions[a]
                    } else {
                        divisions[a] + 1
                    };
                }
                let count = shape.iter().product();
                blocks[dim].push(Block {
                    mask,
                    shape,
                    offset,
                    count,
                });
                offset += count;
            }
            counts[dim] = offset;
        }

        Ok(Self {
            divisions,
            extents,
            spacings,
            time_periodic,
            blocks,
            counts,
            regions: Vec::new(),
        })
    }

    /// Adds a named region. Regions are matched in insertion order.
    pub fn with_region(
        mut self,
        name: impl Into<String>,
        lo: [f64; DIM],
        hi: [f64; DIM],
    ) -> Result<Self> {
        let name = name.into();
        for a in 0..DIM {
            if !(lo[a] <= hi[a]) {
                return Err(invalid(format!("region '{name}' has lo > hi on axis {a}")));
            }
        }
        self.regions.push(Region { name, lo, hi });
        Ok(self)
    }

    pub fn divisions(&self) -> [usize; DIM] {
        self.divisions
    }

    pub fn extents(&self) -> [f64; DIM] {
        self.extents
    }

    pub fn spacings(&self) -> [f64; DIM] {
        self.spacings
    }

    pub fn time_periodic(&self) -> bool {
        self.time_periodic
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    /// Mesh size: the longest cell side.
    pub fn h(&self) -> f64 {
        self.spacings.iter().cloned().fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacings.iter().product()
    }

    pub fn entity_count(&self, dim: usize) -> usize {
        assert!(dim <= DIM, "entity dimension {dim} out of range");
        self.counts[dim]
    }

    pub fn num_nodes(&self) -> usize {
        self.counts[0]
    }

    pub fn num_edges(&self) -> usize {
        self.counts[1]
    }

    pub fn num_faces(&self) -> usize {
        self.counts[2]
    }

    pub fn num_cells(&self) -> usize {
        self.counts[4]
    }

    /// Number of orientations of entities of dimension `dim`.
    pub fn kinds(&self, dim: usize) -> usize {
        ORIENTATIONS[dim].len()
    }

    /// Entity id from orientation and lattice anchor. A time coordinate equal
    /// to `n_t` wraps to 0 on periodic meshes.
    pub fn entity_id(&self, dim: usize, kind: usize, anchor: [usize; DIM]) -> Option<usize> {
        let block = self.blocks.get(dim)?.get(kind)?;
        let mut c = anchor;
        if self.time_periodic && c[0] == self.divisions[0] {
            c[0] = 0;
        }
        let mut idx = 0;
        for a in 0..DIM {
            if c[a] >= block.shape[a] {
                return None;
            }
            idx = idx * block.shape[a] + c[a];
        }
        Some(block.offset + idx)
    }

    pub fn entity(&self, dim: usize, id: usize) -> Result<Entity> {
        if dim > DIM || id >= self.counts[dim] {
            return Err(invalid(format!("no entity {id} of dimension {dim}")));
        }
        let kind = self.blocks[dim]
            .iter()
            .position(|b| id < b.offset + b.count)
            .expect("id below total count");
        let block = &self.blocks[dim][kind];
        let mut rem = id - block.offset;
        let mut anchor = [0; DIM];
        for a in (0..DIM).rev() {
            anchor[a] = rem % block.shape[a];
            rem /= block.shape[a];
        }
        Ok(Entity {
            dim,
            kind,
            mask: block.mask,
            anchor,
        })
    }

    /// Physical coordinates of a lattice point.
    pub fn point(&self, lattice: [usize; DIM]) -> [f64; DIM] {
        let mut p = [0.0; DIM];
        for a in 0..DIM {
            p[a] = lattice[a] as f64 * self.spacings[a];
        }
        p
    }

    /// Closure of an entity as a box `(lo, hi)`, unwrapped in time.
    pub fn entity_bounds(&self, e: &Entity) -> ([f64; DIM], [f64; DIM]) {
        let lo = self.point(e.anchor);
        let mut hi = lo;
        for a in 0..DIM {
            if e.spans(a) {
                hi[a] += self.spacings[a];
            }
        }
        (lo, hi)
    }

    /// Whether an entity lies on the lateral boundary `(0,T) x dOmega`.
    pub fn is_lateral(&self, e: &Entity) -> bool {
        (1..DIM).any(|a| !e.spans(a) && (e.anchor[a] == 0 || e.anchor[a] == self.divisions[a]))
    }

    pub fn in_region(&self, e: &Entity, region: &Region) -> bool {
        let (lo, hi) = self.entity_bounds(e);
        let tol = 1e-12 * self.extents.iter().cloned().fold(0.0, f64::max);
        (0..DIM).all(|a| lo[a] >= region.lo[a] - tol && hi[a] <= region.hi[a] + tol)
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }

    pub fn classify_boundary(&self, id: usize, dim: usize) -> Result<BoundaryClass> {
        let e = self.entity(dim, id)?;
        if !self.is_lateral(&e) {
            return Ok(BoundaryClass::Interior);
        }
        let tag = self
            .regions
            .iter()
            .find(|r| self.in_region(&e, r))
            .map(|r| r.name.clone());
        Ok(BoundaryClass::Lateral(tag))
    }

    fn shifted(&self, anchor: [usize; DIM], offset: [usize; DIM]) -> [usize; DIM] {
        let mut c = anchor;
        for a in 0..DIM {
            c[a] += offset[a];
        }
        c
    }

    /// Global node ids of a cell in the local order of the reference element.
    pub fn cell_nodes(&self, cell: usize) -> [usize; reference::N_NODES] {
        let anchor = self.cell_anchor(cell);
        std::array::from_fn(|j| {
            self.entity_id(0, 0, self.shifted(anchor, reference::node_offset(j)))
                .expect("cell node inside lattice")
        })
    }

    /// Global edge ids of a cell in the local order of the reference element.
    pub fn cell_edges(&self, cell: usize) -> [usize; reference::N_EDGES] {
        let anchor = self.cell_anchor(cell);
        std::array::from_fn(|e| {
            let le = reference::local_edge(e);
            self.entity_id(1, le.axis, self.shifted(anchor, le.offset))
                .expect("cell edge inside lattice")
        })
    }

    /// Global face ids of a cell in the local order of the reference element.
    pub fn cell_faces(&self, cell: usize) -> [usize; reference::N_FACES] {
        let anchor = self.cell_anchor(cell);
        std::array::from_fn(|f| {
            let lf = reference::local_face(f);
            self.entity_id(2, lf.kind, self.shifted(anchor, lf.offset))
                .expect("cell face inside lattice")
        })
    }

    pub fn cell_anchor(&self, cell: usize) -> [usize; DIM] {
        let mut rem = cell;
        let mut anchor = [0; DIM];
        for a in (0..DIM).rev() {
            anchor[a] = rem % self.divisions[a];
            rem /= self.divisions[a];
        }
        anchor
    }

    /// Physical center of a cell.
    pub fn cell_center(&self, cell: usize) -> [f64; DIM] {
        let anchor = self.cell_anchor(cell);
        let mut c = self.point(anchor);
        for a in 0..DIM {
            c[a] += 0.5 * self.spacings[a];
        }
        c
    }

    /// Cell containing a physical point and the point in centered reference
    /// coordinates. Points on interior cell faces go to the upper cell.
    pub fn locate(&self, p: [f64; DIM]) -> Option<(usize, [f64; DIM])> {
        let mut cell = 0;
        let mut local = [0.0; DIM];
        for a in 0..DIM {
            let tol = 1e-12 * self.extents[a];
            if p[a] < -tol || p[a] > self.extents[a] + tol {
                return None;
            }
            let k =
                ((p[a] / self.spacings[a]).floor().max(0.0) as usize).min(self.divisions[a] - 1);
            cell = cell * self.divisions[a] + k;
            local[a] = p[a] - (k as f64 + 0.5) * self.spacings[a];
        }
        Some((cell, local))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(div: [usize; 4], periodic: bool) -> Mesh4 {
        Mesh4::new(div, [1.0; 4], periodic).unwrap()
    }

    #[test]
    fn single_cell_counts() {
        let m = unit([1, 1, 1, 1], false);
        assert_eq!(m.entity_count(0), 16);
        assert_eq!(m.entity_count(1), 32);
        assert_eq!(m.entity_count(2), 24);
        assert_eq!(m.entity_count(3), 8);
        assert_eq!(m.entity_count(4), 1);
    }

    #[test]
    fn two_slab_counts() {
        let m = unit([2, 1, 1, 1], false);
        assert_eq!(m.num_nodes(), 24);
        assert_eq!(m.num_edges(), 52);
        let t_edges = (0..m.num_edges())
            .filter(|&i| m.entity(1, i).unwrap().kind == 0)
            .count();
        assert_eq!(t_edges, 16);

        let p = unit([2, 1, 1, 1], true);
        assert_eq!(p.num_nodes(), 16);
        assert_eq!(p.num_edges(), 40);
        let t_edges = (0..p.num_edges())
            .filter(|&i| p.entity(1, i).unwrap().kind == 0)
            .count();
        assert_eq!(t_edges, 16);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(Mesh4::new([0, 1, 1, 1], [1.0; 4], false).is_err());
        assert!(Mesh4::new([1, 1, 1, 1], [1.0, -1.0, 1.0, 1.0], false).is_err());
        assert!(Mesh4::new([1, 1, 1, 1], [1.0; 4], true).is_err());
        assert!(Mesh4::new([2, 1, 1, 1], [1.0; 4], true).is_ok());
    }

    #[test]
    fn size_parameter_is_longest_side() {
        let m = Mesh4::new([2, 4, 4, 8], [1.0, 1.0, 2.0, 1.0], false).unwrap();
        assert_eq!(m.h(), 0.5);
    }

    #[test]
    fn id_round_trip() {
        let m = unit([2, 3, 1, 2], false);
        for dim in 0..=4 {
            for id in 0..m.entity_count(dim) {
                let e = m.entity(dim, id).unwrap();
                assert_eq!(m.entity_id(dim, e.kind, e.anchor), Some(id));
            }
        }
        assert!(m.entity(1, m.num_edges()).is_err());
    }

    #[test]
    fn boundary_classification() {
        let m = unit([2, 2, 2, 2], false);
        let center = m.entity_id(0, 0, [1, 1, 1, 1]).unwrap();
        assert_eq!(
            m.classify_boundary(center, 0).unwrap(),
            BoundaryClass::Interior
        );
        // time extremes are not lateral
        let t0 = m.entity_id(0, 0, [0, 1, 1, 1]).unwrap();
        assert_eq!(m.classify_boundary(t0, 0).unwrap(), BoundaryClass::Interior);
        let x0 = m.entity_id(0, 0, [1, 0, 1, 1]).unwrap();
        assert!(m.classify_boundary(x0, 0).unwrap().is_lateral());
        let corner_t_edge = m.entity_id(1, 0, [0, 0, 0, 0]).unwrap();
        assert!(m.classify_boundary(corner_t_edge, 1).unwrap().is_lateral());
        // an x-edge touching x=0 only at an endpoint is interior
        let x_edge = m.entity_id(1, 1, [0, 0, 1, 1]).unwrap();
        assert_eq!(
            m.classify_boundary(x_edge, 1).unwrap(),
            BoundaryClass::Interior
        );
        assert!(m.classify_boundary(10_000, 1).is_err());
    }

    #[test]
    fn region_tags() {
        let m = unit([2, 2, 2, 2], false)
            .with_region("electrode", [0.0, 0.25, 0.25, 0.0], [1.0, 0.75, 0.75, 0.0])
            .unwrap();
        let e = m.entity_id(1, 0, [0, 1, 1, 0]).unwrap();
        assert_eq!(
            m.classify_boundary(e, 1).unwrap(),
            BoundaryClass::Lateral(Some("electrode".into()))
        );
        let off = m.entity_id(1, 0, [0, 0, 1, 0]).unwrap();
        assert_eq!(
            m.classify_boundary(off, 1).unwrap(),
            BoundaryClass::Lateral(None)
        );
    }

    #[test]
    fn periodic_wrap() {
        let m = unit([3, 1, 1, 1], true);
        for kind in 0..m.kinds(1) {
            let top = m.entity_id(1, kind, [3, 0, 0, 0]);
            let bottom = m.entity_id(1, kind, [0, 0, 0, 0]);
            assert_eq!(top, bottom);
        }
        assert_eq!(
            m.entity_id(0, 0, [3, 1, 1, 1]),
            m.entity_id(0, 0, [0, 1, 1, 1])
        );
        // last slab's upper nodes are the first slab's lower nodes
        let last = m.cell_nodes(m.num_cells() - 1);
        let first = m.cell_nodes(0);
        assert_eq!(&last[8..], &first[..8]);
    }

    #[test]
    fn locate_points() {
        let m = unit([2, 2, 2, 2], false);
        let (cell, local) = m.locate([0.1, 0.6, 0.3, 0.9]).unwrap();
        assert_eq!(m.cell_anchor(cell), [0, 1, 0, 1]);
        assert!((local[1] + 0.15).abs() < 1e-12);
        assert!((local[0] + 0.15).abs() < 1e-12);
        let (cell, _) = m.locate([1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(cell, m.num_cells() - 1);
        assert!(m.locate([1.5, 0.0, 0.0, 0.0]).is_none());
    }
}
