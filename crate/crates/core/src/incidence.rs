//! Cell-to-entity maps and their transposes, used for row-gather assembly.

use rayon::prelude::*;

use crate::mesh::Mesh4;
use crate::reference::{N_EDGES, N_FACES, N_NODES};

/// Global ids of the local entities of every cell.
#[derive(Debug, Clone)]
pub struct CellMap<const N: usize> {
    ids: Vec<[usize; N]>,
}

impl<const N: usize> CellMap<N> {
    pub fn cell(&self, cell: usize) -> &[usize; N] {
        &self.ids[cell]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

pub fn cell_nodes(mesh: &Mesh4) -> CellMap<N_NODES> {
    CellMap {
        ids: (0..mesh.num_cells())
            .into_par_iter()
            .map(|c| mesh.cell_nodes(c))
            .collect(),
    }
}

pub fn cell_edges(mesh: &Mesh4) -> CellMap<N_EDGES> {
    CellMap {
        ids: (0..mesh.num_cells())
            .into_par_iter()
            .map(|c| mesh.cell_edges(c))
            .collect(),
    }
}

pub fn cell_faces(mesh: &Mesh4) -> CellMap<N_FACES> {
    CellMap {
        ids: (0..mesh.num_cells())
            .into_par_iter()
            .map(|c| mesh.cell_faces(c))
            .collect(),
    }
}

/// For every global entity, the `(cell, local index)` pairs touching it in
/// increasing cell order.
#[derive(Debug, Clone)]
pub struct Incidence {
    offsets: Vec<usize>,
    entries: Vec<(usize, usize)>,
}

impl Incidence {
    pub fn new<const N: usize>(n_entities: usize, map: &CellMap<N>) -> Self {
        let mut offsets = vec![0usize; n_entities + 1];
        for ids in &map.ids {
            for &g in ids {
                offsets[g + 1] += 1;
            }
        }
        for i in 0..n_entities {
            offsets[i + 1] += offsets[i];
        }
        let mut next = offsets.clone();
        let mut entries = vec![(0, 0); offsets[n_entities]];
        for (cell, ids) in map.ids.iter().enumerate() {
            for (local, &g) in ids.iter().enumerate() {
                entries[next[g]] = (cell, local);
                next[g] += 1;
            }
        }
        Self { offsets, entries }
    }

    pub fn of(&self, entity: usize) -> &[(usize, usize)] {
        &self.entries[self.offsets[entity]..self.offsets[entity + 1]]
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
