//! Shared fixtures for the criterion benchmarks.

use hodge4d::assembly::assemble_system;
use hodge4d::dof::build_dofmap;
use hodge4d::scenarios::example1_load_source;
use hodge4d::{BcSpec, DofMap, Mesh4, SaddleSystem};

/// Example 1 on the unit hypercube with `n` divisions per axis.
pub struct Fixture {
    pub mesh: Mesh4,
    pub dof0: DofMap,
    pub dof1: DofMap,
    pub system: SaddleSystem,
}

pub fn example1(n: usize) -> Fixture {
    let mesh = Mesh4::new([n; 4], [1.0; 4], false).expect("valid mesh");
    let bc = BcSpec::homogeneous();
    let dof0 = build_dofmap(&mesh, 0, &bc).expect("0-form dofs");
    let dof1 = build_dofmap(&mesh, 1, &bc).expect("1-form dofs");
    let system = assemble_system(&mesh, &dof0, &dof1, &example1_load_source, 4).expect("assembly");
    Fixture {
        mesh,
        dof0,
        dof1,
        system,
    }
}
