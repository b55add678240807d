//! Lowest-order cubical finite elements for the space-time Hodge-Laplace
//! problem on 1-forms in four dimensions.

pub mod assembly;
pub mod dof;
pub mod error;
pub mod incidence;
pub mod io;
pub mod mesh;
pub mod quadrature;
pub mod reference;
pub mod scenarios;
pub mod solver;
pub mod sparse;

pub use assembly::{Operators, SaddleSystem, SourceField};
pub use dof::{BcSpec, DofMap, FormVector};
pub use error::{Error, Result};
pub use mesh::{BoundaryClass, Entity, Mesh4, Region, DIM};
pub use reference::{Form1Value, Form2Value, LocalMatrices, ReferenceCell};
pub use sparse::SparseOperator;
