//! Conformal domain representation, boundary differential geometry, regime
//! parameter bookkeeping and mesh generation.

mod domain;
mod mesh;
mod regime;

pub use domain::{BoundaryFrame, ConformalDomain, MapDirection};
pub use mesh::{BoundaryEdge, Mesh};
pub use regime::RegimeParams;
