//! Boundary vortices in thin ferromagnetic films.
//!
//! A numerical laboratory for the boundary-vortex regime of thin-film
//! micromagnetics on conformally parameterized planar domains:
//!
//! * [`geometry`] — polynomial conformal images of the unit disk, boundary
//!   frames and curvature, thin-film regime parameters, graded meshes;
//! * [`canonical`] — closed-form canonical harmonic maps with prescribed
//!   boundary vortices, their liftings and harmonic conjugates;
//! * [`renorm`] — the renormalized vortex interaction energy, computed by
//!   three independent routes, and its minimization over vortex positions;
//! * [`fields`] — discrete vector fields, the relaxed and reduced energy
//!   functionals, global/interior/boundary Jacobians, vortex detection;
//! * [`minimize`] — projected gradient descent with continuation in the
//!   core-size parameter and extraction of the two-term energy expansion;
//! * [`strayfield`] — magnetostatic kernels, the slab stray-field potential
//!   and the quantitative reduction checks for x3-invariant magnetizations.

pub mod canonical;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod minimize;
pub mod opt;
pub mod quad;
pub mod renorm;
pub mod strayfield;
mod thread_pool;

pub use error::{Error, Result};
pub use num_complex::Complex64;
