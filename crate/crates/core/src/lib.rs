//! Semi-discrete parabolic operators on staggered Cartesian grids.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical
//! piece of the workspace:
//!
//! * [`grid`]: the half-step lattice, primal/dual/boundary meshes, the
//!   discrete normal and the trace operator.
//! * [`calculus`]: difference and average operators, discrete integrals,
//!   norms, and the Leibniz / summation-by-parts identities as residuals.
//! * [`weights`]: the Carleman weight family `psi`, `phi`, `theta`, `s`.
//! * [`coefficients`], [`sparse`] and [`solver`]: assembly of the
//!   semi-discrete operator and implicit time stepping of the state and of
//!   the time-differentiated system.
//! * [`carleman`]: evaluation of every term of the weighted estimates.
//! * [`inverse`]: observation operator, stability quotients, admissible
//!   sources and twin reconstructions.
//!
//! File formats and the command line live in the companion `carleman-lab`
//! crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calculus;
pub mod carleman;
pub mod coefficients;
mod error;
pub mod grid;
pub mod inverse;
pub mod math;
pub mod solver;
pub mod sparse;
pub mod synthetic;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{AxisKind, GridSpec, MeshFunction, MeshId, MeshPoint, NamedMesh};
