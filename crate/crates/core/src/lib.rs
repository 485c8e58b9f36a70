//! Boundary n-point functions of hyperbolic monopoles.
//!
//! The crate evaluates scattering data of SU(2) monopoles on the ball model of
//! hyperbolic three-space, assembles the boundary n-point functions from it,
//! and provides the finite-dimensional side of the story: discrete Nahm data,
//! monads, holomorphic spheres and their trace representations.

pub mod boundary;
pub mod field;
pub mod geom;
pub mod linalg;
pub mod nahm;
pub mod npoint;
pub mod optim;
pub mod rep;
pub mod ode;
pub mod scatter;
