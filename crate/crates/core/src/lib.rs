//! Finite-element laboratory for axisymmetric sloshing and Dirichlet–Steklov eigenproblems.
//!
//! A container is described by its meridian domain in the `(r, y)` half-plane
//! with the free surface on `y = 0`. Each azimuthal mode `m` reduces to a
//! weighted 2D Steklov-type pencil that is condensed onto the free surface.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod assembly;
pub mod eigensolver;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod oracles;

pub use assembly::{assemble, ModeProblem, ProblemKind};
pub use eigensolver::{solve, solve_all, EigenSolution};
pub use error::{Result, SloshError};
pub use geometry::{parse_domain, ClassParams, DomainSpec, MeridianDomain};
pub use mesh::{generate, GradingSpec, Mesh};
