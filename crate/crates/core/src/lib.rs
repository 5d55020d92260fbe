//! Dyadic harmonic-analysis machinery: shifted dyadic grids, piecewise-constant
//! weights on a fine mesh, Orlicz/Luxemburg norm calculus, fractional maximal and
//! integral operators (continuum, dyadic and sparse forms), Calderon-Zygmund and
//! corona decompositions, and supremum-type weight constants with witnesses.
//!
//! Everything that certifies a set-theoretic claim (partitions, E-masks, corona
//! sparsity) runs on exact integer or rational arithmetic; floating point only
//! enters at evaluation boundaries (operator values, norms, constants).

pub mod constants;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod gallery;
pub mod grid;
pub mod mesh;
pub mod operators;
pub mod orlicz;
pub mod quad;
pub mod random;
pub mod rat;
pub mod sparse;

pub use error::{CoreError, Result};
pub use grid::{DyadicCube, GridShift, LevelWindow};
pub use mesh::{Domain, MeshFunction, Tail, WeightPair, WeightSpec};
