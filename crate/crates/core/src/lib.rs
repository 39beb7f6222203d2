//! Spacelike graphical hypersurfaces in scaled de Sitter space S^{n,1}_ρ.
//!
//! A graph function u on the round sphere defines the hypersurface
//! X(ξ) = (ρ sinh u, ρ cosh u ξ) ⊂ R^{n+1,1}. This crate computes its
//! geometry on a two-chart grid, checks the structure equations and a priori
//! estimates numerically, and solves the prescribed σ₂-curvature equation
//! 2P₂(λ[u]) = ρ⁻²n(n−1) − R.

pub mod error;
pub mod estimates;
pub mod geometry;
pub mod grid;
pub mod minkowski;
pub mod preset;
pub mod report;
pub mod solver;
pub mod symmetric;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{GraphFunction, SurfaceGeometry};
pub use grid::{Atlas, TensorField};
