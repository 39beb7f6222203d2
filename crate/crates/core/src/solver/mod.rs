//! Solvers: the σ₂ equation on the atlas, the axisymmetric embedding
//! system, and Lorentz normalization.

pub mod axisym;
pub mod normalize;
pub mod sigma2;

pub use sigma2::{
    constant_branch, default_initial_guess, isometric_residual, psi_from_metric, solve_sigma2, two_p2,
    IterationRecord, Sigma2Solution, SolverConfig, SolverState,
};
pub use axisym::{solve_axisymmetric, AxisymConfig, AxisymSolution, Meridian, Profile, RoundProfile};
pub use normalize::{lorentz_normalize, normalizing_transform, Normalization, NormalizationReport};
