//! Discrete-velocity BGK solver in one space and one velocity dimension.
//!
//! The kinetic equation `df/dt + v df/dx = nu (M[f] - f)` is discretised on a
//! symmetric velocity lattice and advanced by transport/collision splitting.
//! Four transport schemes are available: first order and van Leer limited
//! semi-Lagrangian updates, and two fast kinetic schemes that shift a
//! piecewise constant or continuous piecewise linear function exactly and
//! only touch its amplitudes during collisions.

pub mod diagnostics;
pub mod equilibrium;
pub mod error;
pub mod grid;
pub mod problems;
pub mod reconstruction;
pub mod schemes;

pub use diagnostics::{
    convergence_order, front_width, total_variation, ConvergenceEstimate, RunMetrics,
};
pub use equilibrium::{
    discrete_maxwellian, discrete_maxwellian_into, maxwellian_pointwise, CorrectionReport,
    EquilibriumParams,
};
pub use error::{KineticError, Result};
pub use grid::{
    compute_moments, total_moments, BoundaryKind, CellDistribution, MomentField, Moments,
    SpatialGrid, VelocityGrid,
};
pub use problems::{ProblemKind, ProblemSpec};
pub use reconstruction::{NodalDistribution, NodeKind};
pub use schemes::{compute_dt, SchemeKind, SchemeState};
