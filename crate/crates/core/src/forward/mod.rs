//! Time evolution, time symmetrization, linearized sources and observations.

mod linearize;
mod norms;
mod observe;
mod solver;
mod wavefield;

pub use linearize::{
    initial_velocity_defect, linearized_source, source_level, source_on, time_derivative, twin_residual,
};
pub use norms::{h1_norm_sq, h2_norm_sq, l2_norm_sq};
pub use observe::{
    extract_observations, lateral_boundary_nodes, normal_derivative, ObservationKind,
    ObservationNorms, ObservationRegion, ObservationSet,
};
pub use solver::{crank_nicolson_solve, symmetrize_time, step_count, BoundaryData};
pub use wavefield::WaveField;
