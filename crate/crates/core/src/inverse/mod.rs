//! Reconstruction of `θ̈` from interior or lateral measurements and the
//! empirical Lipschitz-stability experiments.

mod basis;
mod boundary;
mod gauss_newton;
mod interior;
mod stability;
mod state;

pub use basis::{curvature_gap_sq, l2_sq, relative_error, SplineBasis};
pub use boundary::{reconstruct_boundary, BoundaryTwin};
pub use gauss_newton::{gauss_newton, jacobian, GaussNewtonOptions, GaussNewtonOutcome};
pub use interior::{add_noise, reconstruct_interior, InteriorData, ReconstructionConfig, ReconstructionResult, LAMBDA_FLOOR};
pub use stability::{records_csv, stability_experiment, summarize, StabilityPair, StabilityRecord, StabilitySetup, StabilitySummary};
pub use state::{angular_state, envelope_state, vortex_state, check_observation_subsection, validate_initial_state};
