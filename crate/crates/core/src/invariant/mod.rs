//! Deterministic characterizations of the model used as oracles for the
//! estimator: transition density, invariant measure, the steady state of
//! the growth-fragmentation equation and the Lyapunov drift.

mod drift;
mod fixed_point;
mod pde;
mod transition;

pub use drift::{log_drift, verify_drift, DriftReport, DRIFT_SLACK, LN_MAX};
pub use fixed_point::{
    invariant_fixed_point, reconstruct_b_from_invariant, InvariantSolution, SizeGrid, FIXED_POINT_MAX_ITER,
    FIXED_POINT_TOL,
};
pub use pde::{
    compare_with_invariant, flux_identity_error, solve_conservative_pde, uniform_phase_profile, PdeOptions, PdeScheme,
    PdeState, RelationCheck, STEADY_TOL,
};
pub use transition::{transition_density, TransitionEvaluator};
