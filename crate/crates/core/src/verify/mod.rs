//! Executable checks of the identities, inequalities and growth bounds of the
//! model: manufactured solutions, the Rellich-type boundary inequality,
//! Poincaré, trace bounds, frequency sweeps, pullback identities and form
//! continuity.

mod continuity;
mod helmholtz;
mod mms;
mod profile;
mod pullback;
mod rellich;

pub use continuity::{form_continuity_check, ContinuityReport, TEST_BATCH};
pub use helmholtz::{
    helmholtz_field_check, helmholtz_trace_check, HelmholtzResidual, CHECK_OFFSET,
};
pub use mms::{
    default_exact_field, field_errors, loglog_slope, manufactured_source, mms_convergence,
    navier_residual, AnalyticField, CutoffWave, Hessian, MmsRow, MmsTable, SmoothStep,
};
pub use profile::{
    bound_profile, geometric_omegas, omega_sweep, BoundProfile, SweepConfig, SweepResult,
};
pub use pullback::{pullback_identity_check, PullbackReport, TestField};
pub use rellich::{
    energy_density, poincare_check, rellich_density, rellich_lhs, rellich_residual, rellich_rhs,
    rellich_tolerance, trace_bound_check, RellichResult, TraceBoundResult,
};
