//! Time-harmonic elastic scattering by periodized rough surfaces.
//!
//! The Navier problem in the strip between a Lipschitz graph and the line
//! `x₂ = h` is discretized with P1 vector elements and closed on top by the
//! Fourier-symbol Dirichlet-to-Neumann map. Random surfaces are handled on a
//! fixed reference strip through a cutoff-localized vertical domain map.
//!
//! Modules:
//! - [`model`]: parameters, surfaces, cutoff, domain map, sources
//! - [`dtn`]: symbol `M(ξ)`, projections, DtN, upgoing extension
//! - [`fem`]: mesh, assembly, sparse solve, norms
//! - [`verify`]: manufactured solutions and the stability checks
//! - [`montecarlo`]: seeded ensembles of the random problem

pub mod dtn;
pub mod error;
pub mod fem;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    CutoffFn, DomainMap, ElasticParams, Geometry, Mode, RandomSurfaceModel, Source, SourceSpec,
    SurfaceFn,
};
pub use num_complex::Complex64;
