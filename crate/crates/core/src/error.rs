use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid cutoff: {0}")]
    Cutoff(String),
    #[error("domain map is singular: {0}")]
    MapSingular(String),
    #[error("surface sample out of bounds: {0}")]
    SurfaceBound(String),
    #[error("source support: {0}")]
    SourceSupport(String),
    #[error("singular DtN symbol at xi = {xi}")]
    SymbolSingular { xi: f64 },
    #[error("mesh: {0}")]
    Mesh(String),
    #[error("solve failed: {0}")]
    Solve(String),
    #[error("manufactured solution: {0}")]
    Mms(String),
    #[error("frequency sweep: {0}")]
    Sweep(String),
    #[error("ensemble failed for samples {indices:?}: {cause}")]
    Ensemble { indices: Vec<usize>, cause: String },
    #[error("internal: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
