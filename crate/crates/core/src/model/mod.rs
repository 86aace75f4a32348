//! Physical parameters, surfaces, the cutoff-localized domain map and sources.

mod map;
mod params;
mod source;
mod surface;

pub use map::{CutoffFn, DomainMap, Geometry, MapPoint};
pub use params::ElasticParams;
pub use source::{Jitter, Source, SourceSpec};
pub use surface::{Mode, Profile, RandomSurfaceModel, SurfaceFn, VALIDATION_SAMPLES};
