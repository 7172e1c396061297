//! Natural hypersurfaces traced from the cycle-averaged energy flow.

pub mod export;
pub mod mesh;
mod trace;

pub use mesh::{normal_derivative_profile, CylGrid, NormalDerivativeProfile, SurfaceMesh};
pub use trace::{
    advance_along, advance_along_flow, angular_path, axial_path, crest_band, find_crest_time, radial_path,
    seam_uniformity, trace_loop, trace_surface, LoopSpec, LoopTrace, MeshMetadata, NaturalSurfaceMesh, SeamReport,
    TraceDiagnostics, TraceOptions,
};
