use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid physical constants: {0}")]
    InvalidConstants(String),

    #[error("empty mode list")]
    EmptyModeList,

    #[error("non-finite parameter: {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("window of zero volume")]
    ZeroVolumeWindow,

    /// Energy density fell below the vacuum floor; the local group velocity is undefined there.
    #[error("vacuum region at (t={t}, x={x}, y={y}, z={z}): T00 = {t00:e} <= floor {floor:e}")]
    VacuumRegion {
        t: f64,
        x: f64,
        y: f64,
        z: f64,
        t00: f64,
        floor: f64,
    },

    #[error("quadrature did not converge: error estimate {estimate:e} > tolerance {tolerance:e}")]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },

    #[error("tail estimate {tail:e} exceeds tolerance {tolerance:e}")]
    TailBound { tail: f64, tolerance: f64 },

    #[error("inadmissible variation: {0}")]
    InadmissibleVariation(String),

    #[error("surface is not spacelike: {0}")]
    NotSpacelike(String),

    #[error("seed point is not on a crest: |dphi/dt| = {d_t:e} (tolerance {tolerance:e})")]
    SeedNotOnCrest { d_t: f64, tolerance: f64 },

    #[error("non-integrable flow, no natural surface: path residual {residual:e} > tolerance {tolerance:e}")]
    NonIntegrable { residual: f64, tolerance: f64 },

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("empty sweep value list")]
    EmptySweep,

    #[error("missing referenced file {0}")]
    MissingFile(PathBuf),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
