//! Natural boundary conditions for the classical Klein-Gordon field.
//!
//! Fields are finite sums of exact cylindrical modes. Surfaces that follow the
//! cycle-averaged energy flow close on themselves with a time seam, and the
//! [`quantization`] module compares that seam with the angular momentum carried
//! by the field.

pub mod bessel;
pub mod cli;
pub mod error;
pub mod field;
pub mod hypersurface;
pub mod quadrature;
pub mod quantization;
pub mod stress_energy;
pub mod variational;

pub use error::{Error, Result};
pub use field::{
    alpha_parameter, build_field, envelope_decompose, evaluate, kge_residual, CylindricalMode, FieldSample,
    FieldSpec, FieldState, ModalField, PhysicalConstants, ScalarField, SpacetimePoint, WindowedField,
};
pub use stress_energy::{Averaging, StressEnergySample};
