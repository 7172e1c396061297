//! Hamilton's principle with boundary terms, for a particle and for the field.

mod field;
mod particle;

pub use field::{
    field_action, field_boundary_term, field_first_variation, ActionQuadrature, ActionValue, BoundaryTerm,
    FieldFirstVariation, FieldVariation, Perturbed, Region4D, SurfaceRole,
};
pub use particle::{
    check_admissible, particle_action, particle_action_perturbed, particle_first_variation, Bump, CubicSpline,
    EndpointBc, FirstVariation, ParticleScenario, ParticleVariation, Potential, Trajectory,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{ModalField, SpacetimePoint};
use crate::hypersurface::mesh::{normal_derivative_profile, SurfaceMesh};

/// What the boundary specification imposes on a surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldBc {
    /// `phi` is prescribed, so admissible variations vanish there.
    FieldFixed,
    /// Only derivatives are constrained; `phi` is free to vary.
    DerivativeConstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryClass {
    CoordinateBc,
    NaturalNcbc,
    NonExtremizingNcbc,
}

impl std::fmt::Display for BoundaryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundaryClass::CoordinateBc => "coordinate_bc",
            BoundaryClass::NaturalNcbc => "natural_ncbc",
            BoundaryClass::NonExtremizingNcbc => "non_extremizing_ncbc",
        })
    }
}

/// Classification verdict with the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryClassification {
    pub class: BoundaryClass,
    /// `max |d phi / d eta|` normalised by the peak `|d phi / dt| / c`.
    pub max_normalized: f64,
    pub tolerance: f64,
    /// A variation bump at the worst node, for non-extremizing surfaces.
    pub witness: Option<FieldVariation>,
    /// Boundary term produced by the witness.
    pub witness_value: Option<f64>,
}

/// Default relative tolerance for calling a surface natural.
pub const DEFAULT_NATURAL_TOLERANCE: f64 = 1e-6;

/// Sorts a surface into coordinate, natural or non-extremizing boundary.
///
/// The tolerance is relative to the peak `|d phi / dt| / c` on the surface.
/// For a non-extremizing verdict a compact bump centred on the node with the
/// largest normal derivative is returned with its boundary term.
pub fn classify_boundary<F: ModalField + ?Sized>(
    field: &F,
    surface: &SurfaceMesh,
    bc: FieldBc,
    tolerance: f64,
) -> Result<BoundaryClassification> {
    let profile = normal_derivative_profile(field, surface)?;
    if bc == FieldBc::FieldFixed {
        return Ok(BoundaryClassification {
            class: BoundaryClass::CoordinateBc,
            max_normalized: profile.max_normalized,
            tolerance,
            witness: None,
            witness_value: None,
        });
    }
    if profile.max_normalized < tolerance {
        return Ok(BoundaryClassification {
            class: BoundaryClass::NaturalNcbc,
            max_normalized: profile.max_normalized,
            tolerance,
            witness: None,
            witness_value: None,
        });
    }
    let p: SpacetimePoint = surface.point(profile.argmax);
    let g = &surface.grid;
    let spacing = |v: &[f64]| if v.len() > 1 { (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64 } else { f64::INFINITY };
    let arc = p.r() * std::f64::consts::TAU / g.n_theta as f64;
    let radius = 2.0 * spacing(&g.r).min(spacing(&g.z)).min(arc);
    let witness = FieldVariation::Bump {
        t_center: p.t,
        center: [p.x, p.y, p.z],
        radius,
        duration: None,
        amplitude: profile.values[profile.argmax].signum(),
    };
    let value = field_boundary_term(field, surface, &witness, SurfaceRole::Final)?.value;
    Ok(BoundaryClassification {
        class: BoundaryClass::NonExtremizingNcbc,
        max_normalized: profile.max_normalized,
        tolerance,
        witness: Some(witness),
        witness_value: Some(value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Slicing;
    use crate::field::{build_field, FieldSpec, PhysicalConstants};
    use crate::hypersurface::mesh::CylGrid;

    #[test]
    fn classification_of_flat_surfaces() {
        let pc = PhysicalConstants::natural();
        let osc = build_field(&FieldSpec::UniformOscillator { amplitude: 1.0 }, pc).unwrap();
        let grid = CylGrid::uniform((1.0, 3.0, 5), 0.0, 16, (0.0, 0.0, 1)).unwrap();
        let crest = SurfaceMesh::from_slicing(grid.clone(), &Slicing::Flat { t: 0.0 }).unwrap();
        let c = classify_boundary(&osc, &crest, FieldBc::DerivativeConstrained, DEFAULT_NATURAL_TOLERANCE).unwrap();
        assert_eq!(c.class, BoundaryClass::NaturalNcbc);
        let c = classify_boundary(&osc, &crest, FieldBc::FieldFixed, DEFAULT_NATURAL_TOLERANCE).unwrap();
        assert_eq!(c.class, BoundaryClass::CoordinateBc);

        let rotor = build_field(&FieldSpec::rotor(1, 0.05), pc).unwrap();
        let k = 0.05;
        let grid = CylGrid::uniform((20.0 / k * 0.05, 40.0, 5), 0.0, 32, (0.0, 0.0, 1)).unwrap();
        let flat = SurfaceMesh::from_slicing(grid, &Slicing::Flat { t: 0.0 }).unwrap();
        let c = classify_boundary(&rotor, &flat, FieldBc::DerivativeConstrained, DEFAULT_NATURAL_TOLERANCE).unwrap();
        assert_eq!(c.class, BoundaryClass::NonExtremizingNcbc);
        assert!(c.max_normalized > 0.1);
        assert!(c.witness_value.unwrap() > 0.0);
    }
}
