use serde::{Deserialize, Serialize};

use super::{CylindricalMode, FieldState, PhysicalConstants};
use crate::error::{Error, Result};

/// Named scenarios and a one-line description of each.
pub const PRESETS: [(&str, &str); 3] = [
    ("uniform_oscillator", "spatially uniform oscillation at omega0 (l = 0, k = 0)"),
    ("rotor_l", "single rotating Bessel mode J_l(k_r r) cos(l theta - omega t), k_r = alpha m c / hbar"),
    ("mixed_l", "two co-rotating Bessel modes with different l and the same k_r"),
];

/// Scenario description of a field: a preset with parameters or an explicit mode list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    UniformOscillator {
        #[serde(default = "unit")]
        amplitude: f64,
    },
    RotorL {
        #[serde(default = "default_l")]
        l: i32,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "unit")]
        amplitude: f64,
    },
    MixedL {
        #[serde(default = "default_l")]
        l1: i32,
        #[serde(default = "default_l2")]
        l2: i32,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "unit_pair")]
        amplitudes: [f64; 2],
    },
    Custom {
        modes: Vec<ModeSpec>,
    },
}

fn unit() -> f64 {
    1.0
}
fn unit_pair() -> [f64; 2] {
    [1.0, 1.0]
}
fn default_l() -> i32 {
    1
}
fn default_l2() -> i32 {
    2
}
fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub amplitude: f64,
    #[serde(default)]
    pub l: i32,
    #[serde(default)]
    pub k_r: f64,
    #[serde(default)]
    pub k_z: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub axial_phase: f64,
}

impl FieldSpec {
    pub fn rotor(l: i32, alpha: f64) -> Self {
        FieldSpec::RotorL {
            l,
            alpha,
            amplitude: 1.0,
        }
    }

    pub fn preset_name(&self) -> &'static str {
        match self {
            FieldSpec::UniformOscillator { .. } => "uniform_oscillator",
            FieldSpec::RotorL { .. } => "rotor_l",
            FieldSpec::MixedL { .. } => "mixed_l",
            FieldSpec::Custom { .. } => "custom",
        }
    }

    /// Angular indices present, in mode order.
    pub fn angular_indices(&self) -> Vec<i32> {
        match self {
            FieldSpec::UniformOscillator { .. } => vec![0],
            FieldSpec::RotorL { l, .. } => vec![*l],
            FieldSpec::MixedL { l1, l2, .. } => vec![*l1, *l2],
            FieldSpec::Custom { modes } => modes.iter().map(|m| m.l).collect(),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() {
        return Err(Error::NonFinite("alpha".into()));
    }
    if alpha < 0.0 {
        return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
    }
    Ok(())
}

/// Builds and validates a field from its scenario description.
pub fn build_field(spec: &FieldSpec, constants: PhysicalConstants) -> Result<FieldState> {
    let mu = constants.mass_wavenumber();
    let modes = match spec {
        FieldSpec::UniformOscillator { amplitude } => vec![CylindricalMode::new(*amplitude, 0, 0.0, 0.0)],
        FieldSpec::RotorL { l, alpha, amplitude } => {
            check_alpha(*alpha)?;
            vec![CylindricalMode::new(*amplitude, *l, alpha * mu, 0.0)]
        }
        FieldSpec::MixedL {
            l1,
            l2,
            alpha,
            amplitudes,
        } => {
            check_alpha(*alpha)?;
            vec![
                CylindricalMode::new(amplitudes[0], *l1, alpha * mu, 0.0),
                CylindricalMode::new(amplitudes[1], *l2, alpha * mu, 0.0),
            ]
        }
        FieldSpec::Custom { modes } => modes
            .iter()
            .map(|m| {
                CylindricalMode::new(m.amplitude, m.l, m.k_r, m.k_z)
                    .with_phase(m.phase)
                    .with_axial_phase(m.axial_phase)
            })
            .collect(),
    };
    FieldState::new(constants, modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ModalField;

    #[test]
    fn uniform_oscillator_preset() {
        let f = build_field(&FieldSpec::UniformOscillator { amplitude: 1.0 }, PhysicalConstants::natural()).unwrap();
        assert_eq!(f.modes().len(), 1);
        assert_eq!(f.modes()[0].omega(), 1.0);
        assert_eq!(f.alpha(), 0.0);
    }

    #[test]
    fn rotor_preset_dispersion() {
        let f = build_field(&FieldSpec::rotor(1, 0.05), PhysicalConstants::natural()).unwrap();
        // oracle: omega^2 = c^2 k^2 + omega0^2 with k = 0.05
        let w = (0.05f64 * 0.05 + 1.0).sqrt();
        assert!((f.modes()[0].omega() - w).abs() < 1e-15);
        assert!((f.alpha() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn alpha_is_the_maximum_wavenumber() {
        let spec = FieldSpec::Custom {
            modes: vec![
                ModeSpec {
                    amplitude: 1.0,
                    l: 1,
                    k_r: 0.05,
                    k_z: 0.0,
                    phase: 0.0,
                    axial_phase: 0.0,
                },
                ModeSpec {
                    amplitude: 1.0,
                    l: 0,
                    k_r: 0.0,
                    k_z: 0.2,
                    phase: 0.0,
                    axial_phase: 0.0,
                },
            ],
        };
        let f = build_field(&spec, PhysicalConstants::natural()).unwrap();
        assert!((f.alpha() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn empty_custom_mode_list_is_an_error() {
        let e = build_field(&FieldSpec::Custom { modes: vec![] }, PhysicalConstants::natural()).unwrap_err();
        assert_eq!(e.to_string(), "empty mode list");
    }

    #[test]
    fn relativistic_fields_are_flagged_not_rejected() {
        let f = build_field(&FieldSpec::rotor(1, 1.5), PhysicalConstants::natural()).unwrap();
        assert!(f.is_relativistic());
    }

    #[test]
    fn si_units_scale_wavenumber() {
        let pc = PhysicalConstants::new(3.0, 2.0, 5.0).unwrap();
        let f = build_field(&FieldSpec::rotor(2, 0.1), pc).unwrap();
        assert!((f.modes()[0].k_r - 0.1 * 5.0 * 3.0 / 2.0).abs() < 1e-15);
        assert!((f.alpha() - 0.1).abs() < 1e-15);
    }
}
