use serde::{Deserialize, Serialize};

use super::{
    polar, sample_from_phasors, FieldSample, FieldState, ModalField, ModePhasor, PhysicalConstants, ScalarField,
    SpacetimePoint,
};
use crate::error::{Error, Result};

/// Raised-cosine taper: 1 up to `start`, 0 beyond `start + width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Taper {
    pub start: f64,
    pub width: f64,
}

impl Taper {
    pub fn new(start: f64, width: f64) -> Result<Self> {
        if !(start.is_finite() && width.is_finite()) {
            return Err(Error::NonFinite("taper".into()));
        }
        if start <= 0.0 || width <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "taper start and width must be positive (start={start}, width={width})"
            )));
        }
        Ok(Self { start, width })
    }

    pub fn end(&self) -> f64 {
        self.start + self.width
    }

    /// `(W, W', W'')` at non-negative `s`.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        if s <= self.start {
            (1.0, 0.0, 0.0)
        } else if s >= self.end() {
            (0.0, 0.0, 0.0)
        } else {
            let k = std::f64::consts::PI / self.width;
            let u = k * (s - self.start);
            (0.5 * (1.0 + u.cos()), -0.5 * k * u.sin(), -0.5 * k * k * u.cos())
        }
    }
}

/// A mode superposition multiplied by smooth radial and axial tapers.
///
/// The product is no longer an exact KGE solution; its residual is bounded by the
/// gentleness of the tapers and is reported, not hidden.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowedField {
    pub field: FieldState,
    pub radial: Option<Taper>,
    pub axial: Option<Taper>,
}

impl WindowedField {
    pub fn new(field: FieldState, radial: Option<Taper>, axial: Option<Taper>) -> Self {
        Self { field, radial, axial }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            field: self.field.scaled(s),
            ..self.clone()
        }
    }

    pub fn is_windowed(&self) -> bool {
        self.radial.is_some() || self.axial.is_some()
    }

    fn weights(&self, r: f64, z: f64) -> Weights {
        let (wr, wr1, wr2) = self.radial.map_or((1.0, 0.0, 0.0), |t| t.eval(r));
        let (wz, dz1, wz2) = self.axial.map_or((1.0, 0.0, 0.0), |t| t.eval(z.abs()));
        let wz1 = if z < 0.0 { -dz1 } else { dz1 };
        Weights {
            wr,
            wr1,
            wr2,
            wz,
            wz1,
            wz2,
            r,
        }
    }
}

struct Weights {
    wr: f64,
    wr1: f64,
    wr2: f64,
    wz: f64,
    wz1: f64,
    wz2: f64,
    r: f64,
}

impl Weights {
    fn apply(&self, ph: ModePhasor) -> ModePhasor {
        let w = self.wr * self.wz;
        let dw_r = self.wr1 * self.wz;
        let dw_z = self.wr * self.wz1;
        let grad = [
            ph.grad_cyl[0] * w + ph.value * dw_r,
            ph.grad_cyl[1] * w,
            ph.grad_cyl[2] * w + ph.value * dw_z,
        ];
        let laplacian = ph.laplacian.map(|lap| {
            let radial_term = if self.r > 0.0 {
                self.wr2 + self.wr1 / self.r
            } else {
                2.0 * self.wr2
            };
            let lap_w = self.wz * radial_term + self.wr * self.wz2;
            lap * w + (ph.grad_cyl[0] * dw_r + ph.grad_cyl[2] * dw_z) * 2.0 + ph.value * lap_w
        });
        ModePhasor {
            omega: ph.omega,
            value: ph.value * w,
            d_t: ph.d_t * w,
            grad_cyl: grad,
            laplacian,
        }
    }
}

impl ScalarField for WindowedField {
    fn constants(&self) -> &PhysicalConstants {
        self.field.constants()
    }

    fn sample(&self, p: &SpacetimePoint, second: bool) -> FieldSample {
        let (_, theta) = polar(p);
        sample_from_phasors(&self.phasors(p, second), theta, second)
    }

    fn amplitude_scale(&self) -> f64 {
        self.field.amplitude_scale()
    }

    fn support_radius(&self) -> Option<f64> {
        self.radial.map(|t| t.end())
    }

    fn axial_support(&self) -> Option<f64> {
        self.axial.map(|t| t.end())
    }
}

impl ModalField for WindowedField {
    fn phasors(&self, p: &SpacetimePoint, second: bool) -> Vec<ModePhasor> {
        let w = self.weights(p.r(), p.z);
        self.field
            .phasors(p, second)
            .into_iter()
            .map(|ph| w.apply(ph))
            .collect()
    }

    fn alpha(&self) -> f64 {
        self.field.alpha()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{kge_residual, CylindricalMode};

    fn windowed() -> WindowedField {
        let f = FieldState::new(PhysicalConstants::natural(), vec![CylindricalMode::new(1.0, 1, 0.2, 0.0)]).unwrap();
        WindowedField::new(f, Some(Taper::new(20.0, 15.0).unwrap()), Some(Taper::new(5.0, 8.0).unwrap()))
    }

    #[test]
    fn taper_is_c1_at_the_joins() {
        let t = Taper::new(2.0, 3.0).unwrap();
        let (a, da, _) = t.eval(2.0 + 1e-9);
        assert!((a - 1.0).abs() < 1e-12 && da.abs() < 1e-8);
        let (b, db, _) = t.eval(5.0 - 1e-9);
        assert!(b.abs() < 1e-12 && db.abs() < 1e-8);
    }

    #[test]
    fn windowed_derivatives_match_finite_differences() {
        let w = windowed();
        let p = SpacetimePoint::new(0.4, 18.0, 9.0, 7.0);
        let s = w.sample(&p, true);
        let h = 1e-4;
        let dx = (w.sample(&SpacetimePoint { x: p.x + h, ..p }, false).phi
            - w.sample(&SpacetimePoint { x: p.x - h, ..p }, false).phi)
            / (2.0 * h);
        let dz = (w.sample(&SpacetimePoint { z: p.z + h, ..p }, false).phi
            - w.sample(&SpacetimePoint { z: p.z - h, ..p }, false).phi)
            / (2.0 * h);
        assert!((dx - s.grad[0]).abs() < 1e-8);
        assert!((dz - s.grad[2]).abs() < 1e-8);
        // Laplacian by the 7-point stencil
        let h = 1e-3;
        let c = s.phi;
        let mut lap = 0.0;
        for d in 0..3 {
            let mut a = p;
            let mut b = p;
            match d {
                0 => {
                    a.x += h;
                    b.x -= h
                }
                1 => {
                    a.y += h;
                    b.y -= h
                }
                _ => {
                    a.z += h;
                    b.z -= h
                }
            }
            lap += (w.sample(&a, false).phi + w.sample(&b, false).phi - 2.0 * c) / (h * h);
        }
        let analytic = s.second.unwrap().laplacian;
        assert!((lap - analytic).abs() < 1e-5, "{lap} vs {analytic}");
    }

    #[test]
    fn residual_vanishes_inside_and_not_in_taper() {
        let w = windowed();
        let inside = kge_residual(&w, &SpacetimePoint::new(0.1, 3.0, 2.0, 1.0)).unwrap();
        assert!(inside.abs() < 1e-12);
        let taper = kge_residual(&w, &SpacetimePoint::new(0.1, 25.0, 0.0, 1.0)).unwrap();
        assert!(taper.abs() > 1e-6);
    }
}
