//! Field action over a 4-volume and its first variation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::particle::poly_bump;
use crate::error::{Error, Result};
use crate::field::Slicing;
use crate::field::{polar, FieldSample, PhysicalConstants, ScalarField, SecondDerivatives, SpacetimePoint};
use crate::hypersurface::mesh::{normal_flux, SurfaceMesh};
use crate::quadrature::{periodic_nodes, GaussLegendre};

/// A field perturbation `delta phi(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldVariation {
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude * b(|x - center| / radius) * b((t - t_center) / duration)` with
    /// `b(s) = (1 - s^2)^3`; no time dependence when `duration` is absent.
    Bump {
        t_center: f64,
        center: [f64; 3],
        radius: f64,
        duration: Option<f64>,
        amplitude: f64,
    },
}

impl FieldVariation {
    /// Value, time derivative, Cartesian gradient and (`d_tt`, Laplacian).
    pub fn eval(&self, p: &SpacetimePoint) -> (f64, f64, [f64; 3], (f64, f64)) {
        match *self {
            FieldVariation::Zero => (0.0, 0.0, [0.0; 3], (0.0, 0.0)),
            FieldVariation::Constant { value } => (value, 0.0, [0.0; 3], (0.0, 0.0)),
            FieldVariation::Bump {
                t_center,
                center,
                radius,
                duration,
                amplitude,
            } => {
                let d = [p.x - center[0], p.y - center[1], p.z - center[2]];
                let rho2 = d.iter().map(|v| v * v).sum::<f64>();
                let u = rho2 / (radius * radius);
                if u >= 1.0 {
                    return (0.0, 0.0, [0.0; 3], (0.0, 0.0));
                }
                let w = 1.0 - u;
                let bx = w.powi(3);
                let gfac = -6.0 * w * w / (radius * radius);
                let lap_x = w / (radius * radius) * (42.0 * u - 18.0);
                let (bt, dbt, ddbt) = match duration {
                    Some(tau) => {
                        let (b, db, ddb) = poly_bump((p.t - t_center) / tau);
                        (b, db / tau, ddb / (tau * tau))
                    }
                    None => (1.0, 0.0, 0.0),
                };
                let a = amplitude;
                (
                    a * bx * bt,
                    a * bx * dbt,
                    [a * gfac * d[0] * bt, a * gfac * d[1] * bt, a * gfac * d[2] * bt],
                    (a * bx * ddbt, a * lap_x * bt),
                )
            }
        }
    }

    /// Radius of a ball around the origin outside which the variation vanishes.
    pub fn support_radius(&self) -> Option<f64> {
        match *self {
            FieldVariation::Zero => Some(0.0),
            FieldVariation::Constant { .. } => None,
            FieldVariation::Bump { center, radius, .. } => Some((center[0].hypot(center[1])) + radius),
        }
    }

    /// Seeded bumps centred inside the cylinder `r < r_max`, `z0 < z < z1`.
    pub fn random_family(seed: u64, count: usize, r_max: f64, z_range: (f64, f64), t_range: (f64, f64)) -> Vec<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let r = r_max * rng.gen_range(0.0_f64..0.8).sqrt();
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                let z = rng.gen_range(z_range.0..=z_range.1);
                let span = (t_range.1 - t_range.0).abs().max(1e-12);
                FieldVariation::Bump {
                    t_center: rng.gen_range(t_range.0..=t_range.1),
                    center: [r * th.cos(), r * th.sin(), z],
                    radius: r_max * rng.gen_range(0.1..0.4),
                    duration: Some(span * rng.gen_range(0.3..1.0)),
                    amplitude: rng.gen_range(-1.0..1.0),
                }
            })
            .collect()
    }
}

/// `phi + eps * delta phi`.
pub struct Perturbed<'a, F: ?Sized> {
    pub base: &'a F,
    pub variation: &'a FieldVariation,
    pub eps: f64,
}

impl<F: ScalarField + ?Sized> ScalarField for Perturbed<'_, F> {
    fn constants(&self) -> &PhysicalConstants {
        self.base.constants()
    }

    fn sample(&self, p: &SpacetimePoint, second: bool) -> FieldSample {
        let mut s = self.base.sample(p, second);
        let (v, vt, vg, (vtt, vlap)) = self.variation.eval(p);
        let e = self.eps;
        s.phi += e * v;
        s.d_t += e * vt;
        for a in 0..3 {
            s.grad[a] += e * vg[a];
        }
        let (_, th) = polar(p);
        let (sn, cs) = th.sin_cos();
        s.grad_cyl[0] += e * (cs * vg[0] + sn * vg[1]);
        s.grad_cyl[1] += e * (-sn * vg[0] + cs * vg[1]);
        s.grad_cyl[2] += e * vg[2];
        if let Some(sec) = s.second.as_mut() {
            *sec = SecondDerivatives {
                d_tt: sec.d_tt + e * vtt,
                laplacian: sec.laplacian + e * vlap,
            };
        }
        s
    }

    fn amplitude_scale(&self) -> f64 {
        self.base.amplitude_scale()
    }

    fn support_radius(&self) -> Option<f64> {
        match (self.base.support_radius(), self.variation.support_radius()) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        }
    }
}

/// Quadrature resolution for 4-volume integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActionQuadrature {
    pub order: usize,
    pub r_panels: usize,
    pub z_panels: usize,
    pub t_panels: usize,
    pub n_theta: usize,
    /// Largest acceptable tail estimate; `None` reports without failing.
    pub tail_tolerance: Option<f64>,
}

impl Default for ActionQuadrature {
    fn default() -> Self {
        Self {
            order: 8,
            r_panels: 8,
            z_panels: 2,
            t_panels: 4,
            n_theta: 24,
            tail_tolerance: None,
        }
    }
}

/// The 4-volume between two spacelike slices inside a finite cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region4D {
    pub s0: Slicing,
    pub s1: Slicing,
    pub r_cut: f64,
    pub z_range: (f64, f64),
}

impl Region4D {
    /// Validates the slices on a sampling of the cylinder: both continuous,
    /// spacelike, and `s1` strictly later than `s0`.
    pub fn new(s0: Slicing, s1: Slicing, r_cut: f64, z_range: (f64, f64), c: f64) -> Result<Self> {
        if !(r_cut.is_finite() && r_cut > 0.0) {
            return Err(Error::InvalidParameter(format!("r_cut must be positive, got {r_cut}")));
        }
        if !(z_range.1 > z_range.0) {
            return Err(Error::InvalidParameter("z range must be increasing".into()));
        }
        for s in [&s0, &s1] {
            match *s {
                Slicing::Helical { .. } => {
                    return Err(Error::InvalidParameter(
                        "region slices must be continuous; corkscrew surfaces enter through boundary terms".into(),
                    ))
                }
                Slicing::Tilted { slope, .. } => {
                    let m = c * slope.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if m >= 1.0 {
                        return Err(Error::NotSpacelike(format!("slice slope c|grad t| = {m}")));
                    }
                }
                Slicing::Flat { .. } => {}
            }
        }
        for i in 0..=4 {
            for j in 0..8 {
                for z in [z_range.0, z_range.1] {
                    let r = r_cut * i as f64 / 4.0;
                    let th = std::f64::consts::TAU * j as f64 / 8.0;
                    let x = [r * th.cos(), r * th.sin(), z];
                    if s1.time_at(x) <= s0.time_at(x) {
                        return Err(Error::InvalidParameter(format!(
                            "slices intersect near r = {r}, z = {z}"
                        )));
                    }
                }
            }
        }
        Ok(Self { s0, s1, r_cut, z_range })
    }
}

/// Action with its truncation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionValue {
    pub value: f64,
    /// `int |L| dOmega` over the shell `r_cut < r < 2 r_cut`; zero when the
    /// field is known to vanish beyond `r_cut`.
    pub tail_estimate: f64,
}

fn lagrangian(s: &FieldSample, pc: &PhysicalConstants) -> f64 {
    let c2 = pc.c() * pc.c();
    let mu2 = pc.mass_wavenumber().powi(2);
    let g2: f64 = s.grad.iter().map(|v| v * v).sum();
    0.5 * (s.d_t * s.d_t / c2 - g2 - mu2 * s.phi * s.phi)
}

/// `sum_w f(t, x) c dt d^3x` over `r0 < r < r1`, the z range and the slice interval.
fn integrate_volume<F, G>(field: &F, region: &Region4D, quad: &ActionQuadrature, (r0, r1): (f64, f64), f: G) -> f64
where
    F: ScalarField + ?Sized,
    G: Fn(&SpacetimePoint, &FieldSample) -> f64 + Sync,
{
    let gl = GaussLegendre::new(quad.order);
    let c = field.constants().c();
    let rn = gl.composite(r0, r1, quad.r_panels);
    let zn = gl.composite(region.z_range.0, region.z_range.1, quad.z_panels);
    let tn = gl.composite(0.0, 1.0, quad.t_panels);
    let thn = periodic_nodes(0.0, std::f64::consts::TAU, quad.n_theta);
    let needs_second = true;
    rn.par_iter()
        .map(|&(r, wr)| {
            let mut acc = 0.0;
            for &(th, wth) in &thn {
                let (sn, cs) = th.sin_cos();
                for &(z, wz) in &zn {
                    let x = [r * cs, r * sn, z];
                    let (a, b) = (region.s0.time_at(x), region.s1.time_at(x));
                    for &(u, wu) in &tn {
                        let t = a + (b - a) * u;
                        let p = SpacetimePoint::new(t, x[0], x[1], x[2]);
                        let s = field.sample(&p, needs_second);
                        acc += wth * wz * wu * (b - a) * c * f(&p, &s);
                    }
                }
            }
            acc * wr * r
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// `S = int L dOmega` with `dOmega = c dt d^3x` over the region.
pub fn field_action<F: ScalarField + ?Sized>(field: &F, region: &Region4D, quad: &ActionQuadrature) -> Result<ActionValue> {
    let pc = *field.constants();
    let value = integrate_volume(field, region, quad, (0.0, region.r_cut), |_, s| lagrangian(s, &pc));
    let tail_estimate = match field.support_radius() {
        Some(rs) if rs <= region.r_cut => 0.0,
        _ => integrate_volume(field, region, quad, (region.r_cut, 2.0 * region.r_cut), |_, s| {
            lagrangian(s, &pc).abs()
        }),
    };
    if !value.is_finite() {
        return Err(Error::NonFinite("field action".into()));
    }
    if let Some(tol) = quad.tail_tolerance {
        if tail_estimate > tol {
            return Err(Error::TailBound {
                tail: tail_estimate,
                tolerance: tol,
            });
        }
    }
    Ok(ActionValue { value, tail_estimate })
}

/// Pieces of the field's first variation over a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldFirstVariation {
    /// `-int (box phi + mu^2 phi) delta phi dOmega`.
    pub bulk: f64,
    /// Contribution of the initial slice.
    pub boundary_s0: f64,
    /// Contribution of the final slice.
    pub boundary_s1: f64,
    /// Contribution of the cylinder wall and end caps.
    pub lateral: f64,
}

impl FieldFirstVariation {
    pub fn total(&self) -> f64 {
        self.bulk + self.boundary_s0 + self.boundary_s1 + self.lateral
    }
}

/// Slice term `sign * int c (phi_t / c^2 + grad g . grad phi) delta phi d^3x`.
fn slice_term<F: ScalarField + ?Sized>(
    field: &F,
    slicing: &Slicing,
    variation: &FieldVariation,
    region: &Region4D,
    quad: &ActionQuadrature,
) -> f64 {
    let gl = GaussLegendre::new(quad.order);
    let c = field.constants().c();
    let rn = gl.composite(0.0, region.r_cut, quad.r_panels);
    let zn = gl.composite(region.z_range.0, region.z_range.1, quad.z_panels);
    let thn = periodic_nodes(0.0, std::f64::consts::TAU, quad.n_theta);
    rn.par_iter()
        .map(|&(r, wr)| {
            let mut acc = 0.0;
            for &(th, wth) in &thn {
                let (sn, cs) = th.sin_cos();
                for &(z, wz) in &zn {
                    let x = [r * cs, r * sn, z];
                    let p = SpacetimePoint::new(slicing.time_at(x), x[0], x[1], x[2]);
                    let s = field.sample(&p, false);
                    let gg = slicing.gradient(x);
                    let dot: f64 = (0..3).map(|a| gg[a] * s.grad[a]).sum();
                    acc += wth * wz * c * (s.d_t / (c * c) + dot) * variation.eval(&p).0;
                }
            }
            acc * wr * r
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// `-int c dt oint delta phi d_n phi dA` over the wall `r = r_cut` and the two caps.
fn lateral_term<F: ScalarField + ?Sized>(
    field: &F,
    variation: &FieldVariation,
    region: &Region4D,
    quad: &ActionQuadrature,
) -> f64 {
    let gl = GaussLegendre::new(quad.order);
    let c = field.constants().c();
    let tn = gl.composite(0.0, 1.0, quad.t_panels);
    let thn = periodic_nodes(0.0, std::f64::consts::TAU, quad.n_theta);
    let column = |x: [f64; 3], normal: [f64; 3]| -> f64 {
        let (a, b) = (region.s0.time_at(x), region.s1.time_at(x));
        tn.iter()
            .map(|&(u, wu)| {
                let p = SpacetimePoint::new(a + (b - a) * u, x[0], x[1], x[2]);
                let s = field.sample(&p, false);
                let dn: f64 = (0..3).map(|k| normal[k] * s.grad[k]).sum();
                wu * (b - a) * c * variation.eval(&p).0 * dn
            })
            .sum()
    };
    let rc = region.r_cut;
    let wall: f64 = gl
        .composite(region.z_range.0, region.z_range.1, quad.z_panels)
        .par_iter()
        .map(|&(z, wz)| {
            thn.iter()
                .map(|&(th, wth)| {
                    let (sn, cs) = th.sin_cos();
                    wth * wz * rc * column([rc * cs, rc * sn, z], [cs, sn, 0.0])
                })
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let caps: f64 = gl
        .composite(0.0, rc, quad.r_panels)
        .par_iter()
        .map(|&(r, wr)| {
            thn.iter()
                .map(|&(th, wth)| {
                    let (sn, cs) = th.sin_cos();
                    let top = column([r * cs, r * sn, region.z_range.1], [0.0, 0.0, 1.0]);
                    let bottom = column([r * cs, r * sn, region.z_range.0], [0.0, 0.0, -1.0]);
                    wth * wr * r * (top + bottom)
                })
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    -(wall + caps)
}

/// First variation of the action by integration by parts, split into bulk,
/// slice and lateral pieces.
pub fn field_first_variation<F: ScalarField + ?Sized>(
    field: &F,
    region: &Region4D,
    variation: &FieldVariation,
    quad: &ActionQuadrature,
) -> Result<FieldFirstVariation> {
    let pc = *field.constants();
    let c2 = pc.c() * pc.c();
    let mu2 = pc.mass_wavenumber().powi(2);
    let bulk = integrate_volume(field, region, quad, (0.0, region.r_cut), |p, s| {
        let sec = s.second.expect("second derivatives requested");
        -(sec.d_tt / c2 - sec.laplacian + mu2 * s.phi) * variation.eval(p).0
    });
    let out = FieldFirstVariation {
        bulk,
        boundary_s0: -slice_term(field, &region.s0, variation, region, quad),
        boundary_s1: slice_term(field, &region.s1, variation, region, quad),
        lateral: lateral_term(field, variation, region, quad),
    };
    if !out.total().is_finite() {
        return Err(Error::NonFinite("first variation".into()));
    }
    Ok(out)
}

/// Which end of the region a surface closes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceRole {
    Initial,
    Final,
}

/// Boundary term on a surface mesh and the normal-derivative summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTerm {
    /// `oint (d phi / d eta) delta phi ds` with the outward normal.
    pub value: f64,
    /// `max |d phi / d eta|` over the mesh nodes.
    pub max_normal_derivative: f64,
}

/// `oint (d phi / d eta) delta phi ds` over a mesh, in `c dt d^3x` units. The
/// outward normal points to the future on a final surface and to the past on an
/// initial one.
pub fn field_boundary_term<F: ScalarField + ?Sized>(
    field: &F,
    surface: &SurfaceMesh,
    variation: &FieldVariation,
    role: SurfaceRole,
) -> Result<BoundaryTerm> {
    let w = surface.grid.weights();
    let mut value = 0.0;
    let mut max_dn = 0.0_f64;
    for idx in 0..surface.t.len() {
        let p = surface.point(idx);
        let (flux, dn) = normal_flux(field, &p, surface.gradient(idx))?;
        max_dn = max_dn.max(dn.abs());
        if w[idx] != 0.0 {
            value += w[idx] * flux * variation.eval(&p).0;
        }
    }
    let sign = match role {
        SurfaceRole::Final => 1.0,
        SurfaceRole::Initial => -1.0,
    };
    Ok(BoundaryTerm {
        value: sign * value,
        max_normal_derivative: max_dn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_field, FieldSpec};
    use crate::hypersurface::mesh::CylGrid;
    use std::f64::consts::PI;

    fn natural() -> PhysicalConstants {
        PhysicalConstants::natural()
    }

    fn flat_region(t0: f64, t1: f64, r_cut: f64) -> Region4D {
        Region4D::new(Slicing::Flat { t: t0 }, Slicing::Flat { t: t1 }, r_cut, (-1.0, 1.0), 1.0).unwrap()
    }

    #[test]
    fn oscillator_action_vanishes_over_a_period() {
        let f = build_field(&FieldSpec::UniformOscillator { amplitude: 1.0 }, natural()).unwrap();
        let a = field_action(&f, &flat_region(0.0, 2.0 * PI, 2.0), &ActionQuadrature::default()).unwrap();
        assert!(a.value.abs() < 1e-12, "{}", a.value);
        // Over a quarter period the kinetic part loses: int (sin^2 - cos^2)/2 = 0 still,
        // but from 0 to pi/4 it is -1/4 per unit volume.
        let q = field_action(&f, &flat_region(0.0, PI / 4.0, 1.0), &ActionQuadrature::default()).unwrap();
        let vol = PI * 2.0;
        assert!((q.value + 0.25 * vol).abs() < 1e-10, "{}", q.value);
    }

    #[test]
    fn action_is_quadratic_in_amplitude() {
        let f = build_field(&FieldSpec::rotor(1, 0.3), natural()).unwrap();
        let region = flat_region(0.0, 1.0, 5.0);
        let q = ActionQuadrature::default();
        let s1 = field_action(&f, &region, &q).unwrap().value;
        let s2 = field_action(&f.scaled(1e-3), &region, &q).unwrap().value;
        assert!((s2 - 1e-6 * s1).abs() < 1e-12 * s1.abs().max(1.0));
    }

    #[test]
    fn tail_estimate_bounds_cutoff_change() {
        let f = build_field(&FieldSpec::rotor(1, 0.5), natural()).unwrap();
        let q = ActionQuadrature {
            r_panels: 12,
            ..Default::default()
        };
        let a = field_action(&f, &flat_region(0.0, 0.5, 6.0), &q).unwrap();
        let b = field_action(&f, &flat_region(0.0, 0.5, 12.0), &q).unwrap();
        assert!(a.tail_estimate > 0.0);
        assert!((b.value - a.value).abs() <= a.tail_estimate);
        let strict = ActionQuadrature {
            tail_tolerance: Some(a.tail_estimate * 0.5),
            ..q
        };
        assert!(matches!(
            field_action(&f, &flat_region(0.0, 0.5, 6.0), &strict),
            Err(Error::TailBound { .. })
        ));
    }

    #[test]
    fn first_variation_matches_central_difference() {
        let f = build_field(&FieldSpec::rotor(2, 0.4), natural()).unwrap();
        let region = Region4D::new(
            Slicing::Flat { t: 0.1 },
            Slicing::Tilted {
                t0: 0.9,
                origin: [0.0; 3],
                slope: [0.1, -0.05, 0.2],
            },
            4.0,
            (-0.5, 0.5),
            1.0,
        )
        .unwrap();
        let q = ActionQuadrature {
            order: 10,
            r_panels: 8,
            z_panels: 2,
            t_panels: 2,
            n_theta: 32,
            tail_tolerance: None,
        };
        let dv = FieldVariation::Bump {
            t_center: 0.5,
            center: [1.0, 0.5, 0.3],
            radius: 1.5,
            duration: Some(0.8),
            amplitude: 0.7,
        };
        let fv = field_first_variation(&f, &region, &dv, &q).unwrap();
        assert!(fv.bulk.abs() < 1e-10, "{fv:?}");
        let eps = 1e-3;
        let sp = field_action(&Perturbed { base: &f, variation: &dv, eps }, &region, &q).unwrap().value;
        let sm = field_action(&Perturbed { base: &f, variation: &dv, eps: -eps }, &region, &q).unwrap().value;
        let fd = (sp - sm) / (2.0 * eps);
        assert!((fd - fv.total()).abs() < 1e-4 * fd.abs(), "{fd} vs {fv:?}");
        assert!(fv.boundary_s0.abs() + fv.boundary_s1.abs() + fv.lateral.abs() > 1e-4);
    }

    #[test]
    fn boundary_term_on_flat_surfaces() {
        let f = build_field(&FieldSpec::UniformOscillator { amplitude: 1.5 }, natural()).unwrap();
        let grid = CylGrid::uniform((0.5, 2.0, 7), 0.0, 12, (0.0, 1.0, 3)).unwrap();
        let one = FieldVariation::Constant { value: 1.0 };
        let crest = SurfaceMesh::from_slicing(grid.clone(), &Slicing::Flat { t: 0.0 }).unwrap();
        let b = field_boundary_term(&f, &crest, &one, SurfaceRole::Final).unwrap();
        assert_eq!(b.value, 0.0);
        assert_eq!(b.max_normal_derivative, 0.0);
        let quarter = SurfaceMesh::from_slicing(grid.clone(), &Slicing::Flat { t: PI / 2.0 }).unwrap();
        let b = field_boundary_term(&f, &quarter, &one, SurfaceRole::Final).unwrap();
        let want = -1.5 * grid.volume();
        assert!((b.value - want).abs() < 1e-12 * want.abs(), "{} vs {want}", b.value);
        let zero = field_boundary_term(&f, &quarter, &FieldVariation::Zero, SurfaceRole::Final).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn steep_surface_is_rejected() {
        let f = build_field(&FieldSpec::UniformOscillator { amplitude: 1.0 }, natural()).unwrap();
        let grid = CylGrid::uniform((0.5, 2.0, 4), 0.0, 8, (0.0, 0.0, 1)).unwrap();
        let mesh = SurfaceMesh::from_slicing(
            grid,
            &Slicing::Tilted {
                t0: 0.0,
                origin: [0.0; 3],
                slope: [1.2, 0.0, 0.0],
            },
        )
        .unwrap();
        let r = field_boundary_term(&f, &mesh, &FieldVariation::Zero, SurfaceRole::Final);
        assert!(matches!(r, Err(Error::NotSpacelike(_))));
        assert!(matches!(
            Region4D::new(
                Slicing::Flat { t: 0.0 },
                Slicing::Tilted {
                    t0: 1.0,
                    origin: [0.0; 3],
                    slope: [0.0, 0.0, 1.5]
                },
                1.0,
                (0.0, 1.0),
                1.0
            ),
            Err(Error::NotSpacelike(_))
        ));
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let b = FieldVariation::Bump {
            t_center: 0.2,
            center: [0.1, -0.3, 0.4],
            radius: 1.3,
            duration: Some(0.9),
            amplitude: 1.7,
        };
        let p = SpacetimePoint::new(0.35, 0.4, 0.2, 0.1);
        let (v, vt, vg, (vtt, vlap)) = b.eval(&p);
        let h = 1e-4;
        let at = |dt: f64, dx: [f64; 3]| b.eval(&SpacetimePoint::new(p.t + dt, p.x + dx[0], p.y + dx[1], p.z + dx[2])).0;
        assert!(((at(h, [0.0; 3]) - at(-h, [0.0; 3])) / (2.0 * h) - vt).abs() < 1e-7);
        assert!(((at(h, [0.0; 3]) - 2.0 * v + at(-h, [0.0; 3])) / (h * h) - vtt).abs() < 1e-5);
        let mut lap = 0.0;
        for a in 0..3 {
            let mut e = [0.0; 3];
            e[a] = h;
            let m = [-e[0], -e[1], -e[2]];
            assert!(((at(0.0, e) - at(0.0, m)) / (2.0 * h) - vg[a]).abs() < 1e-7);
            lap += (at(0.0, e) - 2.0 * v + at(0.0, m)) / (h * h);
        }
        assert!((lap - vlap).abs() < 1e-5, "{lap} vs {vlap}");
    }
}
