//! Integer seam index of a traced surface and the angular momentum it predicts.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ModalField, PhysicalConstants, Slicing, SpacetimePoint, Taper};
use crate::hypersurface::{trace_loop, LoopSpec, NaturalSurfaceMesh};
use crate::quadrature::{periodic_nodes, GaussLegendre};
use crate::stress_energy::Averaging;

/// Integer seam index and its distance from the measured ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeamQuantum {
    pub n_est: i64,
    pub n_residual: f64,
}

/// `n = round(delta_t omega0 / pi)` with ties to even, and `|ratio - n|`.
pub fn quantize_seam(delta_t: f64, constants: &PhysicalConstants) -> Result<SeamQuantum> {
    if !delta_t.is_finite() {
        return Err(Error::NonFinite("seam duration".into()));
    }
    let ratio = delta_t * constants.omega0() / std::f64::consts::PI;
    let n = ratio.round_ties_even();
    Ok(SeamQuantum {
        n_est: n as i64,
        n_residual: (ratio - n).abs(),
    })
}

/// Loop action `m oint v . dl` and its ratio to `h / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BohrSommerfeld {
    pub delta_t: f64,
    pub bs_lhs: f64,
    pub bs_ratio: f64,
    /// `|bs_ratio - delta_t omega0 / pi|` relative to `max(|bs_ratio|, 1)`.
    pub identity_residual: f64,
}

/// Evaluates `m oint v . dl = m c^2 delta_t` on the loop and divides by `h / 2 = pi hbar`.
pub fn bohr_sommerfeld_check<F: ModalField + ?Sized>(
    field: &F,
    lp: &LoopSpec,
    averaging: Averaging,
) -> Result<BohrSommerfeld> {
    let pc = *field.constants();
    let delta_t = trace_loop(field, lp, averaging, None)?.delta_t;
    Ok(bohr_sommerfeld_from_seam(delta_t, &pc))
}

/// Same rule starting from a seam duration already measured.
pub fn bohr_sommerfeld_from_seam(delta_t: f64, pc: &PhysicalConstants) -> BohrSommerfeld {
    let bs_lhs = pc.m() * pc.c() * pc.c() * delta_t;
    let bs_ratio = bs_lhs / (std::f64::consts::PI * pc.hbar());
    let seam_ratio = delta_t * pc.omega0() / std::f64::consts::PI;
    BohrSommerfeld {
        delta_t,
        bs_lhs,
        bs_ratio,
        identity_residual: (bs_ratio - seam_ratio).abs() / bs_ratio.abs().max(1.0),
    }
}

/// A spatial slice carrying a conserved density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnergySurface {
    /// Lab-time slice `t = const`.
    Flat { t: f64 },
    /// Any slicing `t = g(x)`, integrated in flux form.
    Sliced { slicing: Slicing },
}

impl EnergySurface {
    fn slicing(&self) -> Slicing {
        match *self {
            EnergySurface::Flat { t } => Slicing::Flat { t },
            EnergySurface::Sliced { slicing } => slicing,
        }
    }
}

/// Quadrature over `r < R`, a `z` interval and the full circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VolumeQuadrature {
    pub order: usize,
    pub r_panels: usize,
    pub z_panels: usize,
    pub n_theta: usize,
    /// Radial cutoff for fields without compact radial support.
    pub r_max: Option<f64>,
    /// Fail when the tail estimate beyond the cutoff exceeds this.
    pub tail_tolerance: Option<f64>,
}

impl Default for VolumeQuadrature {
    fn default() -> Self {
        Self {
            order: 8,
            r_panels: 64,
            z_panels: 8,
            n_theta: 16,
            r_max: None,
            tail_tolerance: None,
        }
    }
}

/// A volume integral on a slice, split into the lab-slice density and the tilt term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceIntegral {
    pub value: f64,
    /// Flux contribution from the slice tilt, already included in `value`.
    pub tilt_correction: f64,
    /// `int |density|` over `R < r < 2R`; zero for compactly supported fields.
    pub tail: f64,
}

/// Quadratic densities needed by the surface integrals.
struct Densities {
    t00: f64,
    /// `r p_theta`.
    l_density: f64,
    /// Energy flux `phi_t grad phi` contracted with `grad g`.
    energy_tilt: f64,
    /// Angular momentum flux contracted with `grad g`.
    l_tilt: f64,
}

fn densities<F: ModalField + ?Sized>(field: &F, p: &SpacetimePoint, grad_g: [f64; 3], averaging: Averaging) -> Densities {
    let pc = field.constants();
    let (c, mu2) = (pc.c(), pc.mass_wavenumber().powi(2));
    let c2 = c * c;
    let r = p.r();
    // Products <a b> either instantaneous or cycle-averaged from phasor sums.
    let ph = field.phasors(p, false);
    let sum = |f: &dyn Fn(&crate::field::ModePhasor) -> Complex64| -> Complex64 { ph.iter().map(f).sum() };
    let phi = sum(&|m| m.value);
    let d_t = sum(&|m| m.d_t);
    let g = [sum(&|m| m.grad_cyl[0]), sum(&|m| m.grad_cyl[1]), sum(&|m| m.grad_cyl[2])];
    let prod = |a: Complex64, b: Complex64| match averaging {
        Averaging::Instantaneous => a.re * b.re,
        Averaging::CycleAveraged => 0.5 * (a * b.conj()).re,
    };
    let g2: f64 = g.iter().map(|&v| prod(v, v)).sum();
    let t00 = 0.5 * (prod(d_t, d_t) / c2 + g2 + mu2 * prod(phi, phi));
    let lagr = 0.5 * (prod(d_t, d_t) / c2 - g2 - mu2 * prod(phi, phi));
    // d_theta phi = r (grad phi)_theta
    let d_theta = g[1] * r;
    let l_density = -prod(d_t, d_theta) / c2;
    let gg_dot = |a: Complex64| -> f64 { (0..3).map(|k| grad_g[k] * prod(a, g[k])).sum() };
    Densities {
        t00,
        l_density,
        energy_tilt: gg_dot(d_t),
        l_tilt: -gg_dot(d_theta) - lagr * r * grad_g[1],
    }
}

/// `(E, L_z)` integrals with their tilt corrections and tails.
fn surface_integrals<F: ModalField + ?Sized>(
    field: &F,
    surface: &EnergySurface,
    averaging: Averaging,
    quad: &VolumeQuadrature,
) -> Result<(SurfaceIntegral, SurfaceIntegral)> {
    let r_cut = match (field.support_radius(), quad.r_max) {
        (Some(r), _) => r,
        (None, Some(r)) => r,
        (None, None) => {
            return Err(Error::InvalidParameter(
                "field has no compact radial support; set r_max".into(),
            ))
        }
    };
    let (z0, z1) = field.axial_support().map_or((-0.5, 0.5), |h| (-h, h));
    let slicing = surface.slicing();
    let gl = GaussLegendre::new(quad.order);
    let zn = gl.composite(z0, z1, quad.z_panels);
    let thn = periodic_nodes(0.0, std::f64::consts::TAU, quad.n_theta);
    let shell = |ra: f64, rb: f64, abs: bool| -> [f64; 4] {
        gl.composite(ra, rb, quad.r_panels)
            .par_iter()
            .map(|&(r, wr)| {
                let mut acc = [0.0; 4];
                for &(th, wth) in &thn {
                    let (sn, cs) = th.sin_cos();
                    for &(z, wz) in &zn {
                        let x = [r * cs, r * sn, z];
                        let gc = slicing.gradient(x);
                        let grad_cyl = [cs * gc[0] + sn * gc[1], -sn * gc[0] + cs * gc[1], gc[2]];
                        let p = SpacetimePoint::new(slicing.time_at(x), x[0], x[1], x[2]);
                        let d = densities(field, &p, grad_cyl, averaging);
                        let w = wr * r * wth * wz;
                        let vals = [d.t00, d.energy_tilt, d.l_density, d.l_tilt];
                        for (a, v) in acc.iter_mut().zip(vals) {
                            *a += w * if abs { v.abs() } else { v };
                        }
                    }
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold([0.0; 4], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
    };
    let core = shell(0.0, r_cut, false);
    let (tail_e, tail_l) = if field.support_radius().is_some() {
        (0.0, 0.0)
    } else {
        let t = shell(r_cut, 2.0 * r_cut, true);
        (t[0] + t[1], t[2] + t[3])
    };
    if let Some(tol) = quad.tail_tolerance {
        let worst = tail_e.max(tail_l);
        if worst > tol {
            return Err(Error::TailBound { tail: worst, tolerance: tol });
        }
    }
    let energy = SurfaceIntegral {
        value: core[0] + core[1],
        tilt_correction: core[1],
        tail: tail_e,
    };
    let lz = SurfaceIntegral {
        value: core[2] + core[3],
        tilt_correction: core[3],
        tail: tail_l,
    };
    if !(energy.value.is_finite() && lz.value.is_finite()) {
        return Err(Error::NonFinite("surface integral".into()));
    }
    Ok((energy, lz))
}

/// `E_tot = int T00 d^3x` on the slice (flux form on tilted slices).
pub fn total_energy<F: ModalField + ?Sized>(
    field: &F,
    surface: &EnergySurface,
    averaging: Averaging,
    quad: &VolumeQuadrature,
) -> Result<SurfaceIntegral> {
    Ok(surface_integrals(field, surface, averaging, quad)?.0)
}

/// `L_z = int r p_theta d^3x` on the slice (flux form on tilted slices).
pub fn angular_momentum<F: ModalField + ?Sized>(
    field: &F,
    surface: &EnergySurface,
    averaging: Averaging,
    quad: &VolumeQuadrature,
) -> Result<SurfaceIntegral> {
    Ok(surface_integrals(field, surface, averaging, quad)?.1)
}

/// Default localisation tapers for a mode of radial wavenumber `k_r`: a radial
/// taper from `30 / k` to `50 / k` and an axial taper from 50 to 100 mass lengths.
pub fn default_windows(k_r: f64, constants: &PhysicalConstants) -> Result<(Taper, Taper)> {
    let mu = constants.mass_wavenumber();
    let scale = if k_r > 0.0 { 1.0 / k_r } else { 1.0 / mu };
    Ok((Taper::new(30.0 * scale, 20.0 * scale)?, Taper::new(50.0 / mu, 50.0 / mu)?))
}

/// Amplitude factor bringing the flat-slice energy to `target`.
pub fn energy_normalization<F: ModalField + ?Sized>(
    field: &F,
    target: f64,
    averaging: Averaging,
    quad: &VolumeQuadrature,
) -> Result<f64> {
    let e = total_energy(field, &EnergySurface::Flat { t: 0.0 }, averaging, quad)?.value;
    if !(e > 0.0) {
        return Err(Error::InvalidParameter(format!("cannot normalise a field of energy {e}")));
    }
    Ok((target / e).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizationFlags {
    pub quantized: bool,
    pub no_natural_surface: bool,
    pub relativistic: bool,
}

/// Everything the closure check measures. Integer-derived fields are absent
/// when no natural surface exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationReport {
    pub delta_t: f64,
    pub n_est: Option<i64>,
    pub n_residual: Option<f64>,
    pub bs_lhs: f64,
    pub bs_ratio: f64,
    #[serde(rename = "L_z")]
    pub l_z: f64,
    #[serde(rename = "E_tot")]
    pub e_tot: f64,
    #[serde(rename = "L_z_predicted")]
    pub l_z_predicted: Option<f64>,
    pub spread_bound: Option<f64>,
    /// `L_z m c^2 / (E_tot hbar)`.
    pub lz_ratio: f64,
    pub seam_spread: f64,
    pub seam_tolerance: f64,
    /// Whether `|L_z - L_z_predicted| <= max(spread_bound, quadrature bound)`.
    pub closure_ok: Option<bool>,
    /// Tilt corrections from a helical slice with the measured seam.
    pub energy_tilt_correction: f64,
    pub lz_tilt_correction: f64,
    pub flags: QuantizationFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantizationOptions {
    pub averaging: Averaging,
    pub volume: VolumeQuadrature,
    /// Relative quadrature bound on `L_z` used by the closure check.
    pub quadrature_bound: f64,
    /// Relative seam tolerance; `None` means `5 alpha^2`.
    pub tol_seam: Option<f64>,
}

impl Default for QuantizationOptions {
    fn default() -> Self {
        Self {
            averaging: Averaging::CycleAveraged,
            volume: VolumeQuadrature::default(),
            quadrature_bound: 0.005,
            tol_seam: None,
        }
    }
}

/// Tolerance for the quantized flag: `max(5 alpha^2, 0.01)`.
pub fn quantized_tolerance(alpha: f64) -> f64 {
    (5.0 * alpha * alpha).max(0.01)
}

/// Runs the whole chain: seam uniformity, integer seam, loop action, `E_tot`,
/// `L_z` and the closure `L_z ~ (n/2) hbar E_tot / (m c^2)`.
///
/// `field` supplies the energy and angular momentum integrals and should be
/// localised; `mesh` is the traced surface supplying the seam.
pub fn quantization_chain<F: ModalField + ?Sized>(
    field: &F,
    mesh: &NaturalSurfaceMesh,
    opts: &QuantizationOptions,
) -> Result<QuantizationReport> {
    let pc = *field.constants();
    let alpha = field.alpha();
    let tol_seam = opts.tol_seam.unwrap_or(5.0 * alpha * alpha);
    let seam = crate::hypersurface::seam_uniformity(&mesh.mesh, tol_seam);
    let no_natural_surface = !seam.is_uniform || !mesh.diagnostics.integrable;
    let delta_t = seam.mean_jump;
    let bs = bohr_sommerfeld_from_seam(delta_t, &pc);
    let t_slice = mesh.seed.t;
    let (energy, lz) = surface_integrals(field, &EnergySurface::Flat { t: t_slice }, opts.averaging, &opts.volume)?;
    let helical = Slicing::Helical {
        t0: t_slice,
        theta0: mesh.mesh.grid.theta0,
        rate: delta_t / std::f64::consts::TAU,
    };
    let (e_tilt, l_tilt) = surface_integrals(field, &EnergySurface::Sliced { slicing: helical }, opts.averaging, &opts.volume)?;
    let rest = pc.rest_energy();
    let lz_ratio = if energy.value != 0.0 {
        lz.value * rest / (energy.value * pc.hbar())
    } else {
        0.0
    };
    let mut report = QuantizationReport {
        delta_t,
        n_est: None,
        n_residual: None,
        bs_lhs: bs.bs_lhs,
        bs_ratio: bs.bs_ratio,
        l_z: lz.value,
        e_tot: energy.value,
        l_z_predicted: None,
        spread_bound: None,
        lz_ratio,
        seam_spread: seam.spread,
        seam_tolerance: tol_seam,
        closure_ok: None,
        energy_tilt_correction: e_tilt.tilt_correction,
        lz_tilt_correction: l_tilt.tilt_correction,
        flags: QuantizationFlags {
            quantized: false,
            no_natural_surface,
            relativistic: alpha >= 1.0,
        },
    };
    if no_natural_surface {
        return Ok(report);
    }
    let q = quantize_seam(delta_t, &pc)?;
    let n = q.n_est as f64;
    let predicted = 0.5 * n * pc.hbar() * energy.value / rest;
    // The spread estimate alpha^2 n^2 hbar is quoted for E_tot = m c^2; it scales with E_tot.
    let spread = alpha * alpha * n * n * pc.hbar() * (energy.value / rest).abs();
    let bound = spread.max(opts.quadrature_bound * predicted.abs().max(pc.hbar() * (energy.value / rest).abs()));
    report.n_est = Some(q.n_est);
    report.n_residual = Some(q.n_residual);
    report.l_z_predicted = Some(predicted);
    report.spread_bound = Some(spread);
    report.closure_ok = Some((lz.value - predicted).abs() <= bound);
    report.flags.quantized = q.n_residual < quantized_tolerance(alpha);
    Ok(report)
}
