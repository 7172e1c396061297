//! Stress-energy components and the local group velocity they define.
//!
//! Conventions, with `L = (1/2)[phi_t^2/c^2 - |grad phi|^2 - mu^2 phi^2]` and `mu = m c / hbar`:
//!
//! * `T00 = (1/2)[phi_t^2/c^2 + |grad phi|^2 + mu^2 phi^2]` (canonical energy density),
//! * `T0i = -(phi_t / c) d_i phi`, i.e. `c` times the momentum density `g = -(phi_t/c^2) grad phi`,
//! * `p_theta = g_theta = -(phi_t / c^2)(1/r) d_theta phi`,
//! * `v = c T0i / T00`, the energy-flow velocity.
//!
//! `T0i` here is the contravariant component. The covariant `phi_t d_i phi` has
//! the opposite sign and is available as [`StressEnergySample::t0i_covariant`].
//! With this sign a mode `cos(l theta - omega t)` with `l > 0` carries positive
//! `p_theta`, positive `L_z`, and a flow whose simultaneity surfaces follow its crests.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{polar, ModalField, ScalarField, SpacetimePoint};

/// Relative vacuum floor: `T00` below `1e-12 * peak T00` has no defined flow.
pub const DEFAULT_VACUUM_FLOOR_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Instantaneous,
    /// Averaged over the fast carrier oscillation; difference-frequency beats are kept.
    #[default]
    CycleAveraged,
}

impl std::fmt::Display for Averaging {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Averaging::Instantaneous => "instantaneous",
            Averaging::CycleAveraged => "cycle_averaged",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressEnergySample {
    pub t00: f64,
    /// Cartesian `(T0x, T0y, T0z)`.
    pub t0i: [f64; 3],
    /// Cylindrical `(T0r, T0theta, T0z)`.
    pub t0i_cyl: [f64; 3],
    pub p_theta: f64,
    /// Cartesian local group velocity; NaN where `T00 = 0`.
    pub v: [f64; 3],
    /// Cylindrical `(v_r, v_theta, v_z)`.
    pub v_cyl: [f64; 3],
    pub averaging: Averaging,
    /// `|v| > c` beyond rounding.
    pub superluminal: bool,
}

impl StressEnergySample {
    /// Covariant components `phi_t d_i phi / c` as they appear in the Lagrangian.
    pub fn t0i_covariant(&self) -> [f64; 3] {
        self.t0i.map(|v| -v)
    }

    pub fn speed(&self) -> f64 {
        self.v.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

struct Densities {
    /// `<phi_t^2>`, `<|grad phi|^2>`, `<phi^2>`
    tt: f64,
    gg: f64,
    pp: f64,
    /// `<phi_t d_i phi>` in cylindrical components
    tg: [f64; 3],
}

fn averaged_densities<F: ModalField + ?Sized>(field: &F, p: &SpacetimePoint) -> Densities {
    let ph = field.phasors(p, false);
    let zero = Complex64::new(0.0, 0.0);
    let value: Complex64 = ph.iter().map(|m| m.value).sum();
    let d_t: Complex64 = ph.iter().map(|m| m.d_t).sum();
    let mut g = [zero; 3];
    for m in &ph {
        for k in 0..3 {
            g[k] += m.grad_cyl[k];
        }
    }
    let mean = |a: Complex64, b: Complex64| 0.5 * (a * b.conj()).re;
    Densities {
        tt: mean(d_t, d_t),
        gg: g.iter().map(|c| mean(*c, *c)).sum(),
        pp: mean(value, value),
        tg: [mean(d_t, g[0]), mean(d_t, g[1]), mean(d_t, g[2])],
    }
}

fn instantaneous_densities<F: ScalarField + ?Sized>(field: &F, p: &SpacetimePoint) -> Densities {
    let s = field.sample(p, false);
    Densities {
        tt: s.d_t * s.d_t,
        gg: s.grad.iter().map(|v| v * v).sum(),
        pp: s.phi * s.phi,
        tg: s.grad_cyl.map(|g| s.d_t * g),
    }
}

fn assemble<F: ScalarField + ?Sized>(field: &F, p: &SpacetimePoint, d: Densities, averaging: Averaging) -> StressEnergySample {
    let pc = field.constants();
    let c = pc.c();
    let mu2 = pc.mass_wavenumber().powi(2);
    let t00 = 0.5 * (d.tt / (c * c) + d.gg + mu2 * d.pp);
    let t0i_cyl = d.tg.map(|v| -v / c);
    let (r, theta) = polar(p);
    let _ = r;
    let (s, co) = theta.sin_cos();
    let to_cart = |a: [f64; 3]| [co * a[0] - s * a[1], s * a[0] + co * a[1], a[2]];
    let t0i = to_cart(t0i_cyl);
    let (v_cyl, v) = if t00 > 0.0 {
        let vc = t0i_cyl.map(|q| c * q / t00);
        (vc, to_cart(vc))
    } else {
        ([f64::NAN; 3], [f64::NAN; 3])
    };
    let speed = v.iter().map(|q| q * q).sum::<f64>().sqrt();
    StressEnergySample {
        t00,
        t0i,
        t0i_cyl,
        p_theta: t0i_cyl[1] / c,
        v,
        v_cyl,
        averaging,
        superluminal: speed > c * (1.0 + 1e-9),
    }
}

/// `T00`, `T0i`, `p_theta` and `v` at a point, instantaneous or carrier-averaged.
pub fn stress_energy_at<F: ModalField + ?Sized>(field: &F, p: &SpacetimePoint, averaging: Averaging) -> StressEnergySample {
    let d = match averaging {
        Averaging::Instantaneous => instantaneous_densities(field, p),
        Averaging::CycleAveraged => averaged_densities(field, p),
    };
    assemble(field, p, d, averaging)
}

/// Instantaneous stress-energy of any sampled field (no phasors needed).
pub fn instantaneous_stress_energy<F: ScalarField + ?Sized>(field: &F, p: &SpacetimePoint) -> StressEnergySample {
    let d = instantaneous_densities(field, p);
    assemble(field, p, d, Averaging::Instantaneous)
}

/// `v = c T0i / T00`; errors in the vacuum region `T00 <= floor`.
pub fn local_group_velocity(sample: &StressEnergySample, floor: f64, point: &SpacetimePoint) -> Result<[f64; 3]> {
    if !(sample.t00 > floor) {
        return Err(Error::VacuumRegion {
            t: point.t,
            x: point.x,
            y: point.y,
            z: point.z,
            t00: sample.t00,
            floor,
        });
    }
    Ok(sample.v)
}

/// `p_theta = -(phi_t / c^2) (1/r) d_theta phi`.
pub fn momentum_density_theta<F: ModalField + ?Sized>(field: &F, p: &SpacetimePoint, averaging: Averaging) -> f64 {
    stress_energy_at(field, p, averaging).p_theta
}

/// Absolute vacuum floor `rel * max T00` over a set of samples.
pub fn vacuum_floor<'a>(samples: impl IntoIterator<Item = &'a StressEnergySample>, rel: f64) -> f64 {
    rel * samples.into_iter().fold(0.0_f64, |a, s| a.max(s.t00))
}
