use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ModalField, SpacetimePoint};
use crate::error::{Error, Result};

/// A spacelike time slice `t = g(x)` defining the primed time `t' = t - g(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Slicing {
    Flat {
        t: f64,
    },
    /// `t = t0 + slope . (x - origin)`.
    Tilted {
        t0: f64,
        origin: [f64; 3],
        slope: [f64; 3],
    },
    /// `t = t0 + rate * ((theta - theta0) mod 2 pi)`, a corkscrew with its seam at `theta0`.
    Helical {
        t0: f64,
        theta0: f64,
        rate: f64,
    },
}

impl Slicing {
    pub fn time_at(&self, x: [f64; 3]) -> f64 {
        match *self {
            Slicing::Flat { t } => t,
            Slicing::Tilted { t0, origin, slope } => {
                t0 + (0..3).map(|k| slope[k] * (x[k] - origin[k])).sum::<f64>()
            }
            Slicing::Helical { t0, theta0, rate } => {
                let theta = x[1].atan2(x[0]);
                t0 + rate * (theta - theta0).rem_euclid(std::f64::consts::TAU)
            }
        }
    }

    /// Spatial gradient of `g` (Cartesian).
    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        match *self {
            Slicing::Flat { .. } => [0.0; 3],
            Slicing::Tilted { slope, .. } => slope,
            Slicing::Helical { rate, .. } => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                if r2 == 0.0 {
                    [f64::INFINITY, f64::INFINITY, 0.0]
                } else {
                    [-rate * x[1] / r2, rate * x[0] / r2, 0.0]
                }
            }
        }
    }
}

/// The 4-volume `0 <= t' <= duration`, `|x - center| <= c * duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeWindow {
    pub center: [f64; 3],
    pub duration: f64,
    pub spatial_points: usize,
    pub time_points: usize,
}

impl EnvelopeWindow {
    pub fn new(center: [f64; 3], duration: f64) -> Self {
        Self {
            center,
            duration,
            spatial_points: 7,
            time_points: 9,
        }
    }
}

/// Envelopes of `phi = phi_c cos(omega0 t') + phi_s sin(omega0 t')` sampled in a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopePair {
    pub window: EnvelopeWindow,
    /// Spatial sample points inside the window ball.
    pub points: Vec<[f64; 3]>,
    /// Primed sample times.
    pub times: Vec<f64>,
    /// `phi_c[t_index * points.len() + point_index]`.
    pub phi_c: Vec<f64>,
    pub phi_s: Vec<f64>,
    /// `max |phi_s| / max |phi_c|` on the slice `t' = 0`.
    pub surface_ratio: f64,
    /// `max |phi_s| / max |phi_c|` over the whole window.
    pub window_ratio: f64,
    /// Max relative error when the `t' = 0` envelopes are held fixed across the window.
    pub frozen_reconstruction_error: f64,
    /// Max relative error of the sampled-envelope reconstruction (rounding level).
    pub reconstruction_error: f64,
    /// `alpha * omega0 * duration`; the form is trustworthy only while this is small.
    pub alpha_omega_dt: f64,
}

/// Splits the field into slowly varying envelopes of the `omega0` carrier in the primed frame.
///
/// Each mode contributes `A_j(x, t) e^{i omega0 t'}` to the complex envelope, which is exact:
/// the real and imaginary parts reconstruct the field identically. The physically
/// meaningful diagnostics are the `phi_s / phi_c` ratios and the error incurred by
/// freezing the `t' = 0` envelopes.
pub fn envelope_decompose<F: ModalField + ?Sized>(
    field: &F,
    window: &EnvelopeWindow,
    slicing: &Slicing,
) -> Result<EnvelopePair> {
    if !(window.duration.is_finite()) {
        return Err(Error::NonFinite("window duration".into()));
    }
    if window.duration <= 0.0 || window.spatial_points == 0 || window.time_points < 2 {
        return Err(Error::ZeroVolumeWindow);
    }
    let pc = *field.constants();
    let w0 = pc.omega0();
    let radius = pc.c() * window.duration;

    let n = window.spatial_points;
    let mut points = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let u = |q: usize| if n == 1 { 0.0 } else { -1.0 + 2.0 * q as f64 / (n - 1) as f64 };
                let off = [u(i) * radius, u(j) * radius, u(k) * radius];
                if off.iter().map(|v| v * v).sum::<f64>() <= radius * radius * (1.0 + 1e-12) {
                    points.push([
                        window.center[0] + off[0],
                        window.center[1] + off[1],
                        window.center[2] + off[2],
                    ]);
                }
            }
        }
    }
    let times: Vec<f64> = (0..window.time_points)
        .map(|k| window.duration * k as f64 / (window.time_points - 1) as f64)
        .collect();

    let mut phi_c = Vec::with_capacity(points.len() * times.len());
    let mut phi_s = Vec::with_capacity(points.len() * times.len());
    let mut frozen: Vec<Complex64> = Vec::with_capacity(points.len());
    let mut max_phi = 0.0_f64;
    let mut frozen_err = 0.0_f64;
    let mut recon_err = 0.0_f64;
    for (ti, &tp) in times.iter().enumerate() {
        for (pi, x) in points.iter().enumerate() {
            let t = tp + slicing.time_at(*x);
            let p = SpacetimePoint::new(t, x[0], x[1], x[2]);
            let carrier = Complex64::from_polar(1.0, w0 * tp);
            let ph = field.phasors(&p, false);
            let env: Complex64 = ph.iter().map(|m| m.value * carrier).sum();
            let phi: f64 = ph.iter().map(|m| m.value.re).sum();
            if ti == 0 {
                frozen.push(env);
            }
            let (s, c) = (w0 * tp).sin_cos();
            let recon = env.re * c + env.im * s;
            let recon_frozen = frozen[pi].re * c + frozen[pi].im * s;
            max_phi = max_phi.max(phi.abs());
            recon_err = recon_err.max((recon - phi).abs());
            frozen_err = frozen_err.max((recon_frozen - phi).abs());
            phi_c.push(env.re);
            phi_s.push(env.im);
        }
    }
    let np = points.len();
    let ratio = |range: std::ops::Range<usize>| {
        let mc = phi_c[range.clone()].iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let ms = phi_s[range].iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if mc == 0.0 {
            if ms == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            ms / mc
        }
    };
    let scale = if max_phi > 0.0 { max_phi } else { 1.0 };
    Ok(EnvelopePair {
        window: *window,
        surface_ratio: ratio(0..np),
        window_ratio: ratio(0..phi_c.len()),
        frozen_reconstruction_error: frozen_err / scale,
        reconstruction_error: recon_err / scale,
        alpha_omega_dt: field.alpha() * w0 * window.duration,
        points,
        times,
        phi_c,
        phi_s,
    })
}
