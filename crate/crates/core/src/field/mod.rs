//! Exact Klein-Gordon fields built from cylindrical modes.
//!
//! A mode is `A J_|l|(k_r r) cos(l theta + k_z z - omega t + phase + axial_phase)` with
//! `omega^2 = c^2 (k_r^2 + k_z^2) + omega0^2`. Positive `l` rotates toward `+theta`.
//! Everything is evaluated through complex phasors so that cycle averages of
//! quadratic quantities are available in closed form.

mod envelope;
mod presets;
mod window;

pub use envelope::{envelope_decompose, EnvelopePair, EnvelopeWindow, Slicing};
pub use presets::{build_field, FieldSpec, ModeSpec, PRESETS};
pub use window::{Taper, WindowedField};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_jet;
use crate::error::{Error, Result};

/// `c`, `hbar`, `m` and the derived Compton angular frequency `omega0 = m c^2 / hbar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConstants", into = "RawConstants")]
pub struct PhysicalConstants {
    c: f64,
    hbar: f64,
    m: f64,
    omega0: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    #[serde(default = "one")]
    c: f64,
    #[serde(default = "one")]
    hbar: f64,
    #[serde(default = "one")]
    m: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawConstants> for PhysicalConstants {
    type Error = Error;
    fn try_from(raw: RawConstants) -> Result<Self> {
        PhysicalConstants::new(raw.c, raw.hbar, raw.m)
    }
}

impl From<PhysicalConstants> for RawConstants {
    fn from(pc: PhysicalConstants) -> Self {
        RawConstants {
            c: pc.c,
            hbar: pc.hbar,
            m: pc.m,
        }
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::natural()
    }
}

impl PhysicalConstants {
    pub fn new(c: f64, hbar: f64, m: f64) -> Result<Self> {
        for (name, v) in [("c", c), ("hbar", hbar), ("m", m)] {
            if !v.is_finite() {
                return Err(Error::NonFinite(name.into()));
            }
            if v <= 0.0 {
                return Err(Error::InvalidConstants(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            c,
            hbar,
            m,
            omega0: m * c * c / hbar,
        })
    }

    /// `c = hbar = m = 1`.
    pub fn natural() -> Self {
        Self::new(1.0, 1.0, 1.0).expect("unit constants are valid")
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Inverse reduced Compton length `m c / hbar`.
    pub fn mass_wavenumber(&self) -> f64 {
        self.m * self.c / self.hbar
    }

    /// Planck's constant `h = 2 pi hbar`.
    pub fn planck(&self) -> f64 {
        std::f64::consts::TAU * self.hbar
    }

    pub fn rest_energy(&self) -> f64 {
        self.m * self.c * self.c
    }

    /// Dispersion relation `omega = sqrt(c^2 k^2 + omega0^2)`.
    pub fn dispersion(&self, k: f64) -> f64 {
        (self.c * self.c * k * k + self.omega0 * self.omega0).sqrt()
    }
}

/// A spacetime point in lab Cartesian coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    pub fn cylindrical(t: f64, r: f64, theta: f64, z: f64) -> Self {
        Self {
            t,
            x: r * theta.cos(),
            y: r * theta.sin(),
            z,
        }
    }

    pub fn r(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn theta(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn space(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Second-derivative ingredients of the d'Alembertian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondDerivatives {
    pub d_tt: f64,
    pub laplacian: f64,
}

/// `phi` and its analytic 4-gradient at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub phi: f64,
    pub d_t: f64,
    /// `(d/dx, d/dy, d/dz)`.
    pub grad: [f64; 3],
    /// `(d/dr, (1/r) d/dtheta, d/dz)`.
    pub grad_cyl: [f64; 3],
    pub second: Option<SecondDerivatives>,
}

/// Complex phasor of one mode at a spacetime point; the physical value is the real part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePhasor {
    pub omega: f64,
    pub value: Complex64,
    pub d_t: Complex64,
    /// `(d/dr, (1/r) d/dtheta, d/dz)`.
    pub grad_cyl: [Complex64; 3],
    pub laplacian: Option<Complex64>,
}

/// One exact cylindrical Klein-Gordon mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylindricalMode {
    pub amplitude: f64,
    pub l: i32,
    pub k_r: f64,
    pub k_z: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub axial_phase: f64,
    #[serde(skip)]
    omega: f64,
}

impl CylindricalMode {
    pub fn new(amplitude: f64, l: i32, k_r: f64, k_z: f64) -> Self {
        Self {
            amplitude,
            l,
            k_r,
            k_z,
            phase: 0.0,
            axial_phase: 0.0,
            omega: f64::NAN,
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_axial_phase(mut self, axial_phase: f64) -> Self {
        self.axial_phase = axial_phase;
        self
    }

    /// Total wavenumber `sqrt(k_r^2 + k_z^2)`.
    pub fn wavenumber(&self) -> f64 {
        self.k_r.hypot(self.k_z)
    }

    /// Angular frequency stored at field construction.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("amplitude", self.amplitude),
            ("k_r", self.k_r),
            ("k_z", self.k_z),
            ("phase", self.phase),
            ("axial_phase", self.axial_phase),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("mode {name}")));
            }
        }
        if self.k_r < 0.0 {
            return Err(Error::InvalidParameter(format!("k_r must be >= 0, got {}", self.k_r)));
        }
        Ok(())
    }

    pub(crate) fn phasor(&self, t: f64, r: f64, theta: f64, z: f64, second: bool) -> ModePhasor {
        let n = self.l.unsigned_abs();
        let x = self.k_r * r;
        let jet = bessel_jet(n, x);
        let arg = self.l as f64 * theta + self.k_z * z - self.omega * t + self.phase + self.axial_phase;
        let e = Complex64::from_polar(self.amplitude, arg);
        let i = Complex64::i();
        let value = e * jet.value;
        let d_r = e * (self.k_r * jet.d1);
        let d_theta = if self.l == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            // l J_n(k r) / r = l k J_n(x) / x stays finite on the axis
            i * e * (self.l as f64 * self.k_r * jet.over_x)
        };
        let d_z = i * value * self.k_z;
        let laplacian = second.then(|| {
            let nf = n as f64;
            let radial = if x < 0.1 {
                -jet.value
            } else {
                jet.d2 + jet.d1 / x - nf * nf * jet.over_x / x
            };
            e * (self.k_r * self.k_r * radial) - value * (self.k_z * self.k_z)
        });
        ModePhasor {
            omega: self.omega,
            value,
            d_t: -i * value * self.omega,
            grad_cyl: [d_r, d_theta, d_z],
            laplacian,
        }
    }
}

/// Rigid time translation and rotation about `z` of the evaluation frame.
///
/// Evaluating at frame coordinates `(t, r, theta, z)` returns the lab field at
/// `(t + time_shift, r, theta + rotation, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Frame {
    pub time_shift: f64,
    pub rotation: f64,
}

/// Anything that can be sampled as a real scalar field.
pub trait ScalarField: Send + Sync {
    fn constants(&self) -> &PhysicalConstants;

    fn sample(&self, p: &SpacetimePoint, second: bool) -> FieldSample;

    /// Sum of mode amplitude magnitudes; the normalisation scale for residuals.
    fn amplitude_scale(&self) -> f64;

    /// Radius beyond which the field vanishes identically, if any.
    fn support_radius(&self) -> Option<f64> {
        None
    }

    /// Half-length `h` such that the field vanishes for `|z| > h`, if any.
    fn axial_support(&self) -> Option<f64> {
        None
    }
}

/// A field given as a sum of oscillating modes with known phasors.
pub trait ModalField: ScalarField {
    fn phasors(&self, p: &SpacetimePoint, second: bool) -> Vec<ModePhasor>;

    /// Non-relativistic parameter `k_max hbar / (m c)`.
    fn alpha(&self) -> f64;

    /// Upper bound over time of `|dphi/dt|` at a point (exact for a single mode).
    fn d_t_envelope(&self, p: &SpacetimePoint) -> f64 {
        self.phasors(p, false).iter().map(|ph| ph.d_t.norm()).sum()
    }
}

pub(crate) fn sample_from_phasors(phasors: &[ModePhasor], theta: f64, second: bool) -> FieldSample {
    let mut phi = 0.0;
    let mut d_t = 0.0;
    let mut g = [0.0; 3];
    let mut lap = 0.0;
    let mut d_tt = 0.0;
    for ph in phasors {
        phi += ph.value.re;
        d_t += ph.d_t.re;
        for (acc, c) in g.iter_mut().zip(&ph.grad_cyl) {
            *acc += c.re;
        }
        if second {
            lap += ph.laplacian.map_or(0.0, |c| c.re);
            d_tt += -ph.omega * ph.omega * ph.value.re;
        }
    }
    let (s, c) = theta.sin_cos();
    FieldSample {
        phi,
        d_t,
        grad: [c * g[0] - s * g[1], s * g[0] + c * g[1], g[2]],
        grad_cyl: g,
        second: second.then_some(SecondDerivatives { d_tt, laplacian: lap }),
    }
}

/// Cylindrical coordinates `(r, theta)` of a point, with `theta = 0` on the axis.
pub(crate) fn polar(p: &SpacetimePoint) -> (f64, f64) {
    let r = p.r();
    let theta = if r == 0.0 { 0.0 } else { p.theta() };
    (r, theta)
}

/// A validated finite superposition of exact modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldState {
    constants: PhysicalConstants,
    modes: Vec<CylindricalMode>,
    frame: Frame,
}

impl FieldState {
    pub fn new(constants: PhysicalConstants, modes: Vec<CylindricalMode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::EmptyModeList);
        }
        let modes = modes
            .into_iter()
            .map(|mut m| {
                m.validate()?;
                m.omega = constants.dispersion(m.wavenumber());
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            constants,
            modes,
            frame: Frame::default(),
        })
    }

    pub fn modes(&self) -> &[CylindricalMode] {
        &self.modes
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    /// Whether `alpha >= 1`, outside the non-relativistic regime.
    pub fn is_relativistic(&self) -> bool {
        self.alpha() >= 1.0
    }

    /// Multiplies every amplitude by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for m in &mut out.modes {
            m.amplitude *= s;
        }
        out
    }

    /// Linear superposition of two fields sharing constants and frame.
    pub fn superpose(&self, other: &FieldState) -> Result<Self> {
        if self.constants != other.constants {
            return Err(Error::InvalidParameter("superposed fields must share constants".into()));
        }
        let mut out = self.clone();
        out.modes.extend_from_slice(&other.modes);
        Ok(out)
    }

    /// Copy with one mode's frequency multiplied by `factor`; no longer a KGE solution.
    pub fn with_detuned_mode(&self, index: usize, factor: f64) -> Self {
        let mut out = self.clone();
        out.modes[index].omega *= factor;
        out
    }
}

impl ScalarField for FieldState {
    fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    fn sample(&self, p: &SpacetimePoint, second: bool) -> FieldSample {
        let (_, theta) = polar(p);
        sample_from_phasors(&self.phasors(p, second), theta, second)
    }

    fn amplitude_scale(&self) -> f64 {
        self.modes.iter().map(|m| m.amplitude.abs()).sum()
    }
}

impl ModalField for FieldState {
    fn phasors(&self, p: &SpacetimePoint, second: bool) -> Vec<ModePhasor> {
        let (r, theta) = polar(p);
        let t = p.t + self.frame.time_shift;
        let th = theta + self.frame.rotation;
        self.modes
            .iter()
            .map(|m| m.phasor(t, r, th, p.z, second))
            .collect()
    }

    fn alpha(&self) -> f64 {
        let kmax = self.modes.iter().map(|m| m.wavenumber()).fold(0.0, f64::max);
        kmax / self.constants.mass_wavenumber()
    }
}

/// Closed-form `phi` and 4-gradient; second derivatives when `second` is set.
pub fn evaluate<F: ScalarField + ?Sized>(field: &F, point: &SpacetimePoint, second: bool) -> Result<FieldSample> {
    if !point.is_finite() {
        return Err(Error::NonFinite("spacetime point".into()));
    }
    Ok(field.sample(point, second))
}

/// `alpha = k_max hbar / (m c)`.
pub fn alpha_parameter<F: ModalField + ?Sized>(field: &F) -> f64 {
    field.alpha()
}

/// `(box phi + mu^2 phi) / (mu^2 * amplitude scale)` with `mu = m c / hbar`.
pub fn kge_residual<F: ScalarField + ?Sized>(field: &F, point: &SpacetimePoint) -> Result<f64> {
    let s = evaluate(field, point, true)?;
    let sec = s.second.expect("second derivatives requested");
    let pc = field.constants();
    let mu2 = pc.mass_wavenumber().powi(2);
    let c2 = pc.c() * pc.c();
    let scale = field.amplitude_scale().max(f64::MIN_POSITIVE);
    Ok((sec.d_tt / c2 - sec.laplacian + mu2 * s.phi) / (mu2 * scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotor(l: i32, alpha: f64) -> FieldState {
        FieldState::new(PhysicalConstants::natural(), vec![CylindricalMode::new(1.0, l, alpha, 0.0)]).unwrap()
    }

    fn mode_value(m: &CylindricalMode, p: &SpacetimePoint) -> f64 {
        // direct real formula, independent of the phasor path
        let r = p.r();
        let th = p.theta();
        m.amplitude
            * crate::bessel::bessel_j(m.l.abs(), m.k_r * r)
            * (m.l as f64 * th + m.k_z * p.z - m.omega * p.t + m.phase + m.axial_phase).cos()
    }

    #[test]
    fn omega0_recomputes_exactly() {
        let pc = PhysicalConstants::new(2.997_924_58e8, 1.054_571_817e-34, 9.109_383_7e-31).unwrap();
        assert_eq!(pc.omega0(), pc.m() * pc.c() * pc.c() / pc.hbar());
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(matches!(PhysicalConstants::new(0.0, 1.0, 1.0), Err(Error::InvalidConstants(_))));
        assert!(matches!(PhysicalConstants::new(1.0, -1.0, 1.0), Err(Error::InvalidConstants(_))));
        assert!(matches!(PhysicalConstants::new(1.0, 1.0, f64::NAN), Err(Error::NonFinite(_))));
    }

    #[test]
    fn rejects_empty_and_nan_modes() {
        let e = FieldState::new(PhysicalConstants::natural(), vec![]).unwrap_err();
        assert_eq!(e.to_string(), "empty mode list");
        let bad = CylindricalMode::new(f64::NAN, 0, 0.0, 0.0);
        assert!(matches!(
            FieldState::new(PhysicalConstants::natural(), vec![bad]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn uniform_oscillator_values() {
        let f = FieldState::new(PhysicalConstants::natural(), vec![CylindricalMode::new(1.0, 0, 0.0, 0.0)]).unwrap();
        let s = evaluate(&f, &SpacetimePoint::new(0.0, 3.0, -2.0, 1.0), false).unwrap();
        assert_eq!(s.phi, 1.0);
        assert_eq!(s.d_t, 0.0);
        assert_eq!(s.grad, [0.0; 3]);
        let q = evaluate(&f, &SpacetimePoint::new(PI / 2.0, 0.0, 0.0, 0.0), false).unwrap();
        assert!(q.phi.abs() < 1e-15);
        assert!((q.d_t + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotor_dispersion() {
        let f = rotor(1, 0.05);
        let w = f.modes()[0].omega();
        assert!((w - (1.0f64 + 0.0025).sqrt()).abs() < 1e-15);
        assert!((f.alpha() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn crest_has_zero_time_and_angle_derivative() {
        let f = rotor(1, 0.05);
        let w = f.modes()[0].omega();
        let r = crate::bessel::first_maximum(1) / 0.05;
        let t = 0.7;
        let p = SpacetimePoint::cylindrical(t, r, w * t, 0.0);
        let s = evaluate(&f, &p, false).unwrap();
        assert!(s.d_t.abs() < 1e-12);
        assert!(s.grad_cyl[1].abs() < 1e-12);
        assert!(s.grad_cyl[0].abs() < 1e-12, "radial derivative vanishes at the Bessel maximum");
        // finite-difference oracle on the raw formula
        let m = &f.modes()[0];
        let h = 1e-5;
        let fd_t = (mode_value(m, &SpacetimePoint { t: t + h, ..p }) - mode_value(m, &SpacetimePoint { t: t - h, ..p })) / (2.0 * h);
        assert!(fd_t.abs() < 1e-9);
    }

    #[test]
    fn derivatives_converge_at_second_order() {
        let pc = PhysicalConstants::natural();
        let f = FieldState::new(
            pc,
            vec![
                CylindricalMode::new(0.8, 2, 0.3, 0.1).with_phase(0.4),
                CylindricalMode::new(0.5, -1, 0.2, -0.2).with_axial_phase(1.1),
            ],
        )
        .unwrap();
        let p = SpacetimePoint::new(0.37, 2.1, -1.3, 0.8);
        let s = evaluate(&f, &p, false).unwrap();
        let analytic = [s.d_t, s.grad[0], s.grad[1], s.grad[2]];
        let fd = |h: f64| -> [f64; 4] {
            let mut out = [0.0; 4];
            for (k, o) in out.iter_mut().enumerate() {
                let mut a = p;
                let mut b = p;
                match k {
                    0 => {
                        a.t += h;
                        b.t -= h
                    }
                    1 => {
                        a.x += h;
                        b.x -= h
                    }
                    2 => {
                        a.y += h;
                        b.y -= h
                    }
                    _ => {
                        a.z += h;
                        b.z -= h
                    }
                }
                *o = (f.sample(&a, false).phi - f.sample(&b, false).phi) / (2.0 * h);
            }
            out
        };
        let h = 1e-2;
        let e1 = fd(h);
        let e2 = fd(h / 2.0);
        for k in 0..4 {
            let err1 = (e1[k] - analytic[k]).abs();
            let err2 = (e2[k] - analytic[k]).abs();
            let ratio = err1 / err2;
            assert!((3.5..4.5).contains(&ratio), "component {k}: ratio {ratio} ({err1:e}, {err2:e})");
        }
    }

    #[test]
    fn axis_gradient_is_finite() {
        let f = rotor(1, 0.4);
        let s = evaluate(&f, &SpacetimePoint::new(0.3, 0.0, 0.0, 0.0), true).unwrap();
        let w = f.modes()[0].omega();
        // J_1(kr) cos(theta - w t) ~ (k/2)(x cos wt + y sin wt) near the axis
        assert!((s.grad[0] - 0.2 * (w * 0.3).cos()).abs() < 1e-14);
        assert!((s.grad[1] - 0.2 * (w * 0.3).sin()).abs() < 1e-14);
        assert!(s.second.unwrap().laplacian.is_finite());
    }

    #[test]
    fn uniform_oscillator_residual_is_tiny() {
        let f = FieldState::new(PhysicalConstants::natural(), vec![CylindricalMode::new(1.0, 0, 0.0, 0.0)]).unwrap();
        for t in [0.0, 0.3, 2.0, 17.0] {
            let r = kge_residual(&f, &SpacetimePoint::new(t, 1.0, 2.0, 3.0)).unwrap();
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn detuned_mode_has_first_order_residual() {
        let f = FieldState::new(PhysicalConstants::natural(), vec![CylindricalMode::new(1.0, 0, 0.0, 0.0)]).unwrap();
        let bad = f.with_detuned_mode(0, 1.01);
        // (w^2 - w'^2) phi / (m^2 A) at t = 0, phi = A
        let r = kge_residual(&bad, &SpacetimePoint::new(0.0, 0.0, 0.0, 0.0)).unwrap();
        assert!((r - (1.0 - 1.01f64.powi(2))).abs() < 1e-14, "{r}");
    }

    #[test]
    fn frame_rotation_and_shift() {
        let f = rotor(2, 0.2);
        let g = f.clone().with_frame(Frame { time_shift: 0.5, rotation: 0.3 });
        let p = SpacetimePoint::cylindrical(1.0, 4.0, 0.2, 0.0);
        let q = SpacetimePoint::cylindrical(1.5, 4.0, 0.5, 0.0);
        assert!((g.sample(&p, false).phi - f.sample(&q, false).phi).abs() < 1e-14);
    }
}
