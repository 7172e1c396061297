//! Action and first variation of a point particle in a static potential.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive;

/// A static potential `V(x)` with its derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Free,
    /// `V = k x^2 / 2`.
    Harmonic { stiffness: f64 },
    /// `V = g x`.
    Linear { g: f64 },
    /// `V = k x^2 / 2 + lambda x^4 / 4`; the action is no longer quadratic in the path.
    Quartic { stiffness: f64, lambda: f64 },
}

impl Potential {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Harmonic { stiffness } => 0.5 * stiffness * x * x,
            Potential::Linear { g } => g * x,
            Potential::Quartic { stiffness, lambda } => 0.5 * stiffness * x * x + 0.25 * lambda * x.powi(4),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Harmonic { stiffness } => stiffness * x,
            Potential::Linear { g } => g,
            Potential::Quartic { stiffness, lambda } => stiffness * x + lambda * x.powi(3),
        }
    }
}

/// Natural cubic spline through `(t_i, x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    t: Vec<f64>,
    x: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(t: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n < 3 || x.len() != n {
            return Err(Error::InvalidParameter("spline needs at least 3 matching samples".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("spline knots must increase".into()));
        }
        if t.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spline samples".into()));
        }
        // Tridiagonal solve for second derivatives with m_0 = m_{n-1} = 0.
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = t[i] - t[i - 1];
            let h1 = t[i + 1] - t[i];
            let a = h0;
            let b = 2.0 * (h0 + h1);
            let cc = h1;
            let rhs = 6.0 * ((x[i + 1] - x[i]) / h1 - (x[i] - x[i - 1]) / h0);
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (rhs - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(Self { t, x, m })
    }

    /// Samples `f` at `n` equally spaced knots on `[t0, t1]`.
    pub fn sample<F: Fn(f64) -> f64>(f: F, t0: f64, t1: f64, n: usize) -> Result<Self> {
        let n = n.max(3);
        let t: Vec<f64> = (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect();
        let x = t.iter().map(|&s| f(s)).collect();
        Self::new(t, x)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().expect("non-empty"))
    }

    fn segment(&self, s: f64) -> usize {
        let n = self.t.len();
        match self.t.partition_point(|&k| k <= s) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    /// Value, first and second derivative.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        let i = self.segment(s);
        let h = self.t[i + 1] - self.t[i];
        let a = (self.t[i + 1] - s) / h;
        let b = (s - self.t[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let x = a * x0 + b * x1 + ((a.powi(3) - a) * m0 + (b.powi(3) - b) * m1) * h * h / 6.0;
        let v = (x1 - x0) / h + (-(3.0 * a * a - 1.0) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let acc = a * m0 + b * m1;
        (x, v, acc)
    }
}

/// A particle path `x(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    /// `x = x0 + v t`.
    Linear { x0: f64, v: f64 },
    /// `x = x0 + v0 t + a t^2 / 2`.
    Quadratic { x0: f64, v0: f64, a: f64 },
    /// `x = amplitude cos(omega t + phase)`.
    Harmonic { amplitude: f64, omega: f64, phase: f64 },
    Sampled(CubicSpline),
}

impl Trajectory {
    /// Position, velocity and acceleration.
    pub fn state(&self, t: f64) -> (f64, f64, f64) {
        match self {
            Trajectory::Linear { x0, v } => (x0 + v * t, *v, 0.0),
            Trajectory::Quadratic { x0, v0, a } => (x0 + v0 * t + 0.5 * a * t * t, v0 + a * t, *a),
            Trajectory::Harmonic { amplitude, omega, phase } => {
                let (s, c) = (omega * t + phase).sin_cos();
                (amplitude * c, -amplitude * omega * s, -amplitude * omega * omega * c)
            }
            Trajectory::Sampled(sp) => sp.eval(t),
        }
    }
}

/// Constraint imposed at one end of the time interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndpointBc {
    PositionFixed,
    VelocityFixed { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleScenario {
    pub mass: f64,
    pub potential: Potential,
    pub trajectory: Trajectory,
    pub t0: f64,
    pub t1: f64,
    pub bc: [EndpointBc; 2],
    /// Absolute tolerance of the action quadrature.
    pub tolerance: f64,
}

impl ParticleScenario {
    pub fn new(
        mass: f64,
        potential: Potential,
        trajectory: Trajectory,
        (t0, t1): (f64, f64),
        bc: [EndpointBc; 2],
    ) -> Result<Self> {
        if !(mass.is_finite() && t0.is_finite() && t1.is_finite()) {
            return Err(Error::NonFinite("particle scenario".into()));
        }
        if mass <= 0.0 {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        if t1 <= t0 {
            return Err(Error::InvalidParameter("t1 must exceed t0".into()));
        }
        if let Trajectory::Sampled(sp) = &trajectory {
            let (a, b) = sp.span();
            if a > t0 || b < t1 {
                return Err(Error::InvalidParameter("sampled trajectory does not cover [t0, t1]".into()));
            }
        }
        let s = Self {
            mass,
            potential,
            trajectory,
            t0,
            t1,
            bc,
            tolerance: 1e-10,
        };
        for (end, t) in [(0, t0), (1, t1)] {
            if let EndpointBc::VelocityFixed { value } = bc[end] {
                let v = s.trajectory.state(t).1;
                if (v - value).abs() > 1e-9 * value.abs().max(1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "trajectory velocity {v} at t = {t} violates the fixed value {value}"
                    )));
                }
            }
        }
        Ok(s)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// `m xdd + V'(x)` at time `t`; zero along a classical path.
    pub fn euler_lagrange_residual(&self, t: f64) -> f64 {
        let (x, _, a) = self.trajectory.state(t);
        self.mass * a + self.potential.derivative(x)
    }
}

/// Compact bump `amplitude * (1 - s^2)^3`, `s = (t - center) / half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

/// `(1 - s^2)^3` and its first two derivatives, zero outside `|s| < 1`.
pub(crate) fn poly_bump(s: f64) -> (f64, f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let u = 1.0 - s * s;
    (u.powi(3), -6.0 * s * u * u, -6.0 * u * u + 24.0 * s * s * u)
}

impl Bump {
    fn eval(&self, t: f64) -> (f64, f64) {
        let (b, db, _) = poly_bump((t - self.center) / self.half_width);
        (self.amplitude * b, self.amplitude * db / self.half_width)
    }
}

/// `delta x(t)`: linear interpolation between endpoint values plus compact bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleVariation {
    pub t0: f64,
    pub t1: f64,
    pub start: f64,
    pub end: f64,
    pub bumps: Vec<Bump>,
}

impl ParticleVariation {
    pub fn endpoints(t0: f64, t1: f64, start: f64, end: f64) -> Self {
        Self {
            t0,
            t1,
            start,
            end,
            bumps: Vec::new(),
        }
    }

    pub fn with_bump(mut self, bump: Bump) -> Self {
        self.bumps.push(bump);
        self
    }

    /// Value and time derivative.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let span = self.t1 - self.t0;
        let mut v = self.start + (self.end - self.start) * (t - self.t0) / span;
        let mut d = (self.end - self.start) / span;
        for b in &self.bumps {
            let (bv, bd) = b.eval(t);
            v += bv;
            d += bd;
        }
        (v, d)
    }

    /// Points inside `[t0, t1]` where the variation is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![self.t0, self.t1];
        for b in &self.bumps {
            for e in [b.center - b.half_width, b.center + b.half_width] {
                if e > self.t0 && e < self.t1 {
                    pts.push(e);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Seeded family of smooth variations admissible for `scenario`.
    pub fn random_family(scenario: &ParticleScenario, seed: u64, count: usize) -> Vec<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t0, t1) = (scenario.t0, scenario.t1);
        (0..count)
            .map(|_| {
                let end_value = |bc: EndpointBc, rng: &mut ChaCha8Rng| match bc {
                    EndpointBc::PositionFixed => 0.0,
                    EndpointBc::VelocityFixed { .. } => rng.gen_range(-1.0..1.0),
                };
                let start = end_value(scenario.bc[0], &mut rng);
                let end = end_value(scenario.bc[1], &mut rng);
                let mut v = Self::endpoints(t0, t1, start, end);
                for _ in 0..rng.gen_range(1..=3) {
                    let center = rng.gen_range(t0..t1);
                    let room = (center - t0).min(t1 - center);
                    let half_width = room * rng.gen_range(0.2..1.0);
                    if half_width > 0.0 {
                        v.bumps.push(Bump {
                            center,
                            half_width,
                            amplitude: rng.gen_range(-1.0..1.0),
                        });
                    }
                }
                v
            })
            .collect()
    }
}

/// Bulk and boundary parts of the first variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstVariation {
    /// `int (-V'(x) - m xdd) dx dt`.
    pub bulk: f64,
    /// `m xd dx` evaluated from `t0` to `t1`.
    pub boundary: f64,
    /// Quadrature error estimate of the bulk term.
    pub error: f64,
}

impl FirstVariation {
    pub fn total(&self) -> f64 {
        self.bulk + self.boundary
    }
}

fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: f64) -> Result<(f64, f64)> {
    let per = tol / (breaks.len().max(2) - 1) as f64;
    let mut value = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        let r = adaptive(&mut f, w[0], w[1], per, 1e-14)?;
        value += r.value;
        error += r.error;
    }
    Ok((value, error))
}

/// `S = int (m xd^2 / 2 - V(x)) dt` by adaptive quadrature.
pub fn particle_action(scenario: &ParticleScenario) -> Result<f64> {
    let s = scenario;
    let lagrangian = |t: f64| {
        let (x, v, _) = s.trajectory.state(t);
        0.5 * s.mass * v * v - s.potential.value(x)
    };
    Ok(integrate_pieces(lagrangian, &[s.t0, s.t1], s.tolerance)?.0)
}

/// Action of the displaced path `x + eps * delta x`.
pub fn particle_action_perturbed(scenario: &ParticleScenario, variation: &ParticleVariation, eps: f64) -> Result<f64> {
    let s = scenario;
    let lagrangian = |t: f64| {
        let (x, v, _) = s.trajectory.state(t);
        let (dx, dv) = variation.eval(t);
        let (x, v) = (x + eps * dx, v + eps * dv);
        0.5 * s.mass * v * v - s.potential.value(x)
    };
    Ok(integrate_pieces(lagrangian, &variation.breakpoints(), s.tolerance)?.0)
}

/// Checks that `variation` vanishes wherever the scenario fixes the position.
pub fn check_admissible(scenario: &ParticleScenario, variation: &ParticleVariation) -> Result<()> {
    for (end, t) in [(0, scenario.t0), (1, scenario.t1)] {
        if scenario.bc[end] == EndpointBc::PositionFixed {
            let d = variation.eval(t).0;
            if d.abs() > 1e-12 {
                return Err(Error::InadmissibleVariation(format!(
                    "delta x = {d} at t = {t} where the position is fixed"
                )));
            }
        }
    }
    Ok(())
}

/// First variation split into the Euler-Lagrange bulk term and the endpoint term.
pub fn particle_first_variation(scenario: &ParticleScenario, variation: &ParticleVariation) -> Result<FirstVariation> {
    check_admissible(scenario, variation)?;
    let s = scenario;
    let integrand = |t: f64| -s.euler_lagrange_residual(t) * variation.eval(t).0;
    let (bulk, error) = integrate_pieces(integrand, &variation.breakpoints(), s.tolerance)?;
    let end_term = |t: f64| s.mass * s.trajectory.state(t).1 * variation.eval(t).0;
    Ok(FirstVariation {
        bulk,
        boundary: end_term(s.t1) - end_term(s.t0),
        error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn oscillator(t1: f64) -> ParticleScenario {
        ParticleScenario::new(
            1.0,
            Potential::Harmonic { stiffness: 1.0 },
            Trajectory::Harmonic {
                amplitude: 1.0,
                omega: 1.0,
                phase: 0.0,
            },
            (0.0, t1),
            [EndpointBc::PositionFixed, EndpointBc::PositionFixed],
        )
        .unwrap()
    }

    #[test]
    fn free_particle_action() {
        let s = ParticleScenario::new(
            1.0,
            Potential::Free,
            Trajectory::Linear { x0: 0.0, v: 2.0 },
            (0.0, 1.0),
            [EndpointBc::PositionFixed; 2],
        )
        .unwrap();
        assert!((particle_action(&s).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn resting_particle_has_zero_action() {
        let s = ParticleScenario::new(
            3.0,
            Potential::Free,
            Trajectory::Linear { x0: 4.0, v: 0.0 },
            (0.0, 5.0),
            [EndpointBc::PositionFixed; 2],
        )
        .unwrap();
        assert_eq!(particle_action(&s).unwrap(), 0.0);
    }

    #[test]
    fn harmonic_action_matches_classical_formula() {
        // S = m w [(x0^2 + x1^2) cos wT - 2 x0 x1] / (2 sin wT)
        for t1 in [PI / 3.0, 1.0, 2.5] {
            let s = oscillator(t1);
            let (x0, x1) = (1.0, t1.cos());
            let want = ((x0 * x0 + x1 * x1) * t1.cos() - 2.0 * x0 * x1) / (2.0 * t1.sin());
            let got = particle_action(&s).unwrap();
            assert!((got - want).abs() < 1e-10, "T = {t1}: {got} vs {want}");
        }
        let third = particle_action(&oscillator(PI / 3.0)).unwrap();
        assert!((third + 3f64.sqrt() / 8.0).abs() < 1e-12);
        assert!(particle_action(&oscillator(PI)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn classical_path_has_vanishing_bulk_term() {
        let s = oscillator(2.0);
        for v in ParticleVariation::random_family(&s, 7, 25) {
            let fv = particle_first_variation(&s, &v).unwrap();
            assert!(fv.bulk.abs() < 1e-10, "{fv:?}");
            assert_eq!(fv.boundary, 0.0);
        }
    }

    #[test]
    fn inadmissible_variation_rejected() {
        let s = oscillator(1.0);
        let v = ParticleVariation::endpoints(0.0, 1.0, 0.0, 1.0);
        assert!(matches!(
            particle_first_variation(&s, &v),
            Err(Error::InadmissibleVariation(_))
        ));
    }

    #[test]
    fn wrong_path_has_bulk_term() {
        let s = ParticleScenario::new(
            1.0,
            Potential::Harmonic { stiffness: 1.0 },
            Trajectory::Linear { x0: 1.0, v: 0.0 },
            (0.0, 1.0),
            [EndpointBc::PositionFixed; 2],
        )
        .unwrap();
        let v = ParticleVariation::endpoints(0.0, 1.0, 0.0, 0.0).with_bump(Bump {
            center: 0.5,
            half_width: 0.5,
            amplitude: 1.0,
        });
        // The residual is V'(1) = 1, so bulk = -int (1 - s^2)^3 dt = -(32/35) / 2.
        let fv = particle_first_variation(&s, &v).unwrap();
        assert!((fv.bulk + 16.0 / 35.0).abs() < 1e-12, "{}", fv.bulk);
    }

    #[test]
    fn velocity_fixed_constraint_is_validated() {
        let r = ParticleScenario::new(
            1.0,
            Potential::Free,
            Trajectory::Linear { x0: 0.0, v: 1.0 },
            (0.0, 1.0),
            [EndpointBc::PositionFixed, EndpointBc::VelocityFixed { value: 2.0 }],
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn spline_reproduces_cubic_interior_and_harmonic_path() {
        let sp = CubicSpline::sample(|t| t.sin(), 0.0, 3.0, 200).unwrap();
        for t in [0.5, 1.3, 2.2] {
            let (x, v, a) = sp.eval(t);
            assert!((x - t.sin()).abs() < 1e-7);
            assert!((v - t.cos()).abs() < 1e-4);
            assert!((a + t.sin()).abs() < 1e-2);
        }
        let s = ParticleScenario::new(
            1.0,
            Potential::Harmonic { stiffness: 1.0 },
            Trajectory::Sampled(CubicSpline::sample(|t| t.cos(), 0.0, 2.0, 400).unwrap()),
            (0.0, 2.0),
            [EndpointBc::PositionFixed; 2],
        )
        .unwrap();
        let want = particle_action(&oscillator(2.0)).unwrap();
        assert!((particle_action(&s).unwrap() - want).abs() < 1e-6);
    }

    #[test]
    fn central_difference_matches_first_variation() {
        let s = ParticleScenario::new(
            1.0,
            Potential::Quartic {
                stiffness: 1.0,
                lambda: 0.5,
            },
            Trajectory::Quadratic {
                x0: 0.3,
                v0: 0.5,
                a: -0.2,
            },
            (0.0, 1.5),
            [EndpointBc::VelocityFixed { value: 0.5 }, EndpointBc::VelocityFixed { value: 0.2 }],
        )
        .unwrap()
        .with_tolerance(1e-13);
        let v = ParticleVariation::random_family(&s, 3, 1).remove(0);
        let ds = particle_first_variation(&s, &v).unwrap().total();
        let err = |eps: f64| {
            let fd = (particle_action_perturbed(&s, &v, eps).unwrap() - particle_action_perturbed(&s, &v, -eps).unwrap())
                / (2.0 * eps);
            (fd - ds).abs()
        };
        let (e1, e2) = (err(1e-2), err(1e-3));
        assert!(e1 > 1e-9, "quartic term must show up: {e1}");
        let ratio = e1 / e2;
        assert!((80.0..120.0).contains(&ratio), "order ratio {ratio}");
    }
}
