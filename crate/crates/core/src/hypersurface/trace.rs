use std::cell::Cell;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mesh::{normal_derivative_profile, norm, CylGrid, SurfaceMesh};
use crate::bessel::first_maximum;
use crate::error::{Error, Result};
use crate::field::{ModalField, SpacetimePoint};
use crate::quadrature::adaptive;
use crate::stress_energy::{local_group_velocity, stress_energy_at, Averaging, DEFAULT_VACUUM_FLOOR_REL};

/// A circle about the `z` axis traversed `turns` times, counterclockwise for positive turns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub r: f64,
    pub z: f64,
    pub t_start: f64,
    pub theta_start: f64,
    pub turns: i32,
}

impl LoopSpec {
    pub fn circle(r: f64, z: f64, t_start: f64) -> Self {
        Self {
            r,
            z,
            t_start,
            theta_start: 0.0,
            turns: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopTrace {
    /// `(1/c^2) oint v . dl`.
    pub delta_t: f64,
    /// Quadrature error estimate of `delta_t`.
    pub error: f64,
    pub evaluations: usize,
    /// Vacuum floor applied along the loop.
    pub floor: f64,
}

fn velocity<F: ModalField + ?Sized>(field: &F, p: &SpacetimePoint, averaging: Averaging, floor: f64) -> Result<[f64; 3]> {
    let s = stress_energy_at(field, p, averaging);
    local_group_velocity(&s, floor, p)?;
    Ok(s.v_cyl)
}

/// Time advance `(1/c^2) oint v . dl` around a circle, with the field frozen at
/// `t_start`. The floor defaults to the relative vacuum floor of the loop's own
/// peak energy density.
pub fn trace_loop<F: ModalField + ?Sized>(
    field: &F,
    lp: &LoopSpec,
    averaging: Averaging,
    floor: Option<f64>,
) -> Result<LoopTrace> {
    if !(lp.r.is_finite() && lp.z.is_finite() && lp.t_start.is_finite() && lp.theta_start.is_finite()) {
        return Err(Error::NonFinite("loop parameters".into()));
    }
    if lp.r <= 0.0 {
        return Err(Error::InvalidParameter("loop radius must be positive".into()));
    }
    let c2 = field.constants().c().powi(2);
    let at = |th: f64| SpacetimePoint::cylindrical(lp.t_start, lp.r, th, lp.z);
    let floor = floor.unwrap_or_else(|| {
        let peak = (0..64)
            .map(|j| stress_energy_at(field, &at(TAU * j as f64 / 64.0), averaging).t00)
            .fold(0.0, f64::max);
        DEFAULT_VACUUM_FLOOR_REL * peak
    });
    let failure: Cell<Option<Error>> = Cell::new(None);
    let integrand = |th: f64| {
        let p = at(th);
        match velocity(field, &p, averaging, floor) {
            Ok(v) => v[1] * lp.r / c2,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    let end = lp.theta_start + TAU * lp.turns as f64;
    let r = adaptive(integrand, lp.theta_start, end, 1e-12, 1e-12)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(LoopTrace {
        delta_t: r.value,
        error: r.error,
        evaluations: r.evaluations,
        floor,
    })
}

/// Integrates `dt/ds = v(t, x(s)) . x'(s) / c^2` along a path with the midpoint rule.
///
/// `path(s)` returns the Cartesian position and tangent for `s` in `[0, 1]`;
/// `velocity` returns the Cartesian flow velocity at a spacetime point.
pub fn advance_along_flow<V, P>(velocity: V, c: f64, t_start: f64, path: P, steps: usize) -> Result<f64>
where
    V: Fn(&SpacetimePoint) -> Result<[f64; 3]>,
    P: Fn(f64) -> ([f64; 3], [f64; 3]),
{
    let c2 = c * c;
    let rate = |s: f64, t: f64| -> Result<f64> {
        let (x, dx) = path(s);
        let v = velocity(&SpacetimePoint::new(t, x[0], x[1], x[2]))?;
        Ok((v[0] * dx[0] + v[1] * dx[1] + v[2] * dx[2]) / c2)
    };
    let steps = steps.max(1);
    let h = 1.0 / steps as f64;
    let mut t = t_start;
    for n in 0..steps {
        let s = n as f64 * h;
        let mid = t + 0.5 * h * rate(s, t)?;
        t += h * rate(s + 0.5 * h, mid)?;
    }
    Ok(t)
}

/// [`advance_along_flow`] driven by the field's local group velocity.
pub fn advance_along<F, P>(
    field: &F,
    t_start: f64,
    path: P,
    steps: usize,
    averaging: Averaging,
    floor: f64,
) -> Result<f64>
where
    F: ModalField + ?Sized,
    P: Fn(f64) -> ([f64; 3], [f64; 3]),
{
    let flow = |p: &SpacetimePoint| {
        let s = stress_energy_at(field, p, averaging);
        local_group_velocity(&s, floor, p)
    };
    advance_along_flow(flow, field.constants().c(), t_start, path, steps)
}

/// Straight radial leg at fixed `theta` and `z`.
pub fn radial_path(r0: f64, r1: f64, theta: f64, z: f64) -> impl Fn(f64) -> ([f64; 3], [f64; 3]) {
    let (sn, cs) = theta.sin_cos();
    move |s| {
        let r = r0 + (r1 - r0) * s;
        ([r * cs, r * sn, z], [(r1 - r0) * cs, (r1 - r0) * sn, 0.0])
    }
}

/// Straight axial leg at fixed `r` and `theta`.
pub fn axial_path(r: f64, theta: f64, z0: f64, z1: f64) -> impl Fn(f64) -> ([f64; 3], [f64; 3]) {
    let (sn, cs) = theta.sin_cos();
    move |s| ([r * cs, r * sn, z0 + (z1 - z0) * s], [0.0, 0.0, z1 - z0])
}

/// Circular arc from `th0` to `th1` at fixed `r` and `z`.
pub fn angular_path(r: f64, th0: f64, th1: f64, z: f64) -> impl Fn(f64) -> ([f64; 3], [f64; 3]) {
    move |s| {
        let th = th0 + (th1 - th0) * s;
        let (sn, cs) = th.sin_cos();
        ([r * cs, r * sn, z], [-r * sn * (th1 - th0), r * cs * (th1 - th0), 0.0])
    }
}

/// Steps for a straight leg covering `span` when the grid spacing is `h`.
fn leg_steps(span: f64, h: f64, substeps: usize) -> usize {
    if span == 0.0 {
        return 0;
    }
    ((span.abs() / h).ceil() as usize).max(1) * substeps
}

/// Newton search for a time near `t_guess` where `d phi / dt = 0` at `x`.
pub fn find_crest_time<F: ModalField + ?Sized>(field: &F, x: [f64; 3], t_guess: f64) -> Result<f64> {
    let w0 = field.constants().omega0();
    let max_step = 0.25 * std::f64::consts::PI / w0;
    let mut t = t_guess;
    for _ in 0..100 {
        let s = field.sample(&SpacetimePoint::new(t, x[0], x[1], x[2]), true);
        let d_tt = s.second.map_or(0.0, |v| v.d_tt);
        let step = if d_tt != 0.0 { -s.d_t / d_tt } else { max_step };
        let step = step.clamp(-max_step, max_step);
        t += step;
        if step.abs() < 1e-15 * (1.0 + t.abs()) {
            break;
        }
    }
    let env = field.d_t_envelope(&SpacetimePoint::new(t, x[0], x[1], x[2]));
    let d_t = field.sample(&SpacetimePoint::new(t, x[0], x[1], x[2]), false).d_t;
    if d_t.abs() > 1e-10 * env.max(f64::MIN_POSITIVE) {
        return Err(Error::SeedNotOnCrest { d_t, tolerance: 1e-10 * env });
    }
    Ok(t)
}

/// Radial band `[0.75 x_max(l_min), 1.25 x_max(l_max)] / k_r` around the first
/// Bessel maxima, where the rotor energy is concentrated away from the axis.
pub fn crest_band(indices: &[i32], k_r: f64) -> Result<(f64, f64)> {
    if !(k_r > 0.0) || indices.is_empty() {
        return Err(Error::InvalidParameter("crest band needs k_r > 0 and at least one mode".into()));
    }
    let lo = indices.iter().map(|l| l.unsigned_abs()).min().expect("non-empty");
    let hi = indices.iter().map(|l| l.unsigned_abs()).max().expect("non-empty");
    let xm = |n: u32| if n == 0 { 0.0 } else { first_maximum(n) };
    let a = if lo == 0 { 0.5 } else { 0.75 * xm(lo) };
    let b = if hi == 0 { 1.5 } else { 1.25 * xm(hi) };
    Ok((a / k_r, b / k_r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceOptions {
    pub averaging: Averaging,
    /// Midpoint steps per grid interval.
    pub substeps: usize,
    pub vacuum_floor_rel: f64,
    /// Path-independence tolerance; defaults to `5 alpha^2 |mean seam|`.
    pub path_tolerance: Option<f64>,
    /// Turn a path-dependence failure into an error instead of a flag.
    pub strict: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            averaging: Averaging::CycleAveraged,
            substeps: 4,
            vacuum_floor_rel: DEFAULT_VACUUM_FLOOR_REL,
            path_tolerance: None,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceDiagnostics {
    /// Largest disagreement between two path orders reaching the same node.
    pub path_residual: f64,
    pub path_tolerance: f64,
    pub integrable: bool,
    /// Richardson estimate of the integration error at the finer step.
    pub integration_error: f64,
    /// Largest `c |grad t|` over the nodes.
    pub max_slope: f64,
    /// `max |d phi / d eta|` normalised by the peak `|d phi / dt| / c`.
    pub max_normal_derivative: f64,
    pub vacuum_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshMetadata {
    pub scenario_hash: String,
    pub units: String,
    pub alpha: f64,
    pub averaging: Averaging,
}

/// A traced natural surface with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalSurfaceMesh {
    pub metadata: MeshMetadata,
    pub seed: SpacetimePoint,
    pub diagnostics: TraceDiagnostics,
    pub mesh: SurfaceMesh,
}

impl NaturalSurfaceMesh {
    /// Seam uniformity with the default relative tolerance `5 alpha^2`.
    pub fn seam_report(&self) -> SeamReport {
        seam_uniformity(&self.mesh, 5.0 * self.metadata.alpha.powi(2))
    }
}

/// Times along the angular sweep at fixed `(r, z)`, starting from `t0` at the seed angle.
fn angular_sweep<F: ModalField + ?Sized>(
    field: &F,
    grid: &CylGrid,
    r: f64,
    z: f64,
    t0: f64,
    substeps: usize,
    averaging: Averaging,
    floor: f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.n_theta + 1);
    let mut t = t0;
    out.push(t);
    for j in 0..grid.n_theta {
        t = advance_along(
            field,
            t,
            angular_path(r, grid.theta(j), grid.theta(j + 1), z),
            substeps,
            averaging,
            floor,
        )?;
        out.push(t);
    }
    Ok(out)
}

fn spacing(v: &[f64]) -> f64 {
    if v.len() > 1 {
        (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
    } else {
        f64::INFINITY
    }
}

/// Traces the natural surface through a crest seed over a cylindrical grid.
///
/// Node times come from integrating `dt = v . dl / c^2` radially and axially from
/// the seed and then around the axis, so the seam lies one full turn from the
/// seed angle. A second path order (axial, angular, then radial) measures path
/// dependence; a Richardson pass at double resolution estimates the
/// integration error.
pub fn trace_surface<F: ModalField + ?Sized>(
    field: &F,
    seed: SpacetimePoint,
    grid: &CylGrid,
    opts: &TraceOptions,
) -> Result<NaturalSurfaceMesh> {
    if !seed.is_finite() {
        return Err(Error::NonFinite("seed point".into()));
    }
    let d = (grid.theta0 - seed.theta()).rem_euclid(TAU);
    if d.min(TAU - d) > 1e-12 || seed.r() <= 0.0 {
        return Err(Error::InvalidParameter("grid theta0 must pass through an off-axis seed".into()));
    }
    let env = field.d_t_envelope(&seed);
    let seed_d_t = field.sample(&seed, false).d_t;
    let crest_tol = 1e-8 * env;
    if seed_d_t.abs() > crest_tol {
        return Err(Error::SeedNotOnCrest {
            d_t: seed_d_t,
            tolerance: crest_tol,
        });
    }
    let pc = *field.constants();
    let averaging = opts.averaging;
    let (rs, ths, zs, ts) = (seed.r(), grid.theta0, seed.z, seed.t);
    let floor = {
        let peak = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = grid.coords(idx);
                stress_energy_at(field, &SpacetimePoint::cylindrical(ts, grid.r[i], grid.theta(j), grid.z[k]), averaging).t00
            })
            .reduce(|| 0.0, f64::max);
        opts.vacuum_floor_rel * peak
    };
    let (nr, nt, nz) = grid.shape();
    let (hr, hz) = (spacing(&grid.r), spacing(&grid.z));

    // Primary order: radial, axial, then angular; once at the base resolution and once doubled.
    let columns = |sub: usize| -> Result<Vec<Vec<f64>>> {
        (0..nr * nz)
            .into_par_iter()
            .map(|ik| {
                let (i, k) = (ik / nz, ik % nz);
                let r = grid.r[i];
                let t1 = advance_along(
                    field,
                    ts,
                    radial_path(rs, r, ths, zs),
                    leg_steps(r - rs, hr, sub),
                    averaging,
                    floor,
                )?;
                let t2 = advance_along(
                    field,
                    t1,
                    axial_path(r, ths, zs, grid.z[k]),
                    leg_steps(grid.z[k] - zs, hz, sub),
                    averaging,
                    floor,
                )?;
                angular_sweep(field, grid, r, grid.z[k], t2, sub, averaging, floor)
            })
            .collect()
    };
    let coarse = columns(opts.substeps.max(1))?;
    let fine = columns(2 * opts.substeps.max(1))?;
    let mut t = vec![0.0; grid.len()];
    let mut integration_error = 0.0_f64;
    for ik in 0..nr * nz {
        let (i, k) = (ik / nz, ik % nz);
        for j in 0..nt {
            let idx = grid.index(i, j, k);
            t[idx] = fine[ik][j];
            integration_error = integration_error.max((coarse[ik][j] - fine[ik][j]).abs() / 3.0);
        }
    }

    // Alternate order: axial at the seed radius, around to theta_j, then radially out.
    let sub = 2 * opts.substeps.max(1);
    let path_residual = (0..nz)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let z = grid.z[k];
            let t_axis = advance_along(
                field,
                ts,
                axial_path(rs, ths, zs, z),
                leg_steps(z - zs, hz, sub),
                averaging,
                floor,
            )?;
            let ring = angular_sweep(field, grid, rs, z, t_axis, sub, averaging, floor)?;
            let mut worst = 0.0_f64;
            for j in 0..grid.n_theta {
                for i in 0..nr {
                    let r = grid.r[i];
                    let alt = advance_along(
                        field,
                        ring[j],
                        radial_path(rs, r, grid.theta(j), z),
                        leg_steps(r - rs, hr, sub),
                        averaging,
                        floor,
                    )?;
                    worst = worst.max((alt - t[grid.index(i, j, k)]).abs());
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let slope = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = grid.coords(idx);
            let p = SpacetimePoint::cylindrical(t[idx], grid.r[i], grid.theta(j), grid.z[k]);
            let v = velocity(field, &p, averaging, floor)?;
            let c2 = pc.c() * pc.c();
            Ok([v[0] / c2, v[1] / c2, v[2] / c2])
        })
        .collect::<Result<Vec<_>>>()?;
    let max_slope = slope.iter().map(|s| pc.c() * norm(*s)).fold(0.0, f64::max);
    if max_slope >= 1.0 {
        return Err(Error::NotSpacelike(format!("traced slope c |grad t| = {max_slope}")));
    }
    let mesh = SurfaceMesh::new(grid.clone(), t, slope)?;
    let mean_seam = mesh.seam_jump.iter().sum::<f64>() / mesh.seam_jump.len() as f64;
    let alpha = field.alpha();
    let path_tolerance = opts
        .path_tolerance
        .unwrap_or(5.0 * alpha * alpha * mean_seam.abs() + 1e-9 * (1.0 + ts.abs()));
    let integrable = path_residual <= path_tolerance;
    if opts.strict && !integrable {
        return Err(Error::NonIntegrable {
            residual: path_residual,
            tolerance: path_tolerance,
        });
    }
    let profile = normal_derivative_profile(field, &mesh)?;
    Ok(NaturalSurfaceMesh {
        metadata: MeshMetadata {
            scenario_hash: String::new(),
            units: units_label(field),
            alpha,
            averaging,
        },
        seed,
        diagnostics: TraceDiagnostics {
            path_residual,
            path_tolerance,
            integrable,
            integration_error,
            max_slope,
            max_normal_derivative: profile.max_normalized,
            vacuum_floor: floor,
        },
        mesh,
    })
}

fn units_label<F: ModalField + ?Sized>(field: &F) -> String {
    let pc = field.constants();
    if pc.c() == 1.0 && pc.hbar() == 1.0 && pc.m() == 1.0 {
        "natural (c = hbar = m = 1)".into()
    } else {
        format!("c = {}, hbar = {}, m = {}", pc.c(), pc.hbar(), pc.m())
    }
}

/// Spread and mean of the seam jump over all `(r, z)` columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeamReport {
    pub is_uniform: bool,
    /// `max - min` of the seam jump.
    pub spread: f64,
    pub mean_jump: f64,
    /// Relative tolerance applied to `|mean_jump|`.
    pub tolerance: f64,
}

/// A seam is uniform when `spread <= tol_seam |mean|`, with a rounding-level
/// absolute allowance so a vanishing seam counts as uniform.
pub fn seam_uniformity(mesh: &SurfaceMesh, tol_seam: f64) -> SeamReport {
    let jumps = &mesh.seam_jump;
    let max = jumps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = jumps.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = jumps.iter().sum::<f64>() / jumps.len() as f64;
    let spread = max - min;
    let scale = mesh.t.iter().fold(1.0_f64, |a, t| a.max(t.abs()));
    SeamReport {
        is_uniform: spread <= tol_seam * mean.abs() + 1e-12 * scale,
        spread,
        mean_jump: mean,
        tolerance: tol_seam,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_field, FieldSpec, FieldState, PhysicalConstants};
    use crate::quadrature::periodic_nodes;
    use std::f64::consts::PI;

    fn rotor(l: i32, alpha: f64) -> FieldState {
        build_field(&FieldSpec::rotor(l, alpha), PhysicalConstants::natural()).unwrap()
    }

    fn band_grid(l: i32, alpha: f64, nr: usize, nz: usize) -> CylGrid {
        let (a, b) = crest_band(&[l], alpha).unwrap();
        CylGrid::uniform((a, b, nr), 0.0, 32, (-1.0, 1.0, nz)).unwrap()
    }

    #[test]
    fn oscillator_loops_do_not_advance() {
        let f = build_field(&FieldSpec::UniformOscillator { amplitude: 1.0 }, PhysicalConstants::natural()).unwrap();
        let lt = trace_loop(&f, &LoopSpec::circle(2.0, 0.0, 0.3), Averaging::CycleAveraged, None).unwrap();
        assert_eq!(lt.delta_t, 0.0);
    }

    #[test]
    fn rotor_loop_matches_fixed_order_oracle() {
        let alpha = 0.05;
        let f = rotor(1, alpha);
        let r = first_maximum(1) / alpha;
        let lt = trace_loop(&f, &LoopSpec::circle(r, 0.0, 0.0), Averaging::CycleAveraged, None).unwrap();
        let oracle: f64 = periodic_nodes(0.0, TAU, 48)
            .into_iter()
            .map(|(th, w)| {
                let s = stress_energy_at(&f, &SpacetimePoint::cylindrical(0.0, r, th, 0.0), Averaging::CycleAveraged);
                w * s.v_cyl[1] * r
            })
            .sum();
        assert!((lt.delta_t - oracle).abs() < 1e-12 * oracle);
        let omega = (1.0 + alpha * alpha).sqrt();
        assert!((lt.delta_t - 2.0 * PI / omega).abs() < 2.0 * PI * alpha * alpha);
        let n = lt.delta_t / PI;
        assert!(n > 2.0 - 2.0 * alpha * alpha && n <= 2.0, "{n}");
    }

    #[test]
    fn loop_orientation_and_additivity() {
        let f = rotor(2, 0.1);
        let r = first_maximum(2) / 0.1;
        let one = trace_loop(&f, &LoopSpec::circle(r, 0.0, 0.0), Averaging::CycleAveraged, None).unwrap();
        let twice = trace_loop(
            &f,
            &LoopSpec {
                turns: 2,
                ..LoopSpec::circle(r, 0.0, 0.0)
            },
            Averaging::CycleAveraged,
            None,
        )
        .unwrap();
        let back = trace_loop(
            &f,
            &LoopSpec {
                turns: -1,
                ..LoopSpec::circle(r, 0.0, 0.0)
            },
            Averaging::CycleAveraged,
            None,
        )
        .unwrap();
        assert!((twice.delta_t - 2.0 * one.delta_t).abs() < 1e-11);
        assert!((back.delta_t + one.delta_t).abs() < 1e-11);
    }

    #[test]
    fn vacuum_loop_is_an_error() {
        let f = rotor(1, 0.05);
        let r = trace_loop(&f, &LoopSpec::circle(10.0, 0.0, 0.0), Averaging::CycleAveraged, Some(1e9));
        assert!(matches!(r, Err(Error::VacuumRegion { .. })));
    }

    #[test]
    fn crest_search_lands_on_rotor_crest() {
        let f = rotor(1, 0.05);
        let x = [30.0, 10.0, 0.0];
        let t = find_crest_time(&f, x, 0.3).unwrap();
        let omega = f.modes()[0].omega();
        let theta = x[1].atan2(x[0]);
        let k = ((omega * t - theta) / PI).round();
        assert!((omega * t - theta - k * PI).abs() < 1e-9);
    }

    #[test]
    fn oscillator_surface_is_flat() {
        let f = build_field(&FieldSpec::UniformOscillator { amplitude: 1.0 }, PhysicalConstants::natural()).unwrap();
        let grid = CylGrid::uniform((0.5, 2.0, 4), 0.0, 16, (0.0, 1.0, 2)).unwrap();
        let seed = SpacetimePoint::cylindrical(0.0, 1.0, 0.0, 0.0);
        let m = trace_surface(&f, seed, &grid, &TraceOptions::default()).unwrap();
        assert!(m.mesh.t.iter().all(|&t| t == 0.0));
        let rep = m.seam_report();
        assert!(rep.is_uniform && rep.spread == 0.0 && rep.mean_jump == 0.0);
        assert_eq!(m.diagnostics.max_normal_derivative, 0.0);
    }

    #[test]
    fn rotor_surface_is_a_corkscrew() {
        let alpha = 0.05;
        let f = rotor(1, alpha);
        let grid = band_grid(1, alpha, 5, 2);
        let r_seed = first_maximum(1) / alpha;
        let seed = SpacetimePoint::cylindrical(0.0, r_seed, 0.0, 0.0);
        let m = trace_surface(&f, seed, &grid, &TraceOptions::default()).unwrap();
        let rep = m.seam_report();
        assert!(rep.is_uniform, "{rep:?}");
        for (i, &r) in grid.r.iter().enumerate() {
            let lt = trace_loop(&f, &LoopSpec::circle(r, 0.0, 0.0), Averaging::CycleAveraged, None).unwrap();
            assert!((m.mesh.seam_jump[i * 2] - lt.delta_t).abs() < 1e-9, "r = {r}");
        }
        assert!(m.diagnostics.integrable);
        assert!(m.diagnostics.max_normal_derivative <= 5.0 * alpha * alpha, "{:?}", m.diagnostics);
        assert!(m.diagnostics.max_slope < 0.1);
    }

    #[test]
    fn seed_must_be_on_a_crest() {
        let f = rotor(1, 0.05);
        let grid = band_grid(1, 0.05, 3, 1);
        let seed = SpacetimePoint::cylindrical(0.5, first_maximum(1) / 0.05, 0.0, 0.0);
        assert!(matches!(
            trace_surface(&f, seed, &grid, &TraceOptions::default()),
            Err(Error::SeedNotOnCrest { .. })
        ));
    }

    #[test]
    fn homotopic_paths_agree_and_encircling_paths_do_not() {
        let alpha = 0.05;
        let f = rotor(1, alpha);
        let r = first_maximum(1) / alpha;
        let floor = 0.0;
        let avg = Averaging::CycleAveraged;
        // Two routes from theta = 0 to theta = pi/2 at radius r: the short arc
        // and a detour out to 1.1 r and back, not enclosing the axis.
        let direct = advance_along(&f, 0.0, angular_path(r, 0.0, PI / 2.0, 0.0), 64, avg, floor).unwrap();
        let out = advance_along(&f, 0.0, radial_path(r, 1.1 * r, 0.0, 0.0), 64, avg, floor).unwrap();
        let arc = advance_along(&f, out, angular_path(1.1 * r, 0.0, PI / 2.0, 0.0), 64, avg, floor).unwrap();
        let detour = advance_along(&f, arc, radial_path(1.1 * r, r, PI / 2.0, 0.0), 64, avg, floor).unwrap();
        // Residual set by the radial variation of r v_theta, an O(alpha^2) curl.
        assert!((direct - detour).abs() < alpha * alpha * direct.abs(), "{direct} vs {detour}");
        let full = advance_along(&f, 0.0, angular_path(r, 0.0, TAU, 0.0), 256, avg, floor).unwrap();
        assert!((full - 2.0 * PI).abs() < 0.05);
    }

    #[test]
    fn injected_vortex_flow_gives_closed_form_helicoid() {
        // v_theta = kappa / r is curl free off the axis: t = kappa theta / c^2.
        let (kappa, c) = (0.3, 2.0);
        let vortex = |p: &SpacetimePoint| -> Result<[f64; 3]> {
            let r2 = p.x * p.x + p.y * p.y;
            Ok([-kappa * p.y / r2, kappa * p.x / r2, 0.0])
        };
        for r in [0.5, 1.0, 4.0] {
            let quarter = advance_along_flow(vortex, c, 0.0, angular_path(r, 0.0, PI / 2.0, 0.0), 8).unwrap();
            assert!((quarter - kappa * PI / 2.0 / (c * c)).abs() < 1e-14);
            let full = advance_along_flow(vortex, c, 0.0, angular_path(r, 0.0, TAU, 0.0), 8).unwrap();
            assert!((full - TAU * kappa / (c * c)).abs() < 1e-14);
        }
        let there = advance_along_flow(vortex, c, 0.0, radial_path(1.0, 3.0, 0.0, 0.0), 4).unwrap();
        let around = advance_along_flow(vortex, c, there, angular_path(3.0, 0.0, 1.0, 0.0), 4).unwrap();
        let back = advance_along_flow(vortex, c, around, radial_path(3.0, 1.0, 1.0, 0.0), 4).unwrap();
        let direct = advance_along_flow(vortex, c, 0.0, angular_path(1.0, 0.0, 1.0, 0.0), 4).unwrap();
        assert!((back - direct).abs() < 1e-14);
    }

    #[test]
    fn mixed_superposition_has_a_non_uniform_seam() {
        let f = build_field(
            &FieldSpec::MixedL {
                l1: 1,
                l2: 2,
                alpha: 0.05,
                amplitudes: [1.0, 1.0],
            },
            PhysicalConstants::natural(),
        )
        .unwrap();
        let (a, b) = crest_band(&[1, 2], 0.05).unwrap();
        let grid = CylGrid::uniform((a, b, 7), 0.0, 32, (0.0, 0.0, 1)).unwrap();
        let rs = 0.5 * (a + b);
        let t = find_crest_time(&f, [rs, 0.0, 0.0], 0.0).unwrap();
        let m = trace_surface(&f, SpacetimePoint::new(t, rs, 0.0, 0.0), &grid, &TraceOptions::default()).unwrap();
        let rep = m.seam_report();
        assert!(!rep.is_uniform, "{rep:?}");
        assert!(rep.spread > 0.1 * rep.mean_jump.abs());
    }

    #[test]
    fn refinement_is_second_order() {
        // Instantaneous flow makes the angular integrand non-trivial.
        let alpha = 0.3;
        let f = rotor(1, alpha);
        let r = first_maximum(1) / alpha;
        let avg = Averaging::Instantaneous;
        let run = |n: usize| advance_along(&f, 0.0, angular_path(r, 0.1, 1.6, 0.0), n, avg, 0.0).unwrap();
        let (a, b, c) = (run(8), run(16), run(32));
        let ratio = (a - b) / (b - c);
        assert!((3.0..5.0).contains(&ratio), "{ratio}");
    }
}
