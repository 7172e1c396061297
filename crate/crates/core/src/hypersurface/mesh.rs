use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Slicing;
use crate::field::{ModalField, ScalarField, SpacetimePoint};

/// Tensor grid in `(r, theta, z)`. The angular direction holds `n_theta + 1`
/// columns so the last column sits on the seam, one full turn from the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylGrid {
    pub r: Vec<f64>,
    pub theta0: f64,
    pub n_theta: usize,
    pub z: Vec<f64>,
}

fn increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

impl CylGrid {
    pub fn new(r: Vec<f64>, theta0: f64, n_theta: usize, z: Vec<f64>) -> Result<Self> {
        if r.is_empty() || z.is_empty() {
            return Err(Error::DegenerateMesh("grid needs at least one radius and one height".into()));
        }
        if n_theta < 3 {
            return Err(Error::DegenerateMesh(format!("n_theta = {n_theta} is below 3")));
        }
        if r.iter().chain(&z).any(|v| !v.is_finite()) || !theta0.is_finite() {
            return Err(Error::NonFinite("grid coordinates".into()));
        }
        if r[0] <= 0.0 {
            return Err(Error::DegenerateMesh("grid radii must avoid the axis".into()));
        }
        if !increasing(&r) || !increasing(&z) {
            return Err(Error::DegenerateMesh("grid coordinates must increase strictly".into()));
        }
        Ok(Self { r, theta0, n_theta, z })
    }

    /// Equally spaced grid; a single point when a count is 1.
    pub fn uniform(r: (f64, f64, usize), theta0: f64, n_theta: usize, z: (f64, f64, usize)) -> Result<Self> {
        let line = |(a, b, n): (f64, f64, usize)| -> Vec<f64> {
            if n <= 1 {
                vec![0.5 * (a + b)]
            } else {
                (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
            }
        };
        Self::new(line(r), theta0, n_theta, line(z))
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.r.len(), self.n_theta + 1, self.z.len())
    }

    pub fn len(&self) -> usize {
        let (a, b, c) = self.shape();
        a * b * c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn theta(&self, j: usize) -> f64 {
        self.theta0 + TAU * j as f64 / self.n_theta as f64
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * (self.n_theta + 1) + j) * self.z.len() + k
    }

    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let nz = self.z.len();
        let k = idx % nz;
        let rest = idx / nz;
        (rest / (self.n_theta + 1), rest % (self.n_theta + 1), k)
    }

    /// Cartesian position of node `(i, j, k)`.
    pub fn position(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let (s, c) = self.theta(j).sin_cos();
        [self.r[i] * c, self.r[i] * s, self.z[k]]
    }

    /// Trapezoid volume weights, zero on the duplicated seam column. A single
    /// radius or height contributes unit length in that direction.
    pub fn weights(&self) -> Vec<f64> {
        let trap = |v: &[f64]| -> Vec<f64> {
            if v.len() == 1 {
                return vec![1.0];
            }
            (0..v.len())
                .map(|i| {
                    let lo = if i > 0 { v[i] - v[i - 1] } else { 0.0 };
                    let hi = if i + 1 < v.len() { v[i + 1] - v[i] } else { 0.0 };
                    0.5 * (lo + hi)
                })
                .collect()
        };
        let wr = trap(&self.r);
        let wz = trap(&self.z);
        let dth = TAU / self.n_theta as f64;
        let mut out = vec![0.0; self.len()];
        for (i, &r) in self.r.iter().enumerate() {
            for j in 0..self.n_theta {
                for (k, wzk) in wz.iter().enumerate() {
                    out[self.index(i, j, k)] = wr[i] * r * dth * wzk;
                }
            }
        }
        out
    }

    pub fn volume(&self) -> f64 {
        self.weights().iter().sum()
    }
}

/// A spacelike surface `t = g(r, theta, z)` sampled on a [`CylGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub grid: CylGrid,
    /// Surface time at each node, indexed by [`CylGrid::index`].
    pub t: Vec<f64>,
    /// `t(theta0 + 2 pi) - t(theta0)` per `(r, z)`, indexed `i * nz + k`.
    pub seam_jump: Vec<f64>,
    /// Cylindrical components `(d_r g, (1/r) d_theta g, d_z g)` used while building the surface.
    pub slope: Vec<[f64; 3]>,
}

impl SurfaceMesh {
    pub fn new(grid: CylGrid, t: Vec<f64>, slope: Vec<[f64; 3]>) -> Result<Self> {
        if t.len() != grid.len() || slope.len() != grid.len() {
            return Err(Error::DegenerateMesh("mesh arrays do not match the grid".into()));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("surface times".into()));
        }
        let (nr, nt, nz) = grid.shape();
        let mut seam_jump = Vec::with_capacity(nr * nz);
        for i in 0..nr {
            for k in 0..nz {
                seam_jump.push(t[grid.index(i, nt - 1, k)] - t[grid.index(i, 0, k)]);
            }
        }
        Ok(Self {
            grid,
            t,
            seam_jump,
            slope,
        })
    }

    /// Samples an analytic slicing. Helical slicings keep the unwrapped angle so
    /// the seam column carries the full jump.
    pub fn from_slicing(grid: CylGrid, slicing: &Slicing) -> Result<Self> {
        let n = grid.len();
        let mut t = Vec::with_capacity(n);
        let mut slope = Vec::with_capacity(n);
        for idx in 0..n {
            let (i, j, k) = grid.coords(idx);
            let x = grid.position(i, j, k);
            let th = grid.theta(j);
            let time = match *slicing {
                Slicing::Helical { t0, theta0, rate } => {
                    let start = grid.theta0 + (theta0 - grid.theta0).rem_euclid(TAU);
                    let mut d = th - start;
                    if d < 0.0 {
                        d += TAU;
                    }
                    t0 + rate * d
                }
                _ => slicing.time_at(x),
            };
            let g = slicing.gradient(x);
            let (s, c) = th.sin_cos();
            t.push(time);
            slope.push([c * g[0] + s * g[1], -s * g[0] + c * g[1], g[2]]);
        }
        Self::new(grid, t, slope)
    }

    pub fn time(&self, i: usize, j: usize, k: usize) -> f64 {
        self.t[self.grid.index(i, j, k)]
    }

    pub fn point(&self, idx: usize) -> SpacetimePoint {
        let (i, j, k) = self.grid.coords(idx);
        let x = self.grid.position(i, j, k);
        SpacetimePoint::new(self.t[idx], x[0], x[1], x[2])
    }

    /// Finite-difference surface gradient in cylindrical components. The angular
    /// direction wraps across the seam with the jump removed; directions with a
    /// single node fall back to the recorded slope.
    pub fn gradient(&self, idx: usize) -> [f64; 3] {
        let g = &self.grid;
        let (i, j, k) = g.coords(idx);
        let (nr, _, nz) = g.shape();
        let nth = g.n_theta;
        let fd = |v: &[f64], a: usize, b: usize, ta: f64, tb: f64| (tb - ta) / (v[b] - v[a]);
        let dr = if nr == 1 {
            self.slope[idx][0]
        } else {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(nr - 1));
            fd(&g.r, a, b, self.time(a, j, k), self.time(b, j, k))
        };
        let dz = if nz == 1 {
            self.slope[idx][2]
        } else {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(nz - 1));
            fd(&g.z, a, b, self.time(i, j, a), self.time(i, j, b))
        };
        let jump = self.seam_jump[i * nz + k];
        let jj = j % nth;
        let (prev, prev_shift) = if jj == 0 { (nth - 1, -jump) } else { (jj - 1, 0.0) };
        let (next, next_shift) = if jj + 1 == nth { (0, jump) } else { (jj + 1, 0.0) };
        let base = if j == nth { jump } else { 0.0 };
        let tp = self.time(i, prev, k) + prev_shift + base;
        let tn = self.time(i, next, k) + next_shift + base;
        let dth = (tn - tp) / (2.0 * TAU / nth as f64);
        [dr, dth / g.r[i], dz]
    }

    /// Largest `c |grad g|`; below 1 for a spacelike surface.
    pub fn max_slope(&self, c: f64) -> f64 {
        (0..self.t.len())
            .map(|idx| c * norm(self.gradient(idx)))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn norm(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Normal derivative on a surface mesh together with its normalised summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalDerivativeProfile {
    /// `d phi / d eta` at every node (seam column included).
    pub values: Vec<f64>,
    /// Peak `|d phi / dt|` envelope over the mesh, the normalisation scale.
    pub scale: f64,
    /// `max |d phi / d eta| / scale`.
    pub max_normalized: f64,
    /// Node index where the maximum occurs.
    pub argmax: usize,
}

/// `(phi_t / c + c grad g . grad phi)`, the integrand of the boundary term per unit
/// coordinate volume, and the normal derivative `d phi / d eta` at one node.
pub(crate) fn normal_flux<F: ScalarField + ?Sized>(field: &F, p: &SpacetimePoint, grad_g: [f64; 3]) -> Result<(f64, f64)> {
    let c = field.constants().c();
    let s2 = c * c * grad_g.iter().map(|v| v * v).sum::<f64>();
    if !(s2 < 1.0) {
        return Err(Error::NotSpacelike(format!(
            "c |grad t| = {} at r = {}, z = {}",
            s2.sqrt(),
            p.r(),
            p.z
        )));
    }
    let s = field.sample(p, false);
    let dot: f64 = (0..3).map(|a| grad_g[a] * s.grad_cyl[a]).sum();
    let flux = s.d_t / c + c * dot;
    Ok((flux, flux / (1.0 - s2).sqrt()))
}

/// Normal derivative of the instantaneous field at every mesh node.
///
/// The normal comes from the finite-difference mesh gradient. The summary is
/// normalised by the largest `|d phi / dt|` envelope on the mesh.
pub fn normal_derivative_profile<F: ModalField + ?Sized>(field: &F, mesh: &SurfaceMesh) -> Result<NormalDerivativeProfile> {
    let c = field.constants().c();
    let mut values = Vec::with_capacity(mesh.t.len());
    let mut scale = 0.0_f64;
    for idx in 0..mesh.t.len() {
        let p = mesh.point(idx);
        let (_, dn) = normal_flux(field, &p, mesh.gradient(idx))?;
        values.push(dn);
        scale = scale.max(field.d_t_envelope(&p) / c);
    }
    let (argmax, peak) = values
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
    let max_normalized = if scale > 0.0 { peak / scale } else { 0.0 };
    Ok(NormalDerivativeProfile {
        values,
        scale,
        max_normalized,
        argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> CylGrid {
        CylGrid::uniform((1.0, 2.0, 5), 0.3, 16, (-1.0, 1.0, 3)).unwrap()
    }

    #[test]
    fn index_round_trip() {
        let g = grid();
        for idx in 0..g.len() {
            let (i, j, k) = g.coords(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
    }

    #[test]
    fn weights_give_annulus_volume() {
        let g = CylGrid::uniform((1.0, 2.0, 201), 0.0, 8, (0.0, 2.0, 3)).unwrap();
        let want = std::f64::consts::PI * (4.0 - 1.0) * 2.0;
        assert!((g.volume() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn helical_mesh_carries_seam_and_gradient() {
        let rate = 0.4;
        let m = SurfaceMesh::from_slicing(
            grid(),
            &Slicing::Helical {
                t0: 1.0,
                theta0: 0.3,
                rate,
            },
        )
        .unwrap();
        assert!(m.seam_jump.iter().all(|j| (j - rate * TAU).abs() < 1e-12));
        for idx in 0..m.t.len() {
            let (i, _, _) = m.grid.coords(idx);
            let g = m.gradient(idx);
            assert!((g[1] - rate / m.grid.r[i]).abs() < 1e-12, "{g:?}");
            assert!(g[0].abs() < 1e-12 && g[2].abs() < 1e-12);
        }
    }

    #[test]
    fn tilted_mesh_gradient_matches_slope() {
        let m = SurfaceMesh::from_slicing(
            grid(),
            &Slicing::Tilted {
                t0: 0.0,
                origin: [0.0; 3],
                slope: [0.1, 0.0, 0.05],
            },
        )
        .unwrap();
        assert!(m.seam_jump.iter().all(|j| j.abs() < 1e-12));
        // Away from the radial edges the FD gradient agrees to second order.
        let idx = m.grid.index(2, 5, 1);
        let (g, s) = (m.gradient(idx), m.slope[idx]);
        assert!((g[2] - s[2]).abs() < 1e-12);
        assert!((g[0] - s[0]).abs() < 1e-12);
        assert!((g[1] - s[1]).abs() < 0.03 * 0.1);
    }

    #[test]
    fn rejects_axis_and_tiny_angle_counts() {
        assert!(CylGrid::uniform((0.0, 1.0, 3), 0.0, 8, (0.0, 0.0, 1)).is_err());
        assert!(CylGrid::uniform((1.0, 2.0, 3), 0.0, 2, (0.0, 0.0, 1)).is_err());
    }
}
