//! Python bindings for the `naturalbc` crate.

use std::collections::HashMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyFileNotFoundError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use naturalbc::cli::{self, ScenarioConfig};
use naturalbc::field::{
    alpha_parameter, build_field, evaluate, kge_residual, FieldSpec, PhysicalConstants, ScalarField,
    SpacetimePoint, WindowedField,
};
use naturalbc::hypersurface::{crest_band, find_crest_time, trace_loop, trace_surface, CylGrid, LoopSpec, TraceOptions};
use naturalbc::quantization::{
    bohr_sommerfeld_from_seam, default_windows, quantization_chain, quantize_seam, QuantizationOptions,
};
use naturalbc::stress_energy::stress_energy_at;
use naturalbc::{Averaging, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::MissingFile(p) => PyFileNotFoundError::new_err(p.display().to_string()),
        Error::Io(e) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn averaging(name: &str) -> PyResult<Averaging> {
    match name {
        "cycle_averaged" => Ok(Averaging::CycleAveraged),
        "instantaneous" => Ok(Averaging::Instantaneous),
        other => Err(PyValueError::new_err(format!(
            "averaging must be 'cycle_averaged' or 'instantaneous', got {other:?}"
        ))),
    }
}

/// A superposition of cylindrical Klein-Gordon modes, optionally localised by tapers.
#[pyclass(name = "Field", module = "naturalbc", frozen)]
struct PyField {
    inner: WindowedField,
    indices: Vec<i32>,
}

#[pymethods]
impl PyField {
    /// Builds a preset: "uniform_oscillator", "rotor_l" or "mixed_l".
    #[staticmethod]
    #[pyo3(signature = (name, l=1, alpha=0.05, amplitude=1.0, l2=2, c=1.0, hbar=1.0, m=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn preset(name: &str, l: i32, alpha: f64, amplitude: f64, l2: i32, c: f64, hbar: f64, m: f64) -> PyResult<Self> {
        let spec = match name {
            "uniform_oscillator" => FieldSpec::UniformOscillator { amplitude },
            "rotor_l" => FieldSpec::RotorL { l, alpha, amplitude },
            "mixed_l" => FieldSpec::MixedL {
                l1: l,
                l2,
                alpha,
                amplitudes: [amplitude, amplitude],
            },
            other => return Err(PyValueError::new_err(format!("unknown preset {other:?}"))),
        };
        let pc = PhysicalConstants::new(c, hbar, m).map_err(to_py)?;
        let f = build_field(&spec, pc).map_err(to_py)?;
        Ok(Self {
            inner: WindowedField::new(f, None, None),
            indices: spec.angular_indices(),
        })
    }

    /// Copy with the default radial and axial tapers applied.
    fn windowed(&self) -> PyResult<Self> {
        let f = self.inner.field.clone();
        let k_r = f.modes().iter().map(|m| m.k_r).fold(0.0, f64::max);
        let (r, z) = default_windows(k_r, f.constants()).map_err(to_py)?;
        Ok(Self {
            inner: WindowedField::new(f, Some(r), Some(z)),
            indices: self.indices.clone(),
        })
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            inner: self.inner.scaled(factor),
            indices: self.indices.clone(),
        }
    }

    #[getter]
    fn alpha(&self) -> f64 {
        alpha_parameter(&self.inner)
    }

    #[getter]
    fn is_windowed(&self) -> bool {
        self.inner.is_windowed()
    }

    /// `(phi, d_t phi, [d_x, d_y, d_z] phi)` at a spacetime point.
    fn evaluate(&self, t: f64, x: f64, y: f64, z: f64) -> PyResult<(f64, f64, [f64; 3])> {
        let s = evaluate(&self.inner, &SpacetimePoint::new(t, x, y, z), false).map_err(to_py)?;
        Ok((s.phi, s.d_t, s.grad))
    }

    fn kge_residual(&self, t: f64, x: f64, y: f64, z: f64) -> PyResult<f64> {
        kge_residual(&self.inner, &SpacetimePoint::new(t, x, y, z)).map_err(to_py)
    }

    /// Stress-energy summary at a point; velocities are cylindrical components.
    #[pyo3(signature = (t, x, y, z, averaging="cycle_averaged"))]
    fn stress_energy(&self, t: f64, x: f64, y: f64, z: f64, averaging: &str) -> PyResult<HashMap<String, f64>> {
        let s = stress_energy_at(&self.inner, &SpacetimePoint::new(t, x, y, z), self::averaging(averaging)?);
        Ok(HashMap::from([
            ("t00".to_string(), s.t00),
            ("p_theta".to_string(), s.p_theta),
            ("v_r".to_string(), s.v_cyl[0]),
            ("v_theta".to_string(), s.v_cyl[1]),
            ("v_z".to_string(), s.v_cyl[2]),
        ]))
    }

    /// `(1/c^2) oint v . dl` around the circle of radius `r` at height `z`.
    #[pyo3(signature = (r, z=0.0, t_start=0.0))]
    fn loop_seam(&self, r: f64, z: f64, t_start: f64) -> PyResult<f64> {
        Ok(trace_loop(&self.inner, &LoopSpec::circle(r, z, t_start), Averaging::CycleAveraged, None)
            .map_err(to_py)?
            .delta_t)
    }

    /// Radial crest band `(a, b)` used for tracing.
    fn crest_band(&self) -> PyResult<(f64, f64)> {
        let k_r = self.inner.field.modes().iter().map(|m| m.k_r).fold(0.0, f64::max);
        crest_band(&self.indices, k_r).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Field(modes={}, alpha={}, windowed={})",
            self.inner.field.modes().len(),
            alpha_parameter(&self.inner),
            self.inner.is_windowed()
        )
    }
}

/// A traced natural surface.
#[pyclass(name = "Surface", module = "naturalbc", frozen)]
struct PySurface {
    inner: naturalbc::hypersurface::NaturalSurfaceMesh,
}

#[pymethods]
impl PySurface {
    #[getter]
    fn seam_jumps(&self) -> Vec<f64> {
        self.inner.mesh.seam_jump.clone()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.mesh.t.clone()
    }

    #[getter]
    fn radii(&self) -> Vec<f64> {
        self.inner.mesh.grid.r.clone()
    }

    #[getter]
    fn max_normal_derivative(&self) -> f64 {
        self.inner.diagnostics.max_normal_derivative
    }

    #[getter]
    fn integrable(&self) -> bool {
        self.inner.diagnostics.integrable
    }

    /// `(is_uniform, spread, mean_jump)` with the default relative tolerance.
    fn seam_report(&self) -> (bool, f64, f64) {
        let r = self.inner.seam_report();
        (r.is_uniform, r.spread, r.mean_jump)
    }

    fn to_csv(&self) -> String {
        naturalbc::hypersurface::export::mesh_to_csv(&self.inner)
    }

    /// Quantization report for this surface, with integrals taken over `field`.
    fn quantize(&self, field: &PyField) -> PyResult<HashMap<String, f64>> {
        let q = quantization_chain(&field.inner, &self.inner, &QuantizationOptions::default()).map_err(to_py)?;
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        let mut out = HashMap::from([
            ("delta_t".to_string(), q.delta_t),
            ("bs_ratio".to_string(), q.bs_ratio),
            ("L_z".to_string(), q.l_z),
            ("E_tot".to_string(), q.e_tot),
            ("lz_ratio".to_string(), q.lz_ratio),
            ("quantized".to_string(), flag(q.flags.quantized)),
            ("no_natural_surface".to_string(), flag(q.flags.no_natural_surface)),
        ]);
        if let (Some(n), Some(r)) = (q.n_est, q.n_residual) {
            out.insert("n_est".into(), n as f64);
            out.insert("n_residual".into(), r);
        }
        Ok(out)
    }
}

/// Traces the natural surface through the crest at `theta = 0` across the crest band.
#[pyfunction]
#[pyo3(signature = (field, n_radii=5, n_theta=16))]
fn trace(field: &PyField, n_radii: usize, n_theta: usize) -> PyResult<PySurface> {
    let (a, b) = field.crest_band()?;
    let grid = CylGrid::uniform((a, b, n_radii), 0.0, n_theta, (0.0, 0.0, 1)).map_err(to_py)?;
    let r0 = grid.r[grid.r.len() / 2];
    let t0 = find_crest_time(&field.inner, [r0, 0.0, 0.0], 0.0).map_err(to_py)?;
    let inner = trace_surface(
        &field.inner,
        SpacetimePoint::cylindrical(t0, r0, 0.0, 0.0),
        &grid,
        &TraceOptions::default(),
    )
    .map_err(to_py)?;
    Ok(PySurface { inner })
}

/// `(n_est, n_residual)` for a seam duration, in natural units unless constants are given.
#[pyfunction]
#[pyo3(signature = (delta_t, c=1.0, hbar=1.0, m=1.0))]
fn quantize(delta_t: f64, c: f64, hbar: f64, m: f64) -> PyResult<(i64, f64)> {
    let pc = PhysicalConstants::new(c, hbar, m).map_err(to_py)?;
    let q = quantize_seam(delta_t, &pc).map_err(to_py)?;
    Ok((q.n_est, q.n_residual))
}

/// `(bs_lhs, bs_ratio)` of the loop rule for a seam duration.
#[pyfunction]
#[pyo3(signature = (delta_t, c=1.0, hbar=1.0, m=1.0))]
fn bohr_sommerfeld(delta_t: f64, c: f64, hbar: f64, m: f64) -> PyResult<(f64, f64)> {
    let pc = PhysicalConstants::new(c, hbar, m).map_err(to_py)?;
    let b = bohr_sommerfeld_from_seam(delta_t, &pc);
    Ok((b.bs_lhs, b.bs_ratio))
}

/// Runs a scenario file; returns `(check, status, summary)` triples.
#[pyfunction]
fn run_scenario(config: PathBuf, output_dir: PathBuf) -> PyResult<Vec<(String, String, String)>> {
    let cfg = ScenarioConfig::from_path(&config).map_err(to_py)?;
    let out = cli::run_scenario(&cfg, &output_dir).map_err(to_py)?;
    Ok(out
        .manifest
        .verdicts
        .iter()
        .map(|v| {
            let status = format!("{:?}", v.status).to_lowercase();
            (v.check.name().to_string(), status, v.summary.clone())
        })
        .collect())
}

#[pyfunction]
fn presets() -> Vec<(String, String)> {
    cli::presets().iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

#[pymodule(name = "naturalbc")]
fn naturalbc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_class::<PySurface>()?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(bohr_sommerfeld, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
