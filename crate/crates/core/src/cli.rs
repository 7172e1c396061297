//! Scenario files and the runs, sweeps and plot scripts driven by them.
//!
//! A scenario is a TOML document with a strict schema. Every run writes the
//! resolved configuration, a content hash, CSV series and a manifest listing
//! each file it wrote.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{
    alpha_parameter, build_field, kge_residual, FieldSpec, FieldState, PhysicalConstants, Slicing,
    SpacetimePoint, Taper, WindowedField, PRESETS,
};
use crate::hypersurface::export::{export_mesh, MeshFormat};
use crate::hypersurface::{crest_band, find_crest_time, trace_surface, CylGrid, NaturalSurfaceMesh, TraceOptions};
use crate::quantization::{
    default_windows, energy_normalization, quantization_chain, QuantizationOptions, QuantizationReport, VolumeQuadrature,
};
use crate::stress_energy::{Averaging, DEFAULT_VACUUM_FLOOR_REL};
use crate::variational::{
    field_action, field_first_variation, particle_first_variation, ActionQuadrature, EndpointBc, FieldVariation,
    ParticleScenario, ParticleVariation, Perturbed, Potential, Region4D, Trajectory,
};

/// Environment variable naming the directory relative output paths resolve against.
pub const OUTPUT_ROOT_ENV: &str = "NATURALBC_OUTPUT_ROOT";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Kge,
    Variation,
    Surface,
    Quantization,
}

impl Check {
    pub const ALL: [Check; 4] = [Check::Kge, Check::Variation, Check::Surface, Check::Quantization];

    pub fn name(&self) -> &'static str {
        match self {
            Check::Kge => "kge",
            Check::Variation => "variation",
            Check::Surface => "surface",
            Check::Quantization => "quantization",
        }
    }
}

fn all_checks() -> Vec<Check> {
    Check::ALL.to_vec()
}

/// Localisation of the field for energy integrals and tracing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub enabled: bool,
    /// Radius where the radial taper begins; defaults to `30 / k_r`.
    pub radial_start: Option<f64>,
    pub radial_width: Option<f64>,
    /// Half-length where the axial taper begins; defaults to 50 mass lengths.
    pub axial_start: Option<f64>,
    pub axial_width: Option<f64>,
    /// Rescale the amplitude so the windowed flat-slice energy equals this.
    pub energy: Option<f64>,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            radial_start: None,
            radial_width: None,
            axial_start: None,
            axial_width: None,
            energy: None,
        }
    }
}

/// Surface-tracing grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_radii: usize,
    pub n_theta: usize,
    pub n_z: usize,
    pub z_half_extent: f64,
    /// Radial band `[a, b]`; defaults to the crest band of the modes present.
    pub band: Option<[f64; 2]>,
    pub substeps: usize,
    pub path_tolerance: Option<f64>,
    pub strict: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_radii: 5,
            n_theta: 16,
            n_z: 1,
            z_half_extent: 0.0,
            band: None,
            substeps: 4,
            path_tolerance: None,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Largest acceptable normalised Klein-Gordon residual.
    pub kge: f64,
    pub kge_points: usize,
    /// Relative mismatch between the first variation and its finite difference.
    pub variation: f64,
    pub variation_count: usize,
    pub variation_eps: f64,
    /// Normalised normal-derivative bound for a natural surface; defaults to `5 alpha^2`.
    pub natural: Option<f64>,
    /// Relative seam spread bound; defaults to `5 alpha^2`.
    pub seam: Option<f64>,
    pub quadrature_bound: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kge: 1e-10,
            kge_points: 1000,
            variation: 1e-4,
            variation_count: 3,
            variation_eps: 1e-3,
            natural: None,
            seam: None,
            quadrature_bound: 0.005,
        }
    }
}

/// A scenario file. Unknown keys anywhere are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub averaging: Averaging,
    #[serde(default = "all_checks")]
    pub checks: Vec<Check>,
    /// Output directory; relative paths resolve against the output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub constants: PhysicalConstants,
    pub field: FieldSpec,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub volume: VolumeQuadrature,
    #[serde(default)]
    pub action: ActionQuadrature,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    /// A scenario running every check on a preset.
    pub fn for_field(name: &str, field: FieldSpec) -> Self {
        Self {
            name: name.to_string(),
            seed: 0,
            averaging: Averaging::CycleAveraged,
            checks: all_checks(),
            output_dir: None,
            constants: PhysicalConstants::natural(),
            field,
            window: WindowConfig::default(),
            grid: GridConfig::default(),
            volume: VolumeQuadrature::default(),
            action: ActionQuadrature::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("name must not be empty".into()));
        }
        if self.checks.is_empty() {
            return Err(Error::Config("checks must list at least one check".into()));
        }
        let g = &self.grid;
        if g.n_radii == 0 || g.n_z == 0 || g.n_theta < 3 || g.substeps == 0 {
            return Err(Error::Config("grid needs n_radii, n_z, substeps >= 1 and n_theta >= 3".into()));
        }
        if g.n_z > 1 && !(g.z_half_extent > 0.0) {
            return Err(Error::Config("z_half_extent must be positive when n_z > 1".into()));
        }
        let t = &self.tolerances;
        if t.kge_points == 0 || !(t.variation_eps > 0.0) {
            return Err(Error::Config("kge_points and variation_eps must be positive".into()));
        }
        Ok(())
    }

    /// Canonical TOML text of the resolved configuration.
    pub fn canonical_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical text.
    pub fn content_hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.canonical_toml()?.as_bytes())))
    }

    fn trace_options(&self) -> TraceOptions {
        TraceOptions {
            averaging: self.averaging,
            substeps: self.grid.substeps,
            vacuum_floor_rel: DEFAULT_VACUUM_FLOOR_REL,
            path_tolerance: self.grid.path_tolerance,
            strict: self.grid.strict,
        }
    }
}

/// Resolves a run directory: an explicit path wins, otherwise the config's
/// `output_dir` or its name, joined to `$NATURALBC_OUTPUT_ROOT` when relative.
pub fn resolve_output_dir(config: &ScenarioConfig, explicit: Option<&Path>) -> PathBuf {
    let chosen = explicit
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(&config.name));
    if chosen.is_absolute() {
        return chosen;
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) => PathBuf::from(root).join(chosen),
        None => chosen,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Passed,
    Failed,
    Error,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub check: Check,
    pub status: CheckStatus,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepInfo {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Record of one run or sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub config_hash: String,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    /// Files written, relative to the manifest's directory.
    pub files: Vec<String>,
    pub verdicts: Vec<CheckVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepInfo>,
}

impl RunManifest {
    pub const FILE_NAME: &'static str = "manifest.toml";

    pub fn any_errors(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == CheckStatus::Error)
    }

    pub fn verdict(&self, check: Check) -> Option<&CheckVerdict> {
        self.verdicts.iter().find(|v| v.check == check)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        toml::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KgeSummary {
    pub points: usize,
    pub max_residual: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationSummary {
    pub particle_boundary: f64,
    pub max_relative_mismatch: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSummary {
    pub band: [f64; 2],
    pub seed_time: f64,
    pub mean_seam: f64,
    pub seam_spread: f64,
    pub seam_uniform: bool,
    pub integrable: bool,
    pub path_residual: f64,
    pub max_normal_derivative: f64,
    pub natural_tolerance: f64,
    pub max_slope: f64,
}

/// Numerical results of a run, written as `report.toml`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub alpha: f64,
    pub amplitude_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kge: Option<KgeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variation: Option<VariationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantization: Option<QuantizationReport>,
}

/// Manifest plus the in-memory report and traced surface.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub report: RunReport,
    pub mesh: Option<NaturalSurfaceMesh>,
    pub output_dir: PathBuf,
}

/// The field as configured, before and after localisation.
pub struct PreparedField {
    pub bare: FieldState,
    pub windowed: WindowedField,
    pub alpha: f64,
    pub k_r: f64,
    /// Factor applied to the configured amplitudes.
    pub amplitude_scale: f64,
}

pub fn prepare_field(config: &ScenarioConfig) -> Result<PreparedField> {
    let bare = build_field(&config.field, config.constants)?;
    let alpha = alpha_parameter(&bare);
    let k_r = bare.modes().iter().map(|m| m.k_r).fold(0.0, f64::max);
    let w = &config.window;
    let windowed = if w.enabled {
        let (dr, dz) = default_windows(k_r, &config.constants)?;
        let radial = Taper::new(w.radial_start.unwrap_or(dr.start), w.radial_width.unwrap_or(dr.width))?;
        let axial = Taper::new(w.axial_start.unwrap_or(dz.start), w.axial_width.unwrap_or(dz.width))?;
        WindowedField::new(bare.clone(), Some(radial), Some(axial))
    } else {
        WindowedField::new(bare.clone(), None, None)
    };
    let mut scale = 1.0;
    if let Some(target) = w.energy {
        if !w.enabled {
            return Err(Error::Config("energy normalisation needs the window enabled".into()));
        }
        scale = energy_normalization(&windowed, target, config.averaging, &config.volume)?;
    }
    Ok(PreparedField {
        bare: bare.scaled(scale),
        windowed: windowed.scaled(scale),
        alpha,
        k_r,
        amplitude_scale: scale,
    })
}

/// Radial band used for tracing.
pub fn tracing_band(config: &ScenarioConfig, prepared: &PreparedField) -> Result<(f64, f64)> {
    if let Some([a, b]) = config.grid.band {
        if !(b > a && a > 0.0) {
            return Err(Error::Config(format!("band must satisfy 0 < a < b, got [{a}, {b}]")));
        }
        return Ok((a, b));
    }
    if prepared.k_r > 0.0 {
        crest_band(&config.field.angular_indices(), prepared.k_r)
    } else {
        let mu = config.constants.mass_wavenumber();
        Ok((0.5 / mu, 1.5 / mu))
    }
}

/// Traces the natural surface of the prepared field through the crest at `theta = 0`.
pub fn trace_for(config: &ScenarioConfig, prepared: &PreparedField, hash: &str) -> Result<NaturalSurfaceMesh> {
    let (a, b) = tracing_band(config, prepared)?;
    let g = &config.grid;
    let grid = CylGrid::uniform((a, b, g.n_radii), 0.0, g.n_theta, (-g.z_half_extent, g.z_half_extent, g.n_z))?;
    let r_seed = grid.r[grid.r.len() / 2];
    let z_seed = grid.z[grid.z.len() / 2];
    let t_seed = find_crest_time(&prepared.windowed, [r_seed, 0.0, z_seed], 0.0)?;
    let seed = SpacetimePoint::cylindrical(t_seed, r_seed, 0.0, z_seed);
    let mut mesh = trace_surface(&prepared.windowed, seed, &grid, &config.trace_options())?;
    mesh.metadata.scenario_hash = hash.to_string();
    Ok(mesh)
}

fn natural_tolerance(config: &ScenarioConfig, alpha: f64) -> f64 {
    config.tolerances.natural.unwrap_or((5.0 * alpha * alpha).max(1e-8))
}

fn quantization_options(config: &ScenarioConfig) -> QuantizationOptions {
    QuantizationOptions {
        averaging: config.averaging,
        volume: config.volume,
        quadrature_bound: config.tolerances.quadrature_bound,
        tol_seam: config.tolerances.seam,
    }
}

/// Seeded sample points inside the tracing band for the residual check.
fn kge_points(config: &ScenarioConfig, band: (f64, f64), n: usize) -> Vec<SpacetimePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let period = std::f64::consts::TAU / config.constants.omega0();
    let zh = config.grid.z_half_extent.max(1.0 / config.constants.mass_wavenumber());
    (0..n)
        .map(|_| {
            let r = rng.gen_range(0.0..=band.1);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let z = rng.gen_range(-zh..=zh);
            let t = rng.gen_range(0.0..10.0 * period);
            SpacetimePoint::cylindrical(t, r, th, z)
        })
        .collect()
}

fn run_kge(config: &ScenarioConfig, prepared: &PreparedField, band: (f64, f64)) -> Result<(KgeSummary, String)> {
    let pts = kge_points(config, band, config.tolerances.kge_points);
    let res: Vec<f64> = pts
        .par_iter()
        .map(|p| kge_residual(&prepared.bare, p))
        .collect::<Result<_>>()?;
    let mut csv = String::from("index,t,x,y,z,residual\n");
    for (i, (p, r)) in pts.iter().zip(&res).enumerate() {
        let _ = writeln!(csv, "{i},{},{},{},{},{r}", p.t, p.x, p.y, p.z);
    }
    let max_residual = res.iter().copied().fold(0.0, f64::max);
    Ok((
        KgeSummary {
            points: pts.len(),
            max_residual,
            tolerance: config.tolerances.kge,
        },
        csv,
    ))
}

/// Free particle boundary term with a velocity-fixed end moved by one unit.
fn particle_boundary_probe() -> Result<f64> {
    let s = ParticleScenario::new(
        1.0,
        Potential::Free,
        Trajectory::Linear { x0: 0.0, v: 1.0 },
        (0.0, 1.0),
        [EndpointBc::PositionFixed, EndpointBc::VelocityFixed { value: 1.0 }],
    )?;
    Ok(particle_first_variation(&s, &ParticleVariation::endpoints(0.0, 1.0, 0.0, 1.0))?.boundary)
}

fn run_variation(
    config: &ScenarioConfig,
    prepared: &PreparedField,
    band: (f64, f64),
) -> Result<(VariationSummary, String)> {
    let particle_boundary = particle_boundary_probe()?;
    let pc = config.constants;
    let period = std::f64::consts::TAU / pc.omega0();
    let (t0, t1) = (0.0, 0.25 * period);
    let mu = pc.mass_wavenumber();
    let (r_cut, zh) = (band.1.min(4.0 / mu), 1.0 / mu);
    let region = Region4D::new(Slicing::Flat { t: t0 }, Slicing::Flat { t: t1 }, r_cut, (-zh, zh), pc.c())?;
    // Wide bumps near the axis without a time taper: they cross both slices and
    // the caps, and stay resolved by the default action quadrature.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let family: Vec<_> = (0..config.tolerances.variation_count)
        .map(|_| {
            let r = 0.3 * r_cut * rng.gen_range(0.0_f64..1.0).sqrt();
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            FieldVariation::Bump {
                t_center: 0.5 * (t0 + t1),
                center: [r * th.cos(), r * th.sin(), rng.gen_range(-0.3 * zh..=0.3 * zh)],
                radius: r_cut * rng.gen_range(0.4..0.6),
                duration: None,
                amplitude: rng.gen_range(-1.0..1.0),
            }
        })
        .collect();
    let eps = config.tolerances.variation_eps;
    let field = &prepared.bare;
    let mut csv = String::from("index,analytic,finite_difference,relative_error\n");
    let mut worst: f64 = 0.0;
    for (i, v) in family.iter().enumerate() {
        let analytic = field_first_variation(field, &region, v, &config.action)?.total();
        let plus = field_action(&Perturbed { base: field, variation: v, eps }, &region, &config.action)?.value;
        let minus = field_action(&Perturbed { base: field, variation: v, eps: -eps }, &region, &config.action)?.value;
        let fd = (plus - minus) / (2.0 * eps);
        let rel = (fd - analytic).abs() / analytic.abs().max(fd.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        let _ = writeln!(csv, "{i},{analytic},{fd},{rel}");
    }
    Ok((
        VariationSummary {
            particle_boundary,
            max_relative_mismatch: worst,
            tolerance: config.tolerances.variation,
        },
        csv,
    ))
}

fn surface_summary(mesh: &NaturalSurfaceMesh, band: (f64, f64), config: &ScenarioConfig, alpha: f64) -> SurfaceSummary {
    let tol = config.tolerances.seam.unwrap_or(5.0 * alpha * alpha);
    let seam = crate::hypersurface::seam_uniformity(&mesh.mesh, tol);
    let d = &mesh.diagnostics;
    SurfaceSummary {
        band: [band.0, band.1],
        seed_time: mesh.seed.t,
        mean_seam: seam.mean_jump,
        seam_spread: seam.spread,
        seam_uniform: seam.is_uniform,
        integrable: d.integrable,
        path_residual: d.path_residual,
        max_normal_derivative: d.max_normal_derivative,
        natural_tolerance: natural_tolerance(config, alpha),
        max_slope: d.max_slope,
    }
}

/// `r,z,seam_jump` rows in grid order.
pub fn seam_csv(mesh: &NaturalSurfaceMesh) -> String {
    let g = &mesh.mesh.grid;
    let mut out = String::from("r,z,seam_jump\n");
    for (i, r) in g.r.iter().enumerate() {
        for (k, z) in g.z.iter().enumerate() {
            let _ = writeln!(out, "{r},{z},{}", mesh.mesh.seam_jump[i * g.z.len() + k]);
        }
    }
    out
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub const QUANTIZATION_CSV_HEADER: &str =
    "delta_t,n_est,n_residual,bs_lhs,bs_ratio,L_z,E_tot,L_z_predicted,spread_bound,lz_ratio,quantized,no_natural_surface,relativistic,closure_ok";

pub fn quantization_csv(r: &QuantizationReport) -> String {
    format!(
        "{QUANTIZATION_CSV_HEADER}\n{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        r.delta_t,
        opt(r.n_est),
        opt(r.n_residual),
        r.bs_lhs,
        r.bs_ratio,
        r.l_z,
        r.e_tot,
        opt(r.l_z_predicted),
        opt(r.spread_bound),
        r.lz_ratio,
        r.flags.quantized,
        r.flags.no_natural_surface,
        r.flags.relativistic,
        opt(r.closure_ok)
    )
}

fn verdict(check: Check, status: CheckStatus, summary: impl Into<String>) -> CheckVerdict {
    CheckVerdict {
        check,
        status,
        summary: summary.into(),
    }
}

fn pass_fail(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Passed
    } else {
        CheckStatus::Failed
    }
}

/// Collects written files in order.
struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Runs the requested checks in dependency order and writes all outputs.
///
/// Check failures and errors are recorded in the manifest; only configuration
/// and I/O problems are returned as errors.
pub fn run_scenario(config: &ScenarioConfig, output_dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let started_at = now();
    let hash = config.content_hash()?;
    fs::create_dir_all(output_dir)?;
    let mut out = Writer {
        dir: output_dir.to_path_buf(),
        files: Vec::new(),
    };
    out.write("resolved_config.toml", &format!("# config_hash = \"{hash}\"\n{}", config.canonical_toml()?))?;

    let mut report = RunReport {
        config_hash: hash.clone(),
        ..Default::default()
    };
    let mut verdicts = Vec::new();
    let mut mesh = None;
    let wants = |c: Check| config.checks.contains(&c);

    let prepared = match prepare_field(config) {
        Ok(p) => Some(p),
        Err(e) => {
            for c in Check::ALL.into_iter().filter(|c| wants(*c)) {
                verdicts.push(verdict(c, CheckStatus::Error, format!("field construction failed: {e}")));
            }
            None
        }
    };

    if let Some(prep) = &prepared {
        report.alpha = prep.alpha;
        report.amplitude_scale = prep.amplitude_scale;
        let band = tracing_band(config, prep);

        if wants(Check::Kge) {
            let v = match band.as_ref().map_err(|e| e.to_string()).and_then(|b| {
                run_kge(config, prep, *b).map_err(|e| e.to_string())
            }) {
                Ok((s, csv)) => {
                    out.write("kge.csv", &csv)?;
                    report.kge = Some(s);
                    verdict(
                        Check::Kge,
                        pass_fail(s.max_residual < s.tolerance),
                        format!("max residual {:.3e} over {} points", s.max_residual, s.points),
                    )
                }
                Err(e) => verdict(Check::Kge, CheckStatus::Error, e),
            };
            verdicts.push(v);
        }

        if wants(Check::Variation) {
            let v = match band.as_ref().map_err(|e| e.to_string()).and_then(|b| {
                run_variation(config, prep, *b).map_err(|e| e.to_string())
            }) {
                Ok((s, csv)) => {
                    out.write("variation.csv", &csv)?;
                    report.variation = Some(s);
                    let ok = s.max_relative_mismatch <= s.tolerance && (s.particle_boundary - 1.0).abs() < 1e-12;
                    verdict(
                        Check::Variation,
                        pass_fail(ok),
                        format!(
                            "first variation vs finite difference {:.3e}; particle boundary term {}",
                            s.max_relative_mismatch, s.particle_boundary
                        ),
                    )
                }
                Err(e) => verdict(Check::Variation, CheckStatus::Error, e),
            };
            verdicts.push(v);
        }

        let needs_surface = wants(Check::Surface) || wants(Check::Quantization);
        let traced = if needs_surface {
            Some(band.and_then(|b| trace_for(config, prep, &hash).map(|m| (b, m))))
        } else {
            None
        };

        if wants(Check::Surface) {
            let v = match &traced {
                Some(Ok((b, m))) => {
                    export_mesh(m, MeshFormat::Csv, &output_dir.join("mesh.csv"))?;
                    out.files.push("mesh.csv".into());
                    export_mesh(m, MeshFormat::Toml, &output_dir.join("mesh.toml"))?;
                    out.files.push("mesh.toml".into());
                    out.write("seam.csv", &seam_csv(m))?;
                    let s = surface_summary(m, *b, config, prep.alpha);
                    report.surface = Some(s);
                    let ok = s.integrable && s.max_normal_derivative <= s.natural_tolerance;
                    verdict(
                        Check::Surface,
                        pass_fail(ok),
                        format!(
                            "seam {:.6} (spread {:.3e}), max normal derivative {:.3e}",
                            s.mean_seam, s.seam_spread, s.max_normal_derivative
                        ),
                    )
                }
                Some(Err(e)) => verdict(Check::Surface, CheckStatus::Error, e.to_string()),
                None => unreachable!("surface traced whenever requested"),
            };
            verdicts.push(v);
        }

        if wants(Check::Quantization) {
            let v = match &traced {
                Some(Ok((_, m))) => match quantization_chain(&prep.windowed, m, &quantization_options(config)) {
                    Ok(q) => {
                        out.write("quantization.csv", &quantization_csv(&q))?;
                        report.quantization = Some(q);
                        if q.flags.no_natural_surface {
                            verdict(Check::Quantization, CheckStatus::Failed, "no natural surface: seam not uniform")
                        } else {
                            let ok = q.flags.quantized && q.closure_ok == Some(true);
                            verdict(
                                Check::Quantization,
                                pass_fail(ok),
                                format!(
                                    "n = {}, residual {:.3e}, L_z = {:.6}, predicted {:.6}{}",
                                    opt(q.n_est),
                                    q.n_residual.unwrap_or(f64::NAN),
                                    q.l_z,
                                    q.l_z_predicted.unwrap_or(f64::NAN),
                                    if q.flags.quantized { ", quantized" } else { "" }
                                ),
                            )
                        }
                    }
                    Err(e) => verdict(Check::Quantization, CheckStatus::Error, e.to_string()),
                },
                Some(Err(e)) => verdict(Check::Quantization, CheckStatus::Skipped, format!("surface unavailable: {e}")),
                None => unreachable!("surface traced whenever requested"),
            };
            verdicts.push(v);
        }
        mesh = traced.and_then(|t| t.ok()).map(|(_, m)| m);
    }

    out.write("report.toml", &toml::to_string(&report).map_err(|e| Error::Parse(e.to_string()))?)?;
    let mut manifest = RunManifest {
        name: config.name.clone(),
        config_hash: hash,
        tool_version: TOOL_VERSION.to_string(),
        started_at,
        finished_at: String::new(),
        files: out.files.clone(),
        verdicts,
        sweep: None,
    };
    manifest.finished_at = now();
    manifest.files.push(RunManifest::FILE_NAME.into());
    fs::write(
        output_dir.join(RunManifest::FILE_NAME),
        toml::to_string(&manifest).map_err(|e| Error::Parse(e.to_string()))?,
    )?;
    Ok(RunOutcome {
        manifest,
        report,
        mesh,
        output_dir: output_dir.to_path_buf(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    L,
    Alpha,
    Amplitude,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l" => Ok(SweepParam::L),
            "alpha" => Ok(SweepParam::Alpha),
            "amplitude" => Ok(SweepParam::Amplitude),
            other => Err(Error::Config(format!("unknown sweep parameter {other:?}; expected l, alpha or amplitude"))),
        }
    }
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::L => "l",
            SweepParam::Alpha => "alpha",
            SweepParam::Amplitude => "amplitude",
        }
    }

    /// The field spec with this parameter set to `value`.
    pub fn apply(&self, spec: &FieldSpec, value: f64) -> Result<FieldSpec> {
        let mut s = spec.clone();
        let bad = || Error::Config(format!("parameter {} does not apply to preset {}", self.name(), spec.preset_name()));
        match (self, &mut s) {
            (SweepParam::L, FieldSpec::RotorL { l, .. }) => {
                if value.fract() != 0.0 || value.abs() > 1e6 {
                    return Err(Error::Config(format!("l must be an integer, got {value}")));
                }
                *l = value as i32;
            }
            (SweepParam::Alpha, FieldSpec::RotorL { alpha, .. } | FieldSpec::MixedL { alpha, .. }) => *alpha = value,
            (SweepParam::Amplitude, FieldSpec::UniformOscillator { amplitude } | FieldSpec::RotorL { amplitude, .. }) => {
                *amplitude = value
            }
            (SweepParam::Amplitude, FieldSpec::MixedL { amplitudes, .. }) => {
                *amplitudes = [value, value * amplitudes[1] / amplitudes[0]];
            }
            _ => return Err(bad()),
        }
        Ok(s)
    }
}

/// One sweep row; failed rows keep the value and carry the error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub n_est: Option<i64>,
    pub n_residual: Option<f64>,
    pub bs_ratio: Option<f64>,
    pub lz_ratio: Option<f64>,
    pub quantized: Option<bool>,
    pub no_natural_surface: Option<bool>,
    pub error: Option<String>,
}

fn sweep_row(config: &ScenarioConfig, value: f64) -> SweepRow {
    let attempt = || -> Result<QuantizationReport> {
        let prep = prepare_field(config)?;
        let mesh = trace_for(config, &prep, &config.content_hash()?)?;
        quantization_chain(&prep.windowed, &mesh, &quantization_options(config))
    };
    match attempt() {
        Ok(q) => SweepRow {
            value,
            n_est: q.n_est,
            n_residual: q.n_residual,
            bs_ratio: Some(q.bs_ratio),
            lz_ratio: Some(q.lz_ratio),
            quantized: Some(q.flags.quantized),
            no_natural_surface: Some(q.flags.no_natural_surface),
            error: None,
        },
        Err(e) => SweepRow {
            value,
            n_est: None,
            n_residual: None,
            bs_ratio: None,
            lz_ratio: None,
            quantized: None,
            no_natural_surface: None,
            error: Some(e.to_string()),
        },
    }
}

/// Traces and quantizes the scenario once per value. Rows run in parallel and
/// come back in the order of `values`.
pub fn sweep(config: &ScenarioConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::EmptySweep);
    }
    config.validate()?;
    let specs: Vec<(f64, Result<FieldSpec>)> = values.iter().map(|&v| (v, param.apply(&config.field, v))).collect();
    if let Some((_, Err(e))) = specs.iter().find(|(_, s)| matches!(s, Err(Error::Config(m)) if m.contains("does not apply"))) {
        return Err(Error::Config(e.to_string()));
    }
    Ok(specs
        .into_par_iter()
        .map(|(v, spec)| match spec {
            Ok(field) => sweep_row(&ScenarioConfig { field, ..config.clone() }, v),
            Err(e) => SweepRow {
                value: v,
                n_est: None,
                n_residual: None,
                bs_ratio: None,
                lz_ratio: None,
                quantized: None,
                no_natural_surface: None,
                error: Some(e.to_string()),
            },
        })
        .collect())
}

pub const SWEEP_CSV_HEADER: &str = "param,value,n_est,n_residual,bs_ratio,lz_ratio,quantized,no_natural_surface,error";

pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            param.name(),
            r.value,
            opt(r.n_est),
            opt(r.n_residual),
            opt(r.bs_ratio),
            opt(r.lz_ratio),
            opt(r.quantized),
            opt(r.no_natural_surface),
            err
        );
    }
    out
}

/// Runs a sweep and writes `sweep.csv` plus a manifest into `output_dir`.
pub fn run_sweep(config: &ScenarioConfig, param: SweepParam, values: &[f64], output_dir: &Path) -> Result<RunManifest> {
    let started_at = now();
    let rows = sweep(config, param, values)?;
    fs::create_dir_all(output_dir)?;
    let hash = config.content_hash()?;
    let mut out = Writer {
        dir: output_dir.to_path_buf(),
        files: Vec::new(),
    };
    out.write("resolved_config.toml", &format!("# config_hash = \"{hash}\"\n{}", config.canonical_toml()?))?;
    out.write("sweep.csv", &sweep_csv(param, &rows))?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let status = if failed > 0 { CheckStatus::Error } else { CheckStatus::Passed };
    let mut files = out.files;
    files.push(RunManifest::FILE_NAME.into());
    let manifest = RunManifest {
        name: config.name.clone(),
        config_hash: hash,
        tool_version: TOOL_VERSION.to_string(),
        started_at,
        finished_at: now(),
        files,
        verdicts: vec![verdict(
            Check::Quantization,
            status,
            format!("{} rows, {failed} errors", rows.len()),
        )],
        sweep: Some(SweepInfo {
            param,
            values: values.to_vec(),
        }),
    };
    fs::write(
        output_dir.join(RunManifest::FILE_NAME),
        toml::to_string(&manifest).map_err(|e| Error::Parse(e.to_string()))?,
    )?;
    Ok(manifest)
}

/// Scripts written by [`emit_plots`] and notes about omitted plots.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotSet {
    pub scripts: Vec<PathBuf>,
    pub notes: Vec<String>,
}

fn surface_script(data: &str) -> String {
    format!(
        "# Natural surface t(r, theta) over the tracing grid.\n\
         set datafile separator ','\n\
         set xlabel 'x'\nset ylabel 'y'\nset zlabel 't'\n\
         set ticslevel 0\n\
         splot '{data}' skip 1 using ($1*cos($2)):($1*sin($2)):4 with points pt 7 ps 0.6 title 'surface', \\\n\
         \x20     '{data}' skip 1 using ($1*cos($2)):($1*sin($2)):($5 > 0 ? $4 : 1/0) with points pt 6 ps 1.2 title 'seam'\n\
         pause -1\n"
    )
}

fn seam_script(data: &str) -> String {
    format!(
        "# Seam jump against radius.\n\
         set datafile separator ','\n\
         set xlabel 'r'\nset ylabel 'seam jump'\n\
         plot '{data}' skip 1 using 1:3 with linespoints pt 7 title 'seam jump'\n\
         pause -1\n"
    )
}

fn residual_script(data: &str, param: SweepParam) -> String {
    let log = if param == SweepParam::L { "set logscale y" } else { "set logscale xy" };
    format!(
        "# Seam residual against the swept parameter.\n\
         set datafile separator ','\n\
         {log}\n\
         set xlabel '{name}'\nset ylabel 'n residual'\n\
         plot '{data}' skip 1 using 2:4 with linespoints pt 7 title 'n residual'\n\
         pause -1\n",
        name = param.name()
    )
}

/// Writes gnuplot scripts next to the manifest for the data files it lists.
pub fn emit_plots(manifest_path: &Path) -> Result<PlotSet> {
    let manifest = RunManifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    for f in &manifest.files {
        if !dir.join(f).exists() {
            return Err(Error::MissingFile(dir.join(f)));
        }
    }
    let has = |name: &str| manifest.files.iter().any(|f| f == name);
    let mut set = PlotSet::default();
    let mut scripts: BTreeMap<&str, String> = BTreeMap::new();
    if has("mesh.csv") {
        scripts.insert("surface.gp", surface_script("mesh.csv"));
    } else {
        set.notes.push("no surface mesh in manifest; surface plot omitted".into());
    }
    if has("seam.csv") {
        scripts.insert("seam.gp", seam_script("seam.csv"));
    } else {
        set.notes.push("no seam series in manifest; seam plot omitted".into());
    }
    if let (true, Some(sw)) = (has("sweep.csv"), &manifest.sweep) {
        scripts.insert("residual.gp", residual_script("sweep.csv", sw.param));
    }
    for (name, body) in scripts {
        let p = dir.join(name);
        fs::write(&p, body)?;
        set.scripts.push(p);
    }
    let mut index = String::new();
    for s in &set.scripts {
        let _ = writeln!(index, "script {}", s.file_name().and_then(|n| n.to_str()).unwrap_or_default());
    }
    for n in &set.notes {
        let _ = writeln!(index, "note {n}");
    }
    fs::write(dir.join("plots.txt"), index)?;
    Ok(set)
}

/// `(name, description)` of every preset.
pub fn presets() -> &'static [(&'static str, &'static str)] {
    &PRESETS
}
