//! Mesh files: a flat CSV table and a self-describing TOML document.
//!
//! CSV columns, in order: `r,theta,z,t_surface,seam_flag`. Rows run over `r`
//! (outer), `theta`, then `z` (inner); `seam_flag` is 1 on the closing column one
//! full turn from the seed. Floats use the shortest representation that parses
//! back to the same bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::trace::NaturalSurfaceMesh;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "r,theta,z,t_surface,seam_flag";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshFormat {
    Csv,
    Toml,
}

impl MeshFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            MeshFormat::Csv => "csv",
            MeshFormat::Toml => "toml",
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshRow {
    pub r: f64,
    pub theta: f64,
    pub z: f64,
    pub t_surface: f64,
    pub seam: bool,
}

pub fn mesh_to_csv(mesh: &NaturalSurfaceMesh) -> String {
    let m = &mesh.mesh;
    let g = &m.grid;
    let mut out = String::with_capacity(64 * g.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for idx in 0..g.len() {
        let (i, j, k) = g.coords(idx);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            g.r[i],
            g.theta(j),
            g.z[k],
            m.t[idx],
            u8::from(j == g.n_theta)
        );
    }
    out
}

pub fn parse_mesh_csv(text: &str) -> Result<Vec<MeshRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(Error::Parse(format!("unexpected mesh CSV header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(n, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(Error::Parse(format!("row {}: expected 5 columns", n + 1)));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", n + 1)));
            Ok(MeshRow {
                r: num(cols[0])?,
                theta: num(cols[1])?,
                z: num(cols[2])?,
                t_surface: num(cols[3])?,
                seam: match cols[4].trim() {
                    "0" => false,
                    "1" => true,
                    other => return Err(Error::Parse(format!("row {}: bad seam flag {other}", n + 1))),
                },
            })
        })
        .collect()
}

pub fn mesh_to_toml(mesh: &NaturalSurfaceMesh) -> Result<String> {
    toml::to_string(mesh).map_err(|e| Error::Parse(e.to_string()))
}

pub fn mesh_from_toml(text: &str) -> Result<NaturalSurfaceMesh> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes the mesh in the requested format.
pub fn export_mesh(mesh: &NaturalSurfaceMesh, format: MeshFormat, path: &Path) -> Result<()> {
    let body = match format {
        MeshFormat::Csv => mesh_to_csv(mesh),
        MeshFormat::Toml => mesh_to_toml(mesh)?,
    };
    fs::write(path, body)?;
    Ok(())
}

pub fn import_mesh(path: &Path) -> Result<NaturalSurfaceMesh> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    mesh_from_toml(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_field, FieldSpec, PhysicalConstants, SpacetimePoint};
    use crate::hypersurface::{crest_band, trace_surface, CylGrid, TraceOptions};

    fn rotor_mesh() -> NaturalSurfaceMesh {
        let f = build_field(&FieldSpec::rotor(1, 0.1), PhysicalConstants::natural()).unwrap();
        let (a, b) = crest_band(&[1], 0.1).unwrap();
        let grid = CylGrid::uniform((a, b, 3), 0.0, 8, (0.0, 1.0, 2)).unwrap();
        let seed = SpacetimePoint::cylindrical(0.0, 0.5 * (a + b), 0.0, 0.0);
        trace_surface(&f, seed, &grid, &TraceOptions::default()).unwrap()
    }

    #[test]
    fn toml_round_trip_is_bit_exact() {
        let m = rotor_mesh();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mesh.toml");
        export_mesh(&m, MeshFormat::Toml, &p).unwrap();
        let back = import_mesh(&p).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.mesh.t.iter().zip(&m.mesh.t) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_rows_match_mesh() {
        let m = rotor_mesh();
        let rows = parse_mesh_csv(&mesh_to_csv(&m)).unwrap();
        assert_eq!(rows.len(), m.mesh.grid.len());
        for (idx, row) in rows.iter().enumerate() {
            assert_eq!(row.t_surface.to_bits(), m.mesh.t[idx].to_bits());
        }
        assert_eq!(rows.iter().filter(|r| r.seam).count(), 3 * 2);
    }

    #[test]
    fn oscillator_csv_has_equal_times() {
        let f = build_field(&FieldSpec::UniformOscillator { amplitude: 1.0 }, PhysicalConstants::natural()).unwrap();
        let grid = CylGrid::uniform((1.0, 2.0, 3), 0.0, 6, (0.0, 0.0, 1)).unwrap();
        let m = trace_surface(&f, SpacetimePoint::cylindrical(0.0, 1.5, 0.0, 0.0), &grid, &TraceOptions::default()).unwrap();
        let rows = parse_mesh_csv(&mesh_to_csv(&m)).unwrap();
        assert!(rows.iter().all(|r| r.t_surface == rows[0].t_surface));
    }

    #[test]
    fn missing_file_reported() {
        assert!(matches!(
            import_mesh(Path::new("/nonexistent/mesh.toml")),
            Err(Error::MissingFile(_))
        ));
    }
}
