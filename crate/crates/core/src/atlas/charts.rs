//! Chart splitting, fallback unwrapping, and the manual-coverage filter.

use std::io::Write as _;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use super::topology::{components_with, group_by_root, joinable_edges, Topology, UnionFind};
use super::{Chart, ChartSet};
use crate::geom::{self, Vec2};
use crate::mesh::{Face, Mesh, UvProvenance};

/// Charts with less source UV area than this cannot be rasterized.
pub const MIN_CHART_UV_AREA: f64 = 1e-12;

fn face_areas(mesh: &Mesh) -> Vec<f64> {
    (0..mesh.faces.len()).map(|f| mesh.face_area(f)).collect()
}

fn manual_coverage(mesh: &Mesh, areas: &[f64]) -> f64 {
    let total: f64 = areas.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let manual: f64 = mesh
        .faces
        .iter()
        .zip(areas)
        .filter(|(f, _)| f.provenance == UvProvenance::Manual)
        .map(|(_, a)| a)
        .sum();
    manual / total
}

/// Splits every connected component along its seams and creases.
pub fn split_charts(mesh: &Mesh) -> ChartSet {
    let topo = Topology::new(mesh);
    let areas = face_areas(mesh);
    let nf = mesh.faces.len();
    let mut uf = UnionFind::new(nf);
    for (f, g) in joinable_edges(&topo, mesh) {
        uf.union(f, g);
    }

    let mut charts = Vec::new();
    let mut uncovered = Vec::new();
    let mut demoted = 0;
    // walk components in order so chart ids follow the component structure
    for component in components_with(&topo, mesh) {
        let (mapped, unmapped): (Vec<u32>, Vec<u32>) =
            component.into_iter().partition(|&f| mesh.faces[f as usize].uvs.is_some());
        uncovered.extend(unmapped);
        for faces in group_by_root(&mut uf, mapped.into_iter()) {
            let uvs: Vec<[Vec2; 3]> =
                faces.iter().map(|&f| mesh.face_uvs(f as usize).unwrap()).collect();
            let chart_areas: Vec<f64> = faces.iter().map(|&f| areas[f as usize]).collect();
            let provenance = mesh.faces[faces[0] as usize].provenance;
            let chart = Chart::from_faces(charts.len() as u32, faces, uvs, &chart_areas, provenance);
            if chart.uv_area < MIN_CHART_UV_AREA {
                demoted += 1;
                uncovered.extend(chart.face_ids);
            } else {
                charts.push(chart);
            }
        }
    }
    uncovered.sort_unstable();
    ChartSet {
        charts,
        uncovered_faces: uncovered,
        manual_coverage: manual_coverage(mesh, &areas),
        demoted_charts: demoted,
        total_faces: nf,
    }
}

/// A chart produced by an unwrapper: faces with their new per-corner UVs.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedChart {
    pub faces: Vec<u32>,
    pub uvs: Vec<[Vec2; 3]>,
}

/// Produces UVs for faces that have none.
pub trait Unwrapper {
    fn unwrap(&self, mesh: &Mesh, faces: &[u32]) -> std::io::Result<Vec<GeneratedChart>>;
}

/// Every face becomes its own right-triangle chart whose UV area equals the
/// face's 3D area. The right angle goes on the corner with the largest 3D
/// angle.
pub struct PerFaceUnwrapper;

impl Unwrapper for PerFaceUnwrapper {
    fn unwrap(&self, mesh: &Mesh, faces: &[u32]) -> std::io::Result<Vec<GeneratedChart>> {
        Ok(faces
            .iter()
            .map(|&f| {
                let p = mesh.face_positions(f as usize);
                let leg = (2.0 * mesh.face_area(f as usize)).sqrt();
                let angle = |k: usize| {
                    let a = geom::sub(p[(k + 1) % 3], p[k]);
                    let b = geom::sub(p[(k + 2) % 3], p[k]);
                    geom::dot(a, b) / (geom::norm(a) * geom::norm(b))
                };
                // smallest cosine is the largest angle
                let right = (0..3).min_by(|&a, &b| angle(a).total_cmp(&angle(b))).unwrap();
                let mut uv = [[0.0; 2]; 3];
                uv[(right + 1) % 3] = [leg, 0.0];
                uv[(right + 2) % 3] = [0.0, leg];
                GeneratedChart {
                    faces: vec![f],
                    uvs: vec![uv],
                }
            })
            .collect())
    }
}

/// Runs an external program to unwrap faces. The program receives the
/// faces as OBJ text on stdin and prints one line per face with six numbers
/// `u0 v0 u1 v1 u2 v2`. Faces whose generated UVs agree along shared edges
/// are grouped into charts the same way authored UVs are.
pub struct ExternalUnwrapper {
    pub program: String,
    pub args: Vec<String>,
}

impl Unwrapper for ExternalUnwrapper {
    fn unwrap(&self, mesh: &Mesh, faces: &[u32]) -> std::io::Result<Vec<GeneratedChart>> {
        let mut sub = Mesh::default();
        for &f in faces {
            let p = mesh.face_positions(f as usize);
            let base = sub.positions.len() as u32;
            sub.positions.extend_from_slice(&p);
            sub.faces.push(Face::without_uv([base, base + 1, base + 2]));
        }
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let text = crate::mesh::save_obj(&sub);
        child.stdin.take().expect("piped stdin").write_all(&text)?;
        let output = child.wait_with_output()?;
        if !output.status.success() {
            return Err(std::io::Error::other(format!("unwrapper exited with {}", output.status)));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        let rows: Vec<[f64; 6]> = stdout
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let v: Vec<f64> = l.split_whitespace().filter_map(|t| t.parse().ok()).collect();
                <[f64; 6]>::try_from(v.as_slice())
                    .map_err(|_| std::io::Error::other(format!("bad unwrapper line {l:?}")))
            })
            .collect::<std::io::Result<_>>()?;
        if rows.len() != faces.len() {
            return Err(std::io::Error::other(format!(
                "unwrapper returned {} rows for {} faces",
                rows.len(),
                faces.len()
            )));
        }
        for (k, r) in rows.iter().enumerate() {
            let base = sub.uvs.len() as u32;
            sub.uvs.extend_from_slice(&[[r[0], r[1]], [r[2], r[3]], [r[4], r[5]]]);
            sub.faces[k] = Face::new(sub.faces[k].positions, [base, base + 1, base + 2]);
        }
        let split = split_charts(&sub);
        let mut out: Vec<GeneratedChart> = split
            .charts
            .into_iter()
            .map(|c| GeneratedChart {
                faces: c.face_ids.iter().map(|&i| faces[i as usize]).collect(),
                uvs: c.source_uvs,
            })
            .collect();
        // faces the program left degenerate fall back to per-face charts
        let leftover: Vec<u32> = split.uncovered_faces.iter().map(|&i| faces[i as usize]).collect();
        out.extend(PerFaceUnwrapper.unwrap(mesh, &leftover)?);
        Ok(out)
    }
}

/// Gives every uncovered face a generated chart using the built-in per-face
/// fallback.
pub fn unwrap_missing(mesh: &Mesh, charts: &ChartSet) -> ChartSet {
    unwrap_missing_with(mesh, charts, &PerFaceUnwrapper).expect("per-face unwrapping cannot fail")
}

pub fn unwrap_missing_with(
    mesh: &Mesh,
    charts: &ChartSet,
    unwrapper: &dyn Unwrapper,
) -> std::io::Result<ChartSet> {
    let mut out = charts.clone();
    if charts.uncovered_faces.is_empty() {
        return Ok(out);
    }
    let generated = unwrapper.unwrap(mesh, &charts.uncovered_faces)?;
    out.uncovered_faces.clear();
    for g in generated {
        let areas: Vec<f64> = g.faces.iter().map(|&f| mesh.face_area(f as usize)).collect();
        let id = out.charts.len() as u32;
        let chart = Chart::from_faces(id, g.faces, g.uvs, &areas, UvProvenance::Generated);
        if chart.uv_area < MIN_CHART_UV_AREA {
            out.demoted_charts += 1;
            out.uncovered_faces.extend(chart.face_ids);
        } else {
            out.charts.push(chart);
        }
    }
    out.uncovered_faces.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageDecision {
    pub accepted: bool,
    pub manual_coverage: f64,
    pub threshold: f64,
}

/// Accepts a chart set iff its manual coverage is at least `threshold`.
pub fn coverage_filter(charts: &ChartSet, threshold: f64) -> CoverageDecision {
    CoverageDecision {
        accepted: charts.manual_coverage >= threshold,
        manual_coverage: charts.manual_coverage,
        threshold,
    }
}
