//! Indexed triangle meshes with per-corner UVs, file I/O, and normalization.

mod gltf;
mod obj;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Vec2, Vec3};

pub use obj::{save_obj, save_obj_with_material};

/// Where a face's UV coordinates came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UvProvenance {
    /// Authored by an artist (present in the source file).
    Manual,
    /// Produced by an automatic unwrapper.
    Generated,
    /// No UVs at all.
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub positions: [u32; 3],
    pub uvs: Option<[u32; 3]>,
    pub provenance: UvProvenance,
}

impl Face {
    pub fn new(positions: [u32; 3], uvs: [u32; 3]) -> Self {
        Face {
            positions,
            uvs: Some(uvs),
            provenance: UvProvenance::Manual,
        }
    }

    pub fn without_uv(positions: [u32; 3]) -> Self {
        Face {
            positions,
            uvs: None,
            provenance: UvProvenance::Absent,
        }
    }
}

/// An RGB raster in linear `[0, 1]` floats, row 0 at the top of the image.
#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    pub width: u32,
    pub height: u32,
    pub texels: Vec<[f32; 3]>,
    pub name: Option<String>,
}

impl Texture {
    pub fn new(width: u32, height: u32, texels: Vec<[f32; 3]>) -> Self {
        assert_eq!(texels.len(), (width as usize) * (height as usize));
        Texture {
            width,
            height,
            texels,
            name: None,
        }
    }

    pub fn constant(width: u32, height: u32, color: [f32; 3]) -> Self {
        Self::new(width, height, vec![color; (width * height) as usize])
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes)?.to_rgb32f();
        let (width, height) = img.dimensions();
        let texels = img.pixels().map(|p| p.0).collect();
        Ok(Texture::new(width, height, texels))
    }

    #[inline]
    pub fn texel(&self, x: u32, y: u32) -> [f32; 3] {
        self.texels[(y * self.width + x) as usize]
    }

    /// Bilinear lookup with clamp-to-edge. `v` points up, so `v = 1` is the
    /// top row; texel centers sit at half-integer positions.
    pub fn sample(&self, uv: Vec2) -> [f32; 3] {
        let x = uv[0] * self.width as f64 - 0.5;
        let y = (1.0 - uv[1]) * self.height as f64 - 0.5;
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = (x - x0) as f32;
        let fy = (y - y0) as f32;
        let clamp_x = |v: f64| v.clamp(0.0, (self.width - 1) as f64) as u32;
        let clamp_y = |v: f64| v.clamp(0.0, (self.height - 1) as f64) as u32;
        let (xa, xb) = (clamp_x(x0), clamp_x(x0 + 1.0));
        let (ya, yb) = (clamp_y(y0), clamp_y(y0 + 1.0));
        let t00 = self.texel(xa, ya);
        let t10 = self.texel(xb, ya);
        let t01 = self.texel(xa, yb);
        let t11 = self.texel(xb, yb);
        let mut out = [0.0f32; 3];
        for c in 0..3 {
            let top = t00[c] * (1.0 - fx) + t10[c] * fx;
            let bottom = t01[c] * (1.0 - fx) + t11[c] * fx;
            out[c] = top * (1.0 - fy) + bottom * fy;
        }
        out
    }
}

/// Indexed triangle mesh. Positions and UVs are indexed independently so
/// corners sharing a 3D position can carry distinct UVs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub positions: Vec<Vec3>,
    pub uvs: Vec<Vec2>,
    pub faces: Vec<Face>,
    pub texture: Option<Texture>,
}

impl Mesh {
    pub fn face_positions(&self, f: usize) -> [Vec3; 3] {
        let p = self.faces[f].positions;
        [
            self.positions[p[0] as usize],
            self.positions[p[1] as usize],
            self.positions[p[2] as usize],
        ]
    }

    pub fn face_uvs(&self, f: usize) -> Option<[Vec2; 3]> {
        self.faces[f].uvs.map(|t| {
            [
                self.uvs[t[0] as usize],
                self.uvs[t[1] as usize],
                self.uvs[t[2] as usize],
            ]
        })
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_positions(f);
        geom::triangle_area(a, b, c)
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Face counts per provenance: `(manual, generated, absent)`.
    pub fn provenance_counts(&self) -> (usize, usize, usize) {
        self.faces.iter().fold((0, 0, 0), |(m, g, a), f| match f.provenance {
            UvProvenance::Manual => (m + 1, g, a),
            UvProvenance::Generated => (m, g + 1, a),
            UvProvenance::Absent => (m, g, a + 1),
        })
    }

    /// Checks the structural invariants. Returns human-readable violations.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for (i, face) in self.faces.iter().enumerate() {
            if face.positions.iter().any(|&p| p as usize >= self.positions.len()) {
                problems.push(format!("face {i}: position index out of range"));
                continue;
            }
            match (face.uvs, face.provenance) {
                (None, UvProvenance::Absent) => {}
                (None, _) => problems.push(format!("face {i}: no UVs but provenance is not absent")),
                (Some(_), UvProvenance::Absent) => {
                    problems.push(format!("face {i}: has UVs but provenance is absent"))
                }
                (Some(t), _) => {
                    if t.iter().any(|&u| u as usize >= self.uvs.len()) {
                        problems.push(format!("face {i}: uv index out of range"));
                    }
                }
            }
            if is_degenerate(self.face_positions(i)) {
                problems.push(format!("face {i}: degenerate"));
            }
        }
        for (i, uv) in self.uvs.iter().enumerate() {
            if !(0.0..=1.0).contains(&uv[0]) || !(0.0..=1.0).contains(&uv[1]) {
                problems.push(format!("uv {i}: outside the unit square"));
            }
        }
        problems
    }

    /// Bounding box of all positions, `None` for an empty position list.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.positions.first()?;
        Some(self.positions.iter().fold((first, first), |(lo, hi), p| {
            (
                [lo[0].min(p[0]), lo[1].min(p[1]), lo[2].min(p[2])],
                [hi[0].max(p[0]), hi[1].max(p[1]), hi[2].max(p[2])],
            )
        }))
    }
}

pub(crate) fn is_degenerate(p: [Vec3; 3]) -> bool {
    let n = geom::norm(geom::triangle_normal(p[0], p[1], p[2]));
    let longest = geom::dist2(p[0], p[1])
        .max(geom::dist2(p[1], p[2]))
        .max(geom::dist2(p[2], p[0]));
    let proper = n > 1e-14 * longest && longest > 0.0;
    !proper
}

/// Wraps a UV component into `[0, 1]`. Values already inside are untouched so
/// an authored `1.0` stays on the far edge instead of jumping to `0.0`.
pub(crate) fn wrap_uv_component(x: f64) -> f64 {
    if (0.0..=1.0).contains(&x) {
        x
    } else {
        x.rem_euclid(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Obj,
    Gltf,
}

impl MeshFormat {
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "gltf" | "glb" => Some(MeshFormat::Gltf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub vertices: usize,
    pub uvs: usize,
    pub faces: usize,
    pub faces_without_uv: usize,
    pub degenerate_faces_removed: usize,
    pub skipped_primitives: usize,
    /// Set when faces referenced more than one texture image and only the
    /// one covering the largest area was kept.
    pub multi_texture: bool,
    pub missing_texture: bool,
    pub warnings: Vec<String>,
}

/// Supplies the bytes of files referenced from inside a mesh file
/// (material libraries, textures, external buffers).
pub trait ResourceResolver {
    fn resolve(&self, name: &str) -> Option<Vec<u8>>;
}

/// Resolves nothing; every external reference is reported missing.
pub struct NoResources;

impl ResourceResolver for NoResources {
    fn resolve(&self, _name: &str) -> Option<Vec<u8>> {
        None
    }
}

/// Resolves names relative to a directory.
pub struct DirResolver(pub PathBuf);

impl ResourceResolver for DirResolver {
    fn resolve(&self, name: &str) -> Option<Vec<u8>> {
        let name = name.replace('\\', "/");
        std::fs::read(self.0.join(name)).ok()
    }
}

pub fn load_mesh(source: &[u8], format: MeshFormat) -> Result<(Mesh, LoadReport)> {
    load_mesh_with(source, format, &NoResources)
}

pub fn load_mesh_with(
    source: &[u8],
    format: MeshFormat,
    resources: &dyn ResourceResolver,
) -> Result<(Mesh, LoadReport)> {
    let (mesh, mut report) = match format {
        MeshFormat::Obj => obj::parse_obj(source, resources)?,
        MeshFormat::Gltf => gltf::parse_gltf(source, resources)?,
    };
    let mesh = finish_load(mesh, &mut report);
    Ok((mesh, report))
}

pub fn load_mesh_file(path: &std::path::Path) -> Result<(Mesh, LoadReport)> {
    let format = MeshFormat::from_path(path).ok_or_else(|| Error::Parse {
        offset: 0,
        message: format!("unrecognised mesh extension: {}", path.display()),
    })?;
    let bytes = std::fs::read(path)?;
    let dir = path.parent().map(PathBuf::from).unwrap_or_default();
    load_mesh_with(&bytes, format, &DirResolver(dir))
}

/// Shared post-processing: degenerate-face removal, UV wrap, report counts.
fn finish_load(mut mesh: Mesh, report: &mut LoadReport) -> Mesh {
    let before = mesh.faces.len();
    let positions = &mesh.positions;
    mesh.faces.retain(|f| {
        !is_degenerate([
            positions[f.positions[0] as usize],
            positions[f.positions[1] as usize],
            positions[f.positions[2] as usize],
        ])
    });
    report.degenerate_faces_removed += before - mesh.faces.len();
    for uv in &mut mesh.uvs {
        uv[0] = wrap_uv_component(uv[0]);
        uv[1] = wrap_uv_component(uv[1]);
    }
    report.vertices = mesh.positions.len();
    report.uvs = mesh.uvs.len();
    report.faces = mesh.faces.len();
    report.faces_without_uv = mesh.faces.iter().filter(|f| f.uvs.is_none()).count();
    mesh
}

/// Maps a mesh into `[-1, 1]^3` via `(p - center) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub center: Vec3,
    pub scale: f64,
}

impl Default for NormalizationParams {
    fn default() -> Self {
        NormalizationParams {
            center: [0.0; 3],
            scale: 1.0,
        }
    }
}

impl NormalizationParams {
    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        geom::scale(geom::sub(p, self.center), 1.0 / self.scale)
    }

    #[inline]
    pub fn invert(&self, p: Vec3) -> Vec3 {
        geom::add(geom::scale(p, self.scale), self.center)
    }
}

/// Centers the bounding box on the origin and scales its longest axis to
/// span exactly `[-1, 1]`. UVs are untouched.
pub fn normalize_mesh(mesh: &Mesh) -> Result<(Mesh, NormalizationParams)> {
    if mesh.faces.is_empty() {
        return Err(Error::NoGeometry);
    }
    let (lo, hi) = mesh.bounds().ok_or(Error::NoGeometry)?;
    let center = [
        0.5 * (lo[0] + hi[0]),
        0.5 * (lo[1] + hi[1]),
        0.5 * (lo[2] + hi[2]),
    ];
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(hi[2] - lo[2]);
    if !(extent.is_finite() && extent > 0.0) {
        return Err(Error::NoGeometry);
    }
    let params = NormalizationParams {
        center,
        scale: 0.5 * extent,
    };
    let mut out = mesh.clone();
    for p in &mut out.positions {
        *p = params.apply(*p);
    }
    // Pin the extremes of the longest axis so rounding cannot push them outside.
    for p in &mut out.positions {
        for c in p.iter_mut() {
            *c = c.clamp(-1.0, 1.0);
        }
    }
    Ok((out, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_mesh(lo: Vec3, hi: Vec3) -> Mesh {
        crate::fixtures::box_with_islands(lo, hi)
    }

    #[test]
    fn normalize_cube_0_2() {
        let (m, p) = normalize_mesh(&box_mesh([0.0; 3], [2.0; 3])).unwrap();
        assert_eq!(p.center, [1.0, 1.0, 1.0]);
        assert_eq!(p.scale, 1.0);
        let (lo, hi) = m.bounds().unwrap();
        assert_eq!(lo, [-1.0; 3]);
        assert_eq!(hi, [1.0; 3]);
    }

    #[test]
    fn normalize_fixed_point() {
        let (m, _) = normalize_mesh(&box_mesh([0.0; 3], [2.0; 3])).unwrap();
        let (m2, p2) = normalize_mesh(&m).unwrap();
        assert_eq!(p2.center, [0.0; 3]);
        assert_eq!(p2.scale, 1.0);
        assert_eq!(m, m2);
    }

    #[test]
    fn normalize_elongated_box() {
        let (m, p) = normalize_mesh(&box_mesh([0.0; 3], [4.0, 1.0, 1.0])).unwrap();
        // scalar oracle: extent 4 -> half-extent 2; y,z extent 1 -> +-0.25
        assert_eq!(p.scale, 2.0);
        let (lo, hi) = m.bounds().unwrap();
        assert_eq!((lo[0], hi[0]), (-1.0, 1.0));
        assert_eq!((lo[1], hi[1]), (-0.25, 0.25));
        assert_eq!((lo[2], hi[2]), (-0.25, 0.25));
        for (a, b) in m.positions.iter().zip(&box_mesh([0.0; 3], [4.0, 1.0, 1.0]).positions) {
            let back = p.invert(*a);
            assert!(geom::dist(back, *b) < 1e-12);
        }
    }

    #[test]
    fn normalize_empty_is_error() {
        assert!(matches!(normalize_mesh(&Mesh::default()), Err(Error::NoGeometry)));
    }

    #[test]
    fn wrap_keeps_unit_interval() {
        assert_eq!(wrap_uv_component(1.0), 1.0);
        assert_eq!(wrap_uv_component(0.0), 0.0);
        assert!((wrap_uv_component(1.25) - 0.25).abs() < 1e-15);
        assert!((wrap_uv_component(-0.25) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn bilinear_half_texel_offset_averages_checkerboard() {
        let t = Texture::new(2, 2, vec![[1.0; 3], [0.0; 3], [0.0; 3], [1.0; 3]]);
        // closed form: the center of a 2x2 texture weights every texel by 1/4
        assert_eq!(t.sample([0.5, 0.5]), [0.5; 3]);
        // texel centers reproduce texels exactly
        assert_eq!(t.sample([0.25, 0.75]), [1.0; 3]);
        assert_eq!(t.sample([0.75, 0.75]), [0.0; 3]);
    }
}
