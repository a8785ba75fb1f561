//! glTF 2.0 reader (binary `.glb` and text `.gltf`).

use std::collections::HashMap;

use base64::Engine as _;
use gltf::mesh::Mode;

use super::{Face, LoadReport, Mesh, ResourceResolver, Texture};
use crate::error::{Error, Result};
use crate::geom;

type Mat4 = [[f64; 4]; 4];

const IDENTITY: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

/// Column-major product `a * b`.
fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for (col, out_col) in out.iter_mut().enumerate() {
        for (row, cell) in out_col.iter_mut().enumerate() {
            *cell = (0..4).map(|k| a[k][row] * b[col][k]).sum();
        }
    }
    out
}

fn transform_point(m: &Mat4, p: [f32; 3]) -> [f64; 3] {
    let v = [p[0] as f64, p[1] as f64, p[2] as f64];
    let mut out = [0.0; 3];
    for (row, o) in out.iter_mut().enumerate() {
        *o = m[0][row] * v[0] + m[1][row] * v[1] + m[2][row] * v[2] + m[3][row];
    }
    out
}

fn decode_data_uri(uri: &str) -> Option<Vec<u8>> {
    let rest = uri.strip_prefix("data:")?;
    let (_, payload) = rest.split_once(";base64,")?;
    base64::engine::general_purpose::STANDARD.decode(payload).ok()
}

fn fetch_uri(uri: &str, resources: &dyn ResourceResolver) -> Option<Vec<u8>> {
    if uri.starts_with("data:") {
        decode_data_uri(uri)
    } else {
        resources.resolve(uri)
    }
}

pub(super) fn parse_gltf(
    source: &[u8],
    resources: &dyn ResourceResolver,
) -> Result<(Mesh, LoadReport)> {
    let gltf = gltf::Gltf::from_slice(source).map_err(|e| match e {
        gltf::Error::Deserialize(ref d) => Error::Parse {
            offset: line_col_to_offset(source, d.line(), d.column()),
            message: d.to_string(),
        },
        other => Error::Gltf(other.to_string()),
    })?;
    let mut report = LoadReport::default();

    let mut buffers: Vec<Vec<u8>> = Vec::new();
    for buffer in gltf.document.buffers() {
        let data = match buffer.source() {
            gltf::buffer::Source::Bin => gltf.blob.clone(),
            gltf::buffer::Source::Uri(uri) => fetch_uri(uri, resources),
        };
        match data {
            Some(d) if d.len() >= buffer.length() => buffers.push(d),
            _ => return Err(Error::Gltf(format!("buffer {} unavailable", buffer.index()))),
        }
    }

    // (mesh index, world transform) for every instanced mesh
    let mut instances: Vec<(usize, Mat4)> = Vec::new();
    let scene = gltf.document.default_scene().or_else(|| gltf.document.scenes().next());
    match scene {
        Some(scene) => {
            let mut stack: Vec<(gltf::Node<'_>, Mat4)> =
                scene.nodes().map(|n| (n, IDENTITY)).collect();
            while let Some((node, parent)) = stack.pop() {
                let local = node.transform().matrix().map(|c| c.map(|x| x as f64));
                let world = mat_mul(&parent, &local);
                if let Some(m) = node.mesh() {
                    instances.push((m.index(), world));
                }
                stack.extend(node.children().map(|c| (c, world)));
            }
            instances.sort_by_key(|(m, _)| *m);
        }
        None => instances.extend(gltf.document.meshes().map(|m| (m.index(), IDENTITY))),
    }

    let mut mesh = Mesh::default();
    // image index -> 3D area of faces textured by it
    let mut coverage: HashMap<usize, f64> = HashMap::new();
    let meshes: Vec<gltf::Mesh<'_>> = gltf.document.meshes().collect();
    for (mesh_index, world) in instances {
        for prim in meshes[mesh_index].primitives() {
            let mode = prim.mode();
            if matches!(mode, Mode::Points | Mode::Lines | Mode::LineLoop | Mode::LineStrip) {
                report.skipped_primitives += 1;
                continue;
            }
            let reader = prim.reader(|b| buffers.get(b.index()).map(|d| &d[..]));
            let Some(positions) = reader.read_positions() else {
                report.skipped_primitives += 1;
                continue;
            };
            let base = mesh.positions.len() as u32;
            mesh.positions.extend(positions.map(|p| transform_point(&world, p)));
            let count = mesh.positions.len() as u32 - base;
            let uv_base = mesh.uvs.len() as u32;
            let has_uv = match reader.read_tex_coords(0) {
                Some(tc) => {
                    // glTF puts the UV origin at the top-left
                    mesh.uvs.extend(tc.into_f32().map(|t| [t[0] as f64, 1.0 - t[1] as f64]));
                    mesh.uvs.len() as u32 - uv_base == count
                }
                None => false,
            };
            if !has_uv {
                mesh.uvs.truncate(uv_base as usize);
            }
            let indices: Vec<u32> = match reader.read_indices() {
                Some(ix) => ix.into_u32().collect(),
                None => (0..count).collect(),
            };
            if indices.iter().any(|&i| i >= count) {
                return Err(Error::Gltf("index out of range".into()));
            }
            let tris: Vec<[u32; 3]> = match mode {
                Mode::Triangles => indices.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
                Mode::TriangleStrip => indices
                    .windows(3)
                    .enumerate()
                    .map(|(i, w)| if i % 2 == 0 { [w[0], w[1], w[2]] } else { [w[1], w[0], w[2]] })
                    .collect(),
                Mode::TriangleFan => (1..indices.len().saturating_sub(1))
                    .map(|i| [indices[0], indices[i], indices[i + 1]])
                    .collect(),
                _ => unreachable!(),
            };
            let image = prim
                .material()
                .pbr_metallic_roughness()
                .base_color_texture()
                .map(|info| info.texture().source().index());
            for t in tris {
                let positions = t.map(|i| base + i);
                let face = if has_uv {
                    Face::new(positions, t.map(|i| uv_base + i))
                } else {
                    Face::without_uv(positions)
                };
                if let (Some(img), true) = (image, has_uv) {
                    let p = positions.map(|i| mesh.positions[i as usize]);
                    *coverage.entry(img).or_default() += geom::triangle_area(p[0], p[1], p[2]);
                }
                mesh.faces.push(face);
            }
        }
    }
    if report.skipped_primitives > 0 {
        report
            .warnings
            .push(format!("skipped {} non-triangle primitives", report.skipped_primitives));
    }

    if !coverage.is_empty() {
        if coverage.len() > 1 {
            report.multi_texture = true;
            report.warnings.push(format!(
                "{} base-color images referenced; keeping the one with the largest coverage",
                coverage.len()
            ));
        }
        let mut ranked: Vec<(usize, f64)> = coverage.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let img = gltf.document.images().nth(ranked[0].0).expect("image index from document");
        let bytes = match img.source() {
            gltf::image::Source::View { view, .. } => buffers
                .get(view.buffer().index())
                .and_then(|b| b.get(view.offset()..view.offset() + view.length()))
                .map(|s| s.to_vec()),
            gltf::image::Source::Uri { uri, .. } => fetch_uri(uri, resources),
        };
        match bytes.map(|b| Texture::decode(&b)) {
            Some(Ok(mut tex)) => {
                tex.name = img.name().map(str::to_string);
                mesh.texture = Some(tex);
            }
            _ => {
                report.missing_texture = true;
                report.warnings.push(format!("base-color image {} unavailable", img.index()));
            }
        }
    }
    Ok((mesh, report))
}

fn line_col_to_offset(source: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in source.split(|&b| b == b'\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len() + 1;
    }
    source.len()
}

#[cfg(test)]
mod tests {
    use super::super::{load_mesh, MeshFormat};
    use super::*;

    fn triangle_gltf(with_uv: bool) -> String {
        let mut bin = Vec::new();
        for v in [[0.0f32, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] {
            for c in v {
                bin.extend_from_slice(&c.to_le_bytes());
            }
        }
        for t in [[0.0f32, 1.0], [1.0, 1.0], [0.0, 0.0]] {
            for c in t {
                bin.extend_from_slice(&c.to_le_bytes());
            }
        }
        let b64 = base64::engine::general_purpose::STANDARD.encode(&bin);
        let attrs = if with_uv {
            r#"{"POSITION": 0, "TEXCOORD_0": 1}"#
        } else {
            r#"{"POSITION": 0}"#
        };
        format!(
            r#"{{
  "asset": {{"version": "2.0"}},
  "scene": 0,
  "scenes": [{{"nodes": [0]}}],
  "nodes": [{{"mesh": 0, "translation": [1, 0, 0]}}],
  "meshes": [{{"primitives": [{{"attributes": {attrs}}}, {{"attributes": {{"POSITION": 0}}, "mode": 1}}]}}],
  "buffers": [{{"byteLength": {len}, "uri": "data:application/octet-stream;base64,{b64}"}}],
  "bufferViews": [{{"buffer": 0, "byteOffset": 0, "byteLength": 36}}, {{"buffer": 0, "byteOffset": 36, "byteLength": 24}}],
  "accessors": [
    {{"bufferView": 0, "componentType": 5126, "count": 3, "type": "VEC3", "min": [0,0,0], "max": [1,1,0]}},
    {{"bufferView": 1, "componentType": 5126, "count": 3, "type": "VEC2"}}
  ]
}}"#,
            len = bin.len()
        )
    }

    #[test]
    fn embedded_triangle() {
        let (m, r) = load_mesh(triangle_gltf(true).as_bytes(), MeshFormat::Gltf).unwrap();
        assert_eq!(m.faces.len(), 1);
        assert_eq!(m.positions[0], [1.0, 0.0, 0.0]);
        assert_eq!(m.positions[1], [2.0, 0.0, 0.0]);
        // top-left origin flipped to bottom-left
        assert_eq!(m.uvs[0], [0.0, 0.0]);
        assert_eq!(m.uvs[2], [0.0, 1.0]);
        assert_eq!(r.skipped_primitives, 1);
        assert_eq!(r.faces_without_uv, 0);
    }

    #[test]
    fn missing_texcoords_are_absent() {
        let (m, r) = load_mesh(triangle_gltf(false).as_bytes(), MeshFormat::Gltf).unwrap();
        assert_eq!(r.faces_without_uv, 1);
        assert!(m.faces[0].uvs.is_none());
    }

    #[test]
    fn malformed_json_is_parse_error() {
        let err = load_mesh(b"{\n  \"asset\": ,\n}", MeshFormat::Gltf).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err:?}");
    }
}
