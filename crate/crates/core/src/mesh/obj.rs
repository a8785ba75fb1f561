//! Wavefront OBJ reader and writer.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Face, LoadReport, Mesh, ResourceResolver, Texture, UvProvenance};
use crate::error::{Error, Result};
use crate::geom;

struct Corner {
    position: u32,
    uv: Option<u32>,
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

/// Resolves a 1-based (or negative, relative) OBJ index against `count`.
fn resolve_index(raw: &str, count: usize, offset: usize) -> Result<u32> {
    let i: i64 = raw
        .parse()
        .map_err(|_| parse_err(offset, format!("bad index {raw:?}")))?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        return Err(parse_err(offset, "index 0 is not valid"));
    };
    if resolved < 0 || resolved as usize >= count {
        return Err(parse_err(offset, format!("index {i} out of range ({count} entries)")));
    }
    Ok(resolved as u32)
}

fn parse_floats<const N: usize>(
    tokens: &mut std::str::SplitWhitespace<'_>,
    min: usize,
    offset: usize,
) -> Result<[f64; N]> {
    let mut out = [0.0f64; N];
    for (i, slot) in out.iter_mut().enumerate() {
        match tokens.next() {
            Some(t) => {
                *slot = t
                    .parse()
                    .map_err(|_| parse_err(offset, format!("bad number {t:?}")))?;
                if !slot.is_finite() {
                    return Err(parse_err(offset, format!("non-finite number {t:?}")));
                }
            }
            None if i >= min => break,
            None => return Err(parse_err(offset, "too few components")),
        }
    }
    Ok(out)
}

pub(super) fn parse_obj(
    source: &[u8],
    resources: &dyn ResourceResolver,
) -> Result<(Mesh, LoadReport)> {
    let text = std::str::from_utf8(source).map_err(|e| parse_err(e.valid_up_to(), "invalid UTF-8"))?;
    let mut mesh = Mesh::default();
    let mut report = LoadReport::default();
    let mut mtllibs: Vec<String> = Vec::new();
    let mut current_material: Option<usize> = None;
    let mut material_names: Vec<String> = Vec::new();
    let mut face_material: Vec<Option<usize>> = Vec::new();

    let mut offset = 0usize;
    for raw_line in text.split_inclusive('\n') {
        let line_offset = offset;
        offset += raw_line.len();
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap_or("");
        match keyword {
            "v" => {
                let p: [f64; 3] = parse_floats(&mut tokens, 3, line_offset)?;
                mesh.positions.push(p);
            }
            "vt" => {
                let uv: [f64; 2] = parse_floats(&mut tokens, 1, line_offset)?;
                mesh.uvs.push(uv);
            }
            "f" => {
                let mut corners = Vec::with_capacity(4);
                for token in tokens {
                    let mut parts = token.split('/');
                    let p = parts.next().unwrap_or("");
                    let position = resolve_index(p, mesh.positions.len(), line_offset)?;
                    let uv = match parts.next() {
                        Some(t) if !t.is_empty() => Some(resolve_index(t, mesh.uvs.len(), line_offset)?),
                        _ => None,
                    };
                    corners.push(Corner { position, uv });
                }
                if corners.len() < 3 {
                    return Err(parse_err(line_offset, "face with fewer than 3 vertices"));
                }
                // fan triangulation for polygons
                for k in 1..corners.len() - 1 {
                    let tri = [&corners[0], &corners[k], &corners[k + 1]];
                    let positions = [tri[0].position, tri[1].position, tri[2].position];
                    let face = match (tri[0].uv, tri[1].uv, tri[2].uv) {
                        (Some(a), Some(b), Some(c)) => Face::new(positions, [a, b, c]),
                        _ => Face::without_uv(positions),
                    };
                    mesh.faces.push(face);
                    face_material.push(current_material);
                }
            }
            "l" | "p" => {
                report.skipped_primitives += 1;
            }
            "mtllib" => {
                let rest = line["mtllib".len()..].trim();
                if !rest.is_empty() {
                    mtllibs.push(rest.to_string());
                }
            }
            "usemtl" => {
                let name = line["usemtl".len()..].trim().to_string();
                let idx = match material_names.iter().position(|n| *n == name) {
                    Some(i) => i,
                    None => {
                        material_names.push(name);
                        material_names.len() - 1
                    }
                };
                current_material = Some(idx);
            }
            // normals, groups, smoothing and other records carry nothing we need
            _ => {}
        }
    }
    if report.skipped_primitives > 0 {
        report
            .warnings
            .push(format!("skipped {} point/line records", report.skipped_primitives));
    }

    attach_texture(&mut mesh, &mut report, &mtllibs, &material_names, &face_material, resources);
    Ok((mesh, report))
}

/// Parses `newmtl`/`map_Kd` pairs out of a material library.
fn parse_mtl(text: &str) -> HashMap<String, String> {
    let mut out = HashMap::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix("newmtl") {
            current = Some(name.trim().to_string());
        } else if let Some(map) = line.strip_prefix("map_Kd") {
            if let Some(name) = &current {
                // options such as `-bm 1` precede the file name; the name is last
                if let Some(file) = map.split_whitespace().last() {
                    out.insert(name.clone(), file.to_string());
                }
            }
        }
    }
    out
}

fn attach_texture(
    mesh: &mut Mesh,
    report: &mut LoadReport,
    mtllibs: &[String],
    material_names: &[String],
    face_material: &[Option<usize>],
    resources: &dyn ResourceResolver,
) {
    if mtllibs.is_empty() || material_names.is_empty() {
        return;
    }
    let mut maps: HashMap<String, String> = HashMap::new();
    for lib in mtllibs {
        match resources.resolve(lib) {
            Some(bytes) => maps.extend(parse_mtl(&String::from_utf8_lossy(&bytes))),
            None => report.warnings.push(format!("material library {lib:?} not found")),
        }
    }
    // 3D area covered by each referenced image
    let mut coverage: HashMap<&str, f64> = HashMap::new();
    for (f, mat) in face_material.iter().enumerate() {
        let (Some(m), Some(_)) = (mat, mesh.faces[f].uvs) else {
            continue;
        };
        if let Some(file) = maps.get(&material_names[*m]) {
            let [a, b, c] = mesh.face_positions(f);
            *coverage.entry(file.as_str()).or_default() += geom::triangle_area(a, b, c);
        }
    }
    if coverage.is_empty() {
        return;
    }
    if coverage.len() > 1 {
        report.multi_texture = true;
        report.warnings.push(format!(
            "{} texture images referenced; keeping the one with the largest coverage",
            coverage.len()
        ));
    }
    let mut ranked: Vec<(&str, f64)> = coverage.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    let file = ranked[0].0.to_string();
    match resources.resolve(&file).map(|b| Texture::decode(&b)) {
        Some(Ok(mut tex)) => {
            tex.name = Some(file);
            mesh.texture = Some(tex);
        }
        Some(Err(e)) => {
            report.missing_texture = true;
            report.warnings.push(format!("texture {file:?} unreadable: {e}"));
        }
        None => {
            report.missing_texture = true;
            report.warnings.push(format!("texture {file:?} not found"));
        }
    }
}

/// Serializes a mesh as OBJ text.
pub fn save_obj(mesh: &Mesh) -> Vec<u8> {
    write_obj(mesh, None)
}

/// As [`save_obj`], with `mtllib`/`usemtl` records so the texture shows up
/// in viewers.
pub fn save_obj_with_material(mesh: &Mesh, mtllib: &str, material: &str) -> Vec<u8> {
    write_obj(mesh, Some((mtllib, material)))
}

fn write_obj(mesh: &Mesh, material: Option<(&str, &str)>) -> Vec<u8> {
    let mut out = String::with_capacity(mesh.positions.len() * 40 + mesh.faces.len() * 30);
    if let Some((lib, name)) = material {
        let _ = writeln!(out, "mtllib {lib}");
        let _ = writeln!(out, "usemtl {name}");
    }
    for p in &mesh.positions {
        let _ = writeln!(out, "v {} {} {}", p[0], p[1], p[2]);
    }
    for uv in &mesh.uvs {
        let _ = writeln!(out, "vt {} {}", uv[0], uv[1]);
    }
    for f in &mesh.faces {
        let p = f.positions;
        match f.uvs {
            Some(t) if f.provenance != UvProvenance::Absent => {
                let _ = writeln!(
                    out,
                    "f {}/{} {}/{} {}/{}",
                    p[0] + 1,
                    t[0] + 1,
                    p[1] + 1,
                    t[1] + 1,
                    p[2] + 1,
                    t[2] + 1
                );
            }
            _ => {
                let _ = writeln!(out, "f {} {} {}", p[0] + 1, p[1] + 1, p[2] + 1);
            }
        }
    }
    out.into_bytes()
}
