//! Geometry images: encoding a chart layout into a position raster, the
//! aligned albedo raster, and mesh extraction back out of the raster.

mod albedo;
mod cylindrical;
mod extract;
pub mod io;
mod object;
mod rotate;

use serde::{Deserialize, Serialize};

use crate::atlas::{AtlasLayout, ChartTransform};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::mesh::{Mesh, NormalizationParams, UvProvenance};
use crate::raster::rasterize_triangle;

pub use albedo::{resample_albedo, AlbedoImage, DEFAULT_ALBEDO_FILL};
pub use cylindrical::{circular_mean, from_cylindrical, to_cylindrical, CylindricalParams};
pub use extract::{extract_mesh, label_mask_components};
pub use object::{encode_mesh, EncodeConfig, EncodedObject};
pub use rotate::rotate_atlas;

/// Largest vertex count a geometry image at the default resolution can hold.
pub const MAX_VERTICES_768: usize = 768 * 768;

pub const DEFAULT_RESOLUTION: u32 = 768;

/// Sentinel in the chart-id raster for pixels outside every chart.
pub const NO_CHART: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// `(x, y, z)` mapped from `[-1, 1]` to `[0, 1]`.
    Cartesian,
    /// `(r, theta, height)` around the Y axis, each mapped to `[0, 1]`.
    Cylindrical,
}

impl std::str::FromStr for Encoding {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cartesian" => Ok(Encoding::Cartesian),
            "cylindrical" => Ok(Encoding::Cylindrical),
            other => Err(format!("unknown encoding {other:?} (expected cartesian|cylindrical)")),
        }
    }
}

impl std::fmt::Display for Encoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Encoding::Cartesian => "cartesian",
            Encoding::Cylindrical => "cylindrical",
        })
    }
}

/// Per-chart metadata carried alongside the rasters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartRecord {
    pub id: u32,
    pub transform: ChartTransform,
    /// Azimuth subtracted before normalizing theta (radians).
    pub theta_offset: f64,
    pub provenance: UvProvenance,
    /// Extracted triangles must be wound clockwise in UV to face outward.
    pub flipped: bool,
    pub face_count: usize,
}

/// A square raster of encoded surface positions with its validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryImage {
    pub resolution: u32,
    /// Row-major, row 0 at the top (largest `v`).
    pub positions: Vec<[f32; 3]>,
    pub mask: Vec<bool>,
    /// Index into `chart_table` per pixel, [`NO_CHART`] outside the mask.
    pub chart_ids: Vec<u32>,
    pub encoding: Encoding,
    pub norm: NormalizationParams,
    pub cylindrical: CylindricalParams,
    pub chart_table: Vec<ChartRecord>,
    /// Cylindrical encoding was requested but some chart wraps around the
    /// axis, so the image was encoded as cartesian instead.
    pub cylindrical_fallback: bool,
}

impl GeometryImage {
    pub fn empty(resolution: u32, encoding: Encoding) -> Self {
        let n = (resolution as usize) * (resolution as usize);
        GeometryImage {
            resolution,
            positions: vec![[0.0; 3]; n],
            mask: vec![false; n],
            chart_ids: vec![NO_CHART; n],
            encoding,
            norm: NormalizationParams::default(),
            cylindrical: CylindricalParams::default(),
            chart_table: Vec::new(),
            cylindrical_fallback: false,
        }
    }

    #[inline]
    pub fn index(&self, i: u32, j: u32) -> usize {
        j as usize * self.resolution as usize + i as usize
    }

    pub fn valid_pixels(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Encodes a normalized position for chart `chart`.
    pub fn encode_point(&self, p: Vec3, chart: usize) -> [f64; 3] {
        match self.encoding {
            Encoding::Cartesian => p.map(|c| 0.5 * (c + 1.0)),
            Encoding::Cylindrical => {
                let off = self.chart_table.get(chart).map_or(0.0, |c| c.theta_offset);
                to_cylindrical(p, &self.cylindrical, off)
            }
        }
    }

    /// Decodes the stored value of pixel `idx` into normalized coordinates.
    pub fn decode_normalized(&self, idx: usize) -> Vec3 {
        let c = self.positions[idx].map(|x| x as f64);
        match self.encoding {
            Encoding::Cartesian => c.map(|x| 2.0 * x - 1.0),
            Encoding::Cylindrical => {
                let chart = self.chart_ids[idx];
                let off = self
                    .chart_table
                    .get(chart as usize)
                    .map_or(0.0, |r| r.theta_offset);
                from_cylindrical(c, &self.cylindrical, off)
            }
        }
    }

    /// Decodes pixel `idx` into model units.
    pub fn decode(&self, idx: usize) -> Vec3 {
        self.norm.invert(self.decode_normalized(idx))
    }

    /// Invariant violations, as machine-readable reason strings.
    pub fn validate(&self) -> Vec<String> {
        let n = (self.resolution as usize) * (self.resolution as usize);
        let mut reasons = Vec::new();
        if self.positions.len() != n || self.mask.len() != n || self.chart_ids.len() != n {
            reasons.push("raster size mismatch".to_string());
            return reasons;
        }
        let mut outside = 0usize;
        let mut non_finite = 0usize;
        let mut out_of_range = 0usize;
        let mut bad_ids = 0usize;
        for idx in 0..n {
            let p = self.positions[idx];
            if self.mask[idx] {
                if p.iter().any(|c| !c.is_finite()) {
                    non_finite += 1;
                } else if p.iter().any(|c| !(0.0..=1.0).contains(c)) {
                    out_of_range += 1;
                }
                let id = self.chart_ids[idx];
                if id == NO_CHART || id as usize >= self.chart_table.len().max(1) && !self.chart_table.is_empty() {
                    bad_ids += 1;
                }
            } else {
                if p.iter().any(|&c| c != 0.0) {
                    outside += 1;
                }
                if self.chart_ids[idx] != NO_CHART {
                    bad_ids += 1;
                }
            }
        }
        if outside > 0 {
            reasons.push(format!("mask/channel inconsistency: {outside} pixels carry data outside the mask"));
        }
        if non_finite > 0 {
            reasons.push(format!("non-finite position: {non_finite} pixels"));
        }
        if out_of_range > 0 {
            reasons.push(format!("channel out of range: {out_of_range} pixels outside [0,1]"));
        }
        if bad_ids > 0 {
            reasons.push(format!("chart id inconsistency: {bad_ids} pixels"));
        }
        if !(self.norm.scale.is_finite() && self.norm.scale > 0.0) {
            reasons.push("invalid normalization scale".to_string());
        }
        if self.encoding == Encoding::Cylindrical && self.cylindrical.validate().is_err() {
            reasons.push("invalid cylindrical parameters".to_string());
        }
        reasons
    }
}

/// Knobs for [`encode_gim_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct EncodeOptions {
    pub encoding: Encoding,
    pub cylindrical: CylindricalParams,
    /// Fall back to cartesian when a chart wraps around the Y axis.
    pub wrap_fallback: bool,
}

impl EncodeOptions {
    pub fn new(encoding: Encoding) -> Self {
        EncodeOptions {
            encoding,
            cylindrical: CylindricalParams::default(),
            wrap_fallback: true,
        }
    }
}

/// Encodes a normalized mesh through a certified layout.
pub fn encode_gim(
    mesh: &Mesh,
    norm: NormalizationParams,
    layout: &AtlasLayout,
    resolution: u32,
    encoding: Encoding,
) -> Result<GeometryImage> {
    encode_gim_with(mesh, norm, layout, resolution, &EncodeOptions::new(encoding))
}

pub fn encode_gim_with(
    mesh: &Mesh,
    norm: NormalizationParams,
    layout: &AtlasLayout,
    resolution: u32,
    options: &EncodeOptions,
) -> Result<GeometryImage> {
    if layout.charts.is_empty() {
        return Err(Error::EmptyLayout);
    }
    if layout.certified_resolution() != Some(resolution) {
        return Err(Error::NotCertified {
            requested: resolution,
            certified: layout.certified_resolution(),
        });
    }
    let mut gim = GeometryImage::empty(resolution, options.encoding);
    gim.norm = norm;
    gim.cylindrical = options.cylindrical;
    gim.chart_table = layout
        .charts
        .iter()
        .map(|c| ChartRecord {
            id: c.id,
            transform: c.transform,
            theta_offset: 0.0,
            provenance: c.provenance,
            flipped: c.flipped,
            face_count: c.face_ids.len(),
        })
        .collect();

    if options.encoding == Encoding::Cylindrical {
        options.cylindrical.validate().map_err(Error::InvalidImage)?;
        let mut wraps = false;
        for (k, chart) in layout.charts.iter().enumerate() {
            let angles: Vec<(f64, f64)> = chart
                .face_ids
                .iter()
                .flat_map(|&f| mesh.face_positions(f as usize))
                .map(|p| (p[2].atan2(p[0]), (p[0] * p[0] + p[2] * p[2]).sqrt()))
                .collect();
            let offset = circular_mean(angles.iter().map(|&(a, r)| (a, r))) - std::f64::consts::PI;
            gim.chart_table[k].theta_offset = offset;
            wraps |= chart.face_ids.iter().any(|&f| {
                let t: Vec<f64> = mesh
                    .face_positions(f as usize)
                    .iter()
                    .filter(|p| p[0].hypot(p[2]) > 1e-9)
                    .map(|&p| to_cylindrical(p, &options.cylindrical, offset)[1])
                    .collect();
                t.iter().any(|a| t.iter().any(|b| (a - b).abs() >= 0.5))
            });
        }
        if wraps && options.wrap_fallback {
            gim.encoding = Encoding::Cartesian;
            gim.cylindrical_fallback = true;
            for r in &mut gim.chart_table {
                r.theta_offset = 0.0;
            }
        }
    }

    for (k, chart) in layout.charts.iter().enumerate() {
        for (slot, &f) in chart.face_ids.iter().enumerate() {
            let p = mesh.face_positions(f as usize);
            let uv = chart.packed_uvs(slot);
            rasterize_triangle(uv, resolution, |i, j, w| {
                let idx = gim.index(i, j);
                if gim.mask[idx] {
                    return;
                }
                let q = geom::lerp3(w, p[0], p[1], p[2]);
                let e = gim.encode_point(q, k);
                gim.positions[idx] = e.map(|c| c.clamp(0.0, 1.0) as f32);
                gim.mask[idx] = true;
                gim.chart_ids[idx] = k as u32;
            });
        }
    }
    Ok(gim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{equal_area_rescale, pack_atlas, split_charts, Chart};
    use crate::fixtures;
    use crate::mesh::{Face, Mesh};
    use crate::raster::pixel_center_uv;

    fn identity_triangle() -> Mesh {
        Mesh {
            positions: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            uvs: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            faces: vec![Face::new([0, 1, 2], [0, 1, 2])],
            texture: None,
        }
    }

    pub(crate) fn identity_layout(mesh: &Mesh, resolution: u32) -> AtlasLayout {
        let set = split_charts(mesh);
        let mut layout = AtlasLayout::from_charts(set.charts, resolution);
        assert!(layout.certify(resolution).pass);
        layout
    }

    #[test]
    fn identity_lift_reproduces_pixel_centers() {
        let m = identity_triangle();
        let layout = identity_layout(&m, 4);
        let gim = encode_gim(&m, NormalizationParams::default(), &layout, 4, Encoding::Cartesian).unwrap();
        assert!(gim.valid_pixels() > 0);
        for j in 0..4 {
            for i in 0..4 {
                let idx = gim.index(i, j);
                if !gim.mask[idx] {
                    continue;
                }
                let uv = pixel_center_uv(i, j, 4);
                let p = gim.decode_normalized(idx);
                assert!((p[0] - uv[0]).abs() < 1e-6 && (p[1] - uv[1]).abs() < 1e-6);
                assert!((gim.positions[idx][2] - 0.5).abs() < 1e-6);
            }
        }
        assert!(gim.validate().is_empty());
    }

    #[test]
    fn requires_matching_certificate() {
        let m = identity_triangle();
        let layout = identity_layout(&m, 4);
        let err = encode_gim(&m, NormalizationParams::default(), &layout, 8, Encoding::Cartesian).unwrap_err();
        assert!(matches!(err, Error::NotCertified { requested: 8, certified: Some(4) }));
        let empty = AtlasLayout::from_charts(Vec::<Chart>::new(), 4);
        assert!(matches!(
            encode_gim(&m, NormalizationParams::default(), &empty, 4, Encoding::Cartesian),
            Err(Error::EmptyLayout)
        ));
    }

    /// Brute-force oracle over every pixel center: a pixel is in the mask
    /// iff its center lies strictly inside some packed triangle (boundary
    /// centers are resolved by the fill rule and counted separately).
    #[test]
    fn cube_mask_matches_point_in_triangle_oracle() {
        let (m, norm) = crate::mesh::normalize_mesh(&fixtures::cube()).unwrap();
        let set = equal_area_rescale(&split_charts(&m));
        let mut layout = pack_atlas(&set, 256, 2).unwrap();
        assert!(layout.certify(256).pass);
        let gim = encode_gim(&m, norm, &layout, 256, Encoding::Cartesian).unwrap();
        let mut strict = 0;
        let mut boundary = 0;
        for j in 0..256 {
            for i in 0..256 {
                let p = pixel_center_uv(i, j, 256);
                let mut state = 0; // 0 outside, 1 boundary, 2 inside
                for c in &layout.charts {
                    for k in 0..c.face_ids.len() {
                        let t = c.packed_uvs(k);
                        let o = |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                        let w = [o(t[0], t[1]), o(t[1], t[2]), o(t[2], t[0])];
                        let eps = 1e-12;
                        if w.iter().all(|&x| x > eps) || w.iter().all(|&x| x < -eps) {
                            state = 2;
                        } else if state == 0 && (w.iter().all(|&x| x >= -eps) || w.iter().all(|&x| x <= eps)) {
                            state = 1;
                        }
                    }
                }
                let idx = gim.index(i, j);
                match state {
                    2 => { assert!(gim.mask[idx]); strict += 1; }
                    1 => boundary += 1,
                    _ => assert!(!gim.mask[idx]),
                }
            }
        }
        let masked = gim.valid_pixels();
        assert!(masked >= strict && masked <= strict + boundary);
        assert!(strict > 0);
    }

    #[test]
    fn validator_flags_data_outside_mask() {
        let m = identity_triangle();
        let layout = identity_layout(&m, 8);
        let mut gim = encode_gim(&m, NormalizationParams::default(), &layout, 8, Encoding::Cartesian).unwrap();
        let idx = gim.mask.iter().position(|&v| !v).unwrap();
        gim.positions[idx] = [0.25, 0.0, 0.0];
        let reasons = gim.validate();
        assert!(reasons.iter().any(|r| r.starts_with("mask/channel inconsistency")), "{reasons:?}");
    }

    #[test]
    fn sphere_uses_cylindrical_without_fallback() {
        let (m, norm) = crate::mesh::normalize_mesh(&fixtures::sphere_octants(8, 8)).unwrap();
        let set = equal_area_rescale(&split_charts(&m));
        let mut layout = pack_atlas(&set, 128, 2).unwrap();
        assert!(layout.certify(128).pass);
        let gim = encode_gim(&m, norm, &layout, 128, Encoding::Cylindrical).unwrap();
        assert_eq!(gim.encoding, Encoding::Cylindrical);
        assert!(!gim.cylindrical_fallback);
        let cube = crate::mesh::normalize_mesh(&fixtures::cube()).unwrap();
        let set = equal_area_rescale(&split_charts(&cube.0));
        let mut layout = pack_atlas(&set, 128, 2).unwrap();
        layout.certify(128);
        let gim = encode_gim(&cube.0, cube.1, &layout, 128, Encoding::Cylindrical).unwrap();
        assert!(gim.cylindrical_fallback);
        assert_eq!(gim.encoding, Encoding::Cartesian);
    }
}
