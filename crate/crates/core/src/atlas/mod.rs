//! Decomposition of a mesh's UV map into locally invertible charts, and
//! their equal-area packing into the unit square.

mod charts;
mod injectivity;
mod packing;
pub(crate) mod topology;

use serde::{Deserialize, Serialize};

use crate::geom::{Rect, Vec2};
use crate::mesh::UvProvenance;

pub use charts::{
    coverage_filter, split_charts, unwrap_missing, unwrap_missing_with, CoverageDecision,
    ExternalUnwrapper, GeneratedChart, PerFaceUnwrapper, Unwrapper, MIN_CHART_UV_AREA,
};
pub use injectivity::{verify_injective, Conflict, InjectivityReport};
pub use packing::{equal_area_rescale, pack_atlas, AtlasLayout, DEFAULT_GUTTER_PX, MAX_SHRINK};
pub use topology::{
    connected_components, detect_creases, detect_seams, weld_positions, Edge, Topology,
    UV_TOLERANCE, WELD_TOLERANCE,
};

/// Similarity map from source UV to atlas UV:
/// `p -> rotate(quarter_turns * 90deg, scale * p) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartTransform {
    pub scale: f64,
    pub quarter_turns: u8,
    pub offset: Vec2,
}

impl Default for ChartTransform {
    fn default() -> Self {
        ChartTransform {
            scale: 1.0,
            quarter_turns: 0,
            offset: [0.0, 0.0],
        }
    }
}

/// Counter-clockwise rotation by `k` quarter turns.
#[inline]
pub fn rotate_quarter(p: Vec2, k: u8) -> Vec2 {
    match k % 4 {
        0 => p,
        1 => [-p[1], p[0]],
        2 => [-p[0], -p[1]],
        _ => [p[1], -p[0]],
    }
}

impl ChartTransform {
    #[inline]
    pub fn apply(&self, uv: Vec2) -> Vec2 {
        let r = rotate_quarter([uv[0] * self.scale, uv[1] * self.scale], self.quarter_turns);
        [r[0] + self.offset[0], r[1] + self.offset[1]]
    }

    #[inline]
    pub fn invert(&self, p: Vec2) -> Vec2 {
        let r = rotate_quarter(
            [p[0] - self.offset[0], p[1] - self.offset[1]],
            (4 - self.quarter_turns % 4) % 4,
        );
        [r[0] / self.scale, r[1] / self.scale]
    }

    /// This transform followed by a rotation of the whole atlas by `k`
    /// quarter turns about the center of the unit square.
    pub fn then_rotate_atlas(&self, k: u8) -> ChartTransform {
        let c = [0.5, 0.5];
        let t = rotate_quarter([self.offset[0] - c[0], self.offset[1] - c[1]], k);
        ChartTransform {
            scale: self.scale,
            quarter_turns: (self.quarter_turns + k) % 4,
            offset: [t[0] + c[0], t[1] + c[1]],
        }
    }
}

/// A connected, locally invertible piece of the UV map.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub id: u32,
    pub face_ids: Vec<u32>,
    /// Source UV of each face's corners, parallel to `face_ids`.
    pub source_uvs: Vec<[Vec2; 3]>,
    pub uv_bbox: Rect,
    pub surface_area_3d: f64,
    /// Unsigned area of the source UVs.
    pub uv_area: f64,
    pub transform: ChartTransform,
    pub provenance: UvProvenance,
    /// The source UVs wind opposite to the 3D faces.
    pub flipped: bool,
    /// Placement in the atlas (UV units), once packed.
    pub packed_box: Option<Rect>,
}

impl Chart {
    /// Atlas UVs of the `k`-th face.
    pub fn packed_uvs(&self, k: usize) -> [Vec2; 3] {
        self.source_uvs[k].map(|uv| self.transform.apply(uv))
    }

    /// UV area after the chart transform.
    pub fn packed_uv_area(&self) -> f64 {
        self.uv_area * self.transform.scale * self.transform.scale
    }

    pub(crate) fn from_faces(
        id: u32,
        face_ids: Vec<u32>,
        source_uvs: Vec<[Vec2; 3]>,
        face_areas: &[f64],
        provenance: UvProvenance,
    ) -> Chart {
        let mut uv_bbox = Rect::empty();
        let mut signed = 0.0;
        let mut unsigned = 0.0;
        let mut area3 = 0.0;
        for (k, uv) in source_uvs.iter().enumerate() {
            for p in uv {
                uv_bbox.include(*p);
            }
            let a = crate::geom::signed_area2(uv[0], uv[1], uv[2]);
            signed += a * face_areas[k];
            unsigned += a.abs();
            area3 += face_areas[k];
        }
        Chart {
            id,
            face_ids,
            source_uvs,
            uv_bbox,
            surface_area_3d: area3,
            uv_area: unsigned,
            transform: ChartTransform::default(),
            provenance,
            flipped: signed < 0.0,
            packed_box: None,
        }
    }
}

/// All charts of a mesh plus the faces that have no UVs yet.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartSet {
    pub charts: Vec<Chart>,
    pub uncovered_faces: Vec<u32>,
    /// Fraction of 3D surface area whose faces carry authored UVs.
    pub manual_coverage: f64,
    /// Charts dropped into `uncovered_faces` because their UV area vanished.
    pub demoted_charts: usize,
    pub total_faces: usize,
}

impl ChartSet {
    pub fn face_count(&self) -> usize {
        self.charts.iter().map(|c| c.face_ids.len()).sum::<usize>() + self.uncovered_faces.len()
    }
}
