//! Equal-area chart rescaling and deterministic shelf packing.

use super::{verify_injective, Chart, ChartSet, ChartTransform, InjectivityReport};
use crate::error::{Error, Result};
use crate::geom::{Rect, Vec2};

pub const DEFAULT_GUTTER_PX: u32 = 2;

/// Largest global shrink tried before giving up on a layout.
pub const MAX_SHRINK: f64 = 4.0;

/// Scales every chart so its UV area is proportional to its share of the
/// total 3D surface area; the scaled UV areas sum to 1. Each chart's box is
/// moved to the origin.
pub fn equal_area_rescale(charts: &ChartSet) -> ChartSet {
    let total: f64 = charts.charts.iter().map(|c| c.surface_area_3d).sum();
    let mut out = charts.clone();
    for c in &mut out.charts {
        let target = c.surface_area_3d / total;
        let s = (target / c.uv_area).sqrt();
        c.transform = ChartTransform {
            scale: s,
            quarter_turns: 0,
            offset: [-s * c.uv_bbox.min[0], -s * c.uv_bbox.min[1]],
        };
        c.packed_box = None;
    }
    out
}

/// Charts placed in the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct AtlasLayout {
    pub resolution: u32,
    pub gutter_px: u32,
    pub charts: Vec<Chart>,
    pub uncovered_faces: Vec<u32>,
    pub manual_coverage: f64,
    /// Global factor applied on top of the equal-area scales; the packed
    /// charts cover `fill` of the unit square.
    pub fill: f64,
    certified_resolution: Option<u32>,
}

impl AtlasLayout {
    /// Builds a layout from charts whose transforms are already final.
    pub fn from_charts(charts: Vec<Chart>, resolution: u32) -> Self {
        let fill = charts.iter().map(|c| c.packed_uv_area()).sum();
        AtlasLayout {
            resolution,
            gutter_px: 0,
            charts,
            uncovered_faces: Vec::new(),
            manual_coverage: 1.0,
            fill,
            certified_resolution: None,
        }
    }

    /// Runs [`verify_injective`] at `resolution` and, if it passes, records
    /// the certificate that encoding at that resolution requires.
    pub fn certify(&mut self, resolution: u32) -> InjectivityReport {
        let report = verify_injective(&self.charts, resolution);
        self.certified_resolution = report.pass.then_some(resolution);
        report
    }

    pub fn certified_resolution(&self) -> Option<u32> {
        self.certified_resolution
    }

    /// Invalidates the certificate; call after editing chart transforms.
    pub fn clear_certificate(&mut self) {
        self.certified_resolution = None;
    }
}

struct Item {
    chart: usize,
    /// Rescaled (pre-global-factor) size, after optional rotation.
    w: f64,
    h: f64,
    rotated: bool,
}

/// Pixel origin (top-left, y down) of each item, or `None` if they do not fit.
fn shelf_pack(items: &[Item], g: f64, n: u32, gutter: u32) -> Option<Vec<(u32, u32, u32, u32)>> {
    let nf = n as f64;
    let mut out = Vec::with_capacity(items.len());
    let (mut x, mut y, mut shelf_h) = (0u32, 0u32, 0u32);
    for it in items {
        let w = (it.w * g * nf).ceil().max(1.0) as u32;
        let h = (it.h * g * nf).ceil().max(1.0) as u32;
        if w > n || h > n {
            return None;
        }
        if x > 0 && x + w > n {
            y += shelf_h + gutter;
            x = 0;
            shelf_h = 0;
        }
        if y + h > n {
            return None;
        }
        out.push((x, y, w, h));
        x += w + gutter;
        shelf_h = shelf_h.max(h);
    }
    Some(out)
}

/// Shelf-packs rescaled charts into the unit square at `resolution`, with
/// at least `gutter_px` pixels between chart boxes. Charts taller than wide
/// are turned a quarter. The global scale is the largest (to bisection
/// precision) at which everything fits, searched down to `1 / MAX_SHRINK`.
pub fn pack_atlas(charts: &ChartSet, resolution: u32, gutter_px: u32) -> Result<AtlasLayout> {
    if charts.charts.is_empty() {
        return Err(Error::EmptyLayout);
    }
    let mut items: Vec<Item> = charts
        .charts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let w = c.uv_bbox.width() * c.transform.scale;
            let h = c.uv_bbox.height() * c.transform.scale;
            if h > w {
                Item { chart: i, w: h, h: w, rotated: true }
            } else {
                Item { chart: i, w, h, rotated: false }
            }
        })
        .collect();
    items.sort_by(|a, b| {
        b.h.total_cmp(&a.h)
            .then(b.w.total_cmp(&a.w))
            .then(a.chart.cmp(&b.chart))
    });

    let overflow = || Error::AtlasOverflow {
        charts: charts.charts.len(),
        resolution,
    };
    let mut lo = 1.0 / MAX_SHRINK;
    let mut best = shelf_pack(&items, lo, resolution, gutter_px).ok_or_else(overflow)?;
    let mut hi = 1.0;
    if let Some(p) = shelf_pack(&items, hi, resolution, gutter_px) {
        lo = hi;
        best = p;
    }
    for _ in 0..48 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match shelf_pack(&items, mid, resolution, gutter_px) {
            Some(p) => {
                lo = mid;
                best = p;
            }
            None => hi = mid,
        }
    }
    let g = lo;

    let nf = resolution as f64;
    let mut out = charts.charts.clone();
    for (it, &(px, py, _, h)) in items.iter().zip(&best) {
        let c = &mut out[it.chart];
        let scale = c.transform.scale * g;
        let k = if it.rotated { 1 } else { 0 };
        // rotated box minimum of the scaled source box
        let corners: Vec<Vec2> = [
            c.uv_bbox.min,
            [c.uv_bbox.max[0], c.uv_bbox.min[1]],
            c.uv_bbox.max,
            [c.uv_bbox.min[0], c.uv_bbox.max[1]],
        ]
        .iter()
        .map(|p| super::rotate_quarter([p[0] * scale, p[1] * scale], k))
        .collect();
        let min_x = corners.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let min_y = corners.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let target = [px as f64 / nf, 1.0 - (py + h) as f64 / nf];
        c.transform = ChartTransform {
            scale,
            quarter_turns: k,
            offset: [target[0] - min_x, target[1] - min_y],
        };
        let (bw, bh) = (it.w * g, it.h * g);
        c.packed_box = Some(Rect {
            min: target,
            max: [target[0] + bw, target[1] + bh],
        });
    }
    let fill = out.iter().map(|c| c.packed_uv_area()).sum();
    Ok(AtlasLayout {
        resolution,
        gutter_px,
        charts: out,
        uncovered_faces: charts.uncovered_faces.clone(),
        manual_coverage: charts.manual_coverage,
        fill,
        certified_resolution: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::split_charts;
    use crate::fixtures;
    use crate::mesh::UvProvenance;
    use proptest::prelude::*;

    fn rect_chart(id: u32, w: f64, h: f64, area3: f64) -> Chart {
        let uv = vec![[[0.0, 0.0], [w, 0.0], [w, h]], [[0.0, 0.0], [w, h], [0.0, h]]];
        Chart::from_faces(id, vec![2 * id, 2 * id + 1], uv, &[area3 / 2.0; 2], UvProvenance::Manual)
    }

    fn set_of(charts: Vec<Chart>) -> ChartSet {
        let n = charts.iter().map(|c| c.face_ids.len()).sum();
        ChartSet { charts, uncovered_faces: vec![], manual_coverage: 1.0, demoted_charts: 0, total_faces: n }
    }

    fn ratio_spread(charts: &[Chart]) -> f64 {
        let r: Vec<f64> = charts.iter().map(|c| c.surface_area_3d / c.packed_uv_area()).collect();
        r.iter().cloned().fold(f64::MIN, f64::max) / r.iter().cloned().fold(f64::MAX, f64::min)
    }

    /// Interval-overlap oracle on the placed boxes.
    fn assert_disjoint_inside(layout: &AtlasLayout) {
        let boxes: Vec<Rect> = layout.charts.iter().map(|c| c.packed_box.unwrap()).collect();
        for (i, a) in boxes.iter().enumerate() {
            assert!(a.min[0] >= 0.0 && a.min[1] >= -1e-12 && a.max[0] <= 1.0 + 1e-12 && a.max[1] <= 1.0 + 1e-12, "{a:?}");
            for b in &boxes[i + 1..] {
                let x = a.min[0] < b.max[0] && b.min[0] < a.max[0];
                let y = a.min[1] < b.max[1] && b.min[1] < a.max[1];
                assert!(!(x && y), "{a:?} overlaps {b:?}");
            }
        }
        // every packed triangle stays inside its box
        for c in &layout.charts {
            let b = c.packed_box.unwrap();
            for k in 0..c.face_ids.len() {
                for p in c.packed_uvs(k) {
                    assert!(p[0] >= b.min[0] - 1e-9 && p[0] <= b.max[0] + 1e-9);
                    assert!(p[1] >= b.min[1] - 1e-9 && p[1] <= b.max[1] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn areas_one_to_three() {
        let set = set_of(vec![rect_chart(0, 0.5, 0.5, 1.0), rect_chart(1, 0.5, 0.5, 3.0)]);
        let out = equal_area_rescale(&set);
        let a = out.charts[0].packed_uv_area();
        let b = out.charts[1].packed_uv_area();
        assert!((b / a - 3.0).abs() < 1e-12);
        assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cube_faces_rescale_equally() {
        let out = equal_area_rescale(&split_charts(&fixtures::cube()));
        let first = out.charts[0].packed_uv_area();
        assert!(out.charts.iter().all(|c| (c.packed_uv_area() - first).abs() < 1e-12));
        assert!(ratio_spread(&out.charts) <= 1.0 + 1e-6);
    }

    #[test]
    fn single_chart_at_origin() {
        let set = equal_area_rescale(&set_of(vec![rect_chart(0, 0.3, 0.2, 1.0)]));
        let layout = pack_atlas(&set, 128, 2).unwrap();
        let b = layout.charts[0].packed_box.unwrap();
        assert_eq!(b.min[0], 0.0);
        assert!(b.max[1] > 1.0 - 1.0 / 128.0 && b.max[1] <= 1.0);
        // maximal: the box fills the full width within one pixel
        assert!(b.max[0] > 1.0 - 1.0 / 128.0);
    }

    #[test]
    fn six_equal_squares() {
        let set = equal_area_rescale(&set_of((0..6).map(|i| rect_chart(i, 1.0, 1.0, 1.0)).collect()));
        let layout = pack_atlas(&set, 256, 2).unwrap();
        assert_eq!(layout.charts.len(), 6);
        assert_disjoint_inside(&layout);
        assert!(ratio_spread(&layout.charts) <= 1.05);
    }

    #[test]
    fn gutter_separates_boxes() {
        let set = equal_area_rescale(&set_of((0..9).map(|i| rect_chart(i, 1.0, 0.5 + 0.1 * i as f64, 1.0)).collect()));
        let n = 200;
        let layout = pack_atlas(&set, n, 3).unwrap();
        let px: Vec<Rect> = layout.charts.iter().map(|c| {
            let b = c.packed_box.unwrap();
            Rect { min: [b.min[0] * n as f64, b.min[1] * n as f64], max: [b.max[0] * n as f64, b.max[1] * n as f64] }
        }).collect();
        for (i, a) in px.iter().enumerate() {
            for b in &px[i + 1..] {
                let gap_x = (b.min[0] - a.max[0]).max(a.min[0] - b.max[0]);
                let gap_y = (b.min[1] - a.max[1]).max(a.min[1] - b.max[1]);
                assert!(gap_x.max(gap_y) >= 3.0 - 1e-9, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn overflow_when_too_many_charts() {
        let set = equal_area_rescale(&set_of((0..2000).map(|i| rect_chart(i, 1.0, 1.0, 1.0)).collect()));
        assert!(matches!(pack_atlas(&set, 32, 2), Err(Error::AtlasOverflow { .. })));
    }

    #[test]
    fn deterministic() {
        let set = equal_area_rescale(&split_charts(&fixtures::articulated_figure()));
        assert_eq!(pack_atlas(&set, 512, 2).unwrap(), pack_atlas(&set, 512, 2).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn random_aspect_charts_pack_disjoint(
            dims in proptest::collection::vec((0.05f64..1.0, 0.05f64..1.0, 0.1f64..5.0), 100),
        ) {
            let charts = dims.iter().enumerate().map(|(i, &(w, h, a))| rect_chart(i as u32, w, h, a)).collect();
            let set = equal_area_rescale(&set_of(charts));
            let layout = pack_atlas(&set, 768, 2).unwrap();
            assert_disjoint_inside(&layout);
            prop_assert!(ratio_spread(&layout.charts) <= 1.0 + 1e-9);
        }
    }
}
