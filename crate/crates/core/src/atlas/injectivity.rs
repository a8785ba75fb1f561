//! Raster-level injectivity check of a chart layout.

use serde::{Deserialize, Serialize};

use super::Chart;
use crate::raster::rasterize_triangle;

/// Conflicts kept verbatim in a report; the total is always counted.
const MAX_LISTED_CONFLICTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub pixel: (u32, u32),
    pub face_a: u32,
    pub face_b: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectivityReport {
    pub resolution: u32,
    pub pass: bool,
    pub claimed_pixels: usize,
    pub conflict_count: usize,
    pub conflicts: Vec<Conflict>,
}

const FREE: (u32, u32) = (u32::MAX, u32::MAX);

fn corners_shared(a: &[[f64; 2]; 3], b: &[[f64; 2]; 3]) -> usize {
    a.iter().filter(|p| b.contains(p)).count()
}

/// Rasterizes every chart triangle (in atlas UV, after each chart's
/// transform) at pixel centers. Fails if any pixel is claimed by faces of
/// two different charts, or by two faces of one chart that do not share an
/// edge.
pub fn verify_injective(charts: &[Chart], resolution: u32) -> InjectivityReport {
    let n = resolution as usize;
    // (chart index, face slot within chart)
    let mut owner = vec![FREE; n * n];
    let mut claimed = 0usize;
    let mut conflict_count = 0usize;
    let mut conflicts = Vec::new();
    for (ci, chart) in charts.iter().enumerate() {
        for k in 0..chart.face_ids.len() {
            let uv = chart.packed_uvs(k);
            rasterize_triangle(uv, resolution, |i, j, _| {
                let slot = &mut owner[j as usize * n + i as usize];
                if *slot == FREE {
                    *slot = (ci as u32, k as u32);
                    claimed += 1;
                    return;
                }
                let (oc, ok) = *slot;
                let tolerated = oc as usize == ci
                    && corners_shared(&chart.source_uvs[ok as usize], &chart.source_uvs[k]) >= 2;
                if tolerated {
                    return;
                }
                conflict_count += 1;
                if conflicts.len() < MAX_LISTED_CONFLICTS {
                    conflicts.push(Conflict {
                        pixel: (i, j),
                        face_a: charts[oc as usize].face_ids[ok as usize],
                        face_b: chart.face_ids[k],
                    });
                }
            });
        }
    }
    InjectivityReport {
        resolution,
        pass: conflict_count == 0,
        claimed_pixels: claimed,
        conflict_count,
        conflicts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{equal_area_rescale, pack_atlas, split_charts, ChartTransform};
    use crate::fixtures;
    use crate::geom::Vec2;
    use crate::mesh::UvProvenance;

    fn tri_chart(id: u32, uv: [Vec2; 3]) -> Chart {
        Chart::from_faces(id, vec![id], vec![uv], &[1.0], UvProvenance::Manual)
    }

    #[test]
    fn packed_cube_passes() {
        let set = equal_area_rescale(&split_charts(&fixtures::cube()));
        let layout = pack_atlas(&set, 256, 2).unwrap();
        let report = verify_injective(&layout.charts, 256);
        assert!(report.pass, "{report:?}");
        assert!(report.claimed_pixels > 0);
    }

    #[test]
    fn overlapping_charts_fail() {
        let set = split_charts(&fixtures::cube());
        let mut charts = set.charts.clone();
        // pack two charts onto the same rectangle
        for c in charts.iter_mut().take(2) {
            c.transform = ChartTransform {
                scale: 1.0 / c.uv_bbox.width().max(c.uv_bbox.height()),
                quarter_turns: 0,
                offset: [0.0, 0.0],
            };
            let m = c.uv_bbox.min;
            c.transform.offset = [-m[0] * c.transform.scale, -m[1] * c.transform.scale];
        }
        let report = verify_injective(&charts[..2], 64);
        assert!(!report.pass);
        assert!(report.conflict_count >= 1);
        assert!(!report.conflicts.is_empty());
    }

    #[test]
    fn folded_chart_fails_before_split() {
        // the fan's two halves overlap in UV when kept as one chart
        let (m, _) = fixtures::folded_fan();
        let faces: Vec<u32> = (0..m.faces.len() as u32).collect();
        let uvs = faces.iter().map(|&f| m.face_uvs(f as usize).unwrap()).collect();
        let chart = Chart::from_faces(0, faces, uvs, &[1.0; 6], UvProvenance::Manual);
        assert!(!verify_injective(&[chart], 128).pass);
    }

    /// Two charts whose boxes overlap but whose triangles interleave without
    /// touching: brute-force point-in-triangle over all pixel centers shows
    /// no center is inside both.
    #[test]
    fn interleaved_boxes_pass() {
        let a = tri_chart(0, [[0.1, 0.1], [0.9, 0.1], [0.1, 0.9]]);
        let b = tri_chart(1, [[0.9, 0.15], [0.9, 0.9], [0.15, 0.9]]);
        assert!(a.uv_bbox.overlaps(&b.uv_bbox));
        let n = 256;
        let inside = |t: [Vec2; 3], p: Vec2| {
            let o = |a: Vec2, b: Vec2| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            let w = [o(t[0], t[1]), o(t[1], t[2]), o(t[2], t[0])];
            w.iter().all(|&x| x >= 0.0) || w.iter().all(|&x| x <= 0.0)
        };
        let mut both = 0;
        for j in 0..n {
            for i in 0..n {
                let p = crate::raster::pixel_center_uv(i, j, n);
                if inside(a.source_uvs[0], p) && inside(b.source_uvs[0], p) {
                    both += 1;
                }
            }
        }
        assert_eq!(both, 0);
        assert!(verify_injective(&[a, b], n).pass);
    }
}
