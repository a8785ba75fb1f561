use super::{GeometryImage, NO_CHART};
use crate::atlas::topology::UnionFind;
use crate::geom;
use crate::mesh::{Face, Mesh, UvProvenance};
use crate::raster::pixel_center_uv;

/// Rebuilds a triangle mesh from a geometry image: one vertex per valid
/// pixel (row-major), triangles from each 2x2 block whose valid pixels all
/// belong to one chart.
pub fn extract_mesh(gim: &GeometryImage) -> Mesh {
    let n = gim.resolution as usize;
    let mut vertex = vec![u32::MAX; n * n];
    let mut mesh = Mesh::default();
    for idx in 0..n * n {
        if gim.mask[idx] {
            vertex[idx] = mesh.positions.len() as u32;
            mesh.positions.push(gim.decode(idx));
            mesh.uvs.push(pixel_center_uv((idx % n) as u32, (idx / n) as u32, gim.resolution));
        }
    }
    if n < 2 {
        return mesh;
    }
    let pos = |idx: usize| mesh.positions[vertex[idx] as usize];
    let flipped = |idx: usize| {
        gim.chart_table
            .get(gim.chart_ids[idx] as usize)
            .is_some_and(|c| c.flipped)
    };

    // Corners in UV-counterclockwise cyclic order: top-left, bottom-left,
    // bottom-right, top-right.
    let corners = |i: usize, j: usize| [j * n + i, (j + 1) * n + i, (j + 1) * n + i + 1, j * n + i + 1];
    let same_chart = |c: &[usize]| {
        let id = gim.chart_ids[c[0]];
        c.iter().all(|&k| gim.chart_ids[k] == id)
    };

    let mut tris: Vec<[usize; 3]> = Vec::new();
    let mut partial: Vec<(usize, usize, [usize; 3])> = Vec::new();
    let mut block_normal = vec![[0.0f64; 3]; (n - 1) * (n - 1)];
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let c = corners(i, j);
            let valid: Vec<usize> = c.iter().copied().filter(|&k| gim.mask[k]).collect();
            if valid.len() < 3 || !same_chart(&valid) {
                continue;
            }
            let flip = flipped(valid[0]);
            if valid.len() == 4 {
                let [a, b, d, e] = c; // tl, bl, br, tr
                let main = geom::dist2(pos(a), pos(d));
                let anti = geom::dist2(pos(e), pos(b));
                let pair = if anti < main {
                    [[a, b, e], [e, b, d]]
                } else {
                    [[a, b, d], [a, d, e]]
                };
                let mut nrm = [0.0; 3];
                for t in pair {
                    let t = if flip { [t[0], t[2], t[1]] } else { t };
                    let w = geom::cross(geom::sub(pos(t[1]), pos(t[0])), geom::sub(pos(t[2]), pos(t[0])));
                    nrm = geom::add(nrm, w);
                    tris.push(t);
                }
                block_normal[j * (n - 1) + i] = nrm;
            } else {
                let t = [valid[0], valid[1], valid[2]];
                let t = if flip { [t[0], t[2], t[1]] } else { t };
                partial.push((i, j, t));
            }
        }
    }
    for (i, j, t) in partial {
        let w = geom::cross(geom::sub(pos(t[1]), pos(t[0])), geom::sub(pos(t[2]), pos(t[0])));
        let (mut agree, mut disagree) = (0, 0);
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (x, y) = (i as i64 + di, j as i64 + dj);
                if (di, dj) == (0, 0) || x < 0 || y < 0 || x >= n as i64 - 1 || y >= n as i64 - 1 {
                    continue;
                }
                let nb = block_normal[y as usize * (n - 1) + x as usize];
                if gim.chart_ids[y as usize * n + x as usize] != gim.chart_ids[t[0]] {
                    continue;
                }
                let d = geom::dot(nb, w);
                if d > 0.0 {
                    agree += 1;
                } else if d < 0.0 {
                    disagree += 1;
                }
            }
        }
        tris.push(if disagree > agree { [t[0], t[2], t[1]] } else { t });
    }
    mesh.faces = tris
        .into_iter()
        .map(|t| {
            let v = t.map(|k| vertex[k]);
            Face { positions: v, uvs: Some(v), provenance: UvProvenance::Generated }
        })
        .collect();
    mesh
}

/// Labels 8-connected components of the mask, row-major first-seen order.
/// Used as chart ids when no id raster is available.
pub fn label_mask_components(mask: &[bool], resolution: u32) -> (Vec<u32>, usize) {
    let n = resolution as usize;
    let mut uf = UnionFind::new(n * n);
    for j in 0..n {
        for i in 0..n {
            let idx = j * n + i;
            if !mask[idx] {
                continue;
            }
            let mut link = |x: usize, y: usize| {
                if mask[y * n + x] {
                    uf.union(idx as u32, (y * n + x) as u32);
                }
            };
            if i + 1 < n {
                link(i + 1, j);
            }
            if j + 1 < n {
                link(i, j + 1);
                if i + 1 < n {
                    link(i + 1, j + 1);
                }
                if i > 0 {
                    link(i - 1, j + 1);
                }
            }
        }
    }
    let mut label = vec![NO_CHART; n * n];
    let mut of_root = std::collections::HashMap::new();
    for idx in 0..n * n {
        if mask[idx] {
            let r = uf.find(idx as u32);
            let next = of_root.len() as u32;
            label[idx] = *of_root.entry(r).or_insert(next);
        }
    }
    let count = of_root.len();
    (label, count)
}

#[cfg(test)]
mod tests {
    use super::super::{Encoding, GeometryImage};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn block(p: [[f32; 3]; 4]) -> GeometryImage {
        // pixel order: (0,0) (1,0) (0,1) (1,1)
        let mut g = GeometryImage::empty(2, Encoding::Cartesian);
        g.positions = p.to_vec();
        g.mask = vec![true; 4];
        g.chart_ids = vec![0; 4];
        g
    }

    fn has_edge(m: &Mesh, a: u32, b: u32) -> bool {
        m.faces.iter().any(|f| {
            let p = f.positions;
            (0..3).any(|k| {
                let (x, y) = (p[k], p[(k + 1) % 3]);
                (x, y) == (a, b) || (x, y) == (b, a)
            })
        })
    }

    #[test]
    fn square_block_tie_uses_main_diagonal() {
        let g = block([[0.0, 1.0, 0.5], [1.0, 1.0, 0.5], [0.0, 0.0, 0.5], [1.0, 0.0, 0.5]]);
        let m = extract_mesh(&g);
        assert_eq!(m.faces.len(), 2);
        assert!(has_edge(&m, 0, 3));
        assert!(!has_edge(&m, 1, 2));
        // both triangles face +z, consistent with a planar layout
        for f in 0..2 {
            let [a, b, c] = m.face_positions(f);
            assert!(geom::triangle_normal(a, b, c)[2] > 0.0);
        }
    }

    #[test]
    fn random_blocks_split_on_shorter_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let mut p = [[0f32; 3]; 4];
            for q in &mut p {
                *q = [rng.random(), rng.random(), rng.random()];
            }
            let g = block(p);
            let m = extract_mesh(&g);
            let d = |a: usize, b: usize| geom::dist2(g.decode(a), g.decode(b));
            let (main, anti) = (d(0, 3), d(1, 2));
            assert_eq!(m.faces.len(), 2);
            if main <= anti {
                assert!(has_edge(&m, 0, 3));
            } else {
                assert!(has_edge(&m, 1, 2));
            }
        }
    }

    #[test]
    fn mixed_and_sparse_blocks() {
        let mut g = block([[0.0; 3]; 4]);
        g.chart_ids = vec![0, 0, 1, 1];
        assert!(extract_mesh(&g).faces.is_empty());
        g.chart_ids = vec![0; 4];
        g.mask = vec![true, true, true, false];
        g.positions[3] = [0.0; 3];
        g.chart_ids[3] = NO_CHART;
        let m = extract_mesh(&g);
        assert_eq!(m.positions.len(), 3);
        assert_eq!(m.faces.len(), 1);
        g.mask = vec![true, false, false, true];
        assert!(extract_mesh(&g).faces.is_empty());
    }

    #[test]
    fn labels_diagonal_neighbours_together() {
        let mut mask = [false; 16];
        for k in [0, 5, 11, 15] {
            mask[k] = true;
        }
        let (labels, count) = label_mask_components(&mask, 4);
        assert_eq!(count, 2);
        assert_eq!(labels[0], labels[5]);
        assert_eq!(labels[11], labels[15]);
        assert_ne!(labels[0], labels[15]);
    }
}
