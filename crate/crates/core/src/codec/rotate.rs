use super::{AlbedoImage, GeometryImage};

/// Source pixel of destination pixel `(i, j)` after `k` counter-clockwise
/// quarter turns of an `n`-pixel square.
fn source_pixel(i: usize, j: usize, n: usize, k: u8) -> (usize, usize) {
    match k % 4 {
        0 => (i, j),
        1 => (n - 1 - j, i),
        2 => (n - 1 - i, n - 1 - j),
        _ => (j, n - 1 - i),
    }
}

fn rotate_raster<T: Copy>(data: &[T], n: usize, k: u8) -> Vec<T> {
    let mut out = Vec::with_capacity(data.len());
    for j in 0..n {
        for i in 0..n {
            let (si, sj) = source_pixel(i, j, n, k);
            out.push(data[sj * n + si]);
        }
    }
    out
}

/// Rotates the geometry image (and optionally its albedo) by `k`
/// counter-clockwise quarter turns, updating every chart transform.
pub fn rotate_atlas(gim: &GeometryImage, albedo: Option<&AlbedoImage>, k: u8) -> (GeometryImage, Option<AlbedoImage>) {
    let n = gim.resolution as usize;
    let mut g = gim.clone();
    g.positions = rotate_raster(&gim.positions, n, k);
    g.mask = rotate_raster(&gim.mask, n, k);
    g.chart_ids = rotate_raster(&gim.chart_ids, n, k);
    for c in &mut g.chart_table {
        c.transform = c.transform.then_rotate_atlas(k % 4);
    }
    let a = albedo.map(|a| {
        let m = a.resolution as usize;
        AlbedoImage {
            resolution: a.resolution,
            colors: rotate_raster(&a.colors, m, k),
            mask: rotate_raster(&a.mask, m, k),
            constant_fill: a.constant_fill,
        }
    });
    (g, a)
}
