//! Pixel-center triangle rasterization with a top-left fill rule.
//!
//! UV space has `v` pointing up; pixel `(i, j)` has its center at
//! `((i + 0.5) / n, 1 - (j + 0.5) / n)`, with row 0 at the top.

use crate::geom::Vec2;

#[inline]
pub fn pixel_center_uv(i: u32, j: u32, n: u32) -> Vec2 {
    let n = n as f64;
    [(i as f64 + 0.5) / n, 1.0 - (j as f64 + 0.5) / n]
}

#[inline]
fn to_pixel(uv: Vec2, n: f64) -> Vec2 {
    [uv[0] * n, (1.0 - uv[1]) * n]
}

/// Edge function evaluated with the endpoints in a canonical order, so the
/// value for `(a, b)` is exactly the negation of the value for `(b, a)`.
/// Neighbouring triangles therefore agree bit-for-bit on points of their
/// shared edge.
#[inline]
fn edge(a: Vec2, b: Vec2, p: Vec2) -> f64 {
    let swap = (b[0], b[1]) < (a[0], a[1]);
    let (a, b) = if swap { (b, a) } else { (a, b) };
    let e = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    if swap {
        -e
    } else {
        e
    }
}

/// Whether an edge `a -> b` of a positively oriented (in y-down pixel
/// space) triangle owns the points lying exactly on it.
#[inline]
fn owns_boundary(a: Vec2, b: Vec2) -> bool {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    // top edge: horizontal with the interior below; left edge: going up
    (dy == 0.0 && dx < 0.0) || dy > 0.0
}

/// Calls `visit(i, j, weights)` for every pixel whose center lies inside the
/// triangle. `weights` are barycentric with respect to `uv` in the given
/// order. Degenerate triangles cover nothing.
pub fn rasterize_triangle(uv: [Vec2; 3], n: u32, mut visit: impl FnMut(u32, u32, [f64; 3])) {
    let nf = n as f64;
    let p = uv.map(|t| to_pixel(t, nf));
    let area = edge(p[0], p[1], p[2]);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    // order[k] indexes the original corners so the triangle is positive
    let order: [usize; 3] = if area > 0.0 { [0, 1, 2] } else { [0, 2, 1] };
    let q = order.map(|k| p[k]);
    let area = area.abs();
    let owns = [
        owns_boundary(q[1], q[2]),
        owns_boundary(q[2], q[0]),
        owns_boundary(q[0], q[1]),
    ];

    let min_x = q.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
    let max_x = q.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
    let min_y = q.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min);
    let max_y = q.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max);
    let i0 = ((min_x - 0.5).ceil().max(0.0)) as u32;
    let j0 = ((min_y - 0.5).ceil().max(0.0)) as u32;
    let i1 = ((max_x - 0.5).floor().min(nf - 1.0)).max(-1.0) as i64;
    let j1 = ((max_y - 0.5).floor().min(nf - 1.0)).max(-1.0) as i64;
    if i1 < i0 as i64 || j1 < j0 as i64 {
        return;
    }
    for j in j0..=j1 as u32 {
        let y = j as f64 + 0.5;
        for i in i0..=i1 as u32 {
            let c = [i as f64 + 0.5, y];
            let w = [edge(q[1], q[2], c), edge(q[2], q[0], c), edge(q[0], q[1], c)];
            let inside = (0..3).all(|k| w[k] > 0.0 || (w[k] == 0.0 && owns[k]));
            if !inside {
                continue;
            }
            let mut weights = [0.0; 3];
            for k in 0..3 {
                weights[order[k]] = w[k] / area;
            }
            visit(i, j, weights);
        }
    }
}
