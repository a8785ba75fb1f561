//! Procedural test meshes with known chart structure.
//!
//! Every generator documents how many UV islands it authors, so tests can
//! compare chart decomposition against the construction.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::geom::{Vec2, Vec3};
use crate::mesh::{Face, Mesh, Texture};

#[derive(Default)]
struct Builder {
    mesh: Mesh,
    position_keys: HashMap<[u64; 3], u32>,
}

impl Builder {
    /// Adds a position, sharing the index with an identical earlier one.
    fn position(&mut self, p: Vec3) -> u32 {
        let key = p.map(|c| (c + 0.0).to_bits());
        let next = self.mesh.positions.len() as u32;
        *self.position_keys.entry(key).or_insert_with(|| {
            self.mesh.positions.push(p);
            next
        })
    }

    fn position_unshared(&mut self, p: Vec3) -> u32 {
        self.mesh.positions.push(p);
        self.mesh.positions.len() as u32 - 1
    }

    fn uv(&mut self, uv: Vec2) -> u32 {
        self.mesh.uvs.push(uv);
        self.mesh.uvs.len() as u32 - 1
    }

    fn tri(&mut self, p: [u32; 3], t: Option<[u32; 3]>) {
        self.mesh.faces.push(match t {
            Some(t) => Face::new(p, t),
            None => Face::without_uv(p),
        });
    }

    fn append(&mut self, other: &Mesh) {
        let pb = self.mesh.positions.len() as u32;
        let tb = self.mesh.uvs.len() as u32;
        self.mesh.positions.extend_from_slice(&other.positions);
        self.mesh.uvs.extend_from_slice(&other.uvs);
        for f in &other.faces {
            let mut g = *f;
            g.positions = g.positions.map(|i| i + pb);
            g.uvs = g.uvs.map(|t| t.map(|i| i + tb));
            self.mesh.faces.push(g);
        }
    }

    fn finish(self) -> Mesh {
        self.mesh
    }
}

/// The six faces of an axis-aligned box as (origin, e1, e2) with
/// `e1 x e2` pointing outward. Order: left, front, right, back, top, bottom.
fn box_faces(lo: Vec3, hi: Vec3) -> [(Vec3, Vec3, Vec3); 6] {
    let (a, b, c) = (hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]);
    [
        ([lo[0], lo[1], lo[2]], [0.0, 0.0, c], [0.0, b, 0.0]),
        ([lo[0], lo[1], hi[2]], [a, 0.0, 0.0], [0.0, b, 0.0]),
        ([hi[0], lo[1], hi[2]], [0.0, 0.0, -c], [0.0, b, 0.0]),
        ([hi[0], lo[1], lo[2]], [-a, 0.0, 0.0], [0.0, b, 0.0]),
        ([lo[0], hi[1], hi[2]], [a, 0.0, 0.0], [0.0, 0.0, -c]),
        ([lo[0], lo[1], lo[2]], [a, 0.0, 0.0], [0.0, 0.0, c]),
    ]
}

fn corner(o: Vec3, e1: Vec3, e2: Vec3, s: f64, t: f64) -> Vec3 {
    [
        o[0] + s * e1[0] + t * e2[0],
        o[1] + s * e1[1] + t * e2[1],
        o[2] + s * e1[2] + t * e2[2],
    ]
}

/// Box corner with every coordinate taken exactly from `lo` or `hi`.
fn box_corner(lo: Vec3, hi: Vec3, o: Vec3, e1: Vec3, e2: Vec3, s: f64, t: f64) -> Vec3 {
    let p = corner(o, e1, e2, s, t);
    std::array::from_fn(|k| if (p[k] - lo[k]).abs() <= (p[k] - hi[k]).abs() { lo[k] } else { hi[k] })
}

const QUAD: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];

/// Box with eight shared corners and six independent UV islands laid out on
/// a 3x2 grid (24 UVs, 12 faces). `uv_faces` selects which faces get UVs.
fn box_islands_masked(lo: Vec3, hi: Vec3, uv_faces: [bool; 6]) -> Mesh {
    let mut b = Builder::default();
    let margin = 0.02;
    let (cw, ch) = (1.0 / 3.0, 0.5);
    for (k, (o, e1, e2)) in box_faces(lo, hi).into_iter().enumerate() {
        let p = QUAD.map(|(s, t)| b.position(box_corner(lo, hi, o, e1, e2, s, t)));
        let t = uv_faces[k].then(|| {
            let (cx, cy) = ((k % 3) as f64 * cw, (k / 3) as f64 * ch);
            QUAD.map(|(s, t)| {
                b.uv([
                    cx + margin + s * (cw - 2.0 * margin),
                    cy + margin + t * (ch - 2.0 * margin),
                ])
            })
        });
        b.tri([p[0], p[1], p[2]], t.map(|t| [t[0], t[1], t[2]]));
        b.tri([p[0], p[2], p[3]], t.map(|t| [t[0], t[2], t[3]]));
    }
    b.finish()
}

/// Box with one UV island per face (6 islands).
pub fn box_with_islands(lo: Vec3, hi: Vec3) -> Mesh {
    box_islands_masked(lo, hi, [true; 6])
}

/// The cube `[-1, 1]^3` with six UV islands.
pub fn cube() -> Mesh {
    box_with_islands([-1.0; 3], [1.0; 3])
}

/// Unit cube `[0, 1]^3` as OBJ text: 8 `v`, 24 `vt`, 12 `f`.
pub fn unit_cube_obj() -> String {
    String::from_utf8(crate::mesh::save_obj(&box_with_islands([0.0; 3], [1.0; 3]))).unwrap()
}

/// Cube whose first face (left, 1/6 of the area) has no UVs.
pub fn cube_missing_face() -> Mesh {
    box_islands_masked([-1.0; 3], [1.0; 3], [false, true, true, true, true, true])
}

/// A 2x1x1 box with the left cap unwrapped: 10% of the area lacks UVs.
pub fn box_missing_cap() -> Mesh {
    box_islands_masked([-1.0, -0.5, -0.5], [1.0, 0.5, 0.5], [true, true, true, true, true, true])
        .pipe(|m| strip_uv_from_axis_cap(m, 0, -1.0))
}

/// A 2x1x1 box with both end caps unwrapped: 20% of the area lacks UVs.
pub fn box_missing_caps() -> Mesh {
    box_missing_cap().pipe(|m| strip_uv_from_axis_cap(m, 0, 1.0))
}

trait Pipe: Sized {
    fn pipe<T>(self, f: impl FnOnce(Self) -> T) -> T {
        f(self)
    }
}
impl Pipe for Mesh {}

/// Removes UVs from faces whose three corners all lie on the plane
/// `p[axis] == value`.
fn strip_uv_from_axis_cap(mut m: Mesh, axis: usize, value: f64) -> Mesh {
    for f in 0..m.faces.len() {
        let on_cap = m.face_positions(f).iter().all(|p| p[axis] == value);
        if on_cap {
            m.faces[f] = Face::without_uv(m.faces[f].positions);
        }
    }
    m
}

/// Box unfolded into a single cross-shaped UV net: one island, with seams
/// only on the net's outline. UVs are scaled to fit `[0,1]^2` at the given
/// cell origin and size.
pub fn box_net(lo: Vec3, hi: Vec3, cell_origin: Vec2, cell_size: f64) -> Mesh {
    let (a, b_, c) = (hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]);
    // net origins of each face in the order of `box_faces`
    let origins = [
        [0.0, c],
        [c, c],
        [c + a, c],
        [2.0 * c + a, c],
        [c, c + b_],
        [c, 0.0],
    ];
    let extent = (2.0 * a + 2.0 * c).max(2.0 * c + b_);
    let k = cell_size / extent;
    let mut b = Builder::default();
    for (f, (o, e1, e2)) in box_faces(lo, hi).into_iter().enumerate() {
        let (l1, l2) = (crate::geom::norm(e1), crate::geom::norm(e2));
        let p = QUAD.map(|(s, t)| b.position(box_corner(lo, hi, o, e1, e2, s, t)));
        let t = QUAD.map(|(s, t)| {
            b.uv([
                cell_origin[0] + k * (origins[f][0] + s * l1),
                cell_origin[1] + k * (origins[f][1] + t * l2),
            ])
        });
        b.tri([p[0], p[1], p[2]], Some([t[0], t[1], t[2]]));
        b.tri([p[0], p[2], p[3]], Some([t[0], t[2], t[3]]));
    }
    b.finish()
}

/// A six-part articulated figure (torso, head, two arms, two legs), each
/// part a separate box with its own cross-net island: 6 islands total.
pub fn articulated_figure() -> Mesh {
    let parts: [(Vec3, Vec3); 6] = [
        ([-0.35, -0.1, -0.2], [0.35, 0.6, 0.2]),
        ([-0.18, 0.65, -0.18], [0.18, 1.0, 0.18]),
        ([-0.75, 0.05, -0.1], [-0.4, 0.55, 0.1]),
        ([0.4, 0.05, -0.1], [0.75, 0.55, 0.1]),
        ([-0.3, -1.0, -0.12], [-0.05, -0.15, 0.12]),
        ([0.05, -1.0, -0.12], [0.3, -0.15, 0.12]),
    ];
    let mut b = Builder::default();
    for (i, (lo, hi)) in parts.into_iter().enumerate() {
        let origin = [(i % 3) as f64 / 3.0 + 0.01, (i / 3) as f64 * 0.5 + 0.01];
        b.append(&box_net(lo, hi, origin, 1.0 / 3.0 - 0.02));
    }
    b.finish()
}

/// Open cylinder tube (radius `r`, height `h`, axis Y) with a single UV cut
/// along `theta = 0`. UVs are length-proportional.
pub fn cylinder_tube(r: f64, h: f64, segments: usize, rows: usize) -> Mesh {
    let mut b = Builder::default();
    let k = 0.95 / (TAU * r).max(h);
    let ring: Vec<Vec<u32>> = (0..=rows)
        .map(|j| {
            let y = -0.5 * h + h * j as f64 / rows as f64;
            (0..segments)
                .map(|i| {
                    let th = TAU * i as f64 / segments as f64;
                    b.position([r * th.cos(), y, -r * th.sin()])
                })
                .collect()
        })
        .collect();
    let uv: Vec<Vec<u32>> = (0..=rows)
        .map(|j| {
            (0..=segments)
                .map(|i| {
                    b.uv([
                        0.01 + k * TAU * r * i as f64 / segments as f64,
                        0.01 + k * h * j as f64 / rows as f64,
                    ])
                })
                .collect()
        })
        .collect();
    for j in 0..rows {
        for i in 0..segments {
            let i1 = (i + 1) % segments;
            let p = [ring[j][i], ring[j][i1], ring[j + 1][i1], ring[j + 1][i]];
            let t = [uv[j][i], uv[j][i + 1], uv[j + 1][i + 1], uv[j + 1][i]];
            b.tri([p[0], p[1], p[2]], Some([t[0], t[1], t[2]]));
            b.tri([p[0], p[2], p[3]], Some([t[0], t[2], t[3]]));
        }
    }
    b.finish()
}

/// UV sphere split into 8 charts (4 longitude quarters x 2 hemispheres),
/// each parameterized by the Lambert cylindrical equal-area projection.
pub fn sphere_octants(lon_per_chart: usize, lat_per_chart: usize) -> Mesh {
    let mut b = Builder::default();
    let k = 0.15;
    let n = lat_per_chart;
    let m = lon_per_chart;
    let mut pos_index: HashMap<(i64, i64), u32> = HashMap::new();
    let mut position = |b: &mut Builder, lon_i: i64, lat_j: i64| -> u32 {
        let lon_i = if lat_j.unsigned_abs() as usize == n { 0 } else { lon_i.rem_euclid(4 * m as i64) };
        *pos_index.entry((lon_i, lat_j)).or_insert_with(|| {
            let lat = FRAC_PI_2 * lat_j as f64 / n as f64;
            let lon = FRAC_PI_2 * lon_i as f64 / m as f64;
            let p = if lat_j.unsigned_abs() as usize == n {
                [0.0, lat.sin().signum(), 0.0]
            } else {
                [lat.cos() * lon.cos(), lat.sin(), -lat.cos() * lon.sin()]
            };
            b.position_unshared(p)
        })
    };
    for hemi in 0..2 {
        for q in 0..4 {
            let origin = [0.01 + q as f64 * 0.245, 0.02 + hemi as f64 * 0.5];
            let south = hemi == 1;
            // local (s index, t index) -> global (lon index, lat index)
            let global = |is: usize, jt: usize| -> (i64, i64) {
                let lon = if south { q * m + (m - is) } else { q * m + is } as i64;
                let lat = if south { -(jt as i64) } else { jt as i64 };
                (lon, lat)
            };
            let uv_of = |is: f64, jt: usize| -> Vec2 {
                let lat = FRAC_PI_2 * jt as f64 / n as f64;
                [origin[0] + k * FRAC_PI_2 * is / m as f64, origin[1] + k * lat.sin()]
            };
            // row-major (jt, is) grid of UV ids, plus the pole apex
            let grid: Vec<u32> = (0..n)
                .flat_map(|jt| (0..=m).map(move |is| (is, jt)))
                .map(|(is, jt)| b.uv(uv_of(is as f64, jt)))
                .collect();
            let pole_uv = b.uv(uv_of(0.5 * m as f64, n));
            let uv = |is: usize, jt: usize| grid[jt * (m + 1) + is];
            for jt in 0..n {
                for is in 0..m {
                    let g = [global(is, jt), global(is + 1, jt), global(is + 1, jt + 1), global(is, jt + 1)];
                    let p = g.map(|(lo, la)| position(&mut b, lo, la));
                    if jt + 1 == n {
                        // pole row: a fan onto the chart's pole UV
                        b.tri([p[0], p[1], p[2]], Some([uv(is, jt), uv(is + 1, jt), pole_uv]));
                    } else {
                        let t = [uv(is, jt), uv(is + 1, jt), uv(is + 1, jt + 1), uv(is, jt + 1)];
                        b.tri([p[0], p[1], p[2]], Some([t[0], t[1], t[2]]));
                        b.tri([p[0], p[2], p[3]], Some([t[0], t[2], t[3]]));
                    }
                }
            }
        }
    }
    b.finish()
}

/// Torus around the Y axis with UV cuts along both generating circles.
pub fn torus(major: f64, minor: f64, segments: usize, rings: usize) -> Mesh {
    let mut b = Builder::default();
    let k = 0.95 / (TAU * (major + minor)).max(TAU * minor);
    let pos: Vec<Vec<u32>> = (0..rings)
        .map(|j| {
            let phi = TAU * j as f64 / rings as f64;
            (0..segments)
                .map(|i| {
                    let th = TAU * i as f64 / segments as f64;
                    let rr = major + minor * phi.cos();
                    b.position([rr * th.cos(), minor * phi.sin(), -rr * th.sin()])
                })
                .collect()
        })
        .collect();
    let uv: Vec<Vec<u32>> = (0..=rings)
        .map(|j| {
            (0..=segments)
                .map(|i| {
                    b.uv([
                        0.01 + k * TAU * major * i as f64 / segments as f64,
                        0.01 + k * TAU * minor * j as f64 / rings as f64,
                    ])
                })
                .collect()
        })
        .collect();
    for j in 0..rings {
        for i in 0..segments {
            let (i1, j1) = ((i + 1) % segments, (j + 1) % rings);
            let p = [pos[j][i], pos[j][i1], pos[j1][i1], pos[j1][i]];
            let t = [uv[j][i], uv[j][i + 1], uv[j + 1][i + 1], uv[j + 1][i]];
            b.tri([p[0], p[1], p[2]], Some([t[0], t[1], t[2]]));
            b.tri([p[0], p[2], p[3]], Some([t[0], t[2], t[3]]));
        }
    }
    b.finish()
}

/// Flat 2x1 strip of four triangles whose UVs reflect across the middle
/// column (`x = 1`): the right half is mirrored onto the left half's UVs.
pub fn mirrored_strip() -> Mesh {
    let mut b = Builder::default();
    let p: Vec<u32> = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]
        .iter()
        .map(|&(x, y)| b.position([x, y, 0.0]))
        .collect();
    let uv: Vec<u32> = [(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.0, 1.0)]
        .iter()
        .map(|&(u, v)| b.uv([0.1 + 0.8 * u, 0.1 + 0.8 * v]))
        .collect();
    for (a, c, d) in [(0, 1, 4), (0, 4, 3), (1, 2, 5), (1, 5, 4)] {
        b.tri([p[a], p[c], p[d]], Some([uv[a], uv[c], uv[d]]));
    }
    b.finish()
}

/// The two endpoints of the mirrored strip's fold edge.
pub const MIRRORED_STRIP_FOLD: (Vec3, Vec3) = ([1.0, 0.0, 0.0], [1.0, 1.0, 0.0]);

/// Seven-vertex hexagonal fan around a center `B` whose UVs fold back along
/// the line through ring vertices `D` and `G`. Returns the mesh and the two
/// fold edges (`B-D`, `B-G`) as position pairs.
pub fn folded_fan() -> (Mesh, Vec<(Vec3, Vec3)>) {
    let mut b = Builder::default();
    let center = b.position([0.0, 0.0, 0.0]);
    let ring: Vec<Vec3> = (0..6)
        .map(|i| {
            let a = PI / 3.0 * i as f64;
            [a.cos(), a.sin(), 0.0]
        })
        .collect();
    let ring_ids: Vec<u32> = ring.iter().map(|&p| b.position(p)).collect();
    // reflect ring vertices 4 and 5 (below the D-G line through 0 and 3)
    let to_uv = |p: Vec3, reflect: bool| -> Vec2 {
        let y = if reflect { -p[1] } else { p[1] };
        [0.5 + 0.4 * p[0], 0.5 + 0.4 * y]
    };
    let c_uv = b.uv(to_uv([0.0; 3], false));
    for i in 0..6 {
        let j = (i + 1) % 6;
        let reflect = i >= 3;
        let ti = b.uv(to_uv(ring[i], reflect));
        let tj = b.uv(to_uv(ring[j], reflect));
        b.tri([center, ring_ids[i], ring_ids[j]], Some([c_uv, ti, tj]));
    }
    let folds = vec![([0.0, 0.0, 0.0], ring[0]), ([0.0, 0.0, 0.0], ring[3])];
    (b.finish(), folds)
}

/// A flat mesh of two rectangles of areas `manual` and `absent`, where only
/// the first carries UVs. Manual coverage is `manual / (manual + absent)`
/// computed from exactly representable triangle areas.
pub fn coverage_strip(manual: f64, absent: f64) -> Mesh {
    let mut b = Builder::default();
    let p: Vec<u32> = [
        [0.0, 0.0, 0.0],
        [manual, 0.0, 0.0],
        [manual, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [manual + absent, 0.0, 0.0],
        [manual + absent, 1.0, 0.0],
    ]
    .into_iter()
    .map(|q| b.position(q))
    .collect();
    let t: Vec<u32> = [[0.1, 0.1], [0.9, 0.1], [0.9, 0.3], [0.1, 0.3]]
        .into_iter()
        .map(|q| b.uv(q))
        .collect();
    b.tri([p[0], p[1], p[2]], Some([t[0], t[1], t[2]]));
    b.tri([p[0], p[2], p[3]], Some([t[0], t[2], t[3]]));
    b.tri([p[1], p[4], p[5]], None);
    b.tri([p[1], p[5], p[2]], None);
    b.finish()
}

/// Attaches a procedural checkerboard texture.
pub fn with_checker(mut mesh: Mesh, size: u32, cells: u32) -> Mesh {
    let mut texels = Vec::with_capacity((size * size) as usize);
    for y in 0..size {
        for x in 0..size {
            let on = ((x * cells / size) + (y * cells / size)).is_multiple_of(2);
            let u = x as f32 / size as f32;
            let v = y as f32 / size as f32;
            texels.push(if on { [0.9, 0.85 * u + 0.1, 0.2] } else { [0.15, 0.3, 0.4 + 0.5 * v] });
        }
    }
    let mut tex = Texture::new(size, size, texels);
    tex.name = Some("checker".into());
    mesh.texture = Some(tex);
    mesh
}

/// A named fixture with the number of UV islands its construction authors
/// (fallback charts for UV-less faces not included).
pub struct Fixture {
    pub name: &'static str,
    pub mesh: Mesh,
    pub authored_islands: usize,
}

/// The round-trip fixture corpus.
pub fn corpus() -> Vec<Fixture> {
    vec![
        Fixture { name: "cube", mesh: with_checker(cube(), 64, 8), authored_islands: 6 },
        Fixture { name: "cylinder", mesh: cylinder_tube(0.5, 2.0, 48, 8), authored_islands: 1 },
        Fixture { name: "sphere", mesh: sphere_octants(12, 12), authored_islands: 8 },
        Fixture { name: "mirrored_strip", mesh: mirrored_strip(), authored_islands: 2 },
        Fixture { name: "figure", mesh: articulated_figure(), authored_islands: 6 },
        Fixture { name: "torus", mesh: torus(0.7, 0.3, 48, 24), authored_islands: 1 },
        Fixture { name: "folded_fan", mesh: folded_fan().0, authored_islands: 2 },
        Fixture { name: "cube_missing_face", mesh: cube_missing_face(), authored_islands: 5 },
        Fixture { name: "box_missing_cap", mesh: box_missing_cap(), authored_islands: 5 },
        Fixture { name: "box_missing_caps", mesh: box_missing_caps(), authored_islands: 4 },
    ]
}

/// A small randomized object for batch runs: a box net, a torus, or a
/// tube, with dimensions drawn from `seed`.
pub fn synthetic_object(seed: u64) -> Mesh {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    match seed % 3 {
        0 => {
            let hi = [rng.random_range(0.3..1.0), rng.random_range(0.3..1.0), rng.random_range(0.3..1.0)];
            box_net([0.0; 3], hi, [0.02, 0.02], 0.96)
        }
        1 => torus(rng.random_range(0.5..0.8), rng.random_range(0.1..0.3), 32, 16),
        _ => cylinder_tube(rng.random_range(0.2..0.6), rng.random_range(0.5..2.0), 32, 6),
    }
}
