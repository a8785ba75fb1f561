use crate::geom::{self, Vec3};
use crate::mesh::Mesh;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Vec3,
    max: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb { min: [f64::INFINITY; 3], max: [f64::NEG_INFINITY; 3] }
    }

    fn include(&mut self, p: Vec3) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    fn dist2(&self, p: Vec3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let e = (self.min[k] - p[k]).max(p[k] - self.max[k]).max(0.0);
            d += e * e;
        }
        d
    }
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: range into the triangle list. Inner: `start` is the right
    /// child, the left child follows the node directly.
    start: u32,
    count: u32,
}

#[derive(Clone, Copy)]
struct Item {
    centroid: [f32; 3],
    index: u32,
}

/// Bounding-volume hierarchy over the triangles of a mesh, answering exact
/// nearest-surface distance queries.
#[derive(Debug, Clone)]
pub struct Bvh {
    /// Stored in leaf order.
    triangles: Vec<[Vec3; 3]>,
    nodes: Vec<Node>,
}

impl Bvh {
    pub fn new(mesh: &Mesh) -> Self {
        Self::build_with(mesh.faces.len(), |f| mesh.face_positions(f))
    }

    pub fn from_triangles(triangles: Vec<[Vec3; 3]>) -> Self {
        Self::build_with(triangles.len(), |f| triangles[f])
    }

    fn build_with(n: usize, triangle: impl Fn(usize) -> [Vec3; 3]) -> Self {
        let mut items: Vec<Item> = (0..n)
            .map(|k| {
                let t = triangle(k);
                let c = geom::scale(geom::add(geom::add(t[0], t[1]), t[2]), 1.0 / 3.0);
                Item { centroid: c.map(|x| x as f32), index: k as u32 }
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        if n > 0 {
            split(&mut nodes, &mut items, 0);
        }
        let triangles: Vec<[Vec3; 3]> = items.iter().map(|it| triangle(it.index as usize)).collect();
        let mut bvh = Bvh { triangles, nodes };
        if n > 0 {
            bvh.fit(0);
        }
        bvh
    }

    /// Computes node bounds bottom-up.
    fn fit(&mut self, id: usize) -> Aabb {
        let node = &self.nodes[id];
        let mut b = Aabb::empty();
        if node.count > 0 {
            let lo = node.start as usize;
            for t in &self.triangles[lo..lo + node.count as usize] {
                for p in t {
                    b.include(*p);
                }
            }
        } else {
            let right = node.start as usize;
            for c in [self.fit(id + 1), self.fit(right)] {
                b.include(c.min);
                b.include(c.max);
            }
        }
        self.nodes[id].bounds = b;
        b
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Euclidean distance from `p` to the nearest triangle.
    pub fn distance(&self, p: Vec3) -> f64 {
        self.distance2(p).sqrt()
    }

    fn distance2(&self, p: Vec3) -> f64 {
        let mut best = f64::INFINITY;
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.bounds.dist2(p) >= best {
                continue;
            }
            if node.count > 0 {
                let lo = node.start as usize;
                for &[a, b, c] in &self.triangles[lo..lo + node.count as usize] {
                    let q = geom::closest_point_on_triangle(p, a, b, c);
                    best = best.min(geom::dist2(p, q));
                }
            } else {
                let (l, r) = (id + 1, node.start as usize);
                let (dl, dr) = (self.nodes[l].bounds.dist2(p), self.nodes[r].bounds.dist2(p));
                // nearer child on top
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        best
    }
}

/// Median split along the longest centroid axis; `offset` is the position
/// of `items[0]` in the full list.
fn split(nodes: &mut Vec<Node>, items: &mut [Item], offset: usize) -> usize {
    let id = nodes.len();
    nodes.push(Node { bounds: Aabb::empty(), start: offset as u32, count: items.len() as u32 });
    if items.len() <= LEAF_SIZE {
        return id;
    }
    let (mut lo, mut hi) = ([f32::INFINITY; 3], [f32::NEG_INFINITY; 3]);
    for it in items.iter() {
        for k in 0..3 {
            lo[k] = lo[k].min(it.centroid[k]);
            hi[k] = hi[k].max(it.centroid[k]);
        }
    }
    let ext = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let axis = if ext[0] >= ext[1] && ext[0] >= ext[2] { 0 } else if ext[1] >= ext[2] { 1 } else { 2 };
    let mid = items.len() / 2;
    items.select_nth_unstable_by(mid, |a, b| {
        a.centroid[axis].total_cmp(&b.centroid[axis]).then(a.index.cmp(&b.index))
    });
    let (left, right) = items.split_at_mut(mid);
    split(nodes, left, offset);
    let r = split(nodes, right, offset + mid);
    nodes[id].start = r as u32;
    nodes[id].count = 0;
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut v = || -> Vec3 { [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)] };
        let tris: Vec<[Vec3; 3]> = (0..200).map(|_| [v(), v(), v()]).collect();
        let bvh = Bvh::from_triangles(tris.clone());
        for _ in 0..500 {
            let p = v();
            let brute = tris
                .iter()
                .map(|t| geom::point_triangle_distance(p, t[0], t[1], t[2]))
                .fold(f64::INFINITY, f64::min);
            assert!((bvh.distance(p) - brute).abs() < 1e-12);
        }
    }
}
