//! Vertex welding, connected components, seam and crease detection.

use std::collections::HashMap;

use crate::geom::{self, Vec3};
use crate::mesh::Mesh;

/// Tolerance used to treat two positions as the same 3D vertex. Only used
/// for adjacency; positions themselves are never modified.
pub const WELD_TOLERANCE: f64 = 1e-9;

/// UV coordinates closer than this along a shared edge are considered equal.
pub const UV_TOLERANCE: f64 = 1e-7;

pub(crate) struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    pub fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut x = x;
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    pub fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index wins so results do not depend on union order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Maps every position index to a welded vertex id (positions within
/// [`WELD_TOLERANCE`] on every axis share an id). Ids are dense and ordered by
/// first occurrence.
pub fn weld_positions(positions: &[Vec3]) -> Vec<u32> {
    let n = positions.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| positions[a as usize][0].total_cmp(&positions[b as usize][0]));
    let mut uf = UnionFind::new(n);
    for (k, &a) in order.iter().enumerate() {
        let pa = positions[a as usize];
        for &b in &order[k + 1..] {
            let pb = positions[b as usize];
            if pb[0] - pa[0] > WELD_TOLERANCE {
                break;
            }
            if (pb[1] - pa[1]).abs() <= WELD_TOLERANCE && (pb[2] - pa[2]).abs() <= WELD_TOLERANCE {
                uf.union(a, b);
            }
        }
    }
    let mut dense: HashMap<u32, u32> = HashMap::new();
    (0..n as u32)
        .map(|i| {
            let root = uf.find(i);
            let next = dense.len() as u32;
            *dense.entry(root).or_insert(next)
        })
        .collect()
}

/// An undirected 3D edge between two welded vertices (`vertices[0] < vertices[1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub vertices: [u32; 2],
    pub endpoints: [Vec3; 2],
    pub faces: Vec<u32>,
}

/// Welded adjacency of a mesh.
pub struct Topology {
    /// Welded vertex id of each position index.
    pub vertex_of: Vec<u32>,
    /// Representative position of each welded vertex.
    pub vertex_positions: Vec<Vec3>,
    /// Face incidences per undirected edge, in ascending face order.
    edges: HashMap<[u32; 2], Vec<(u32, u8)>>,
}

impl Topology {
    pub fn new(mesh: &Mesh) -> Self {
        let vertex_of = weld_positions(&mesh.positions);
        let count = vertex_of.iter().map(|&v| v as usize + 1).max().unwrap_or(0);
        let mut vertex_positions = vec![[0.0; 3]; count];
        for (i, &v) in vertex_of.iter().enumerate().rev() {
            vertex_positions[v as usize] = mesh.positions[i];
        }
        let mut edges: HashMap<[u32; 2], Vec<(u32, u8)>> = HashMap::new();
        for (f, face) in mesh.faces.iter().enumerate() {
            for e in 0..3u8 {
                let a = vertex_of[face.positions[e as usize] as usize];
                let b = vertex_of[face.positions[(e as usize + 1) % 3] as usize];
                if a == b {
                    continue;
                }
                let key = if a < b { [a, b] } else { [b, a] };
                edges.entry(key).or_default().push((f as u32, e));
            }
        }
        Topology {
            vertex_of,
            vertex_positions,
            edges,
        }
    }

    pub fn face_vertices(&self, mesh: &Mesh, f: u32) -> [u32; 3] {
        mesh.faces[f as usize].positions.map(|p| self.vertex_of[p as usize])
    }

    fn edge(&self, key: [u32; 2], faces: Vec<u32>) -> Edge {
        Edge {
            vertices: key,
            endpoints: [
                self.vertex_positions[key[0] as usize],
                self.vertex_positions[key[1] as usize],
            ],
            faces,
        }
    }

    /// Edges with both incident faces inside `in_set`, sorted by key.
    fn interior_edges<'a>(
        &'a self,
        in_set: &'a [bool],
    ) -> impl Iterator<Item = ([u32; 2], &'a [(u32, u8)])> + 'a {
        let mut keys: Vec<&[u32; 2]> = self.edges.keys().collect();
        keys.sort();
        keys.into_iter().filter_map(move |k| {
            let inc = &self.edges[k][..];
            (inc.len() >= 2 && inc.iter().all(|(f, _)| in_set[*f as usize])).then_some((*k, inc))
        })
    }
}

/// Partitions faces into components connected through shared (welded)
/// vertices. Components are ordered by their smallest face index.
pub fn connected_components(mesh: &Mesh) -> Vec<Vec<u32>> {
    let topo = Topology::new(mesh);
    components_with(&topo, mesh)
}

pub(crate) fn components_with(topo: &Topology, mesh: &Mesh) -> Vec<Vec<u32>> {
    let nv = topo.vertex_positions.len();
    let nf = mesh.faces.len();
    // faces and vertices share one union-find: faces first, then vertices
    let mut uf = UnionFind::new(nf + nv);
    for f in 0..nf as u32 {
        for v in topo.face_vertices(mesh, f) {
            uf.union(f, nf as u32 + v);
        }
    }
    group_by_root(&mut uf, 0..nf as u32)
}

pub(crate) fn group_by_root(uf: &mut UnionFind, faces: impl Iterator<Item = u32>) -> Vec<Vec<u32>> {
    let mut groups: Vec<Vec<u32>> = Vec::new();
    let mut slot: HashMap<u32, usize> = HashMap::new();
    for f in faces {
        let root = uf.find(f);
        let idx = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[idx].push(f);
    }
    groups
}

/// UV of face `f` at welded vertex `v`.
fn uv_at(mesh: &Mesh, topo: &Topology, f: u32, v: u32) -> Option<[f64; 2]> {
    let face = &mesh.faces[f as usize];
    let uvs = face.uvs?;
    (0..3)
        .find(|&k| topo.vertex_of[face.positions[k] as usize] == v)
        .map(|k| mesh.uvs[uvs[k] as usize])
}

fn uv_differs(a: [f64; 2], b: [f64; 2]) -> bool {
    (a[0] - b[0]).abs() > UV_TOLERANCE || (a[1] - b[1]).abs() > UV_TOLERANCE
}

/// Whether the faces around an edge disagree on its UV coordinates.
/// Non-manifold edges (more than two faces) are always seams.
fn is_seam(mesh: &Mesh, topo: &Topology, key: [u32; 2], inc: &[(u32, u8)]) -> bool {
    if inc.len() != 2 {
        return true;
    }
    let (f, g) = (inc[0].0, inc[1].0);
    key.iter().any(|&v| match (uv_at(mesh, topo, f, v), uv_at(mesh, topo, g, v)) {
        (Some(a), Some(b)) => uv_differs(a, b),
        _ => true,
    })
}

fn signed_uv_area(mesh: &Mesh, f: u32) -> f64 {
    match mesh.face_uvs(f as usize) {
        Some([a, b, c]) => geom::orient2(a, b, c),
        None => 0.0,
    }
}

/// Whether the UV map folds over a (non-seam, manifold) edge: the two
/// incident triangles have opposite UV orientation relative to their 3D
/// winding.
fn is_crease(mesh: &Mesh, topo: &Topology, inc: &[(u32, u8)]) -> bool {
    if inc.len() != 2 {
        return false;
    }
    let ((f, ef), (g, eg)) = (inc[0], inc[1]);
    let fv = topo.face_vertices(mesh, f);
    let gv = topo.face_vertices(mesh, g);
    let f_dir = (fv[ef as usize], fv[(ef as usize + 1) % 3]);
    let g_dir = (gv[eg as usize], gv[(eg as usize + 1) % 3]);
    // consistently wound neighbours traverse the shared edge in opposite directions
    let consistent = f_dir.0 == g_dir.1;
    let (sf, sg) = (signed_uv_area(mesh, f), signed_uv_area(mesh, g));
    if sf == 0.0 || sg == 0.0 {
        return false;
    }
    let same_sign = (sf > 0.0) == (sg > 0.0);
    same_sign != consistent
}

fn membership(mesh: &Mesh, component: &[u32]) -> Vec<bool> {
    let mut in_set = vec![false; mesh.faces.len()];
    for &f in component {
        in_set[f as usize] = true;
    }
    in_set
}

pub(crate) fn seams_with(topo: &Topology, mesh: &Mesh, component: &[u32]) -> Vec<Edge> {
    let mut in_set = membership(mesh, component);
    for (f, face) in mesh.faces.iter().enumerate() {
        in_set[f] &= face.uvs.is_some();
    }
    topo.interior_edges(&in_set)
        .filter(|(key, inc)| is_seam(mesh, topo, *key, inc))
        .map(|(key, inc)| topo.edge(key, inc.iter().map(|x| x.0).collect()))
        .collect()
}

pub(crate) fn creases_with(topo: &Topology, mesh: &Mesh, component: &[u32]) -> Vec<Edge> {
    let mut in_set = membership(mesh, component);
    for (f, face) in mesh.faces.iter().enumerate() {
        in_set[f] &= face.uvs.is_some();
    }
    topo.interior_edges(&in_set)
        .filter(|(key, inc)| !is_seam(mesh, topo, *key, inc) && is_crease(mesh, topo, inc))
        .map(|(key, inc)| topo.edge(key, inc.iter().map(|x| x.0).collect()))
        .collect()
}

/// Edges inside `component` where duplicated vertices carry different UVs.
pub fn detect_seams(mesh: &Mesh, component: &[u32]) -> Vec<Edge> {
    seams_with(&Topology::new(mesh), mesh, component)
}

/// Edges inside `component` across which the UV map reverses orientation.
pub fn detect_creases(mesh: &Mesh, component: &[u32]) -> Vec<Edge> {
    creases_with(&Topology::new(mesh), mesh, component)
}

/// Edges where two faces can be joined into one chart: manifold, both
/// faces UV-mapped, and neither a seam nor a crease.
pub(crate) fn joinable_edges(topo: &Topology, mesh: &Mesh) -> Vec<(u32, u32)> {
    let in_set: Vec<bool> = mesh.faces.iter().map(|f| f.uvs.is_some()).collect();
    topo.interior_edges(&in_set)
        .filter(|(key, inc)| {
            inc.len() == 2 && !is_seam(mesh, topo, *key, inc) && !is_crease(mesh, topo, inc)
        })
        .map(|(_, inc)| (inc[0].0, inc[1].0))
        .collect()
}
