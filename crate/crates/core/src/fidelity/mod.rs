//! Round-trip and parameterization-quality metrics.

mod bvh;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::atlas::Chart;
use crate::codec::{encode_mesh, extract_mesh, EncodeConfig, Encoding};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::mesh::Mesh;

pub use bvh::Bvh;

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0x6d63_6769;

/// Area-uniform surface samples, reproducible for a given seed.
pub fn sample_surface(mesh: &Mesh, n: usize, seed: u64) -> Vec<Vec3> {
    let mut cdf = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.face_area(f);
        cdf.push(total);
    }
    if total <= 0.0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = rng.random::<f64>() * total;
            let f = cdf.partition_point(|&c| c <= x).min(cdf.len() - 1);
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let s = r1.sqrt();
            let [a, b, c] = mesh.face_positions(f);
            geom::lerp3([1.0 - s, s * (1.0 - r2), s * r2], a, b, c)
        })
        .collect()
}

/// Summary of a set of point-to-surface distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct DistanceStats {
    pub mean: f64,
    pub p95: f64,
    pub max: f64,
}

impl DistanceStats {
    /// `p95` is the nearest-rank 95th percentile.
    pub fn from_distances(d: &[f64]) -> Self {
        if d.is_empty() {
            return DistanceStats::default();
        }
        let mut s = d.to_vec();
        s.sort_by(f64::total_cmp);
        let rank = ((0.95 * s.len() as f64).ceil() as usize).clamp(1, s.len());
        DistanceStats {
            mean: pairwise_sum(&s) / s.len() as f64,
            p95: s[rank - 1],
            max: s[s.len() - 1],
        }
    }
}

/// Sum with a fixed pairwise reduction tree.
fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 64 {
        x.iter().sum()
    } else {
        let (a, b) = x.split_at(x.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Distances from every point to the nearest triangle of `target`, in
/// point order, evaluated on up to `threads` threads.
pub fn distances_to(points: &[Vec3], target: &Bvh, threads: usize) -> Vec<f64> {
    let threads = threads.max(1);
    if threads == 1 || points.len() < 4096 {
        return points.iter().map(|&p| target.distance(p)).collect();
    }
    let chunk = points.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(|&p| target.distance(p)).collect::<Vec<f64>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("distance worker panicked")).collect()
    })
}

/// Both directed distance summaries between two meshes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChamferResult {
    /// Samples on `a`, distances to `b`.
    pub a_to_b: DistanceStats,
    pub b_to_a: DistanceStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingOptions {
    pub samples: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// Samples both meshes with the same seed, so swapping the arguments swaps
/// the two directions exactly.
pub fn chamfer_distance(a: &Mesh, b: &Mesh, n_samples: usize) -> Result<ChamferResult> {
    chamfer_distance_with(a, b, &SamplingOptions { samples: n_samples, ..Default::default() })
}

pub fn chamfer_distance_with(a: &Mesh, b: &Mesh, opts: &SamplingOptions) -> Result<ChamferResult> {
    if a.faces.is_empty() || b.faces.is_empty() || opts.samples == 0 {
        return Err(Error::NoGeometry);
    }
    let (ta, tb) = (Bvh::new(a), Bvh::new(b));
    let sa = sample_surface(a, opts.samples, opts.seed);
    let sb = sample_surface(b, opts.samples, opts.seed);
    Ok(ChamferResult {
        a_to_b: DistanceStats::from_distances(&distances_to(&sa, &tb, opts.threads)),
        b_to_a: DistanceStats::from_distances(&distances_to(&sb, &ta, opts.threads)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaDistortion {
    /// 3D area over atlas UV area, per chart.
    pub ratios: Vec<f64>,
    /// max/min of `ratios`; 1 for zero or one chart.
    pub spread: f64,
}

pub fn area_distortion(charts: &[Chart]) -> AreaDistortion {
    let ratios: Vec<f64> = charts.iter().map(|c| c.surface_area_3d / c.packed_uv_area()).collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    let spread = if ratios.len() < 2 { 1.0 } else { hi / lo };
    AreaDistortion { ratios, spread }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Statistics over the pooled samples of both directions.
    pub chamfer_mean: f64,
    pub chamfer_p95: f64,
    pub chamfer_max: f64,
    /// Fraction of source samples within `tolerance` of the reconstruction.
    pub coverage_fraction: f64,
    pub area_ratio_spread: f64,
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub chart_count: usize,
    pub source_to_reconstruction: DistanceStats,
    pub reconstruction_to_source: DistanceStats,
    pub tolerance: f64,
    pub resolution: u32,
    pub encoding: Encoding,
    pub cylindrical_fallback: bool,
    pub samples: usize,
    pub seed: u64,
}

/// Two pixel spacings of a `[-1, 1]` extent at `resolution`.
pub fn pixel_tolerance(resolution: u32) -> f64 {
    2.0 * 2.0 / resolution as f64
}

pub fn roundtrip_report(mesh: &Mesh, resolution: u32, encoding: Encoding) -> Result<FidelityReport> {
    let cfg = EncodeConfig { resolution, encoding, ..Default::default() };
    roundtrip_report_with(mesh, &cfg, &SamplingOptions::default())
}

/// Encodes, extracts, and compares in normalized units.
pub fn roundtrip_report_with(mesh: &Mesh, cfg: &EncodeConfig, opts: &SamplingOptions) -> Result<FidelityReport> {
    let enc = encode_mesh(mesh, cfg)?;
    let mut rec = extract_mesh(&enc.gim);
    for p in &mut rec.positions {
        *p = enc.norm.apply(*p);
    }
    compare(&enc.mesh, &rec, &enc.layout.charts, cfg, opts, enc.gim.cylindrical_fallback)
}

/// Report for an already reconstructed mesh (both in normalized units).
pub fn compare(
    source: &Mesh,
    reconstruction: &Mesh,
    charts: &[Chart],
    cfg: &EncodeConfig,
    opts: &SamplingOptions,
    cylindrical_fallback: bool,
) -> Result<FidelityReport> {
    if source.faces.is_empty() || reconstruction.faces.is_empty() {
        return Err(Error::NoGeometry);
    }
    let tolerance = pixel_tolerance(cfg.resolution);
    let src_tree = Bvh::new(source);
    let rec_tree = Bvh::new(reconstruction);
    let src_samples = sample_surface(source, opts.samples, opts.seed);
    let rec_samples = sample_surface(reconstruction, opts.samples, opts.seed);
    let forward = distances_to(&src_samples, &rec_tree, opts.threads);
    let backward = distances_to(&rec_samples, &src_tree, opts.threads);
    let covered = forward.iter().filter(|&&d| d <= tolerance).count();
    let mut pooled = forward.clone();
    pooled.extend_from_slice(&backward);
    let all = DistanceStats::from_distances(&pooled);
    Ok(FidelityReport {
        chamfer_mean: all.mean,
        chamfer_p95: all.p95,
        chamfer_max: all.max,
        coverage_fraction: covered as f64 / forward.len().max(1) as f64,
        area_ratio_spread: area_distortion(charts).spread,
        vertex_count: reconstruction.positions.len(),
        triangle_count: reconstruction.faces.len(),
        chart_count: charts.len(),
        source_to_reconstruction: DistanceStats::from_distances(&forward),
        reconstruction_to_source: DistanceStats::from_distances(&backward),
        tolerance,
        resolution: cfg.resolution,
        encoding: cfg.encoding,
        cylindrical_fallback,
        samples: opts.samples,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{equal_area_rescale, split_charts};
    use crate::fixtures;
    use crate::mesh::Face;

    fn square(z: f64) -> Mesh {
        Mesh {
            positions: vec![[0.0, 0.0, z], [1.0, 0.0, z], [1.0, 1.0, z], [0.0, 1.0, z]],
            uvs: vec![],
            faces: vec![Face::without_uv([0, 1, 2]), Face::without_uv([0, 2, 3])],
            texture: None,
        }
    }

    fn opts(samples: usize) -> SamplingOptions {
        SamplingOptions { samples, seed: 5, threads: 2 }
    }

    #[test]
    fn identical_meshes_have_zero_distance() {
        let m = fixtures::cube();
        let r = chamfer_distance_with(&m, &m, &opts(5000)).unwrap();
        for s in [r.a_to_b, r.b_to_a] {
            assert!(s.mean < 1e-7 && s.p95 < 1e-7 && s.max < 1e-7);
        }
    }

    #[test]
    fn parallel_squares_are_d_apart() {
        let d = 0.37;
        let r = chamfer_distance_with(&square(0.0), &square(d), &opts(2000)).unwrap();
        for s in [r.a_to_b, r.b_to_a] {
            assert!((s.mean - d).abs() < 1e-12 && (s.p95 - d).abs() < 1e-12 && (s.max - d).abs() < 1e-12);
        }
    }

    #[test]
    fn swapping_inputs_swaps_directions() {
        let a = fixtures::cube();
        let b = fixtures::sphere_octants(6, 6);
        let ab = chamfer_distance_with(&a, &b, &opts(3000)).unwrap();
        let ba = chamfer_distance_with(&b, &a, &opts(3000)).unwrap();
        assert_eq!(ab.a_to_b, ba.b_to_a);
        assert_eq!(ab.b_to_a, ba.a_to_b);
    }

    #[test]
    fn accelerated_equals_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut tri_mesh = |n: usize| {
            let mut m = Mesh::default();
            for k in 0..n {
                for _ in 0..3 {
                    m.positions.push([rng.random(), rng.random(), rng.random()]);
                }
                let b = 3 * k as u32;
                m.faces.push(Face::without_uv([b, b + 1, b + 2]));
            }
            m
        };
        let (a, b) = (tri_mesh(50), tri_mesh(50));
        let pts = sample_surface(&a, 2000, 1);
        let fast = distances_to(&pts, &Bvh::new(&b), 3);
        for (p, d) in pts.iter().zip(fast) {
            let brute = (0..b.faces.len())
                .map(|f| {
                    let [x, y, z] = b.face_positions(f);
                    geom::point_triangle_distance(*p, x, y, z)
                })
                .fold(f64::INFINITY, f64::min);
            assert!((d - brute).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_mesh_is_an_error() {
        assert!(chamfer_distance(&Mesh::default(), &square(0.0), 10).is_err());
    }

    #[test]
    fn distortion_spreads() {
        let set = equal_area_rescale(&split_charts(&fixtures::cube()));
        assert!(area_distortion(&set.charts).spread <= 1.0 + 1e-6);
        // two charts with 3D areas 1:3 and equal UV areas
        let strip = fixtures::coverage_strip(1.0, 0.0);
        let mut m = Mesh::default();
        let a = square(0.0);
        let mut b = square(0.0);
        for p in &mut b.positions {
            p[0] *= 3.0;
            p[1] += 5.0;
        }
        for (src, dx) in [(&a, 0.0), (&b, 0.5)] {
            let base = m.positions.len() as u32;
            m.positions.extend(&src.positions);
            let ub = m.uvs.len() as u32;
            m.uvs.extend([[dx, 0.0], [dx + 0.4, 0.0], [dx + 0.4, 0.4], [dx, 0.4]]);
            for f in &src.faces {
                m.faces.push(Face::new(f.positions.map(|v| v + base), f.positions.map(|v| v + ub)));
            }
        }
        let set = split_charts(&m);
        assert_eq!(set.charts.len(), 2);
        assert!((area_distortion(&set.charts).spread - 3.0).abs() < 1e-9);
        let single = split_charts(&strip);
        assert_eq!(area_distortion(&single.charts[..1]).spread, 1.0);
    }

    #[test]
    fn percentile_is_nearest_rank() {
        let d: Vec<f64> = (1..=100).map(|x| x as f64).collect();
        let s = DistanceStats::from_distances(&d);
        assert_eq!(s.p95, 95.0);
        assert_eq!(s.max, 100.0);
        assert_eq!(s.mean, 50.5);
    }
}
