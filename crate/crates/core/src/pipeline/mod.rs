//! Batch curation: load, filter, encode and write a corpus of meshes.

mod manifest;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::atlas::{coverage_filter, split_charts};
use crate::codec::io::{write_gim, GimMetadata};
use crate::codec::{encode_mesh, extract_mesh, rotate_atlas};
use crate::error::{Error, Result};
use crate::fidelity::{self, FidelityReport, SamplingOptions};
use crate::mesh::{load_mesh_file, normalize_mesh};

pub use manifest::{BatchConfig, JobManifest, ObjectEntry, DEFAULT_BATCH_SAMPLES, DEFAULT_COVERAGE_THRESHOLD};

/// Environment variable that overrides the configured worker count.
pub const WORKERS_ENV: &str = "GIM_WORKERS";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectStatus {
    Accepted,
    RejectedCoverage,
    RejectedInjectivity,
    RejectedOverflow,
    /// Face or chart count outside the configured bounds.
    RejectedStructure,
    ParseError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectReport {
    pub id: String,
    pub status: ObjectStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manual_coverage: Option<f64>,
    pub chart_count: usize,
    pub valid_pixels: usize,
    pub cylindrical_fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<FidelityReport>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    /// CPU time spent by the worker thread on this object.
    pub cpu_seconds: f64,
    pub wall_seconds: f64,
}

impl ObjectReport {
    pub fn new(id: &str, status: ObjectStatus) -> Self {
        ObjectReport {
            id: id.to_string(),
            status,
            reason: None,
            manual_coverage: None,
            chart_count: 0,
            valid_pixels: 0,
            cylindrical_fallback: false,
            fidelity: None,
            outputs: Vec::new(),
            warnings: Vec::new(),
            cpu_seconds: 0.0,
            wall_seconds: 0.0,
        }
    }

    fn rejected(id: &str, status: ObjectStatus, reason: impl Into<String>) -> Self {
        let mut r = Self::new(id, status);
        r.reason = Some(reason.into());
        r
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub accepted: usize,
    pub rejected_coverage: usize,
    pub rejected_injectivity: usize,
    pub rejected_overflow: usize,
    pub rejected_structure: usize,
    pub parse_error: usize,
}

impl StatusCounts {
    pub fn total(&self) -> usize {
        self.accepted
            + self.rejected_coverage
            + self.rejected_injectivity
            + self.rejected_overflow
            + self.rejected_structure
            + self.parse_error
    }

    fn add(&mut self, s: ObjectStatus) {
        *match s {
            ObjectStatus::Accepted => &mut self.accepted,
            ObjectStatus::RejectedCoverage => &mut self.rejected_coverage,
            ObjectStatus::RejectedInjectivity => &mut self.rejected_injectivity,
            ObjectStatus::RejectedOverflow => &mut self.rejected_overflow,
            ObjectStatus::RejectedStructure => &mut self.rejected_structure,
            ObjectStatus::ParseError => &mut self.parse_error,
        } += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationReport {
    pub objects: Vec<ObjectReport>,
    pub counts: StatusCounts,
    pub workers: usize,
    pub wall_seconds: f64,
    pub objects_per_second: f64,
    pub median_cpu_seconds: f64,
    pub median_wall_seconds: f64,
    pub max_wall_seconds: f64,
}

/// CPU time consumed by the calling thread.
#[cfg(unix)]
pub fn thread_cpu_seconds() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: valid out-pointer, clock id supported on every Linux kernel
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// CPU time consumed by the calling thread (unavailable here: always 0).
#[cfg(not(unix))]
pub fn thread_cpu_seconds() -> f64 {
    0.0
}

/// Worker count: `GIM_WORKERS` if set, else the config, else the CPU count.
pub fn resolve_workers(configured: usize) -> usize {
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            return n;
        }
    }
    if configured > 0 {
        configured
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

fn ensure_writable(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Manifest(format!("output directory {}: {e}", dir.display())))?;
    let probe = dir.join(".gim-write-probe");
    std::fs::write(&probe, b"")
        .map_err(|e| Error::Manifest(format!("output directory {} is not writable: {e}", dir.display())))?;
    let _ = std::fs::remove_file(probe);
    Ok(())
}

/// Loads, filters, encodes and writes one object. Never panics on bad
/// input; failures become statuses.
pub fn process_object(entry: &ObjectEntry, cfg: &BatchConfig) -> ObjectReport {
    let id = entry.id.as_str();
    let (mesh, load) = match load_mesh_file(&entry.path) {
        Ok(v) => v,
        Err(e) => return ObjectReport::rejected(id, ObjectStatus::ParseError, e.to_string()),
    };
    if let Some(max) = cfg.max_faces {
        if mesh.faces.len() > max {
            return ObjectReport::rejected(id, ObjectStatus::RejectedStructure, format!("{} faces > {max}", mesh.faces.len()));
        }
    }
    let normalized = match normalize_mesh(&mesh) {
        Ok((m, _)) => m,
        Err(e) => return ObjectReport::rejected(id, ObjectStatus::ParseError, e.to_string()),
    };
    let authored = split_charts(&normalized);
    let decision = coverage_filter(&authored, cfg.coverage_threshold);
    if !decision.accepted {
        let mut r = ObjectReport::rejected(
            id,
            ObjectStatus::RejectedCoverage,
            format!("manual coverage {:.4} < {}", decision.manual_coverage, decision.threshold),
        );
        r.manual_coverage = Some(decision.manual_coverage);
        return r;
    }
    if let Some(max) = cfg.max_charts {
        let charts = authored.charts.len() + authored.uncovered_faces.len();
        if charts > max {
            return ObjectReport::rejected(id, ObjectStatus::RejectedStructure, format!("{charts} charts > {max}"));
        }
    }
    let enc = match encode_mesh(&mesh, &cfg.encode_config()) {
        Ok(e) => e,
        Err(e @ Error::AtlasOverflow { .. }) => {
            return ObjectReport::rejected(id, ObjectStatus::RejectedOverflow, e.to_string())
        }
        Err(e @ Error::NotInjective { .. }) => {
            return ObjectReport::rejected(id, ObjectStatus::RejectedInjectivity, e.to_string())
        }
        Err(e) => return ObjectReport::rejected(id, ObjectStatus::ParseError, e.to_string()),
    };

    let mut report = ObjectReport::new(id, ObjectStatus::Accepted);
    report.manual_coverage = Some(decision.manual_coverage);
    report.chart_count = enc.layout.charts.len();
    report.valid_pixels = enc.gim.valid_pixels();
    report.cylindrical_fallback = enc.gim.cylindrical_fallback;
    report.warnings = load.warnings.clone();
    if enc.albedo.constant_fill {
        report.warnings.push("albedo: constant fill used for untextured charts".into());
    }
    if enc.gim.cylindrical_fallback {
        report.warnings.push("encoding: chart wraps around the axis, cartesian used".into());
    }

    let mut variants = vec![(id.to_string(), enc.gim.clone(), enc.albedo.clone())];
    if cfg.rotations {
        for k in 1..=3u8 {
            let (g, a) = rotate_atlas(&enc.gim, Some(&enc.albedo), k);
            variants.push((format!("{id}.rot{}", 90 * k as u32), g, a.expect("albedo rotated")));
        }
    }
    for (stem, g, a) in &variants {
        let mut meta = GimMetadata::for_image(g, stem, cfg.image_format);
        meta.captions = entry.captions.clone();
        meta.source = entry.path.file_name().map(|n| n.to_string_lossy().into_owned());
        match write_gim(&cfg.output_dir, stem, g, Some(a), cfg.image_format, meta) {
            Ok(files) => {
                for p in [Some(files.positions), Some(files.charts), files.albedo, Some(files.metadata)].into_iter().flatten() {
                    report.outputs.push(p.file_name().unwrap().to_string_lossy().into_owned());
                }
            }
            Err(e) => {
                let mut r = ObjectReport::rejected(id, ObjectStatus::ParseError, format!("write failed: {e}"));
                r.manual_coverage = report.manual_coverage;
                return r;
            }
        }
    }

    if cfg.fidelity_samples > 0 {
        let mut rec = extract_mesh(&enc.gim);
        for p in &mut rec.positions {
            *p = enc.norm.apply(*p);
        }
        let opts = SamplingOptions { samples: cfg.fidelity_samples, seed: cfg.seed, threads: 1 };
        match fidelity::compare(&enc.mesh, &rec, &enc.layout.charts, &cfg.encode_config(), &opts, enc.gim.cylindrical_fallback) {
            Ok(f) => report.fidelity = Some(f),
            Err(e) => report.warnings.push(format!("fidelity: {e}")),
        }
    }
    report
}

/// [`run_batch_with`] using [`process_object`].
pub fn run_batch(manifest: &JobManifest) -> Result<CurationReport> {
    run_batch_with(manifest, process_object)
}

/// Runs `processor` over every object on a worker pool. A panic inside the
/// processor becomes a `parse_error` for that object only. Results are
/// merged in manifest order and the report is written to the output
/// directory.
pub fn run_batch_with<F>(manifest: &JobManifest, processor: F) -> Result<CurationReport>
where
    F: Fn(&ObjectEntry, &BatchConfig) -> ObjectReport + Sync,
{
    manifest.validate()?;
    let cfg = &manifest.config;
    ensure_writable(&cfg.output_dir)?;
    let workers = resolve_workers(cfg.workers).min(manifest.objects.len().max(1));
    let start = Instant::now();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<ObjectReport>>> = Mutex::new(vec![None; manifest.objects.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(entry) = manifest.objects.get(k) else { break };
                let (cpu0, t0) = (thread_cpu_seconds(), Instant::now());
                let mut r = match catch_unwind(AssertUnwindSafe(|| processor(entry, cfg))) {
                    Ok(r) => r,
                    Err(payload) => {
                        let msg = payload
                            .downcast_ref::<&str>()
                            .map(|s| s.to_string())
                            .or_else(|| payload.downcast_ref::<String>().cloned())
                            .unwrap_or_else(|| "unknown panic".into());
                        ObjectReport::rejected(&entry.id, ObjectStatus::ParseError, format!("panic: {msg}"))
                    }
                };
                r.cpu_seconds = thread_cpu_seconds() - cpu0;
                r.wall_seconds = t0.elapsed().as_secs_f64();
                slots.lock().unwrap_or_else(|e| e.into_inner())[k] = Some(r);
            });
        }
    });
    let wall = start.elapsed().as_secs_f64();
    let objects: Vec<ObjectReport> = slots
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|r| r.expect("every object processed"))
        .collect();
    let mut counts = StatusCounts::default();
    for o in &objects {
        counts.add(o.status);
    }
    let median = |mut v: Vec<f64>| {
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
    };
    let report = CurationReport {
        counts,
        workers,
        wall_seconds: wall,
        objects_per_second: if wall > 0.0 { objects.len() as f64 / wall } else { 0.0 },
        median_cpu_seconds: median(objects.iter().map(|o| o.cpu_seconds).collect()),
        median_wall_seconds: median(objects.iter().map(|o| o.wall_seconds).collect()),
        max_wall_seconds: objects.iter().map(|o| o.wall_seconds).fold(0.0, f64::max),
        objects,
    };
    std::fs::write(cfg.output_dir.join(REPORT_FILE), serde_json::to_vec_pretty(&report)?)?;
    Ok(report)
}

/// Output files of an object, for comparing runs.
pub fn object_outputs(report: &ObjectReport, dir: &Path) -> Vec<PathBuf> {
    report.outputs.iter().map(|f| dir.join(f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mesh::save_obj;

    fn write_fixture(dir: &Path, name: &str, mesh: &crate::mesh::Mesh) -> ObjectEntry {
        let path = dir.join(format!("{name}.obj"));
        std::fs::write(&path, save_obj(mesh)).unwrap();
        ObjectEntry { id: name.into(), path, captions: vec![format!("a {name}")] }
    }

    fn manifest(dir: &Path, objects: Vec<ObjectEntry>) -> JobManifest {
        JobManifest {
            config: BatchConfig {
                resolution: 128,
                rotations: false,
                workers: 2,
                output_dir: dir.join("out"),
                fidelity_samples: 2000,
                ..Default::default()
            },
            objects,
        }
    }

    #[test]
    fn coverage_rejection_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let objects = vec![
            write_fixture(dir.path(), "cube", &fixtures::cube()),
            write_fixture(dir.path(), "half", &fixtures::coverage_strip(0.5, 0.5)),
            write_fixture(dir.path(), "figure", &fixtures::articulated_figure()),
        ];
        let r = run_batch(&manifest(dir.path(), objects)).unwrap();
        assert_eq!(r.counts.accepted, 2);
        assert_eq!(r.counts.rejected_coverage, 1);
        assert_eq!(r.objects[1].status, ObjectStatus::RejectedCoverage);
        assert_eq!(r.counts.total(), 3);
        assert!(r.objects[0].fidelity.is_some());
        let meta = std::fs::read_to_string(dir.path().join("out/cube.meta")).unwrap();
        assert!(meta.contains("a cube"));
        assert!(dir.path().join("out").join(REPORT_FILE).exists());
    }

    #[test]
    fn empty_manifest_succeeds() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_batch(&manifest(dir.path(), vec![])).unwrap();
        assert!(r.objects.is_empty());
        assert_eq!(r.counts.total(), 0);
    }

    #[test]
    fn panics_are_isolated() {
        let dir = tempfile::tempdir().unwrap();
        let objects = vec![
            write_fixture(dir.path(), "a", &fixtures::cube()),
            write_fixture(dir.path(), "boom", &fixtures::cube()),
            write_fixture(dir.path(), "c", &fixtures::cube()),
        ];
        let r = run_batch_with(&manifest(dir.path(), objects), |e, c| {
            if e.id == "boom" {
                panic!("injected");
            }
            process_object(e, c)
        })
        .unwrap();
        assert_eq!(r.objects[1].status, ObjectStatus::ParseError);
        assert!(r.objects[1].reason.as_deref().unwrap().contains("injected"));
        assert_eq!(r.counts.accepted, 2);
    }

    #[test]
    fn unwritable_output_fails_before_processing() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let mut m = manifest(dir.path(), vec![write_fixture(dir.path(), "a", &fixtures::cube())]);
        m.config.output_dir = blocker.join("sub");
        let calls = AtomicUsize::new(0);
        let err = run_batch_with(&m, |e, c| {
            calls.fetch_add(1, Ordering::Relaxed);
            process_object(e, c)
        });
        assert!(err.is_err());
        assert_eq!(calls.load(Ordering::Relaxed), 0);
    }

    #[test]
    fn rotations_and_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.obj");
        std::fs::write(&bad, "v 0 0 0\nf 1 2 3\n").unwrap();
        let mut m = manifest(dir.path(), vec![
            write_fixture(dir.path(), "cube", &fixtures::cube()),
            ObjectEntry { id: "bad".into(), path: bad, captions: vec![] },
        ]);
        m.config.rotations = true;
        let r = run_batch(&m).unwrap();
        assert_eq!(r.objects[1].status, ObjectStatus::ParseError);
        for suffix in ["rot90", "rot180", "rot270"] {
            assert!(dir.path().join(format!("out/cube.{suffix}.gim.png")).exists());
            assert!(dir.path().join(format!("out/cube.{suffix}.meta")).exists());
        }
    }

    #[test]
    fn structure_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = manifest(dir.path(), vec![write_fixture(dir.path(), "fig", &fixtures::articulated_figure())]);
        m.config.max_charts = Some(3);
        assert_eq!(run_batch(&m).unwrap().objects[0].status, ObjectStatus::RejectedStructure);
        m.config.max_charts = None;
        m.config.max_faces = Some(10);
        assert_eq!(run_batch(&m).unwrap().objects[0].status, ObjectStatus::RejectedStructure);
    }
}
