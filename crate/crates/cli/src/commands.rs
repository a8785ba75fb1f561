//! Subcommand implementations. Each prints one JSON document on stdout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use gim_core::codec::io::{encode_albedo_png, decode_albedo_png, open_gim};
use gim_core::codec::{encode_mesh, extract_mesh};
use gim_core::fidelity::{roundtrip_report_with, SamplingOptions, DEFAULT_SAMPLES};
use gim_core::mesh::{load_mesh_file, save_obj, save_obj_with_material, MeshFormat};
use gim_core::pipeline::{process_object, run_batch, thread_cpu_seconds, BatchConfig, JobManifest, ObjectEntry, ObjectStatus, REPORT_FILE};
use serde_json::{json, Value};

use crate::settings::SettingsArgs;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] gim_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn config(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Config { path: path.to_path_buf(), message: e.to_string() }
    }
}

type Outcome = Result<ExitCode, CliError>;

fn emit(v: &Value) -> Result<(), CliError> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io(Path::new("<stdout>"), e)),
        _ => Ok(()),
    }
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "object".into())
}

/// Single-object defaults: no rotations, no fidelity sampling.
fn encode_defaults() -> BatchConfig {
    BatchConfig { rotations: false, fidelity_samples: 0, ..Default::default() }
}

pub fn encode(mesh: &Path, output: &Path, id: Option<String>, captions: Vec<String>, settings: &SettingsArgs) -> Outcome {
    let mut cfg = settings.resolve(encode_defaults())?;
    cfg.output_dir = output.to_path_buf();
    std::fs::create_dir_all(output).map_err(|e| CliError::io(output, e))?;
    let entry = ObjectEntry { id: id.unwrap_or_else(|| file_stem(mesh)), path: mesh.to_path_buf(), captions };
    let (wall, cpu) = (std::time::Instant::now(), thread_cpu_seconds());
    let mut report = process_object(&entry, &cfg);
    report.cpu_seconds = thread_cpu_seconds() - cpu;
    report.wall_seconds = wall.elapsed().as_secs_f64();
    emit(&serde_json::to_value(&report)?)?;
    Ok(status(report.status == ObjectStatus::Accepted))
}

pub fn decode(gim_path: &Path, albedo: Option<&Path>, output: &Path) -> Outcome {
    let loaded = open_gim(gim_path)?;
    let reasons = loaded.gim.validate();
    if !reasons.is_empty() {
        emit(&json!({ "valid": false, "reasons": reasons }))?;
        return Ok(ExitCode::FAILURE);
    }
    let albedo = match albedo {
        Some(p) => Some(decode_albedo_png(&std::fs::read(p).map_err(|e| CliError::io(p, e))?)?),
        None => loaded.albedo,
    };
    let mesh = extract_mesh(&loaded.gim);
    let stem = file_stem(output);
    let dir = output.parent().unwrap_or(Path::new("."));
    let bytes = match &albedo {
        Some(a) => {
            let (mtl, tex) = (format!("{stem}.mtl"), format!("{stem}.albedo.png"));
            let write = |name: &str, data: &[u8]| {
                let p = dir.join(name);
                std::fs::write(&p, data).map_err(|e| CliError::io(&p, e))
            };
            write(&tex, &encode_albedo_png(a)?)?;
            write(&mtl, format!("newmtl albedo\nKd 1 1 1\nmap_Kd {tex}\n").as_bytes())?;
            save_obj_with_material(&mesh, &mtl, "albedo")
        }
        None => save_obj(&mesh),
    };
    std::fs::write(output, bytes).map_err(|e| CliError::io(output, e))?;
    emit(&json!({
        "output": output,
        "vertices": mesh.positions.len(),
        "faces": mesh.faces.len(),
        "resolution": loaded.gim.resolution,
        "encoding": loaded.gim.encoding,
        "inferred_charts": loaded.inferred_charts,
        "textured": albedo.is_some(),
    }))?;
    Ok(ExitCode::SUCCESS)
}

pub fn validate(path: &Path, settings: &SettingsArgs) -> Outcome {
    let (kind, reasons, details) = if MeshFormat::from_path(path).is_some() {
        let cfg = settings.resolve(BatchConfig::default())?;
        let (reasons, details) = validate_mesh(path, &cfg);
        ("mesh", reasons, details)
    } else {
        let (reasons, details) = validate_gim(path);
        ("gim", reasons, details)
    };
    let valid = reasons.is_empty();
    emit(&json!({ "path": path, "kind": kind, "valid": valid, "reasons": reasons, "details": details }))?;
    Ok(status(valid))
}

fn validate_mesh(path: &Path, cfg: &BatchConfig) -> (Vec<String>, Value) {
    let (mesh, load) = match load_mesh_file(path) {
        Ok(v) => v,
        Err(e) => return (vec![format!("parse error: {e}")], Value::Null),
    };
    let mut reasons = mesh.validate();
    if !reasons.is_empty() {
        return (reasons, json!({ "load": load }));
    }
    match encode_mesh(&mesh, &cfg.encode_config()) {
        Ok(enc) => {
            reasons.extend(enc.gim.validate());
            let details = json!({
                "load": load,
                "charts": enc.layout.charts.len(),
                "manual_coverage": enc.layout.manual_coverage,
                "injectivity": enc.injectivity,
                "valid_pixels": enc.gim.valid_pixels(),
                "cylindrical_fallback": enc.gim.cylindrical_fallback,
            });
            (reasons, details)
        }
        Err(e) => (vec![e.to_string()], json!({ "load": load })),
    }
}

fn validate_gim(path: &Path) -> (Vec<String>, Value) {
    let loaded = match open_gim(path) {
        Ok(l) => l,
        Err(e) => return (vec![e.to_string()], Value::Null),
    };
    let mut reasons = loaded.gim.validate();
    let valid_pixels = loaded.gim.valid_pixels();
    if !loaded.inferred_charts && loaded.metadata.valid_pixels != valid_pixels {
        reasons.push(format!(
            "sidecar inconsistency: metadata lists {} valid pixels, mask has {valid_pixels}",
            loaded.metadata.valid_pixels
        ));
    }
    if let Some(a) = &loaded.albedo {
        if a.resolution != loaded.gim.resolution {
            reasons.push(format!("albedo resolution {} differs from geometry image {}", a.resolution, loaded.gim.resolution));
        }
    }
    let details = json!({
        "resolution": loaded.gim.resolution,
        "encoding": loaded.gim.encoding,
        "valid_pixels": valid_pixels,
        "charts": loaded.gim.chart_table.len(),
        "inferred_charts": loaded.inferred_charts,
    });
    (reasons, details)
}

pub fn stats(mesh_path: &Path, settings: &SettingsArgs) -> Outcome {
    let cfg = settings.resolve(BatchConfig { fidelity_samples: DEFAULT_SAMPLES, ..Default::default() })?;
    let (mesh, _) = load_mesh_file(mesh_path)?;
    let opts = SamplingOptions { samples: cfg.fidelity_samples.max(1), seed: cfg.seed, ..Default::default() };
    let report = roundtrip_report_with(&mesh, &cfg.encode_config(), &opts)?;
    emit(&serde_json::to_value(&report)?)?;
    Ok(ExitCode::SUCCESS)
}

pub fn batch(manifest_path: &Path, settings: &SettingsArgs) -> Outcome {
    let mut manifest = JobManifest::load(manifest_path)?;
    manifest.config = settings.resolve(manifest.config)?;
    let report = run_batch(&manifest)?;
    emit(&json!({
        "report": manifest.config.output_dir.join(REPORT_FILE),
        "counts": report.counts,
        "workers": report.workers,
        "wall_seconds": report.wall_seconds,
        "objects_per_second": report.objects_per_second,
        "median_cpu_seconds": report.median_cpu_seconds,
    }))?;
    Ok(ExitCode::SUCCESS)
}
