//! Configuration layering: built-in defaults, then a TOML config file,
//! then command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use gim_core::codec::io::PositionFormat;
use gim_core::codec::Encoding;
use gim_core::pipeline::BatchConfig;

use crate::commands::CliError;

/// Flags mirroring the keys of the `[config]` table.
#[derive(Debug, Clone, Default, Args)]
pub struct SettingsArgs {
    /// TOML file with config keys; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub resolution: Option<u32>,
    /// cylindrical | cartesian
    #[arg(long)]
    pub encoding: Option<Encoding>,
    #[arg(long)]
    pub coverage_threshold: Option<f64>,
    /// Gap between packed charts, in pixels.
    #[arg(long)]
    pub gutter: Option<u32>,
    /// Position raster format: png | exr
    #[arg(long = "format")]
    pub image_format: Option<PositionFormat>,
    /// Also write the three quarter-turn rotations.
    #[arg(long)]
    pub rotations: Option<bool>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Surface samples for fidelity statistics; 0 skips them.
    #[arg(long)]
    pub fidelity_samples: Option<usize>,
    /// Seed of the surface sampler.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_faces: Option<usize>,
    #[arg(long)]
    pub max_charts: Option<usize>,
}

/// Reads a config file holding either bare config keys or a `[config]` table.
pub fn read_config_file(path: &Path, base: BatchConfig) -> Result<BatchConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut table: toml::Table = text.parse().map_err(|e| CliError::config(path, e))?;
    if let Some(toml::Value::Table(inner)) = table.remove("config") {
        table = inner;
    }
    let mut merged = toml::Table::try_from(base).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    merged.extend(table);
    merged.try_into().map_err(|e| CliError::config(path, e))
}

impl SettingsArgs {
    /// Layers the config file (if any) and then the flags over `base`.
    pub fn resolve(&self, base: BatchConfig) -> Result<BatchConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => read_config_file(p, base)?,
            None => base,
        };
        self.apply_flags(&mut cfg);
        Ok(cfg)
    }

    pub fn apply_flags(&self, cfg: &mut BatchConfig) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                }
            )*};
        }
        set!(resolution, encoding, coverage_threshold, gutter, image_format, rotations, workers, output_dir, fidelity_samples, seed);
        if self.max_faces.is_some() {
            cfg.max_faces = self.max_faces;
        }
        if self.max_charts.is_some() {
            cfg.max_charts = self.max_charts;
        }
    }
}
