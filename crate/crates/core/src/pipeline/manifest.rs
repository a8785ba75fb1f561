use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::io::PositionFormat;
use crate::codec::{CylindricalParams, EncodeConfig, Encoding, DEFAULT_ALBEDO_FILL, DEFAULT_RESOLUTION};
use crate::atlas::DEFAULT_GUTTER_PX;
use crate::error::{Error, Result};

pub const DEFAULT_COVERAGE_THRESHOLD: f64 = 0.8;
pub const DEFAULT_BATCH_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchConfig {
    pub resolution: u32,
    pub encoding: Encoding,
    pub coverage_threshold: f64,
    pub gutter: u32,
    /// Also write the three quarter-turn rotations of every accepted object.
    pub rotations: bool,
    /// Zero means one worker per available CPU.
    pub workers: usize,
    pub output_dir: PathBuf,
    pub image_format: PositionFormat,
    /// Surface samples per mesh for the fidelity report; zero skips it.
    pub fidelity_samples: usize,
    pub seed: u64,
    /// Reject objects with more faces than this.
    pub max_faces: Option<usize>,
    /// Reject objects whose atlas would hold more charts than this.
    pub max_charts: Option<usize>,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            resolution: DEFAULT_RESOLUTION,
            encoding: Encoding::Cylindrical,
            coverage_threshold: DEFAULT_COVERAGE_THRESHOLD,
            gutter: DEFAULT_GUTTER_PX,
            rotations: true,
            workers: 0,
            output_dir: PathBuf::from("out"),
            image_format: PositionFormat::Png16,
            fidelity_samples: DEFAULT_BATCH_SAMPLES,
            seed: crate::fidelity::DEFAULT_SEED,
            max_faces: None,
            max_charts: None,
        }
    }
}

impl BatchConfig {
    pub fn encode_config(&self) -> EncodeConfig {
        EncodeConfig {
            resolution: self.resolution,
            encoding: self.encoding,
            gutter_px: self.gutter,
            albedo_fill: DEFAULT_ALBEDO_FILL,
            cylindrical: CylindricalParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectEntry {
    pub id: String,
    pub path: PathBuf,
    #[serde(default)]
    pub captions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct JobManifest {
    #[serde(default)]
    pub config: BatchConfig,
    #[serde(default, rename = "object")]
    pub objects: Vec<ObjectEntry>,
}

impl JobManifest {
    /// Parses TOML; relative object paths and output directory are
    /// resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut m: JobManifest = toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        for o in &mut m.objects {
            if o.path.is_relative() {
                o.path = base.join(&o.path);
            }
        }
        if m.config.output_dir.is_relative() {
            m.config.output_dir = base.join(&m.config.output_dir);
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    /// Ids must be unique, non-empty and usable as file stems; paths must exist.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for o in &self.objects {
            if o.id.is_empty() || o.id.contains(['/', '\\']) || o.id.starts_with('.') {
                return Err(Error::Manifest(format!("invalid object id {:?}", o.id)));
            }
            if !seen.insert(&o.id) {
                return Err(Error::Manifest(format!("duplicate object id {:?}", o.id)));
            }
            if !o.path.exists() {
                return Err(Error::Manifest(format!("{}: no such file", o.path.display())));
            }
        }
        let c = &self.config;
        if c.resolution < 2 {
            return Err(Error::Manifest(format!("resolution {} too small", c.resolution)));
        }
        if !(0.0..=1.0).contains(&c.coverage_threshold) {
            return Err(Error::Manifest(format!("coverage threshold {} outside [0,1]", c.coverage_threshold)));
        }
        Ok(())
    }
}
