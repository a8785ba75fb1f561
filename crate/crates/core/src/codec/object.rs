use serde::{Deserialize, Serialize};

use super::{encode_gim_with, resample_albedo, AlbedoImage, CylindricalParams, EncodeOptions, Encoding, GeometryImage};
use super::{DEFAULT_ALBEDO_FILL, DEFAULT_RESOLUTION};
use crate::atlas::{
    equal_area_rescale, pack_atlas, split_charts, unwrap_missing, AtlasLayout, ChartSet, InjectivityReport,
    DEFAULT_GUTTER_PX,
};
use crate::error::{Error, Result};
use crate::mesh::{normalize_mesh, Mesh, NormalizationParams};

/// Settings for the whole mesh-to-image path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncodeConfig {
    pub resolution: u32,
    pub encoding: Encoding,
    pub gutter_px: u32,
    pub albedo_fill: [f32; 3],
    pub cylindrical: CylindricalParams,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        EncodeConfig {
            resolution: DEFAULT_RESOLUTION,
            encoding: Encoding::Cylindrical,
            gutter_px: DEFAULT_GUTTER_PX,
            albedo_fill: DEFAULT_ALBEDO_FILL,
            cylindrical: CylindricalParams::default(),
        }
    }
}

/// Every intermediate of [`encode_mesh`].
#[derive(Debug, Clone)]
pub struct EncodedObject {
    /// Input mesh mapped into `[-1, 1]^3`.
    pub mesh: Mesh,
    pub norm: NormalizationParams,
    /// Authored charts, before fallback unwrapping.
    pub charts: ChartSet,
    pub layout: AtlasLayout,
    pub injectivity: InjectivityReport,
    pub gim: GeometryImage,
    pub albedo: AlbedoImage,
}

/// normalize, split, unwrap uncovered faces, rescale, pack, certify,
/// encode, resample albedo.
pub fn encode_mesh(mesh: &Mesh, cfg: &EncodeConfig) -> Result<EncodedObject> {
    let (normalized, norm) = normalize_mesh(mesh)?;
    let charts = split_charts(&normalized);
    let complete = unwrap_missing(&normalized, &charts);
    let scaled = equal_area_rescale(&complete);
    let mut layout = pack_atlas(&scaled, cfg.resolution, cfg.gutter_px)?;
    let injectivity = layout.certify(cfg.resolution);
    if !injectivity.pass {
        return Err(Error::NotInjective { conflicts: injectivity.conflict_count });
    }
    let options = EncodeOptions { encoding: cfg.encoding, cylindrical: cfg.cylindrical, wrap_fallback: true };
    let gim = encode_gim_with(&normalized, norm, &layout, cfg.resolution, &options)?;
    let albedo = resample_albedo(&normalized, &layout, cfg.resolution, cfg.albedo_fill)?;
    Ok(EncodedObject { mesh: normalized, norm, charts, layout, injectivity, gim, albedo })
}
