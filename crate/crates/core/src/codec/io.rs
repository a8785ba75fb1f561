//! On-disk representation: a 16-bit RGBA PNG (or float EXR) of encoded
//! positions with the mask in alpha, a 16-bit chart-id PNG, an 8-bit albedo
//! PNG, and a JSON sidecar with everything needed to decode.

use std::path::{Path, PathBuf};

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgba};
use serde::{Deserialize, Serialize};

use super::{label_mask_components, AlbedoImage, ChartRecord, CylindricalParams, Encoding, GeometryImage, NO_CHART};
use crate::error::{Error, Result};
use crate::mesh::NormalizationParams;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PositionFormat {
    #[default]
    Png16,
    Exr,
}

impl std::str::FromStr for PositionFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "png" | "png16" => Ok(PositionFormat::Png16),
            "exr" => Ok(PositionFormat::Exr),
            other => Err(format!("unknown image format {other:?} (expected png|exr)")),
        }
    }
}

/// JSON sidecar written next to the rasters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GimMetadata {
    pub version: u32,
    pub resolution: u32,
    pub encoding: Encoding,
    pub cylindrical_fallback: bool,
    pub normalization: NormalizationParams,
    pub cylindrical: CylindricalParams,
    pub valid_pixels: usize,
    pub charts: Vec<ChartRecord>,
    pub position_file: String,
    pub position_format: PositionFormat,
    #[serde(default)]
    pub chart_file: Option<String>,
    #[serde(default)]
    pub albedo_file: Option<String>,
    #[serde(default)]
    pub albedo_constant_fill: bool,
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub captions: Vec<String>,
}

impl GimMetadata {
    pub fn for_image(gim: &GeometryImage, stem: &str, format: PositionFormat) -> Self {
        GimMetadata {
            version: FORMAT_VERSION,
            resolution: gim.resolution,
            encoding: gim.encoding,
            cylindrical_fallback: gim.cylindrical_fallback,
            normalization: gim.norm,
            cylindrical: gim.cylindrical,
            valid_pixels: gim.valid_pixels(),
            charts: gim.chart_table.clone(),
            position_file: match format {
                PositionFormat::Png16 => format!("{stem}.gim.png"),
                PositionFormat::Exr => format!("{stem}.gim.exr"),
            },
            position_format: format,
            chart_file: Some(format!("{stem}.charts.png")),
            albedo_file: None,
            albedo_constant_fill: false,
            source: None,
            captions: Vec::new(),
        }
    }
}

fn quantize16(x: f32) -> u16 {
    (x.clamp(0.0, 1.0) * 65535.0).round() as u16
}

fn png_bytes(img: DynamicImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    img.write_with_encoder(PngEncoder::new_with_quality(&mut out, CompressionType::Fast, FilterType::Sub))?;
    Ok(out)
}

/// Raw position raster as read back from disk; channels outside the mask
/// are kept so validation can see them.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionRaster {
    pub resolution: u32,
    pub positions: Vec<[f32; 3]>,
    pub mask: Vec<bool>,
}

pub fn encode_positions_png(gim: &GeometryImage) -> Result<Vec<u8>> {
    let n = gim.resolution;
    let buf = ImageBuffer::<Rgba<u16>, Vec<u16>>::from_fn(n, n, |i, j| {
        let idx = gim.index(i, j);
        let p = gim.positions[idx];
        Rgba([quantize16(p[0]), quantize16(p[1]), quantize16(p[2]), if gim.mask[idx] { 65535 } else { 0 }])
    });
    png_bytes(DynamicImage::ImageRgba16(buf))
}

pub fn decode_positions_png(bytes: &[u8]) -> Result<PositionRaster> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_rgba16();
    if img.width() != img.height() {
        return Err(Error::InvalidImage(format!("geometry image must be square, got {}x{}", img.width(), img.height())));
    }
    let mut positions = Vec::with_capacity((img.width() * img.height()) as usize);
    let mut mask = Vec::with_capacity(positions.capacity());
    for px in img.pixels() {
        positions.push([px[0], px[1], px[2]].map(|c| c as f32 / 65535.0));
        mask.push(px[3] >= 32768);
    }
    Ok(PositionRaster { resolution: img.width(), positions, mask })
}

pub fn write_positions_exr(path: &Path, gim: &GeometryImage) -> Result<()> {
    let n = gim.resolution as usize;
    exr::prelude::write_rgba_file(path, n, n, |x, y| {
        let idx = y * n + x;
        let p = gim.positions[idx];
        (p[0], p[1], p[2], if gim.mask[idx] { 1.0f32 } else { 0.0 })
    })?;
    Ok(())
}

pub fn read_positions_exr(path: &Path) -> Result<PositionRaster> {
    let image = exr::prelude::read_first_rgba_layer_from_file(
        path,
        |res, _| (res.width(), vec![(0f32, 0f32, 0f32, 0f32); res.width() * res.height()]),
        |(w, px), pos, (r, g, b, a): (f32, f32, f32, f32)| px[pos.y() * *w + pos.x()] = (r, g, b, a),
    )?;
    let size = image.layer_data.size;
    if size.width() != size.height() {
        return Err(Error::InvalidImage(format!("geometry image must be square, got {}x{}", size.width(), size.height())));
    }
    let (_, px) = image.layer_data.channel_data.pixels;
    Ok(PositionRaster {
        resolution: size.width() as u32,
        positions: px.iter().map(|&(r, g, b, _)| [r, g, b]).collect(),
        mask: px.iter().map(|&(_, _, _, a)| a >= 0.5).collect(),
    })
}

/// Chart ids stored as `id + 1`, zero outside the mask.
pub fn encode_chart_ids_png(gim: &GeometryImage) -> Result<Vec<u8>> {
    if gim.chart_table.len() >= u16::MAX as usize {
        return Err(Error::InvalidImage(format!("{} charts do not fit a 16-bit id raster", gim.chart_table.len())));
    }
    let n = gim.resolution;
    let buf = ImageBuffer::<Luma<u16>, Vec<u16>>::from_fn(n, n, |i, j| {
        let id = gim.chart_ids[gim.index(i, j)];
        Luma([if id == NO_CHART { 0 } else { id as u16 + 1 }])
    });
    png_bytes(DynamicImage::ImageLuma16(buf))
}

pub fn decode_chart_ids_png(bytes: &[u8]) -> Result<Vec<u32>> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_luma16();
    Ok(img.pixels().map(|p| if p[0] == 0 { NO_CHART } else { p[0] as u32 - 1 }).collect())
}

/// 8-bit RGBA, alpha carries the mask.
pub fn encode_albedo_png(albedo: &AlbedoImage) -> Result<Vec<u8>> {
    let n = albedo.resolution;
    let buf = ImageBuffer::<Rgba<u8>, Vec<u8>>::from_fn(n, n, |i, j| {
        let idx = albedo.index(i, j);
        let c = albedo.colors[idx].map(|x| (x.clamp(0.0, 1.0) * 255.0).round() as u8);
        Rgba([c[0], c[1], c[2], if albedo.mask[idx] { 255 } else { 0 }])
    });
    png_bytes(DynamicImage::ImageRgba8(buf))
}

pub fn decode_albedo_png(bytes: &[u8]) -> Result<AlbedoImage> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_rgba8();
    let mut a = AlbedoImage::empty(img.width());
    for (k, px) in img.pixels().enumerate() {
        a.colors[k] = [px[0], px[1], px[2]].map(|c| c as f32 / 255.0);
        a.mask[k] = px[3] >= 128;
    }
    Ok(a)
}

/// Paths produced by [`write_gim`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrittenFiles {
    pub metadata: PathBuf,
    pub positions: PathBuf,
    pub charts: PathBuf,
    pub albedo: Option<PathBuf>,
}

/// Writes `<stem>.gim.{png,exr}`, `<stem>.charts.png`, optionally
/// `<stem>.albedo.png`, and the `<stem>.meta` sidecar into `dir`.
pub fn write_gim(
    dir: &Path,
    stem: &str,
    gim: &GeometryImage,
    albedo: Option<&AlbedoImage>,
    format: PositionFormat,
    mut meta: GimMetadata,
) -> Result<WrittenFiles> {
    let positions = dir.join(&meta.position_file);
    match format {
        PositionFormat::Png16 => std::fs::write(&positions, encode_positions_png(gim)?)?,
        PositionFormat::Exr => write_positions_exr(&positions, gim)?,
    }
    let charts_name = meta.chart_file.clone().unwrap_or_else(|| format!("{stem}.charts.png"));
    let charts = dir.join(&charts_name);
    std::fs::write(&charts, encode_chart_ids_png(gim)?)?;
    meta.chart_file = Some(charts_name);
    let albedo_path = match albedo {
        Some(a) => {
            let name = format!("{stem}.albedo.png");
            let p = dir.join(&name);
            std::fs::write(&p, encode_albedo_png(a)?)?;
            meta.albedo_file = Some(name);
            meta.albedo_constant_fill = a.constant_fill;
            Some(p)
        }
        None => None,
    };
    let metadata = dir.join(format!("{stem}.meta"));
    std::fs::write(&metadata, serde_json::to_vec_pretty(&meta)?)?;
    Ok(WrittenFiles { metadata, positions, charts, albedo: albedo_path })
}

/// Everything read back from a sidecar and the files it names.
#[derive(Debug, Clone)]
pub struct LoadedGim {
    pub gim: GeometryImage,
    pub albedo: Option<AlbedoImage>,
    pub metadata: GimMetadata,
    /// Chart ids were recovered from mask connectivity.
    pub inferred_charts: bool,
}

pub fn read_gim(metadata_path: &Path) -> Result<LoadedGim> {
    let meta: GimMetadata = serde_json::from_slice(&std::fs::read(metadata_path)?)?;
    let dir = metadata_path.parent().unwrap_or(Path::new("."));
    let raster = match meta.position_format {
        PositionFormat::Png16 => decode_positions_png(&std::fs::read(dir.join(&meta.position_file))?)?,
        PositionFormat::Exr => read_positions_exr(&dir.join(&meta.position_file))?,
    };
    if raster.resolution != meta.resolution {
        return Err(Error::InvalidImage(format!(
            "metadata says resolution {}, image is {}",
            meta.resolution, raster.resolution
        )));
    }
    let chart_path = meta.chart_file.as_ref().map(|f| dir.join(f)).filter(|p| p.exists());
    let mut inferred_charts = false;
    let (chart_ids, chart_table) = match chart_path {
        Some(p) => (decode_chart_ids_png(&std::fs::read(p)?)?, meta.charts.clone()),
        None => {
            if meta.encoding == Encoding::Cylindrical {
                return Err(Error::InvalidImage("cylindrical image needs its chart-id raster".into()));
            }
            inferred_charts = true;
            let (ids, count) = label_mask_components(&raster.mask, raster.resolution);
            (ids, default_records(count))
        }
    };
    if chart_ids.len() != raster.mask.len() {
        return Err(Error::InvalidImage("chart-id raster size differs from geometry image".into()));
    }
    let gim = GeometryImage {
        resolution: raster.resolution,
        positions: raster.positions,
        mask: raster.mask,
        chart_ids,
        encoding: meta.encoding,
        norm: meta.normalization,
        cylindrical: meta.cylindrical,
        chart_table,
        cylindrical_fallback: meta.cylindrical_fallback,
    };
    let albedo = match &meta.albedo_file {
        Some(f) => {
            let mut a = decode_albedo_png(&std::fs::read(dir.join(f))?)?;
            a.constant_fill = meta.albedo_constant_fill;
            Some(a)
        }
        None => None,
    };
    Ok(LoadedGim { gim, albedo, metadata: meta, inferred_charts })
}

/// Opens a geometry image from its `.meta` sidecar, from a position raster
/// whose sidecar sits next to it, or from a bare raster (decoded as
/// cartesian in `[-1, 1]^3` with charts taken from mask connectivity).
pub fn open_gim(path: &Path) -> Result<LoadedGim> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    if name.ends_with(".meta") {
        return read_gim(path);
    }
    let (stem, format) = if let Some(s) = name.strip_suffix(".gim.png") {
        (s.to_string(), PositionFormat::Png16)
    } else if let Some(s) = name.strip_suffix(".gim.exr") {
        (s.to_string(), PositionFormat::Exr)
    } else {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("png") => (name.trim_end_matches(".png").to_string(), PositionFormat::Png16),
            Some("exr") => (name.trim_end_matches(".exr").to_string(), PositionFormat::Exr),
            _ => return Err(Error::InvalidImage(format!("not a geometry image: {}", path.display()))),
        }
    };
    let sidecar = path.with_file_name(format!("{stem}.meta"));
    if sidecar.exists() {
        return read_gim(&sidecar);
    }
    let raster = match format {
        PositionFormat::Png16 => decode_positions_png(&std::fs::read(path)?)?,
        PositionFormat::Exr => read_positions_exr(path)?,
    };
    let (chart_ids, count) = label_mask_components(&raster.mask, raster.resolution);
    let gim = GeometryImage {
        resolution: raster.resolution,
        positions: raster.positions,
        mask: raster.mask,
        chart_ids,
        encoding: Encoding::Cartesian,
        norm: NormalizationParams::default(),
        cylindrical: CylindricalParams::default(),
        chart_table: default_records(count),
        cylindrical_fallback: false,
    };
    let mut metadata = GimMetadata::for_image(&gim, &stem, format);
    metadata.position_file = name;
    metadata.chart_file = None;
    Ok(LoadedGim { gim, albedo: None, metadata, inferred_charts: true })
}

fn default_records(count: usize) -> Vec<ChartRecord> {
    (0..count)
        .map(|k| ChartRecord {
            id: k as u32,
            transform: Default::default(),
            theta_offset: 0.0,
            provenance: crate::mesh::UvProvenance::Manual,
            flipped: false,
            face_count: 0,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{equal_area_rescale, pack_atlas, split_charts};
    use crate::codec::{encode_gim, resample_albedo, DEFAULT_ALBEDO_FILL};
    use crate::fixtures;

    fn cube_gim(res: u32) -> (GeometryImage, AlbedoImage) {
        let (m, norm) = crate::mesh::normalize_mesh(&fixtures::with_checker(fixtures::cube(), 32, 4)).unwrap();
        let set = equal_area_rescale(&split_charts(&m));
        let mut layout = pack_atlas(&set, res, 2).unwrap();
        layout.certify(res);
        let g = encode_gim(&m, norm, &layout, res, Encoding::Cartesian).unwrap();
        let a = resample_albedo(&m, &layout, res, DEFAULT_ALBEDO_FILL).unwrap();
        (g, a)
    }

    #[test]
    fn png_roundtrip_within_quantization() {
        let (g, a) = cube_gim(64);
        let dir = tempfile::tempdir().unwrap();
        let meta = GimMetadata::for_image(&g, "cube", PositionFormat::Png16);
        let files = write_gim(dir.path(), "cube", &g, Some(&a), PositionFormat::Png16, meta).unwrap();
        let back = read_gim(&files.metadata).unwrap();
        assert!(!back.inferred_charts);
        assert_eq!(back.gim.mask, g.mask);
        assert_eq!(back.gim.chart_ids, g.chart_ids);
        for (p, q) in back.gim.positions.iter().zip(&g.positions) {
            for k in 0..3 {
                assert!((p[k] - q[k]).abs() <= 0.5 / 65535.0 + 1e-7);
            }
        }
        let ba = back.albedo.unwrap();
        assert_eq!(ba.mask, a.mask);
        assert!(back.gim.validate().is_empty());
    }

    #[test]
    fn exr_roundtrip_is_exact() {
        let (g, _) = cube_gim(32);
        let dir = tempfile::tempdir().unwrap();
        let meta = GimMetadata::for_image(&g, "c", PositionFormat::Exr);
        let files = write_gim(dir.path(), "c", &g, None, PositionFormat::Exr, meta).unwrap();
        let back = read_gim(&files.metadata).unwrap();
        assert_eq!(back.gim.positions, g.positions);
        assert_eq!(back.gim.mask, g.mask);
    }

    #[test]
    fn missing_chart_raster_falls_back_to_components() {
        let (g, _) = cube_gim(64);
        let dir = tempfile::tempdir().unwrap();
        let meta = GimMetadata::for_image(&g, "c", PositionFormat::Png16);
        let files = write_gim(dir.path(), "c", &g, None, PositionFormat::Png16, meta).unwrap();
        std::fs::remove_file(&files.charts).unwrap();
        let back = read_gim(&files.metadata).unwrap();
        assert!(back.inferred_charts);
        // packed cube charts are separated by the gutter
        assert_eq!(back.gim.chart_table.len(), 6);
    }

    #[test]
    fn open_gim_finds_sidecar_or_reads_bare_raster() {
        let (g, _) = cube_gim(64);
        let dir = tempfile::tempdir().unwrap();
        let meta = GimMetadata::for_image(&g, "c", PositionFormat::Png16);
        let files = write_gim(dir.path(), "c", &g, None, PositionFormat::Png16, meta).unwrap();
        let via_image = open_gim(&files.positions).unwrap();
        assert!(!via_image.inferred_charts);
        assert_eq!(via_image.gim.norm, g.norm);

        let bare = dir.path().join("loose.png");
        std::fs::copy(&files.positions, &bare).unwrap();
        let loaded = open_gim(&bare).unwrap();
        assert!(loaded.inferred_charts);
        assert_eq!(loaded.gim.encoding, Encoding::Cartesian);
        assert_eq!(loaded.gim.mask, g.mask);
        assert_eq!(loaded.gim.chart_table.len(), 6);
        assert!(loaded.gim.validate().is_empty());

        assert!(open_gim(&dir.path().join("x.txt")).is_err());
    }
}
