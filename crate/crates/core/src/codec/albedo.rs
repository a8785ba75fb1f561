use crate::atlas::AtlasLayout;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, UvProvenance};
use crate::raster::{pixel_center_uv, rasterize_triangle};

/// Mid-gray used where no source texture can be sampled.
pub const DEFAULT_ALBEDO_FILL: [f32; 3] = [0.5, 0.5, 0.5];

/// Linear RGB in `[0, 1]`, pixel-aligned with the geometry image.
#[derive(Debug, Clone, PartialEq)]
pub struct AlbedoImage {
    pub resolution: u32,
    pub colors: Vec<[f32; 3]>,
    pub mask: Vec<bool>,
    /// Some covered pixels were filled with a constant instead of sampled.
    pub constant_fill: bool,
}

impl AlbedoImage {
    pub fn empty(resolution: u32) -> Self {
        let n = (resolution as usize) * (resolution as usize);
        AlbedoImage { resolution, colors: vec![[0.0; 3]; n], mask: vec![false; n], constant_fill: false }
    }

    #[inline]
    pub fn index(&self, i: u32, j: u32) -> usize {
        j as usize * self.resolution as usize + i as usize
    }
}

/// Samples the source texture at every covered pixel. Pixels of generated
/// charts, or of a mesh without texture, get `fill`.
pub fn resample_albedo(mesh: &Mesh, layout: &AtlasLayout, resolution: u32, fill: [f32; 3]) -> Result<AlbedoImage> {
    if layout.charts.is_empty() {
        return Err(Error::EmptyLayout);
    }
    if layout.certified_resolution() != Some(resolution) {
        return Err(Error::NotCertified { requested: resolution, certified: layout.certified_resolution() });
    }
    let mut out = AlbedoImage::empty(resolution);
    for chart in &layout.charts {
        let texture = match chart.provenance {
            UvProvenance::Manual => mesh.texture.as_ref(),
            _ => None,
        };
        for slot in 0..chart.face_ids.len() {
            rasterize_triangle(chart.packed_uvs(slot), resolution, |i, j, _| {
                let idx = out.index(i, j);
                if out.mask[idx] {
                    return;
                }
                out.mask[idx] = true;
                out.colors[idx] = match texture {
                    Some(t) => t.sample(chart.transform.invert(pixel_center_uv(i, j, resolution))),
                    None => {
                        out.constant_fill = true;
                        fill
                    }
                };
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{equal_area_rescale, pack_atlas, split_charts};
    use crate::codec::{encode_gim, Encoding};
    use crate::fixtures;
    use crate::mesh::{Face, Texture};

    fn full_square(texture: Texture) -> (Mesh, AtlasLayout) {
        let m = Mesh {
            positions: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            uvs: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            faces: vec![Face::new([0, 1, 2], [0, 1, 2]), Face::new([0, 2, 3], [0, 2, 3])],
            texture: Some(texture),
        };
        let mut layout = AtlasLayout::from_charts(split_charts(&m).charts, 16);
        assert!(layout.certify(16).pass);
        (m, layout)
    }

    #[test]
    fn constant_texture_is_reproduced() {
        let (m, mut layout) = full_square(Texture::constant(4, 4, [1.0, 0.0, 0.0]));
        let a = resample_albedo(&m, &layout, 16, DEFAULT_ALBEDO_FILL).unwrap();
        assert!(a.mask.iter().all(|&v| v));
        assert!(a.colors.iter().all(|c| (c[0] - 1.0).abs() < 1e-6 && c[1].abs() < 1e-6 && c[2].abs() < 1e-6));
        assert!(!a.constant_fill);
        layout.clear_certificate();
        assert!(resample_albedo(&m, &layout, 16, DEFAULT_ALBEDO_FILL).is_err());
    }

    #[test]
    fn identity_layout_matches_texture_texels() {
        // 16x16 texture sampled at 16x16 pixel centers hits texel centers
        let texels: Vec<[f32; 3]> = (0..256).map(|k| [(k % 16) as f32 / 15.0, (k / 16) as f32 / 15.0, 0.25]).collect();
        let (m, layout) = full_square(Texture::new(16, 16, texels));
        let a = resample_albedo(&m, &layout, 16, DEFAULT_ALBEDO_FILL).unwrap();
        let t = m.texture.as_ref().unwrap();
        for j in 0..16 {
            for i in 0..16 {
                let c = a.colors[a.index(i, j)];
                let e = t.texel(i, j);
                for k in 0..3 {
                    assert!((c[k] - e[k]).abs() < 1e-5, "({i},{j}) {c:?} {e:?}");
                }
            }
        }
    }

    #[test]
    fn checker_cube_mask_matches_geometry() {
        let cube = fixtures::with_checker(fixtures::cube(), 64, 8);
        let (m, norm) = crate::mesh::normalize_mesh(&cube).unwrap();
        let set = equal_area_rescale(&split_charts(&m));
        let mut layout = pack_atlas(&set, 128, 2).unwrap();
        layout.certify(128);
        let g = encode_gim(&m, norm, &layout, 128, Encoding::Cartesian).unwrap();
        let a = resample_albedo(&m, &layout, 128, DEFAULT_ALBEDO_FILL).unwrap();
        assert_eq!(g.mask, a.mask);
        // checker red channel is 0.15 or 0.9; interior samples stay near one of them
        let extreme = a.colors.iter().zip(&a.mask).filter(|(_, &v)| v).filter(|(c, _)| c[0] < 0.2 || c[0] > 0.85).count();
        assert!(extreme as f64 > 0.5 * a.mask.iter().filter(|&&v| v).count() as f64);
    }

    #[test]
    fn missing_texture_uses_fill() {
        let mut m = fixtures::cube();
        m.texture = None;
        let set = equal_area_rescale(&split_charts(&m));
        let mut layout = pack_atlas(&set, 64, 2).unwrap();
        layout.certify(64);
        let a = resample_albedo(&m, &layout, 64, [0.2, 0.3, 0.4]).unwrap();
        assert!(a.constant_fill);
        assert!(a.colors.iter().zip(&a.mask).all(|(c, &v)| !v || *c == [0.2, 0.3, 0.4]));
    }
}
