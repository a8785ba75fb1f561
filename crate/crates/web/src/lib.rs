//! Browser bindings for the geometry image codec: encode a mesh, rotate its
//! atlas, and decode it back with fidelity statistics.
//!
//! Every export is a thin wrapper over a plain Rust method so the logic is
//! testable off the browser.

use gim_core::atlas::Chart;
use gim_core::codec::{encode_mesh, extract_mesh, rotate_atlas, AlbedoImage, EncodeConfig, Encoding, GeometryImage};
use gim_core::fidelity::{compare, SamplingOptions, DEFAULT_SEED};
use gim_core::fixtures;
use gim_core::mesh::{load_mesh, Mesh, MeshFormat};
use wasm_bindgen::prelude::*;

pub const DEFAULT_DEMO_RESOLUTION: u32 = 128;
const BACKGROUND: [u8; 4] = [24, 24, 28, 255];

/// Names accepted by [`Session::from_fixture`].
#[wasm_bindgen]
pub fn fixture_names() -> Vec<String> {
    fixtures::corpus().into_iter().map(|f| f.name.to_string()).collect()
}

/// One encoded object and its (possibly rotated) atlas.
#[wasm_bindgen]
pub struct Session {
    source: Mesh,
    charts: Vec<Chart>,
    config: EncodeConfig,
    gim: GeometryImage,
    albedo: AlbedoImage,
    quarter_turns: u8,
}

fn config(resolution: u32, cylindrical: bool) -> EncodeConfig {
    let encoding = if cylindrical { Encoding::Cylindrical } else { Encoding::Cartesian };
    EncodeConfig { resolution, encoding, ..Default::default() }
}

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),
    #[error(transparent)]
    Core(#[from] gim_core::Error),
}

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn rgba(mask: &[bool], mut color: impl FnMut(usize) -> [f32; 3]) -> Vec<u8> {
    let mut out = Vec::with_capacity(mask.len() * 4);
    for (idx, &m) in mask.iter().enumerate() {
        if m {
            let c = color(idx).map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8);
            out.extend_from_slice(&[c[0], c[1], c[2], 255]);
        } else {
            out.extend_from_slice(&BACKGROUND);
        }
    }
    out
}

fn hue(id: u32) -> [f32; 3] {
    let h = (id as f32 * 0.618_034).fract() * 6.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [0.25 + 0.7 * r, 0.25 + 0.7 * g, 0.25 + 0.7 * b]
}

impl Session {
    pub fn encode(mesh: &Mesh, resolution: u32, cylindrical: bool) -> Result<Session, DemoError> {
        let config = config(resolution, cylindrical);
        let enc = encode_mesh(mesh, &config)?;
        Ok(Session {
            source: enc.mesh,
            charts: enc.layout.charts,
            config,
            gim: enc.gim,
            albedo: enc.albedo,
            quarter_turns: 0,
        })
    }

    pub fn fixture(name: &str, resolution: u32, cylindrical: bool) -> Result<Session, DemoError> {
        let f = fixtures::corpus()
            .into_iter()
            .find(|f| f.name == name)
            .ok_or_else(|| DemoError::UnknownFixture(name.to_string()))?;
        Session::encode(&f.mesh, resolution, cylindrical)
    }

    pub fn obj(text: &str, resolution: u32, cylindrical: bool) -> Result<Session, DemoError> {
        let (mesh, _) = load_mesh(text.as_bytes(), MeshFormat::Obj)?;
        Session::encode(&mesh, resolution, cylindrical)
    }

    pub fn geometry_image(&self) -> &GeometryImage {
        &self.gim
    }

    /// Decoded mesh in normalized units.
    pub fn reconstruction(&self) -> Mesh {
        let mut rec = extract_mesh(&self.gim);
        for p in &mut rec.positions {
            *p = self.gim.norm.apply(*p);
        }
        rec
    }

    pub fn report(&self, samples: usize) -> gim_core::Result<String> {
        let opts = SamplingOptions { samples: samples.max(1), seed: DEFAULT_SEED, threads: 1 };
        let r = compare(&self.source, &self.reconstruction(), &self.charts, &self.config, &opts, self.gim.cylindrical_fallback)?;
        Ok(serde_json::to_string(&r)?)
    }
}

#[wasm_bindgen]
impl Session {
    /// Encodes one of the built-in fixtures.
    #[wasm_bindgen(js_name = fromFixture)]
    pub fn from_fixture(name: &str, resolution: u32, cylindrical: bool) -> Result<Session, JsError> {
        Session::fixture(name, resolution, cylindrical).map_err(js)
    }

    /// Encodes OBJ text (without external material or texture files).
    #[wasm_bindgen(js_name = fromObj)]
    pub fn from_obj(text: &str, resolution: u32, cylindrical: bool) -> Result<Session, JsError> {
        Session::obj(text, resolution, cylindrical).map_err(js)
    }

    #[wasm_bindgen(getter)]
    pub fn resolution(&self) -> u32 {
        self.gim.resolution
    }

    #[wasm_bindgen(getter, js_name = validPixels)]
    pub fn valid_pixels(&self) -> usize {
        self.gim.valid_pixels()
    }

    #[wasm_bindgen(getter, js_name = chartCount)]
    pub fn chart_count(&self) -> usize {
        self.gim.chart_table.len()
    }

    #[wasm_bindgen(getter)]
    pub fn encoding(&self) -> String {
        self.gim.encoding.to_string()
    }

    #[wasm_bindgen(getter, js_name = cylindricalFallback)]
    pub fn cylindrical_fallback(&self) -> bool {
        self.gim.cylindrical_fallback
    }

    #[wasm_bindgen(getter, js_name = quarterTurns)]
    pub fn quarter_turns(&self) -> u8 {
        self.quarter_turns
    }

    /// Encoded channels as RGBA8, row-major from the top.
    #[wasm_bindgen(js_name = positionRgba)]
    pub fn position_rgba(&self) -> Vec<u8> {
        rgba(&self.gim.mask, |i| self.gim.positions[i])
    }

    #[wasm_bindgen(js_name = albedoRgba)]
    pub fn albedo_rgba(&self) -> Vec<u8> {
        rgba(&self.albedo.mask, |i| self.albedo.colors[i])
    }

    #[wasm_bindgen(js_name = chartRgba)]
    pub fn chart_rgba(&self) -> Vec<u8> {
        rgba(&self.gim.mask, |i| hue(self.gim.chart_ids[i]))
    }

    /// Rotates the atlas by `k` quarter turns counter-clockwise.
    pub fn rotate(&mut self, k: u8) {
        let (g, a) = rotate_atlas(&self.gim, Some(&self.albedo), k);
        self.gim = g;
        if let Some(a) = a {
            self.albedo = a;
        }
        self.quarter_turns = (self.quarter_turns + k) % 4;
    }

    /// Decoded vertex positions, `xyz` interleaved, normalized units.
    #[wasm_bindgen(js_name = meshPositions)]
    pub fn mesh_positions(&self) -> Vec<f32> {
        self.reconstruction().positions.iter().flat_map(|p| p.map(|c| c as f32)).collect()
    }

    /// Decoded triangles as vertex index triples.
    #[wasm_bindgen(js_name = meshTriangles)]
    pub fn mesh_triangles(&self) -> Vec<u32> {
        extract_mesh(&self.gim).faces.iter().flat_map(|f| f.positions).collect()
    }

    /// Round-trip fidelity report as JSON.
    #[wasm_bindgen(js_name = fidelityJson)]
    pub fn fidelity_json(&self, samples: usize) -> Result<String, JsError> {
        self.report(samples).map_err(js)
    }
}
