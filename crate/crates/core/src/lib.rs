//! Multi-chart geometry images: load a textured mesh, build an injective
//! chart atlas, encode surface positions into a square raster, and extract
//! a mesh back out.

pub mod atlas;
pub mod codec;
pub mod error;
pub mod fidelity;
pub mod fixtures;
pub mod geom;
pub mod mesh;
pub mod pipeline;
pub mod raster;

pub use error::{Error, Result};
