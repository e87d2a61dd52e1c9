pub mod contrastive;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod glyphs;
pub mod packing;
pub mod palette;
pub mod raster;
pub mod render;
pub mod scene;
pub mod templates;

pub use error::{Error, Result};
