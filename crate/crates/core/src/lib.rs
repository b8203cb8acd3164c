//! LoD-2 building reconstruction from an orthophoto and a DSM.

pub mod config;
pub mod decompose;
pub mod error;
pub mod eval;
pub mod geo;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod pipeline;
pub mod polygon;
pub mod raster;
pub mod refine;
pub mod roof;
pub mod segment;
pub mod synthetic;

pub use error::{Error, Result};
