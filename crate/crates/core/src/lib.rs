//! Construction and scoring toolkit for temporal earth-observation
//! instruction data.
//!
//! The geometry and metric math is generic over the float type
//! (`num_traits::Float`); the aliases below pin the `f64` instantiations
//! used by the dataset pipeline, with `f32` variants for callers that
//! carry single-precision coordinates.

pub mod baseline;
pub mod eval;
pub mod fixtures;
pub mod geom;
pub mod ingest;
pub mod jsonl;
pub mod metrics;
pub mod respond;
pub mod rng;
pub mod taskgen;

pub type Point = geom::Point<f64>;
pub type Polygon = geom::Polygon<f64>;
pub type TileTransform = geom::TileTransform<f64>;
pub type Shape = geom::Shape<f64>;

pub type Point32 = geom::Point<f32>;
pub type Polygon32 = geom::Polygon<f32>;
pub type TileTransform32 = geom::TileTransform<f32>;
pub type Shape32 = geom::Shape<f32>;

pub use geom::{BBox, Mask};
