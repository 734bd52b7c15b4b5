//! Pixel-space geometry: boxes, polygons, label masks, frame transforms
//! and rasterization.
//!
//! Conventions used throughout the crate:
//! - integer pixel coordinates with the origin at the top-left corner;
//! - boxes are half-open, `[x_min, x_max) x [y_min, y_max)`;
//! - a pixel belongs to a shape iff its center `(x + 0.5, y + 0.5)` does,
//!   with the even-odd rule for polygons.

mod bbox;
mod clip;
mod diff;
mod mask;
mod polygon;
mod raster;
mod transform;

pub use bbox::BBox;
pub use clip::{clip_polygon, clip_ring, ClipRect};
pub use diff::{mask_diff, overlapping_pairs, OverlapMasking};
pub use mask::{Mask, RleMask};
pub use polygon::{min_aabb, Point, Polygon};
pub use raster::{fill_polygon, rasterize, rasterize_boxes, Shape};
pub use transform::{transform_box, BoxOutcome, TileTransform, MIN_KEPT_AREA, MIN_KEPT_FRACTION};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("invalid box {0:?}: need x_min < x_max and y_min < y_max")]
    InvalidBox([u32; 4]),
    #[error("polygon collapses to a degenerate box {0:?}")]
    Degenerate([u32; 4]),
    #[error("ring {ring} has {count} distinct vertices, need at least 3")]
    TooFewVertices { ring: usize, count: usize },
    #[error("ring {ring} has a non-finite coordinate")]
    NonFinite { ring: usize },
    #[error("ring {ring} self-intersects")]
    SelfIntersecting { ring: usize },
    #[error("extent {width}x{height} is empty")]
    EmptyExtent { width: u32, height: u32 },
    #[error("mask needs at least 2 classes, got {0}")]
    ClassCount(u8),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: u8, classes: u8 },
    #[error("shape {index}: label {label} must be in 1..{classes}")]
    ShapeLabel {
        index: usize,
        label: u8,
        classes: u8,
    },
    #[error("shape {index}: {source}")]
    InvalidShape {
        index: usize,
        #[source]
        source: Box<GeomError>,
    },
    #[error("extent mismatch: expected {expected:?}, found {found:?}")]
    ExtentMismatch {
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error("run lengths cover {found} pixels, mask has {expected}")]
    RleLength { expected: u64, found: u64 },
}
