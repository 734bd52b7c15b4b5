use serde::{Deserialize, Serialize};

use super::record::{GeoLabel, SceneRecord};
use crate::geom::{clip_polygon, min_aabb, transform_box, BBox, ClipRect};
use crate::{Polygon, TileTransform};

/// Tile edge length used for the large-scene sources.
pub const TILE_SIZE: u32 = 256;
/// Model input frame edge length.
pub const FRAME_SIZE: u32 = 224;

/// Grid layout of one extent. Extents that are not a multiple of the
/// tile size get a last row/column anchored to the far edge, overlapping
/// its neighbour instead of being padded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TileGrid {
    pub width: u32,
    pub height: u32,
    pub tile_size: u32,
    pub cols: u32,
    pub rows: u32,
    /// Tiles on the regular grid (no overlap).
    pub full_tiles: u32,
    /// Tiles anchored to the right or bottom edge.
    pub edge_anchored_tiles: u32,
}

impl TileGrid {
    pub fn new(width: u32, height: u32, tile_size: u32) -> Self {
        let cols = tile_origins(width, tile_size).len() as u32;
        let rows = tile_origins(height, tile_size).len() as u32;
        let full_cols = (width / tile_size).max(1);
        let full_rows = (height / tile_size).max(1);
        let full = full_cols * full_rows;
        Self {
            width,
            height,
            tile_size,
            cols,
            rows,
            full_tiles: full,
            edge_anchored_tiles: cols * rows - full,
        }
    }

    pub fn tile_count(&self) -> u32 {
        self.cols * self.rows
    }

    pub fn policy(&self) -> &'static str {
        "edge-anchored remainder"
    }
}

/// Tile start offsets along one axis.
pub fn tile_origins(extent: u32, tile_size: u32) -> Vec<u32> {
    if extent <= tile_size {
        return vec![0];
    }
    let full = extent / tile_size;
    let mut origins: Vec<u32> = (0..full).map(|i| i * tile_size).collect();
    if !extent.is_multiple_of(tile_size) {
        origins.push(extent - tile_size);
    }
    origins
}

/// Cuts a source-resolution record into grid tiles. Polygons are clipped
/// to each window and re-expressed in tile coordinates; objects whose box
/// would fall under the sliver threshold keep their polygon but are
/// flagged [`GeoLabel::edge_sliver`].
pub fn tile(record: &SceneRecord, tile_size: u32) -> Vec<SceneRecord> {
    let xs = tile_origins(record.width, tile_size);
    let ys = tile_origins(record.height, tile_size);
    let tw = record.width.min(tile_size);
    let th = record.height.min(tile_size);
    let base = base_transforms(record);
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for (row, &y0) in ys.iter().enumerate() {
        for (col, &x0) in xs.iter().enumerate() {
            let t = TileTransform::crop(record.width, record.height, x0, y0, tw, th);
            let window = BBox {
                x_min: x0,
                y_min: y0,
                x_max: x0 + tw,
                y_max: y0 + th,
            };
            let labels = reframe_labels(&record.labels, &t);
            out.push(SceneRecord {
                id: format!("{}_r{row:02}c{col:02}", record.id),
                images: record.images.iter().map(|i| i.cropped(window)).collect(),
                width: tw,
                height: th,
                labels,
                transforms: base.iter().map(|b| b.then(&t)).collect(),
                ..record.clone()
            });
        }
    }
    out
}

/// Re-expresses a record in the square model frame: shorter side scaled
/// to `target`, then center-cropped.
pub fn normalize_frame(record: &SceneRecord, target: u32) -> SceneRecord {
    let t = TileTransform::shorter_side_center_crop(record.width, record.height, target);
    let base = base_transforms(record);
    let labels = if t.is_identity() {
        record.labels.clone()
    } else {
        reframe_labels(&record.labels, &t)
    };
    SceneRecord {
        width: t.dst_w,
        height: t.dst_h,
        labels,
        transforms: base.iter().map(|b| b.then(&t)).collect(),
        ..record.clone()
    }
}

fn base_transforms(record: &SceneRecord) -> Vec<TileTransform> {
    if record.transforms.is_empty() {
        vec![TileTransform::identity(record.width, record.height); record.images.len()]
    } else {
        record.transforms.clone()
    }
}

/// Maps labels through `t`, clips them to the target extent and flags
/// slivers. Labels with nothing left inside the frame are removed.
fn reframe_labels(labels: &[GeoLabel], t: &TileTransform) -> Vec<GeoLabel> {
    let window = ClipRect {
        x_min: 0.0,
        y_min: 0.0,
        x_max: f64::from(t.dst_w),
        y_max: f64::from(t.dst_h),
    };
    labels
        .iter()
        .filter_map(|label| {
            let mapped: Polygon = label.polygon.map_points(|p| t.apply(p));
            let clipped = clip_polygon(&mapped, &window)?;
            let sliver = label.edge_sliver
                || match min_aabb(&label.polygon) {
                    Ok(b) => transform_box(&b, t).kept().is_none(),
                    Err(_) => true,
                };
            Some(GeoLabel {
                polygon: clipped,
                edge_sliver: sliver,
                ..label.clone()
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ImageRef, SourceKind};

    fn record(w: u32, h: u32, labels: Vec<GeoLabel>) -> SceneRecord {
        SceneRecord {
            id: "s".into(),
            source: SourceKind::Xbd,
            images: vec![ImageRef::new("a.png"), ImageRef::new("b.png")],
            order: vec![0, 1],
            width: w,
            height: h,
            labels,
            sequence_class: None,
            sensor: None,
            resolution: None,
            disaster_type: None,
            transforms: vec![],
        }
    }

    fn label(x0: f64, y0: f64, x1: f64, y1: f64) -> GeoLabel {
        GeoLabel {
            polygon: Polygon::from_rect(x0, y0, x1, y1).unwrap(),
            classes_per_timestep: None,
            sequence_class: Some("Destroyed".into()),
            change: None,
            edge_sliver: false,
        }
    }

    #[test]
    fn origins() {
        assert_eq!(tile_origins(1024, 256), vec![0, 256, 512, 768]);
        assert_eq!(tile_origins(256, 256), vec![0]);
        assert_eq!(tile_origins(600, 256), vec![0, 256, 344]);
        assert_eq!(tile_origins(100, 256), vec![0]);
    }

    #[test]
    fn grid_counts() {
        assert_eq!(TileGrid::new(1024, 1024, 256).tile_count(), 16);
        let g = TileGrid::new(10_000, 10_000, 256);
        assert_eq!(g.full_tiles, 39 * 39);
        assert_eq!(g.tile_count(), 1600);
        assert_eq!(g.edge_anchored_tiles, 1600 - 1521);
    }

    #[test]
    fn single_tile_is_identity_geometry() {
        let r = record(256, 256, vec![label(10.0, 10.0, 50.0, 60.0)]);
        let tiles = tile(&r, 256);
        assert_eq!(tiles.len(), 1);
        assert_eq!(tiles[0].labels[0].polygon, r.labels[0].polygon);
        assert_eq!(
            tiles[0].images[0].crop,
            Some(BBox::new(0, 0, 256, 256).unwrap())
        );
    }

    #[test]
    fn labels_are_split_across_tiles() {
        // Straddles the vertical seam at x = 256: 40 px left, 60 px right.
        let r = record(512, 256, vec![label(216.0, 10.0, 316.0, 110.0)]);
        let tiles = tile(&r, 256);
        assert_eq!(tiles.len(), 2);
        assert_eq!(tiles[0].labels[0].polygon.area(), 4000.0);
        assert_eq!(tiles[1].labels[0].polygon.area(), 6000.0);
        assert_eq!(
            min_aabb(&tiles[1].labels[0].polygon).unwrap().to_array(),
            [0, 10, 60, 110]
        );
        assert!(!tiles[0].labels[0].edge_sliver);
        assert_eq!(tiles[1].transforms[0].dx, 256.0);
    }

    #[test]
    fn slivers_are_flagged_not_removed() {
        // 3 px of a 100 px wide building crosses into the second tile.
        let r = record(512, 256, vec![label(159.0, 10.0, 259.0, 110.0)]);
        let tiles = tile(&r, 256);
        assert!(!tiles[0].labels[0].edge_sliver);
        assert!(tiles[1].labels[0].edge_sliver);
        assert_eq!(tiles[1].labels[0].prompt_box(), None);
    }

    #[test]
    fn normalize_square_tile() {
        let r = record(256, 256, vec![label(32.0, 32.0, 64.0, 64.0)]);
        let n = normalize_frame(&r, 224);
        assert_eq!((n.width, n.height), (224, 224));
        assert_eq!(
            n.labels[0].prompt_box().unwrap().to_array(),
            [28, 28, 56, 56]
        );
        assert_eq!(n.transforms[0].scale, 0.875);
    }

    #[test]
    fn normalize_wide_frame_crops_sides() {
        let r = record(
            512,
            256,
            vec![
                label(10.0, 10.0, 100.0, 100.0),
                label(200.0, 10.0, 300.0, 100.0),
            ],
        );
        let n = normalize_frame(&r, 224);
        // The first building lies entirely in the cropped-away left margin.
        assert_eq!(n.labels.len(), 1);
        let b = n.labels[0].prompt_box().unwrap();
        // 200 * 0.875 - 112 = 63; 300 * 0.875 - 112 = 150.5 -> 151.
        assert_eq!(b.to_array(), [63, 8, 151, 88]);
        assert!(n.validate().is_ok());
    }

    #[test]
    fn identity_normalization() {
        let r = record(224, 224, vec![label(1.0, 2.0, 30.0, 40.0)]);
        let n = normalize_frame(&r, 224);
        assert_eq!(n.labels, r.labels);
        assert!(n.transforms.iter().all(|t| t.is_identity()));
    }
}
