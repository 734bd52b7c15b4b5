//! Source normalization: interchange-schema scenes in, validated
//! [`SceneRecord`]s out.
//!
//! Directory layout per source root:
//!
//! ```text
//! <root>/<split>/scenes/*.json        one SceneFile per scene
//! <root>/<split>/<image paths>        relative to the split directory
//! <root>/<split>/conversations.jsonl  single-image corpus only
//! ```

mod record;
mod schema;
mod single;
mod tile;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{GeomError, Point};
use crate::Polygon;

pub use record::{ChangeKind, GeoLabel, ImageRef, Resolution, SceneRecord};
pub use schema::{LabelEntry, SceneFile};
pub use single::{convert_single_turn, read_single_corpus, SingleImageExample, SingleTurn};
pub use tile::{normalize_frame, tile, tile_origins, TileGrid, FRAME_SIZE, TILE_SIZE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Xbd,
    S2looking,
    Qfabric,
    FmowRgb,
    FmowSentinel,
    SingleImageCorpus,
}

impl SourceKind {
    pub const ALL: [SourceKind; 6] = [
        SourceKind::Xbd,
        SourceKind::S2looking,
        SourceKind::Qfabric,
        SourceKind::FmowRgb,
        SourceKind::FmowSentinel,
        SourceKind::SingleImageCorpus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Xbd => "xbd",
            SourceKind::S2looking => "s2looking",
            SourceKind::Qfabric => "qfabric",
            SourceKind::FmowRgb => "fmow_rgb",
            SourceKind::FmowSentinel => "fmow_sentinel",
            SourceKind::SingleImageCorpus => "single_image_corpus",
        }
    }

    /// Dataset name used in reports and counts; the two fMoW variants
    /// share one.
    pub fn dataset(self) -> &'static str {
        match self {
            SourceKind::Xbd => "xBD",
            SourceKind::S2looking => "S2Looking",
            SourceKind::Qfabric => "QFabric",
            SourceKind::FmowRgb | SourceKind::FmowSentinel => "fMoW",
            SourceKind::SingleImageCorpus => "GeoChat_Instruct",
        }
    }

    pub fn is_tiled(self) -> bool {
        matches!(
            self,
            SourceKind::Xbd | SourceKind::S2looking | SourceKind::Qfabric
        )
    }

    pub fn drops_empty_tiles(self) -> bool {
        self == SourceKind::Qfabric
    }

    pub fn is_temporal(self) -> bool {
        self != SourceKind::SingleImageCorpus
    }

    /// Published training-set example count for the dataset.
    pub fn reference_count(self) -> u64 {
        match self {
            SourceKind::FmowRgb | SourceKind::FmowSentinel => 83_412,
            SourceKind::Xbd => 19_749,
            SourceKind::S2looking => 17_090,
            SourceKind::Qfabric => 124_959,
            SourceKind::SingleImageCorpus => 308_861,
        }
    }
}

/// Published size of the merged training corpus.
pub const REFERENCE_TOTAL: u64 = 554_071;

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceKind {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SourceKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| IngestError::UnknownSource(s.to_owned()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDescriptor {
    pub kind: SourceKind,
    pub root: PathBuf,
    pub split: String,
}

impl SourceDescriptor {
    pub fn new(kind: SourceKind, root: impl Into<PathBuf>, split: impl Into<String>) -> Self {
        Self {
            kind,
            root: root.into(),
            split: split.into(),
        }
    }

    pub fn split_dir(&self) -> PathBuf {
        self.root.join(&self.split)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RecordError {
    #[error("record has no images")]
    NoImages,
    #[error("{order} order indices for {images} images")]
    OrderLength { images: usize, order: usize },
    #[error("order indices are not strictly increasing")]
    OrderNotIncreasing,
    #[error("{transforms} transforms for {images} images")]
    TransformCount { images: usize, transforms: usize },
    #[error("label {label}: {source}")]
    Geometry { label: usize, source: GeomError },
    #[error("label {label} lies outside the image extent")]
    OutOfFrame { label: usize },
    #[error("label {label} carries no class, timestep or change field")]
    Unlabelled { label: usize },
    #[error("label {label}: {found} timestep classes for {expected} images")]
    TimestepLength {
        label: usize,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unknown source kind `{0}`")]
    UnknownSource(String),
    #[error("source root {} does not exist", .0.display())]
    MissingRoot(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: malformed scene file: {source}", path.display())]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}: record {index}: {message}", path.display())]
    Label {
        path: PathBuf,
        index: usize,
        message: String,
    },
    #[error("record {id}: {source}")]
    Invalid { id: String, source: RecordError },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub scenes: usize,
    pub skipped_missing_image: usize,
    pub empty_tiles_dropped: usize,
    pub records: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IngestOutput {
    pub records: Vec<SceneRecord>,
    /// Converted conversations of the single-image corpus, in id order.
    pub passthrough: Vec<SingleImageExample>,
    pub stats: IngestStats,
}

/// Reads one source and returns its records sorted by id.
pub fn ingest_source(desc: &SourceDescriptor) -> Result<IngestOutput, IngestError> {
    if !desc.root.is_dir() {
        return Err(IngestError::MissingRoot(desc.root.clone()));
    }
    let dir = desc.split_dir();
    if desc.kind == SourceKind::SingleImageCorpus {
        return ingest_single(desc, &dir);
    }
    let scenes_dir = dir.join("scenes");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&scenes_dir)
        .map_err(|source| IngestError::Io {
            path: scenes_dir.clone(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();

    let missing = AtomicUsize::new(0);
    let dropped = AtomicUsize::new(0);
    let per_scene: Vec<Vec<SceneRecord>> = files
        .par_iter()
        .map(|path| {
            let file = read_scene_file(path)?;
            if let Some(img) = file.images.iter().find(|i| !dir.join(i).is_file()) {
                log::warn!(
                    "skipping scene {}: missing image {}",
                    file.id,
                    dir.join(img).display()
                );
                missing.fetch_add(1, Ordering::Relaxed);
                return Ok(Vec::new());
            }
            let record = scene_to_record(&file, desc.kind, path)?;
            let (records, n_dropped) = expand_scene(&record);
            dropped.fetch_add(n_dropped, Ordering::Relaxed);
            Ok(records)
        })
        .collect::<Result<_, IngestError>>()?;

    let mut records: Vec<SceneRecord> = per_scene.into_iter().flatten().collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    for r in &records {
        r.validate().map_err(|source| IngestError::Invalid {
            id: r.id.clone(),
            source,
        })?;
    }
    let stats = IngestStats {
        scenes: files.len(),
        skipped_missing_image: missing.into_inner(),
        empty_tiles_dropped: dropped.into_inner(),
        records: records.len(),
    };
    Ok(IngestOutput {
        records,
        passthrough: Vec::new(),
        stats,
    })
}

fn ingest_single(desc: &SourceDescriptor, dir: &Path) -> Result<IngestOutput, IngestError> {
    let mut examples = read_single_corpus(&dir.join("conversations.jsonl"))?;
    examples.sort_by(|a, b| a.id.cmp(&b.id));
    let mut records = Vec::with_capacity(examples.len());
    let mut kept = Vec::with_capacity(examples.len());
    let mut missing = 0;
    for ex in examples {
        if !dir.join(&ex.image).is_file() {
            log::warn!("skipping {}: missing image {}", ex.id, ex.image);
            missing += 1;
            continue;
        }
        records.push(SceneRecord {
            id: ex.id.clone(),
            source: desc.kind,
            images: vec![ImageRef::new(ex.image.clone())],
            order: vec![0],
            width: FRAME_SIZE,
            height: FRAME_SIZE,
            labels: Vec::new(),
            sequence_class: None,
            sensor: None,
            resolution: None,
            disaster_type: None,
            transforms: Vec::new(),
        });
        kept.push(ex);
    }
    let stats = IngestStats {
        scenes: records.len() + missing,
        skipped_missing_image: missing,
        empty_tiles_dropped: 0,
        records: records.len(),
    };
    Ok(IngestOutput {
        records,
        passthrough: kept,
        stats,
    })
}

fn read_scene_file(path: &Path) -> Result<SceneFile, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| IngestError::Parse {
        path: path.to_owned(),
        source,
    })
}

/// Converts one parsed scene file into a source-frame record. Labels are
/// sorted by ascending area (stable) so that rasterizing in order lets
/// small objects survive overlaps.
pub fn scene_to_record(
    file: &SceneFile,
    kind: SourceKind,
    path: &Path,
) -> Result<SceneRecord, IngestError> {
    let label_err = |index: usize, message: String| IngestError::Label {
        path: path.to_owned(),
        index,
        message,
    };
    let n = file.images.len();
    if n == 0 {
        return Err(label_err(0, "scene lists no images".into()));
    }
    let mut labels = Vec::with_capacity(file.labels.len());
    for (i, entry) in file.labels.iter().enumerate() {
        let ring = |r: &Vec<[f64; 2]>| r.iter().map(|&[x, y]| Point::new(x, y)).collect();
        let polygon = Polygon::new(ring(&entry.polygon), entry.holes.iter().map(ring).collect())
            .map_err(|e| label_err(i, e.to_string()))?;
        if let Some(c) = &entry.classes_per_timestep {
            if c.len() != n {
                return Err(label_err(
                    i,
                    format!("{} timestep classes for {n} images", c.len()),
                ));
            }
        }
        if entry.classes_per_timestep.is_none()
            && entry.sequence_class.is_none()
            && entry.change.is_none()
        {
            return Err(label_err(i, "no label field present".into()));
        }
        let (lo, hi) = polygon.bounds();
        if lo.x < 0.0 || lo.y < 0.0 || hi.x > f64::from(file.width) || hi.y > f64::from(file.height)
        {
            return Err(label_err(i, "polygon exceeds the image extent".into()));
        }
        labels.push(GeoLabel {
            polygon,
            classes_per_timestep: entry.classes_per_timestep.clone(),
            sequence_class: entry.sequence_class.clone(),
            change: entry.change,
            edge_sliver: false,
        });
    }
    labels.sort_by(|a, b| a.polygon.area().total_cmp(&b.polygon.area()));

    let mut record = SceneRecord {
        id: file.id.clone(),
        source: kind,
        images: file.images.iter().map(ImageRef::new).collect(),
        order: (0..n as u32).collect(),
        width: file.width,
        height: file.height,
        labels,
        sequence_class: file.sequence_class.clone(),
        sensor: file.sensor.clone(),
        resolution: file.resolution,
        disaster_type: file.disaster_type.clone(),
        transforms: Vec::new(),
    };
    if let Some(crop) = file.crop_box {
        let crop = crop
            .clip_to(file.width, file.height)
            .ok_or_else(|| label_err(0, "crop box lies outside the image".into()))?;
        let t = crate::TileTransform::crop(
            file.width,
            file.height,
            crop.x_min,
            crop.y_min,
            crop.width(),
            crop.height(),
        );
        record = SceneRecord {
            images: record.images.iter().map(|i| i.cropped(crop)).collect(),
            width: crop.width(),
            height: crop.height(),
            transforms: vec![t; n],
            labels: Vec::new(),
            ..record
        };
    }
    Ok(record)
}

/// Tiles (where the source calls for it) and normalizes one source-frame
/// record. Returns the records and the number of empty tiles dropped.
pub fn expand_scene(record: &SceneRecord) -> (Vec<SceneRecord>, usize) {
    if !record.source.is_tiled() {
        return (vec![normalize_frame(record, FRAME_SIZE)], 0);
    }
    let mut dropped = 0;
    let out = tile(record, TILE_SIZE)
        .into_iter()
        .filter(|t| {
            let keep = !(record.source.drops_empty_tiles() && t.labels.is_empty());
            dropped += usize::from(!keep);
            keep
        })
        .map(|t| normalize_frame(&t, FRAME_SIZE))
        .collect();
    (out, dropped)
}
