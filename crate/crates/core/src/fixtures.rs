//! Synthetic source trees in the interchange layout, for tests and demos.
//!
//! Buildings are axis-aligned rectangles and L-shapes with quarter-pixel
//! coordinates, one per cell of an 80 px grid so they never overlap but
//! do straddle 256 px tile seams. Every scene gets a truth sidecar at
//! `<split>/truth/<id>.json`; the root gets `fixture_stats.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::BBox;
use crate::ingest::{ChangeKind, LabelEntry, Resolution, SceneFile, SourceDescriptor, SourceKind};
use crate::rng::{record_rng, RecordRng};
use crate::taskgen::vocab::{DISASTERS, FMOW_CLASSES, QFABRIC_CHANGE, QFABRIC_STATUS};

/// Environment variable naming a directory for cached fixture trees.
pub const FIXTURE_DIR_ENV: &str = "EOI_FIXTURE_DIR";

/// Raw damage labels as they appear upstream.
pub const RAW_DAMAGE: [&str; 4] = ["no-damage", "minor-damage", "major-damage", "destroyed"];

const CELL: u32 = 80;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("{path}: {kind}")]
    Io {
        path: PathBuf,
        #[source]
        kind: std::io::Error,
    },
    #[error("png encoding: {0}")]
    Png(#[from] png::EncodingError),
    #[error("invalid fixture configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub seed: u64,
    /// Scenes per temporal source.
    pub scenes: usize,
    /// Examples in the single-image corpus.
    pub single_examples: usize,
    pub split: String,
    pub damage_size: u32,
    pub building_change_size: u32,
    pub urban_size: u32,
    pub urban_steps: usize,
    /// Longest scene-classification sequence; longer than the image cap
    /// so subsampling is exercised.
    pub max_sequence: usize,
    /// Probability that a grid cell holds a building.
    pub building_prob: f64,
    /// Sampling weights of the raw damage labels, in `RAW_DAMAGE` order.
    pub damage_weights: [f64; 4],
    /// Share of damage labels left unclassified.
    pub unclassified_prob: f64,
}

impl FixtureConfig {
    pub fn new(seed: u64, scenes: usize) -> Self {
        Self {
            seed,
            scenes,
            single_examples: scenes,
            split: "train".into(),
            damage_size: 1024,
            building_change_size: 1024,
            urban_size: 768,
            urban_steps: 5,
            max_sequence: 12,
            building_prob: 0.3,
            damage_weights: [0.55, 0.15, 0.15, 0.15],
            unclassified_prob: 0.02,
        }
    }

    pub fn validate(&self) -> Result<(), FixtureError> {
        let bad = |m: &str| Err(FixtureError::Config(m.to_owned()));
        if !(0.0..=1.0).contains(&self.building_prob)
            || !(0.0..=1.0).contains(&self.unclassified_prob)
        {
            return bad("probabilities must lie in [0, 1]");
        }
        if self
            .damage_weights
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0)
            || self.damage_weights.iter().sum::<f64>() <= 0.0
        {
            return bad("damage weights must be non-negative with a positive sum");
        }
        if self.urban_steps == 0 || self.max_sequence == 0 {
            return bad("sequence lengths must be positive");
        }
        if [self.damage_size, self.building_change_size, self.urban_size]
            .iter()
            .any(|&s| s < CELL)
        {
            return bad("scene sizes must be at least 80 px");
        }
        Ok(())
    }
}

/// Per-source label counts written to `fixture_stats.json`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceStats {
    pub scenes: usize,
    pub labels: usize,
    pub classes: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureSummary {
    pub seed: u64,
    pub split: String,
    pub sources: BTreeMap<SourceKind, SourceStats>,
}

/// Ground truth kept next to each scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub id: String,
    pub labels: usize,
    /// Label boxes in scene pixels, in label-file order.
    pub boxes: Vec<BBox>,
    pub classes: Vec<Option<String>>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FixtureError + '_ {
    move |kind| FixtureError::Io {
        path: path.to_owned(),
        kind,
    }
}

/// One descriptor per source under `root`.
pub fn source_descriptors(root: &Path, split: &str) -> Vec<SourceDescriptor> {
    SourceKind::ALL
        .into_iter()
        .map(|k| SourceDescriptor::new(k, root.join(k.as_str()), split))
        .collect()
}

/// Writes a full fixture tree under `root`, one directory per source.
pub fn generate(root: &Path, cfg: &FixtureConfig) -> Result<FixtureSummary, FixtureError> {
    cfg.validate()?;
    let mut summary = FixtureSummary {
        seed: cfg.seed,
        split: cfg.split.clone(),
        sources: BTreeMap::new(),
    };
    for kind in SourceKind::ALL {
        let dir = root.join(kind.as_str()).join(&cfg.split);
        let stats = if kind == SourceKind::SingleImageCorpus {
            write_single(&dir, cfg)?
        } else {
            let mut stats = SourceStats::default();
            for i in 0..cfg.scenes {
                let mut rng = record_rng(cfg.seed, &format!("fixture:{kind}:{i}"));
                let scene = make_scene(kind, i, cfg, &mut rng);
                write_scene(&dir, &scene, &mut stats)?;
            }
            stats
        };
        summary.sources.insert(kind, stats);
    }
    let path = root.join("fixture_stats.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(summary)
}

fn write_png(path: &Path) -> Result<(), FixtureError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), 4, 4);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header()?;
    w.write_image_data(&[128; 16])?;
    w.finish()?;
    Ok(())
}

fn write_scene(dir: &Path, scene: &SceneFile, stats: &mut SourceStats) -> Result<(), FixtureError> {
    for sub in ["scenes", "images", "truth"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(io_err(&p))?;
    }
    for img in &scene.images {
        write_png(&dir.join(img))?;
    }
    let path = dir.join("scenes").join(format!("{}.json", scene.id));
    fs::write(&path, scene.to_json()).map_err(io_err(&path))?;

    let classes: Vec<Option<String>> = scene
        .labels
        .iter()
        .map(|l| {
            l.sequence_class
                .clone()
                .or_else(|| l.change.map(|c| format!("{c:?}").to_lowercase()))
                .or_else(|| {
                    l.classes_per_timestep
                        .as_ref()
                        .and_then(|c| c.last().cloned())
                })
        })
        .collect();
    let boxes = scene.labels.iter().map(|l| entry_box(&l.polygon)).collect();
    let truth = TruthSidecar {
        id: scene.id.clone(),
        labels: scene.labels.len(),
        boxes,
        classes: classes.clone(),
    };
    let path = dir.join("truth").join(format!("{}.json", scene.id));
    fs::write(
        &path,
        serde_json::to_string(&truth).expect("truth serializes"),
    )
    .map_err(io_err(&path))?;

    stats.scenes += 1;
    stats.labels += scene.labels.len();
    let scene_class = scene.sequence_class.iter().cloned();
    for c in classes.into_iter().flatten().chain(scene_class) {
        *stats.classes.entry(c).or_default() += 1;
    }
    Ok(())
}

fn entry_box(ring: &[[f64; 2]]) -> BBox {
    let xs = ring.iter().map(|p| p[0]);
    let ys = ring.iter().map(|p| p[1]);
    BBox {
        x_min: xs.clone().fold(f64::INFINITY, f64::min).floor() as u32,
        y_min: ys.clone().fold(f64::INFINITY, f64::min).floor() as u32,
        x_max: xs.fold(0.0, f64::max).ceil() as u32,
        y_max: ys.fold(0.0, f64::max).ceil() as u32,
    }
}

fn quarter(rng: &mut RecordRng) -> f64 {
    f64::from(rng.random_range(0..4u8)) * 0.25
}

/// One building footprint inside the grid cell at `(cx, cy)`.
fn building(cx: u32, cy: u32, width: u32, height: u32, rng: &mut RecordRng) -> Vec<[f64; 2]> {
    let x_end = (cx + CELL).min(width);
    let y_end = (cy + CELL).min(height);
    let room_x = x_end - cx;
    let room_y = y_end - cy;
    let bw = rng.random_range(12.min(room_x - 4)..=(room_x - 4).min(64));
    let bh = rng.random_range(12.min(room_y - 4)..=(room_y - 4).min(64));
    let x0 = f64::from(cx + rng.random_range(1..=room_x - bw - 2)) + quarter(rng);
    let y0 = f64::from(cy + rng.random_range(1..=room_y - bh - 2)) + quarter(rng);
    let (x1, y1) = (x0 + f64::from(bw), y0 + f64::from(bh));
    if bw >= 20 && bh >= 20 && rng.random_bool(0.3) {
        // L-shape: cut a corner notch out of the rectangle.
        let nx = x0 + f64::from(rng.random_range(8..bw - 8)) + 0.5;
        let ny = y0 + f64::from(rng.random_range(8..bh - 8)) + 0.5;
        vec![[x0, y0], [nx, y0], [nx, ny], [x1, ny], [x1, y1], [x0, y1]]
    } else {
        vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
    }
}

fn footprints(width: u32, height: u32, prob: f64, rng: &mut RecordRng) -> Vec<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    for cy in (0..height).step_by(CELL as usize) {
        for cx in (0..width).step_by(CELL as usize) {
            if width - cx < 40 || height - cy < 40 {
                continue;
            }
            if rng.random_bool(prob) {
                out.push(building(cx, cy, width, height, rng));
            }
        }
    }
    out
}

fn weighted(weights: &[f64], rng: &mut RecordRng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

fn image_paths(id: &str, n: usize) -> Vec<String> {
    (0..n).map(|t| format!("images/{id}_{t}.png")).collect()
}

fn label(polygon: Vec<[f64; 2]>) -> LabelEntry {
    LabelEntry {
        polygon,
        holes: Vec::new(),
        classes_per_timestep: None,
        sequence_class: None,
        change: None,
    }
}

fn make_scene(kind: SourceKind, i: usize, cfg: &FixtureConfig, rng: &mut RecordRng) -> SceneFile {
    let id = format!("{}-{i:04}", kind.as_str());
    let base = SceneFile {
        id: id.clone(),
        images: Vec::new(),
        width: 0,
        height: 0,
        sensor: None,
        resolution: None,
        disaster_type: None,
        sequence_class: None,
        crop_box: None,
        labels: Vec::new(),
    };
    match kind {
        SourceKind::Xbd => {
            let s = cfg.damage_size;
            let labels = footprints(s, s, cfg.building_prob, rng)
                .into_iter()
                .map(|p| {
                    let class = if rng.random_bool(cfg.unclassified_prob) {
                        "un-classified"
                    } else {
                        RAW_DAMAGE[weighted(&cfg.damage_weights, rng)]
                    };
                    LabelEntry {
                        sequence_class: Some(class.into()),
                        ..label(p)
                    }
                })
                .collect();
            SceneFile {
                images: image_paths(&id, 2),
                width: s,
                height: s,
                sensor: Some("WorldView-2".into()),
                resolution: Some(Resolution::High),
                disaster_type: Some(DISASTERS[rng.random_range(0..DISASTERS.len())].into()),
                labels,
                ..base
            }
        }
        SourceKind::S2looking => {
            let s = cfg.building_change_size;
            let prob = if rng.random_bool(0.1) {
                0.0
            } else {
                cfg.building_prob
            };
            let labels = footprints(s, s, prob, rng)
                .into_iter()
                .map(|p| LabelEntry {
                    change: Some(if rng.random_bool(0.5) {
                        ChangeKind::Constructed
                    } else {
                        ChangeKind::Demolished
                    }),
                    ..label(p)
                })
                .collect();
            const SENSORS: [&str; 3] = ["GaoFen", "SuperView", "BeiJing-2"];
            SceneFile {
                images: image_paths(&id, 2),
                width: s,
                height: s,
                sensor: Some(SENSORS[rng.random_range(0..3)].into()),
                resolution: Some(Resolution::High),
                labels,
                ..base
            }
        }
        SourceKind::Qfabric => {
            let s = cfg.urban_size;
            let n = cfg.urban_steps;
            let labels = footprints(s, s, cfg.building_prob / 2.0, rng)
                .into_iter()
                .map(|p| {
                    // Status only moves forward through the stages.
                    let mut stage = rng.random_range(0..QFABRIC_STATUS.len());
                    let mut hist = Vec::with_capacity(n);
                    for _ in 0..n {
                        hist.push(QFABRIC_STATUS[stage].to_owned());
                        if stage + 1 < QFABRIC_STATUS.len() && rng.random_bool(0.4) {
                            stage += 1;
                        }
                    }
                    let change = if hist.first() == hist.last() {
                        QFABRIC_CHANGE[0]
                    } else {
                        QFABRIC_CHANGE[rng.random_range(1..QFABRIC_CHANGE.len())]
                    };
                    LabelEntry {
                        classes_per_timestep: Some(hist),
                        sequence_class: Some(change.into()),
                        ..label(p)
                    }
                })
                .collect();
            SceneFile {
                images: image_paths(&id, n),
                width: s,
                height: s,
                sensor: Some("WorldView-3".into()),
                resolution: Some(Resolution::High),
                labels,
                ..base
            }
        }
        SourceKind::FmowRgb | SourceKind::FmowSentinel => {
            // Sentinel scenes reuse the RGB scene ids so they can pair.
            let id = format!("fmow-{i:04}");
            let sentinel = kind == SourceKind::FmowSentinel;
            let (lo, hi) = if sentinel { (64, 128) } else { (300, 800) };
            let w = rng.random_range(lo..=hi);
            let h = rng.random_range(lo..=hi);
            let cw = rng.random_range(w / 4..=w / 2);
            let ch = rng.random_range(h / 4..=h / 2);
            let x0 = rng.random_range(0..=w - cw);
            let y0 = rng.random_range(0..=h - ch);
            let class = FMOW_CLASSES[rng.random_range(0..FMOW_CLASSES.len())]
                .to_lowercase()
                .replace(' ', "_");
            let n = rng.random_range(1..=cfg.max_sequence);
            SceneFile {
                id: id.clone(),
                images: image_paths(&id, n),
                width: w,
                height: h,
                sensor: Some(
                    if sentinel {
                        "Sentinel-2"
                    } else {
                        "WorldView-3"
                    }
                    .into(),
                ),
                resolution: Some(if sentinel {
                    Resolution::Low
                } else {
                    Resolution::High
                }),
                sequence_class: Some(class),
                crop_box: Some(BBox {
                    x_min: x0,
                    y_min: y0,
                    x_max: x0 + cw,
                    y_max: y0 + ch,
                }),
                ..base
            }
        }
        SourceKind::SingleImageCorpus => unreachable!("written by write_single"),
    }
}

fn write_single(dir: &Path, cfg: &FixtureConfig) -> Result<SourceStats, FixtureError> {
    let images = dir.join("images");
    fs::create_dir_all(&images).map_err(io_err(&images))?;
    let mut stats = SourceStats::default();
    let mut lines = String::new();
    for i in 0..cfg.single_examples {
        let mut rng = record_rng(cfg.seed, &format!("fixture:single:{i}"));
        let id = format!("single-{i:04}");
        let image = format!("images/{id}.png");
        write_png(&dir.join(&image))?;
        let x = rng.random_range(0..50);
        let y = rng.random_range(0..50);
        let (task, human, gpt) = match rng.random_range(0..3) {
            0 => (
                "grounding",
                "[grounding] Describe the image in detail.".to_owned(),
                format!(
                    "There is a building {{<{x}><{y}><{}><{}>|<0>}} near a road.",
                    x + 20,
                    y + 15
                ),
            ),
            1 => (
                "refer",
                "[refer] Where is the storage tank?".to_owned(),
                format!("{{<{x}><{y}><{}><{}>|<0>}}", x + 10, y + 10),
            ),
            _ => (
                "vqa",
                "Is there a runway in the image? Answer with yes or no.".to_owned(),
                if rng.random_bool(0.5) { "Yes" } else { "No" }.to_owned(),
            ),
        };
        let ex = serde_json::json!({
            "id": id,
            "image": image,
            "conversations": [
                {"from": "human", "value": format!("<image>\n{human}")},
                {"from": "gpt", "value": gpt},
            ],
        });
        lines.push_str(&ex.to_string());
        lines.push('\n');
        stats.scenes += 1;
        *stats.classes.entry(task.into()).or_default() += 1;
    }
    let path = dir.join("conversations.jsonl");
    fs::write(&path, lines).map_err(io_err(&path))?;
    Ok(stats)
}
