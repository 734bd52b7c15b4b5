//! Adapters that turn per-image predictions from a single-image model into
//! temporal predictions: majority voting, detection differencing, the
//! constructed/destructed split and change QA from detections.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{mask_diff, rasterize_boxes, BBox, GeomError, Mask, OverlapMasking};
use crate::ingest::SourceKind;
use crate::respond::{canonicalize, parse, Polarity, Prediction};
use crate::taskgen::{ConversationRecord, Target, TaskTag};

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("majority vote over no predictions")]
    EmptyVote,
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("{id}: image index {index} outside a sequence of {images}")]
    ImageIndex {
        id: String,
        index: u32,
        images: usize,
    },
    #[error("{id}: image index {index} predicted twice")]
    DuplicateImage { id: String, index: u32 },
}

/// One line of a per-image prediction file. `image_index` is 0-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerImagePrediction {
    pub id: String,
    pub image_index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boxes: Option<Vec<BBox>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
}

/// Knobs shared by the adapters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdapterConfig {
    /// Two boxes from different images overlap when they intersect with
    /// IoU strictly above this value.
    pub min_iou: f64,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        Self { min_iou: 0.0 }
    }
}

/// Modal value; ties go to the value whose modal count is reached at the
/// earliest index.
pub fn majority_vote<T: PartialEq + Clone>(preds: &[T]) -> Result<T, BaselineError> {
    let mut best: Option<(usize, usize)> = None;
    for (i, p) in preds.iter().enumerate() {
        if preds[..i].contains(p) {
            continue;
        }
        let n = preds.iter().filter(|q| *q == p).count();
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((i, n));
        }
    }
    best.map(|(i, _)| preds[i].clone())
        .ok_or(BaselineError::EmptyVote)
}

fn overlaps(a: &BBox, b: &BBox, min_iou: f64) -> bool {
    a.intersects(b) && a.iou::<f64>(b) > min_iou
}

fn clipped(boxes: &[BBox], width: u32, height: u32) -> Vec<BBox> {
    boxes
        .iter()
        .filter_map(|b| b.clip_to(width, height))
        .collect()
}

/// Change mask from two detection sets: rasterize each side, take the
/// symmetric difference and blank the union of every overlapping pair.
pub fn detection_diff(
    t1: &[BBox],
    t2: &[BBox],
    width: u32,
    height: u32,
    min_iou: f64,
) -> Result<Mask, BaselineError> {
    let (t1, t2) = (clipped(t1, width, height), clipped(t2, width, height));
    let a = rasterize_boxes(&t1, width, height)?;
    let b = rasterize_boxes(&t2, width, height)?;
    Ok(mask_diff(
        &a,
        &b,
        OverlapMasking::Boxes {
            first: &t1,
            second: &t2,
            min_iou,
        },
    )?)
}

/// `(destructed, constructed)`: pixels covered only in the first image
/// and pixels covered only in the second.
pub fn constructed_destructed_split(
    t1: &[BBox],
    t2: &[BBox],
    width: u32,
    height: u32,
) -> Result<(Mask, Mask), BaselineError> {
    let a = rasterize_boxes(&clipped(t1, width, height), width, height)?;
    let b = rasterize_boxes(&clipped(t2, width, height), width, height)?;
    let only = |x: &Mask, y: &Mask| -> Result<Mask, GeomError> {
        let data = x
            .as_slice()
            .iter()
            .zip(y.as_slice())
            .map(|(&p, &q)| u8::from(p != 0 && q == 0))
            .collect();
        Mask::from_vec(width, height, 2, data)
    };
    Ok((only(&a, &b)?, only(&b, &a)?))
}

/// Boxes on each side that overlap no box on the other side. With a
/// region, boxes are first intersected with it and dropped when outside.
pub fn unmatched_boxes(
    t1: &[BBox],
    t2: &[BBox],
    region: Option<BBox>,
    min_iou: f64,
) -> (Vec<BBox>, Vec<BBox>) {
    let restrict = |bs: &[BBox]| -> Vec<BBox> {
        match region {
            Some(r) => bs.iter().filter_map(|b| b.intersection(&r)).collect(),
            None => bs.to_vec(),
        }
    };
    let (a, b) = (restrict(t1), restrict(t2));
    let lonely = |xs: &[BBox], ys: &[BBox]| -> Vec<BBox> {
        xs.iter()
            .filter(|x| !ys.iter().any(|y| overlaps(x, y, min_iou)))
            .copied()
            .collect()
    };
    (lonely(&a, &b), lonely(&b, &a))
}

/// Yes when some box on either side overlaps nothing on the other side.
pub fn change_qa_from_detections(
    t1: &[BBox],
    t2: &[BBox],
    region: Option<BBox>,
    min_iou: f64,
) -> bool {
    let (a, b) = unmatched_boxes(t1, t2, region, min_iou);
    !a.is_empty() || !b.is_empty()
}

fn box_text(boxes: &[BBox]) -> String {
    if boxes.is_empty() {
        return "None.".to_owned();
    }
    let list: Vec<String> = boxes.iter().map(BBox::to_string).collect();
    format!("{}.", list.join(", "))
}

fn yes_no(b: bool) -> String {
    if b { "Yes." } else { "No." }.to_owned()
}

/// Per-image predictions for one record, indexed by image.
type Slots<'a> = Vec<Option<&'a PerImagePrediction>>;

fn boxes_at(slots: &Slots<'_>, i: usize) -> Vec<BBox> {
    slots
        .get(i)
        .copied()
        .flatten()
        .and_then(|p| p.boxes.clone())
        .unwrap_or_default()
}

fn answer_at(slots: &Slots<'_>, i: usize) -> Option<String> {
    let p = slots.get(i).copied().flatten()?;
    p.answer.clone().or_else(|| p.class.clone())
}

fn mask_prediction(id: &str, text: String, mask: &Mask) -> Prediction {
    Prediction {
        id: id.to_owned(),
        response_text: text,
        change_mask: Some(mask.to_rle()),
    }
}

/// Per-image class votes, canonicalized against the record's options when
/// it has any.
fn class_votes(record: &ConversationRecord, slots: &Slots<'_>) -> Vec<String> {
    slots
        .iter()
        .flatten()
        .filter_map(|p| p.class.as_deref().or(p.answer.as_deref()))
        .filter_map(|c| {
            if record.meta.options.is_empty() {
                Some(c.to_owned())
            } else {
                canonicalize(c, &record.meta.options).map(str::to_owned)
            }
        })
        .collect()
}

/// Temporal prediction for one record from its per-image predictions.
/// `None` when the predictions carry nothing the record's task can use.
///
/// Sequence classification votes over images. Damage localization reads
/// the first image; other damage questions read the last image. Building
/// change tasks compare the detections of the two images. Per-image
/// polarity becomes the image list for image-reference answers.
pub fn adapt_record(
    record: &ConversationRecord,
    preds: &[PerImagePrediction],
    cfg: &AdapterConfig,
) -> Result<Option<Prediction>, BaselineError> {
    let n = record.images.len();
    let mut slots: Slots<'_> = vec![None; n];
    for p in preds {
        let i = p.image_index as usize;
        if i >= n {
            return Err(BaselineError::ImageIndex {
                id: record.id.clone(),
                index: p.image_index,
                images: n,
            });
        }
        if slots[i].replace(p).is_some() {
            return Err(BaselineError::DuplicateImage {
                id: record.id.clone(),
                index: p.image_index,
            });
        }
    }
    let id = record.id.as_str();
    let (w, h) = record
        .meta
        .eval
        .as_ref()
        .map_or((224, 224), |e| (e.width, e.height));
    let last = n.saturating_sub(1);
    let target = record.meta.target.as_ref();
    let out = match (record.meta.source, record.task) {
        (SourceKind::S2looking, TaskTag::CdDet | TaskTag::Sre) => {
            let (t1, t2) = (boxes_at(&slots, 0), boxes_at(&slots, last));
            let mask = match record.meta.variant.as_str() {
                "constructed" => constructed_destructed_split(&t1, &t2, w, h)?.1,
                "destructed" => constructed_destructed_split(&t1, &t2, w, h)?.0,
                _ => detection_diff(&t1, &t2, w, h, cfg.min_iou)?,
            };
            let (a, b) = unmatched_boxes(&t1, &t2, None, cfg.min_iou);
            let mut changed = a;
            changed.extend(b);
            Some(mask_prediction(id, box_text(&changed), &mask))
        }
        (SourceKind::S2looking, TaskTag::Qa | TaskTag::Rqa) => {
            let (t1, t2) = (boxes_at(&slots, 0), boxes_at(&slots, last));
            let region = record.meta.query_box;
            Some(Prediction::text(
                id,
                match target {
                    Some(Target::Count(_)) => {
                        let (a, b) = unmatched_boxes(&t1, &t2, region, cfg.min_iou);
                        format!("{}.", a.len() + b.len())
                    }
                    _ => yes_no(change_qa_from_detections(&t1, &t2, region, cfg.min_iou)),
                },
            ))
        }
        (SourceKind::Xbd, TaskTag::CdLoc) => slots
            .first()
            .copied()
            .flatten()
            .and_then(|p| p.boxes.as_deref())
            .map(|b| Prediction::text(id, box_text(b))),
        (SourceKind::Xbd, TaskTag::Sre) => slots
            .get(last)
            .copied()
            .flatten()
            .and_then(|p| p.boxes.as_deref())
            .map(|b| Prediction::text(id, box_text(b))),
        (SourceKind::Xbd, _) => answer_at(&slots, last).map(|a| Prediction::text(id, a)),
        _ => match target {
            Some(Target::Class(_)) => {
                let votes = class_votes(record, &slots);
                match majority_vote(&votes) {
                    Ok(c) => Some(Prediction::text(id, format!("{c}."))),
                    Err(_) => None,
                }
            }
            Some(Target::ImageRefs(_)) => {
                let refs: Vec<String> = slots
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| {
                        p.and_then(|p| p.answer.as_deref()).is_some_and(|a| {
                            parse(a, &[] as &[&str]).polarity == Some(Polarity::Yes)
                        })
                    })
                    .map(|(i, _)| format!("Image {}", i + 1))
                    .collect();
                if slots.iter().all(Option::is_none) {
                    None
                } else if refs.is_empty() {
                    Some(Prediction::text(id, "None."))
                } else {
                    Some(Prediction::text(id, refs.join(", ")))
                }
            }
            Some(_) => {
                let votes: Vec<String> = slots
                    .iter()
                    .flatten()
                    .filter_map(|p| p.answer.clone())
                    .collect();
                majority_vote(&votes).ok().map(|a| Prediction::text(id, a))
            }
            None => answer_at(&slots, last).map(|a| Prediction::text(id, a)),
        },
    };
    Ok(out)
}

/// Adapts every record that has per-image predictions, in record order.
/// Predictions whose id matches no record are ignored.
pub fn adapt_all(
    records: &[ConversationRecord],
    preds: &[PerImagePrediction],
    cfg: &AdapterConfig,
) -> Result<Vec<Prediction>, BaselineError> {
    let mut by_id: BTreeMap<&str, Vec<PerImagePrediction>> = BTreeMap::new();
    for p in preds {
        by_id.entry(p.id.as_str()).or_default().push(p.clone());
    }
    let mut out = Vec::new();
    for r in records {
        if let Some(ps) = by_id.get(r.id.as_str()) {
            if let Some(p) = adapt_record(r, ps, cfg)? {
                out.push(p);
            }
        }
    }
    Ok(out)
}
