//! Scoring protocols: per-pixel F1, class-weighted F1, accuracy,
//! grounding accuracy at an IoU threshold, and the urban-change
//! 2-image / 5-image protocol. Aggregation is a fold over count
//! structures, so any split of the examples gives the same result.

mod confusion;
mod qfabric;
mod report;

pub use confusion::{ConfusionMatrix, PixelCounts};
pub use qfabric::{qfabric_protocol, QFabricAccumulator, QFabricExample, QFabricWindow};
pub use report::{render_table, sort_reports, MetricName, MetricReport, TaskCategory};

use num_traits::Float;
use thiserror::Error;

use crate::geom::{BBox, GeomError, Mask};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("length mismatch: {preds} predictions vs {gts} ground truths")]
    LengthMismatch { preds: usize, gts: usize },
    #[error("nothing to score")]
    Empty,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: u8, classes: u8 },
    #[error("class count mismatch: {0} vs {1}")]
    ClassCountMismatch(u8, u8),
    #[error("window must be 2 or 5, got {0}")]
    Window(u8),
    #[error("timestep {step} out of range for a {window}-image window")]
    Timestep { step: usize, window: u8 },
    #[error("metric value {0} outside [0, 1]")]
    OutOfBounds(f64),
}

/// Per-pixel F1 of two binary masks, with the both-empty pair scoring 1.
pub fn pixel_f1<T: Float>(pred: &Mask, gt: &Mask) -> Result<T, MetricError> {
    Ok(PixelCounts::from_masks(pred, gt)?.f1_or_one())
}

/// Micro-averaged pixel F1 over many pairs: counts are summed before the
/// ratio. Both-empty pairs add nothing; an all-empty dataset scores 1.
pub fn pixel_f1_micro<'a, T: Float>(
    pairs: impl IntoIterator<Item = (&'a Mask, &'a Mask)>,
) -> Result<T, MetricError> {
    let mut total = PixelCounts::default();
    for (p, g) in pairs {
        total += PixelCounts::from_masks(p, g)?;
    }
    Ok(total.f1_or_one())
}

/// Class-weighted F1 over foreground classes `1..classes`, weighted by
/// ground-truth pixel frequency. `Ok(None)` marks an unscorable example
/// (all-background ground truth).
pub fn class_weighted_f1<T: Float>(
    pred: &Mask,
    gt: &Mask,
    classes: u8,
) -> Result<Option<T>, MetricError> {
    Ok(ConfusionMatrix::from_masks(pred, gt, classes)?.weighted_f1())
}

/// Exact-match fraction. Callers canonicalize labels first.
pub fn accuracy<T: Float, L: PartialEq>(preds: &[L], gts: &[L]) -> Result<T, MetricError> {
    if preds.len() != gts.len() {
        return Err(MetricError::LengthMismatch {
            preds: preds.len(),
            gts: gts.len(),
        });
    }
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    let hits = preds.iter().zip(gts).filter(|(p, g)| p == g).count();
    Ok(T::from(hits).unwrap() / T::from(preds.len()).unwrap())
}

/// Fraction of queries whose predicted box reaches `threshold` IoU with
/// the ground truth. A missing prediction is a miss.
pub fn acc_at_iou<T: Float>(
    preds: &[Option<BBox>],
    gts: &[BBox],
    threshold: T,
) -> Result<T, MetricError> {
    if preds.len() != gts.len() {
        return Err(MetricError::LengthMismatch {
            preds: preds.len(),
            gts: gts.len(),
        });
    }
    if gts.is_empty() {
        return Err(MetricError::Empty);
    }
    let hits = preds
        .iter()
        .zip(gts)
        .filter(|(p, g)| p.is_some_and(|p| p.iou::<T>(g) >= threshold))
        .count();
    Ok(T::from(hits).unwrap() / T::from(gts.len()).unwrap())
}
