use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{ConfusionMatrix, MetricError};
use crate::geom::{fill_polygon, Mask, Polygon};

/// Number of images the urban-change protocol looks at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum QFabricWindow {
    /// Sequence-level change type over the first and last image.
    Two,
    /// Per-image change status over a five-image sequence.
    Five,
}

impl QFabricWindow {
    pub fn steps(self) -> usize {
        match self {
            QFabricWindow::Two => 1,
            QFabricWindow::Five => 5,
        }
    }
}

impl TryFrom<u8> for QFabricWindow {
    type Error = MetricError;
    fn try_from(v: u8) -> Result<Self, MetricError> {
        match v {
            2 => Ok(QFabricWindow::Two),
            5 => Ok(QFabricWindow::Five),
            other => Err(MetricError::Window(other)),
        }
    }
}

impl From<QFabricWindow> for u8 {
    fn from(w: QFabricWindow) -> u8 {
        match w {
            QFabricWindow::Two => 2,
            QFabricWindow::Five => 5,
        }
    }
}

/// One classified polygon. For the 2-image window `gt`/`pred` hold a
/// single sequence-level label; for the 5-image window one label per
/// timestep. Labels are class indices (0 = background); a missing
/// prediction leaves the polygon's pixels as background.
#[derive(Clone, Debug)]
pub struct QFabricExample<T> {
    pub polygon: Polygon<T>,
    pub width: u32,
    pub height: u32,
    pub gt: Vec<u8>,
    pub pred: Vec<Option<u8>>,
}

/// Per-timestep confusion matrices, weighted over the whole split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QFabricAccumulator {
    window: QFabricWindow,
    steps: Vec<ConfusionMatrix>,
}

impl QFabricAccumulator {
    pub fn new(window: QFabricWindow, classes: u8) -> Self {
        Self {
            window,
            steps: vec![ConfusionMatrix::new(classes); window.steps()],
        }
    }

    pub fn window(&self) -> QFabricWindow {
        self.window
    }

    pub fn steps(&self) -> &[ConfusionMatrix] {
        &self.steps
    }

    /// Adds one polygon's pixels at `step`: the ground-truth mask holds
    /// `gt` inside the polygon, the predicted mask holds `pred`.
    pub fn add_polygon<T: Float>(
        &mut self,
        polygon: &Polygon<T>,
        width: u32,
        height: u32,
        step: usize,
        gt: u8,
        pred: Option<u8>,
    ) -> Result<(), MetricError> {
        let mut m = Mask::binary(width, height)?;
        fill_polygon(&mut m, polygon, 1);
        self.add_pixels(step, gt, pred.unwrap_or(0), m.foreground_count())
    }

    pub fn add_pixels(
        &mut self,
        step: usize,
        gt: u8,
        pred: u8,
        pixels: u64,
    ) -> Result<(), MetricError> {
        let window = u8::from(self.window);
        let matrix = self
            .steps
            .get_mut(step)
            .ok_or(MetricError::Timestep { step, window })?;
        let classes = matrix.classes();
        if gt >= classes || pred >= classes {
            return Err(MetricError::LabelOutOfRange {
                label: gt.max(pred),
                classes,
            });
        }
        matrix.add(gt, pred, pixels);
        Ok(())
    }

    pub fn merge(&mut self, other: &QFabricAccumulator) -> Result<(), MetricError> {
        for (a, b) in self.steps.iter_mut().zip(&other.steps) {
            a.merge(b)?;
        }
        Ok(())
    }

    /// Class-weighted F1 per timestep with ground truth, averaged with
    /// equal weight per timestep.
    pub fn score<T: Float>(&self) -> Option<T> {
        let per_step: Vec<T> = self.steps.iter().filter_map(|m| m.weighted_f1()).collect();
        if per_step.is_empty() {
            return None;
        }
        let n = T::from(per_step.len()).unwrap();
        Some(per_step.into_iter().fold(T::zero(), |a, b| a + b) / n)
    }

    pub fn per_step_scores<T: Float>(&self) -> Vec<Option<T>> {
        self.steps.iter().map(|m| m.weighted_f1()).collect()
    }
}

/// Rasterizes each classified polygon and scores with class-weighted
/// per-pixel F1 (`window` 2 or 5).
pub fn qfabric_protocol<T: Float>(
    examples: &[QFabricExample<T>],
    window: u8,
    classes: u8,
) -> Result<Option<T>, MetricError> {
    let window = QFabricWindow::try_from(window)?;
    let mut acc = QFabricAccumulator::new(window, classes);
    for ex in examples {
        if ex.gt.len() > window.steps() || ex.gt.len() != ex.pred.len() {
            return Err(MetricError::LengthMismatch {
                preds: ex.pred.len(),
                gts: ex.gt.len(),
            });
        }
        let mut m = Mask::binary(ex.width, ex.height)?;
        fill_polygon(&mut m, &ex.polygon, 1);
        let pixels = m.foreground_count();
        for (step, (&g, &p)) in ex.gt.iter().zip(&ex.pred).enumerate() {
            acc.add_pixels(step, g, p.unwrap_or(0), pixels)?;
        }
    }
    Ok(acc.score())
}
