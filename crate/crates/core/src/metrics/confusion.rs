use std::ops::{Add, AddAssign};

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::geom::Mask;

/// Binary pixel counts for the foreground class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl PixelCounts {
    /// Any nonzero label counts as foreground.
    pub fn from_masks(pred: &Mask, gt: &Mask) -> Result<Self, MetricError> {
        pred.check_same_extent(gt)?;
        let mut c = PixelCounts::default();
        for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
            match (p != 0, g != 0) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => {}
            }
        }
        Ok(c)
    }

    pub fn is_empty(&self) -> bool {
        self.tp == 0 && self.fp == 0 && self.fn_ == 0
    }

    /// `2TP / (2TP + FP + FN)`; `None` when there is nothing to score.
    pub fn f1<T: Float>(&self) -> Option<T> {
        let denom = 2 * self.tp + self.fp + self.fn_;
        (denom > 0).then(|| T::from(2 * self.tp).unwrap() / T::from(denom).unwrap())
    }

    /// F1 with the both-empty convention: nothing predicted and nothing
    /// present scores 1.
    pub fn f1_or_one<T: Float>(&self) -> T {
        self.f1().unwrap_or_else(T::one)
    }

    pub fn precision<T: Float>(&self) -> Option<T> {
        let d = self.tp + self.fp;
        (d > 0).then(|| T::from(self.tp).unwrap() / T::from(d).unwrap())
    }

    pub fn recall<T: Float>(&self) -> Option<T> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| T::from(self.tp).unwrap() / T::from(d).unwrap())
    }
}

impl AddAssign for PixelCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
    }
}

impl Add for PixelCounts {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl std::iter::Sum for PixelCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// `k x k` pixel confusion matrix, rows = ground truth, columns =
/// prediction. Class 0 is background and never scored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: u8,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: u8) -> Self {
        let k = classes as usize;
        Self {
            classes,
            counts: vec![0; k * k],
        }
    }

    pub fn from_masks(pred: &Mask, gt: &Mask, classes: u8) -> Result<Self, MetricError> {
        pred.check_same_extent(gt)?;
        let mut m = Self::new(classes);
        let k = classes as usize;
        for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
            if p >= classes || g >= classes {
                return Err(MetricError::LabelOutOfRange {
                    label: p.max(g),
                    classes,
                });
            }
            m.counts[g as usize * k + p as usize] += 1;
        }
        Ok(m)
    }

    pub fn classes(&self) -> u8 {
        self.classes
    }

    pub fn get(&self, gt: u8, pred: u8) -> u64 {
        self.counts[gt as usize * self.classes as usize + pred as usize]
    }

    pub fn add(&mut self, gt: u8, pred: u8, pixels: u64) {
        let k = self.classes as usize;
        self.counts[gt as usize * k + pred as usize] += pixels;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<(), MetricError> {
        if other.classes != self.classes {
            return Err(MetricError::ClassCountMismatch(self.classes, other.classes));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Ground-truth pixel count of `class`.
    pub fn support(&self, class: u8) -> u64 {
        let k = self.classes as usize;
        let row = class as usize * k;
        self.counts[row..row + k].iter().sum()
    }

    pub fn class_counts(&self, class: u8) -> PixelCounts {
        let k = self.classes as usize;
        let c = class as usize;
        let tp = self.counts[c * k + c];
        let predicted: u64 = (0..k).map(|r| self.counts[r * k + c]).sum();
        PixelCounts {
            tp,
            fp: predicted - tp,
            fn_: self.support(class) - tp,
        }
    }

    /// Per-class F1 for foreground classes present in the ground truth.
    pub fn per_class_f1<T: Float>(&self) -> Vec<(u8, T)> {
        (1..self.classes)
            .filter(|&c| self.support(c) > 0)
            .map(|c| (c, self.class_counts(c).f1().unwrap_or_else(T::zero)))
            .collect()
    }

    /// Foreground F1 averaged with weights proportional to ground-truth
    /// pixel support; `None` when the ground truth is all background.
    pub fn weighted_f1<T: Float>(&self) -> Option<T> {
        let total: u64 = (1..self.classes).map(|c| self.support(c)).sum();
        if total == 0 {
            return None;
        }
        let total = T::from(total).unwrap();
        Some(
            self.per_class_f1::<T>()
                .into_iter()
                .fold(T::zero(), |acc, (c, f1)| {
                    acc + T::from(self.support(c)).unwrap() / total * f1
                }),
        )
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.classes as usize)
            .map(<[u64]>::to_vec)
            .collect()
    }
}
