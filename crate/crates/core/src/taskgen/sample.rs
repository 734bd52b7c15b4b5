use rand::seq::index;
use rand::Rng;

use crate::ingest::{SceneRecord, SourceKind};

/// Longest image sequence a record may carry.
pub const MAX_IMAGES: usize = 8;

/// Indices (ascending) of the images to keep from a sequence of `n`.
///
/// Sequences longer than `max` keep a uniform random `max`-subset. With
/// probability `subseq_prob` a sequence of at least three images is cut
/// down to a random length in `2..=len` instead (drawn before the cap).
pub fn sample_indices<R: Rng + ?Sized>(
    n: usize,
    max: usize,
    subseq_prob: f64,
    rng: &mut R,
) -> Vec<usize> {
    let max = max.max(1);
    let mut keep = n.min(max);
    if n >= 3 && subseq_prob > 0.0 && rng.random_bool(subseq_prob.min(1.0)) {
        keep = rng.random_range(2..=keep.max(2));
    }
    if keep == n {
        return (0..n).collect();
    }
    let mut picked = index::sample(rng, n, keep).into_vec();
    picked.sort_unstable();
    picked
}

/// Restricts a record to the given image indices (ascending), carrying
/// per-timestep labels and transforms along.
pub fn select_images(record: &SceneRecord, keep: &[usize]) -> SceneRecord {
    if keep.len() == record.images.len() {
        return record.clone();
    }
    let mut out = record.clone();
    out.images = keep.iter().map(|&i| record.images[i].clone()).collect();
    out.order = keep.iter().map(|&i| record.order[i]).collect();
    if !record.transforms.is_empty() {
        out.transforms = keep.iter().map(|&i| record.transforms[i]).collect();
    }
    for label in &mut out.labels {
        if let Some(c) = &label.classes_per_timestep {
            label.classes_per_timestep = Some(keep.iter().map(|&i| c[i].clone()).collect());
        }
    }
    out
}

/// Caps the sequence at `max` images; urban-change records may also be
/// shortened (see [`sample_indices`]).
pub fn sample_sequence<R: Rng + ?Sized>(
    record: &SceneRecord,
    max: usize,
    subseq_prob: f64,
    rng: &mut R,
) -> SceneRecord {
    let p = if record.source == SourceKind::Qfabric {
        subseq_prob
    } else {
        0.0
    };
    let keep = sample_indices(record.images.len(), max, p, rng);
    select_images(record, &keep)
}
