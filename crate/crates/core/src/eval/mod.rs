//! Scores predictions against a corpus. Records are bucketed by task
//! category, dataset and metric; every scorable record lands in exactly
//! one bucket. A record without a prediction is scored as an empty
//! response.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{fill_polygon, rasterize_boxes, GeomError, Mask};
use crate::metrics::{
    ConfusionMatrix, MetricError, MetricName, MetricReport, PixelCounts, QFabricAccumulator,
    QFabricWindow, TaskCategory,
};
use crate::respond::{interpret, Prediction};
use crate::taskgen::{ConversationRecord, Protocol, Target, TargetKind};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no prediction id matches a corpus record ({predictions} predictions)")]
    NoOverlap { predictions: usize },
    #[error("{id}: {message}")]
    Record { id: String, message: String },
    #[error("bucket {category} / {dataset} mixes incompatible protocols")]
    ProtocolConflict {
        category: TaskCategory,
        dataset: String,
    },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// How predictions lined up with the corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub records: usize,
    pub predictions: usize,
    /// Corpus records with a prediction.
    pub matched: usize,
    /// Corpus records without one, scored as an empty response.
    pub missing: usize,
    /// Prediction ids not in the corpus.
    pub unmatched: Vec<String>,
    /// Ids predicted more than once; the first prediction is used.
    pub duplicates: Vec<String>,
    /// Records scored in some bucket.
    pub scored: usize,
    /// Records with no scoring protocol (captions, descriptions,
    /// passthrough conversations).
    pub unscored: usize,
    /// Total parse diagnostics over matched predictions.
    pub diagnostics: usize,
    pub diagnostics_by_kind: BTreeMap<String, usize>,
    /// Responses from which no answer of the expected kind was read.
    pub undecodable: usize,
    /// Supplied change masks whose extent did not match the record; the
    /// response boxes were used instead.
    pub mask_mismatches: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub reports: Vec<MetricReport>,
    pub coverage: Coverage,
}

type BucketKey = (TaskCategory, String, MetricName);

enum Acc {
    Accuracy {
        correct: usize,
    },
    Pixel(PixelCounts),
    Class {
        matrix: ConfusionMatrix,
        names: Vec<String>,
    },
    QFabric {
        acc: QFabricAccumulator,
        names: Vec<String>,
    },
}

/// One record's contribution to its bucket.
enum Score {
    Correct(bool),
    Pixels(PixelCounts),
    /// `(gt, pred, pixels)` entries with the protocol's class names.
    Class(Vec<(u8, u8, u64)>, Vec<String>),
    QFabric {
        window: QFabricWindow,
        step: usize,
        entries: Vec<(u8, u8, u64)>,
        names: Vec<String>,
    },
}

struct Scored {
    key: Option<BucketKey>,
    score: Option<Score>,
    diagnostics: Vec<String>,
    undecodable: bool,
    mask_mismatch: bool,
}

fn record_error(id: &str, e: impl std::fmt::Display) -> EvalError {
    EvalError::Record {
        id: id.to_owned(),
        message: e.to_string(),
    }
}

fn metric_of(p: &Protocol) -> Option<MetricName> {
    match p {
        Protocol::Accuracy => Some(MetricName::Accuracy),
        Protocol::PixelF1 | Protocol::ClassWeightedF1 { .. } | Protocol::QFabric { .. } => {
            Some(MetricName::F1)
        }
        Protocol::Unscored => None,
    }
}

fn polygon_pixels(
    r: &ConversationRecord,
    width: u32,
    height: u32,
) -> Result<Vec<(u8, u64)>, EvalError> {
    let eval = r
        .meta
        .eval
        .as_ref()
        .ok_or_else(|| record_error(&r.id, "mask protocol without evaluation geometry"))?;
    let mut out = Vec::with_capacity(eval.polygons.len());
    for p in &eval.polygons {
        let mut m = Mask::binary(width, height)?;
        fill_polygon(&mut m, &p.polygon, 1);
        out.push((p.label, m.foreground_count()));
    }
    Ok(out)
}

fn class_index(target: &Option<Target>, names: &[String]) -> u8 {
    match target {
        Some(Target::Class(c)) => names.iter().position(|n| n == c).map_or(0, |i| i as u8 + 1),
        _ => 0,
    }
}

fn score_record(r: &ConversationRecord, pred: Option<&Prediction>) -> Result<Scored, EvalError> {
    let Some(category) = r.task.category() else {
        return Ok(Scored {
            key: None,
            score: None,
            diagnostics: Vec::new(),
            undecodable: false,
            mask_mismatch: false,
        });
    };
    let Some(metric) = metric_of(&r.meta.protocol) else {
        return Ok(Scored {
            key: None,
            score: None,
            diagnostics: Vec::new(),
            undecodable: false,
            mask_mismatch: false,
        });
    };
    let gt = r
        .meta
        .target
        .as_ref()
        .ok_or_else(|| record_error(&r.id, "scored record without a target"))?;
    let text = pred.map_or("", |p| p.response_text.as_str());
    let (decoded, parsed) = interpret(text, gt.kind(), &r.meta.options, r.images.len());
    let diagnostics = if pred.is_some() {
        parsed
            .diagnostics
            .iter()
            .map(|d| diagnostic_kind(&format!("{d:?}")))
            .collect()
    } else {
        Vec::new()
    };
    let undecodable = pred.is_some() && decoded.is_none();
    let mut mask_mismatch = false;
    let score =
        match &r.meta.protocol {
            Protocol::Accuracy => Score::Correct(decoded.as_ref() == Some(gt)),
            Protocol::PixelF1 => {
                let eval = r.meta.eval.as_ref().ok_or_else(|| {
                    record_error(&r.id, "pixel protocol without evaluation geometry")
                })?;
                let (w, h) = (eval.width, eval.height);
                let mut truth = Mask::binary(w, h)?;
                for p in &eval.polygons {
                    fill_polygon(&mut truth, &p.polygon, 1);
                }
                let supplied = match pred.and_then(|p| p.change_mask.as_ref()) {
                    Some(rle) if rle.width == w && rle.height == h => {
                        Some(rle.decode().map_err(|e| record_error(&r.id, e))?)
                    }
                    Some(_) => {
                        mask_mismatch = true;
                        None
                    }
                    None => None,
                };
                let predicted = match supplied {
                    Some(m) => m,
                    None => {
                        let boxes: Vec<_> = match &decoded {
                            Some(t) => t.boxes().iter().filter_map(|b| b.clip_to(w, h)).collect(),
                            None => Vec::new(),
                        };
                        rasterize_boxes(&boxes, w, h)?
                    }
                };
                Score::Pixels(PixelCounts::from_masks(&predicted, &truth)?)
            }
            Protocol::ClassWeightedF1 { classes } => {
                let eval = r.meta.eval.as_ref().ok_or_else(|| {
                    record_error(&r.id, "class protocol without evaluation geometry")
                })?;
                let pred_label = class_index(&decoded, classes);
                let entries = polygon_pixels(r, eval.width, eval.height)?
                    .into_iter()
                    .map(|(gt, n)| (gt, pred_label, n))
                    .collect();
                Score::Class(entries, classes.clone())
            }
            Protocol::QFabric {
                classes,
                window,
                timestep,
            } => {
                let eval = r.meta.eval.as_ref().ok_or_else(|| {
                    record_error(&r.id, "urban-change protocol without evaluation geometry")
                })?;
                let window = QFabricWindow::try_from(*window)?;
                let pred_label = class_index(&decoded, classes);
                let entries = polygon_pixels(r, eval.width, eval.height)?
                    .into_iter()
                    .map(|(gt, n)| (gt, pred_label, n))
                    .collect();
                Score::QFabric {
                    window,
                    step: *timestep,
                    entries,
                    names: classes.clone(),
                }
            }
            Protocol::Unscored => unreachable!("filtered above"),
        };
    Ok(Scored {
        key: Some((category, r.meta.dataset.clone(), metric)),
        score: Some(score),
        diagnostics,
        undecodable,
        mask_mismatch,
    })
}

/// Variant name of a diagnostic's debug form.
fn diagnostic_kind(debug: &str) -> String {
    debug
        .split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or_default()
        .to_owned()
}

fn conflict(key: &BucketKey) -> EvalError {
    EvalError::ProtocolConflict {
        category: key.0,
        dataset: key.1.clone(),
    }
}

fn accumulate(acc: &mut Option<Acc>, score: Score, key: &BucketKey) -> Result<(), EvalError> {
    match (acc.as_mut(), score) {
        (None, Score::Correct(ok)) => {
            *acc = Some(Acc::Accuracy {
                correct: usize::from(ok),
            })
        }
        (Some(Acc::Accuracy { correct }), Score::Correct(ok)) => *correct += usize::from(ok),
        (None, Score::Pixels(c)) => *acc = Some(Acc::Pixel(c)),
        (Some(Acc::Pixel(total)), Score::Pixels(c)) => *total += c,
        (None, Score::Class(entries, names)) => {
            let mut matrix = ConfusionMatrix::new(names.len() as u8 + 1);
            add_entries(&mut matrix, &entries, key)?;
            *acc = Some(Acc::Class { matrix, names });
        }
        (Some(Acc::Class { matrix, names }), Score::Class(entries, n)) => {
            if *names != n {
                return Err(conflict(key));
            }
            add_entries(matrix, &entries, key)?;
        }
        (
            None,
            Score::QFabric {
                window,
                step,
                entries,
                names,
            },
        ) => {
            let mut q = QFabricAccumulator::new(window, names.len() as u8 + 1);
            for (g, p, n) in entries {
                q.add_pixels(step, g, p, n)?;
            }
            *acc = Some(Acc::QFabric { acc: q, names });
        }
        (
            Some(Acc::QFabric { acc: q, names }),
            Score::QFabric {
                window,
                step,
                entries,
                names: n,
            },
        ) => {
            if *names != n || q.window() != window {
                return Err(conflict(key));
            }
            for (g, p, n) in entries {
                q.add_pixels(step, g, p, n)?;
            }
        }
        _ => return Err(conflict(key)),
    }
    Ok(())
}

fn add_entries(
    m: &mut ConfusionMatrix,
    entries: &[(u8, u8, u64)],
    key: &BucketKey,
) -> Result<(), EvalError> {
    for &(g, p, n) in entries {
        if g >= m.classes() || p >= m.classes() {
            return Err(conflict(key));
        }
        m.add(g, p, n);
    }
    Ok(())
}

fn per_class(matrix: &ConfusionMatrix, names: &[String]) -> BTreeMap<String, f64> {
    matrix
        .per_class_f1::<f64>()
        .into_iter()
        .filter_map(|(c, f)| Some((names.get(usize::from(c).checked_sub(1)?)?.clone(), f)))
        .collect()
}

fn finish(key: BucketKey, acc: Acc, count: usize) -> Result<MetricReport, EvalError> {
    let (category, dataset, metric) = key;
    Ok(match acc {
        Acc::Accuracy { correct } => MetricReport::new(
            category,
            dataset,
            metric,
            Some(correct as f64 / count as f64),
            count,
        )?,
        Acc::Pixel(c) => MetricReport::new(category, dataset, metric, c.f1::<f64>(), count)?
            .with_meta("weighting", "pixels summed over the split"),
        Acc::Class { matrix, names } => {
            let mut r = MetricReport::new(
                category,
                dataset,
                metric,
                matrix.weighted_f1::<f64>(),
                count,
            )?
            .with_meta("weighting", "class support over the split");
            r.per_class = Some(per_class(&matrix, &names));
            r.confusion = Some(matrix);
            r
        }
        Acc::QFabric { acc, names: _ } => {
            let steps: Vec<String> = acc
                .per_step_scores::<f64>()
                .iter()
                .map(|s| s.map_or("-".to_owned(), |v| format!("{v:.6}")))
                .collect();
            MetricReport::new(category, dataset, metric, acc.score::<f64>(), count)?
                .with_meta("window", u8::from(acc.window()).to_string())
                .with_meta("timestep_f1", steps.join(","))
                .with_meta(
                    "weighting",
                    "class support per timestep, timesteps averaged",
                )
        }
    })
}

/// Scores `predictions` against `corpus`. Fails when no prediction id
/// matches a corpus record.
pub fn evaluate(
    corpus: &[ConversationRecord],
    predictions: &[Prediction],
) -> Result<Evaluation, EvalError> {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::with_capacity(predictions.len());
    let mut duplicates = Vec::new();
    for p in predictions {
        if by_id.insert(p.id.as_str(), p).is_some() {
            duplicates.push(p.id.clone());
        }
    }
    // Keep the first prediction for repeated ids.
    for p in predictions.iter().rev() {
        by_id.insert(p.id.as_str(), p);
    }
    duplicates.sort();
    duplicates.dedup();

    let corpus_ids: std::collections::HashSet<&str> =
        corpus.iter().map(|r| r.id.as_str()).collect();
    let mut unmatched: Vec<String> = by_id
        .keys()
        .filter(|id| !corpus_ids.contains(*id))
        .map(|s| (*s).to_owned())
        .collect();
    unmatched.sort();
    let matched = corpus
        .iter()
        .filter(|r| by_id.contains_key(r.id.as_str()))
        .count();
    if matched == 0 {
        return Err(EvalError::NoOverlap {
            predictions: predictions.len(),
        });
    }

    let scored: Vec<Scored> = corpus
        .par_iter()
        .map(|r| score_record(r, by_id.get(r.id.as_str()).copied()))
        .collect::<Result<_, _>>()?;

    let mut coverage = Coverage {
        records: corpus.len(),
        predictions: predictions.len(),
        matched,
        missing: corpus.len() - matched,
        unmatched,
        duplicates,
        ..Coverage::default()
    };
    let mut buckets: BTreeMap<BucketKey, (Option<Acc>, usize)> = BTreeMap::new();
    for s in scored {
        coverage.diagnostics += s.diagnostics.len();
        for d in s.diagnostics {
            *coverage.diagnostics_by_kind.entry(d).or_default() += 1;
        }
        coverage.undecodable += usize::from(s.undecodable);
        coverage.mask_mismatches += usize::from(s.mask_mismatch);
        match (s.key, s.score) {
            (Some(key), Some(score)) => {
                coverage.scored += 1;
                let slot = buckets.entry(key.clone()).or_insert((None, 0));
                accumulate(&mut slot.0, score, &key)?;
                slot.1 += 1;
            }
            _ => coverage.unscored += 1,
        }
    }
    let mut reports = Vec::with_capacity(buckets.len());
    for (key, (acc, count)) in buckets {
        if let Some(acc) = acc {
            reports.push(finish(key, acc, count)?);
        }
    }
    Ok(Evaluation { reports, coverage })
}

/// Target kind a record is scored on, if any.
pub fn scored_kind(r: &ConversationRecord) -> Option<TargetKind> {
    metric_of(&r.meta.protocol)?;
    r.task.category()?;
    r.meta.target.as_ref().map(Target::kind)
}
