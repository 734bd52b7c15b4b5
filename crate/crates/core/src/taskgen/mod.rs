//! Instruction-following record generation.
//!
//! Each [`SceneRecord`] becomes at most one [`ConversationRecord`]: the
//! sequence is capped (and QFabric sequences optionally shortened), a
//! task is drawn from the mix, and a variant renders the instruction and
//! the ground-truth answer. All randomness for a record comes from a
//! stream keyed by `(seed, source, id)`.

pub mod bank;
pub mod prompt;
mod record;
mod sample;
pub mod variants;
pub mod vocab;

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use record::{
    ConversationRecord, EvalGeometry, EvalPolygon, Protocol, RecordMeta, Role, Target, TargetKind,
    TaskTag, Turn,
};
pub use sample::{sample_indices, sample_sequence, select_images, MAX_IMAGES};

use crate::ingest::{IngestOutput, SceneRecord, SingleImageExample, SourceKind, REFERENCE_TOTAL};
use crate::rng::{record_rng, RecordRng};
use prompt::{user_turn, Injected};
use variants::{variants, Draft};

#[derive(Debug, Error, PartialEq)]
pub enum TaskError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("record lacks {field}")]
    MissingField { field: &'static str },
    #[error("task {task} is not defined for source {kind}")]
    Unsupported { kind: SourceKind, task: TaskTag },
    #[error("source {0} produced no records")]
    EmptySource(SourceKind),
    #[error("invalid mix spec: {0}")]
    Mix(String),
    #[error("invalid probability {0}")]
    Probability(f64),
    #[error("image cap {0} is below 2")]
    MaxImages(usize),
}

/// Task weights per source. Sources without an entry draw uniformly from
/// every task their records support.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MixSpec(pub BTreeMap<SourceKind, BTreeMap<TaskTag, f64>>);

impl MixSpec {
    fn weight(&self, kind: SourceKind, tag: TaskTag) -> f64 {
        match self.0.get(&kind) {
            Some(m) => m.get(&tag).copied().unwrap_or(0.0),
            None => 1.0,
        }
    }
}

/// `xbd=cd_loc:1,qa:2;s2looking=cd_det:1`. A task without a weight gets
/// weight 1.
impl FromStr for MixSpec {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = BTreeMap::new();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (src, tasks) = part
                .split_once('=')
                .ok_or_else(|| TaskError::Mix(format!("`{part}` lacks `source=`")))?;
            let kind: SourceKind = src
                .trim()
                .parse()
                .map_err(|_| TaskError::Mix(format!("unknown source `{src}`")))?;
            let mut weights = BTreeMap::new();
            for t in tasks.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let (name, w) = match t.split_once(':') {
                    Some((n, w)) => (
                        n.trim(),
                        w.trim()
                            .parse::<f64>()
                            .map_err(|_| TaskError::Mix(format!("bad weight in `{t}`")))?,
                    ),
                    None => (t, 1.0),
                };
                if !w.is_finite() || w < 0.0 {
                    return Err(TaskError::Mix(format!("bad weight in `{t}`")));
                }
                weights.insert(name.parse::<TaskTag>()?, w);
            }
            out.insert(kind, weights);
        }
        Ok(MixSpec(out))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub max_images: usize,
    pub metadata_prob: f64,
    pub subseq_prob: f64,
    pub mix: MixSpec,
    /// When both fMoW variants carry a scene, keep one of them chosen at
    /// random per scene.
    pub pair_fmow: bool,
}

impl GenConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            max_images: MAX_IMAGES,
            metadata_prob: 0.5,
            subseq_prob: 0.3,
            mix: MixSpec::default(),
            pair_fmow: true,
        }
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        if self.max_images < 2 {
            return Err(TaskError::MaxImages(self.max_images));
        }
        for p in [self.metadata_prob, self.subseq_prob] {
            if !(0.0..=1.0).contains(&p) {
                return Err(TaskError::Probability(p));
            }
        }
        Ok(())
    }
}

fn record_key(kind: SourceKind, id: &str) -> String {
    format!("{kind}:{id}")
}

fn draft_for(rec: &SceneRecord, tag: TaskTag, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let fns = variants(rec.source, tag);
    if fns.is_empty() {
        return Err(TaskError::Unsupported {
            kind: rec.source,
            task: tag,
        });
    }
    let mut first_err = None;
    let mut ok = Vec::new();
    for (i, f) in fns.iter().enumerate() {
        match f(rec, &mut rng.clone()) {
            Ok(_) => ok.push(i),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if ok.is_empty() {
        return Err(first_err.expect("at least one variant"));
    }
    let pick = ok[rng.random_range(0..ok.len())];
    fns[pick](rec, rng)
}

/// Tasks with at least one variant applicable to `rec`.
pub fn available_tasks(rec: &SceneRecord) -> Vec<TaskTag> {
    let probe = record_rng(0, &rec.id);
    TaskTag::ALL
        .into_iter()
        .filter(|&t| {
            variants(rec.source, t)
                .iter()
                .any(|f| f(rec, &mut probe.clone()).is_ok())
        })
        .collect()
}

fn inject<R: Rng + ?Sized>(rec: &SceneRecord, p: f64, rng: &mut R) -> Injected {
    let resolution = rec.resolution.filter(|_| rng.random_bool(p));
    let sensor = rec.sensor.clone().filter(|_| rng.random_bool(p));
    Injected { resolution, sensor }
}

fn assemble(
    rec: &SceneRecord,
    tag: TaskTag,
    draft: Draft,
    cfg: &GenConfig,
    rng: &mut RecordRng,
) -> ConversationRecord {
    let rec = match &draft.images {
        Some(keep) => select_images(rec, keep),
        None => rec.clone(),
    };
    let injected = inject(&rec, cfg.metadata_prob, rng);
    let shown: &[String] = if draft.show_options {
        &draft.options
    } else {
        &[]
    };
    let user = user_turn(
        rec.images.len(),
        &injected,
        &draft.instruction,
        shown,
        draft.wants_boxes,
    );
    let eval = draft.eval.map(|polygons| EvalGeometry {
        width: rec.width,
        height: rec.height,
        polygons,
    });
    ConversationRecord {
        id: record_key(rec.source, &rec.id),
        images: rec.images.clone(),
        conversations: vec![
            Turn {
                role: Role::User,
                text: user,
            },
            Turn {
                role: Role::Assistant,
                text: draft.answer,
            },
        ],
        task: tag,
        meta: RecordMeta {
            source: rec.source,
            dataset: draft.dataset,
            variant: draft.variant.to_owned(),
            seed: cfg.seed,
            sensor: injected.sensor,
            resolution: injected.resolution,
            protocol: draft.protocol,
            target: Some(draft.target),
            options: draft.options,
            query_box: draft.query_box,
            eval,
        },
    }
}

/// Renders `rec` as task `tag`. Fails when the record lacks what the
/// task needs.
pub fn build_prompt(
    rec: &SceneRecord,
    tag: TaskTag,
    cfg: &GenConfig,
) -> Result<ConversationRecord, TaskError> {
    let mut rng = record_rng(cfg.seed, &record_key(rec.source, &rec.id));
    let sampled = sample_sequence(rec, cfg.max_images, cfg.subseq_prob, &mut rng);
    let draft = draft_for(&sampled, tag, &mut rng)?;
    Ok(assemble(&sampled, tag, draft, cfg, &mut rng))
}

/// Samples a task from the mix and renders it. `None` when the mix gives
/// no applicable task positive weight.
pub fn build_record(rec: &SceneRecord, cfg: &GenConfig) -> Option<ConversationRecord> {
    let mut rng = record_rng(cfg.seed, &record_key(rec.source, &rec.id));
    let sampled = sample_sequence(rec, cfg.max_images, cfg.subseq_prob, &mut rng);
    let weighted: Vec<(TaskTag, f64)> = available_tasks(&sampled)
        .into_iter()
        .map(|t| (t, cfg.mix.weight(rec.source, t)))
        .filter(|(_, w)| *w > 0.0)
        .collect();
    let total: f64 = weighted.iter().map(|(_, w)| w).sum();
    if weighted.is_empty() {
        return None;
    }
    let mut x = rng.random::<f64>() * total;
    let mut tag = weighted[weighted.len() - 1].0;
    for (t, w) in &weighted {
        if x < *w {
            tag = *t;
            break;
        }
        x -= w;
    }
    let draft = draft_for(&sampled, tag, &mut rng).ok()?;
    Some(assemble(&sampled, tag, draft, cfg, &mut rng))
}

/// Wraps a converted single-image conversation: the first user turn gets
/// the standard prompt with one image.
pub fn passthrough_record(ex: &SingleImageExample, cfg: &GenConfig) -> ConversationRecord {
    let mut conversations = Vec::with_capacity(ex.conversations.len());
    let mut first = true;
    for t in &ex.conversations {
        let role = if t.from.eq_ignore_ascii_case("human") || t.from.eq_ignore_ascii_case("user") {
            Role::User
        } else {
            Role::Assistant
        };
        let text = if role == Role::User && first {
            first = false;
            user_turn(1, &Injected::default(), &t.value, &[], false)
        } else {
            t.value.clone()
        };
        conversations.push(Turn { role, text });
    }
    ConversationRecord {
        id: record_key(SourceKind::SingleImageCorpus, &ex.id),
        images: vec![crate::ingest::ImageRef::new(ex.image.clone())],
        conversations,
        task: TaskTag::SingleImagePassthrough,
        meta: RecordMeta {
            source: SourceKind::SingleImageCorpus,
            dataset: SourceKind::SingleImageCorpus.dataset().to_owned(),
            variant: "passthrough".into(),
            seed: cfg.seed,
            sensor: None,
            resolution: None,
            protocol: Protocol::Unscored,
            target: None,
            options: Vec::new(),
            query_box: None,
            eval: None,
        },
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceCount {
    pub ingested: usize,
    pub emitted: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetCount {
    pub emitted: usize,
    pub reference: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub max_images: usize,
    pub metadata_prob: f64,
    pub subseq_prob: f64,
    pub tiling_policy: String,
    pub sources: BTreeMap<SourceKind, SourceCount>,
    pub datasets: BTreeMap<String, DatasetCount>,
    pub tasks: BTreeMap<TaskTag, usize>,
    pub total: usize,
    pub reference_total: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub records: Vec<ConversationRecord>,
    pub manifest: Manifest,
}

impl Corpus {
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&r.to_json_line());
            s.push('\n');
        }
        s
    }
}

/// Builds the corpus from ingested sources. Output order is by record id,
/// independent of thread count.
pub fn emit_corpus(sources: &[IngestOutput], cfg: &GenConfig) -> Result<Corpus, TaskError> {
    cfg.validate()?;
    let mut scenes: Vec<&SceneRecord> = Vec::new();
    let mut singles: Vec<&SingleImageExample> = Vec::new();
    let mut sources_count: BTreeMap<SourceKind, SourceCount> = BTreeMap::new();
    for out in sources {
        let kind = out
            .records
            .first()
            .map(|r| r.source)
            .unwrap_or(SourceKind::SingleImageCorpus);
        if out.records.is_empty() && out.passthrough.is_empty() {
            return Err(TaskError::EmptySource(kind));
        }
        sources_count.entry(kind).or_default().ingested += out.records.len();
        if kind == SourceKind::SingleImageCorpus {
            singles.extend(&out.passthrough);
        } else {
            scenes.extend(&out.records);
        }
    }

    if cfg.pair_fmow {
        let ids = |k: SourceKind| -> BTreeSet<&str> {
            scenes
                .iter()
                .filter(|r| r.source == k)
                .map(|r| r.id.as_str())
                .collect()
        };
        let rgb = ids(SourceKind::FmowRgb);
        let both: BTreeSet<String> = ids(SourceKind::FmowSentinel)
            .intersection(&rgb)
            .map(|s| (*s).to_owned())
            .collect();
        let mut dropped = BTreeMap::<SourceKind, usize>::new();
        scenes.retain(|r| {
            if !matches!(r.source, SourceKind::FmowRgb | SourceKind::FmowSentinel)
                || !both.contains(&r.id)
            {
                return true;
            }
            let use_rgb = record_rng(cfg.seed, &format!("fmow-pair:{}", r.id)).random_bool(0.5);
            let keep = use_rgb == (r.source == SourceKind::FmowRgb);
            if !keep {
                *dropped.entry(r.source).or_default() += 1;
            }
            keep
        });
        for (k, n) in dropped {
            sources_count.entry(k).or_default().skipped += n;
        }
    }

    let built: Vec<(SourceKind, Option<ConversationRecord>)> = scenes
        .par_iter()
        .map(|r| (r.source, build_record(r, cfg)))
        .collect();
    let mut records = Vec::with_capacity(built.len() + singles.len());
    for (kind, rec) in built {
        match rec {
            Some(r) => {
                sources_count.entry(kind).or_default().emitted += 1;
                records.push(r);
            }
            None => sources_count.entry(kind).or_default().skipped += 1,
        }
    }
    for ex in singles {
        sources_count
            .entry(SourceKind::SingleImageCorpus)
            .or_default()
            .emitted += 1;
        records.push(passthrough_record(ex, cfg));
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));

    let mut tasks = BTreeMap::new();
    for r in &records {
        *tasks.entry(r.task).or_insert(0) += 1;
    }
    let mut datasets: BTreeMap<String, DatasetCount> = BTreeMap::new();
    for (kind, c) in &sources_count {
        let d = datasets.entry(kind.dataset().to_owned()).or_default();
        d.emitted += c.emitted;
        d.reference = kind.reference_count();
    }
    let manifest = Manifest {
        seed: cfg.seed,
        max_images: cfg.max_images,
        metadata_prob: cfg.metadata_prob,
        subseq_prob: cfg.subseq_prob,
        tiling_policy: crate::ingest::TileGrid::new(256, 256, 256)
            .policy()
            .to_owned(),
        sources: sources_count,
        datasets,
        tasks,
        total: records.len(),
        reference_total: REFERENCE_TOTAL,
    };
    Ok(Corpus { records, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_spec_parses() {
        let m: MixSpec = "xbd=cd_loc:1,qa:2; qfabric=tre".parse().unwrap();
        assert_eq!(m.weight(SourceKind::Xbd, TaskTag::Qa), 2.0);
        assert_eq!(m.weight(SourceKind::Xbd, TaskTag::Sre), 0.0);
        assert_eq!(m.weight(SourceKind::Qfabric, TaskTag::Tre), 1.0);
        assert_eq!(m.weight(SourceKind::S2looking, TaskTag::CdDet), 1.0);
        assert!("xbd=bogus".parse::<MixSpec>().is_err());
        assert!("xbd".parse::<MixSpec>().is_err());
    }

    #[test]
    fn task_tags_round_trip() {
        for t in TaskTag::ALL {
            assert_eq!(t.as_str().parse::<TaskTag>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{t}\""));
        }
    }
}
