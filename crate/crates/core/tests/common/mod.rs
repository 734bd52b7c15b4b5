#![allow(dead_code)]

use std::path::Path;

use eo_instruct::fixtures::{generate, source_descriptors, FixtureConfig};
use eo_instruct::ingest::{ingest_source, IngestOutput};
use eo_instruct::respond::{oracle_respond, OracleSpec, Prediction};
use eo_instruct::rng::record_rng;
use eo_instruct::taskgen::{emit_corpus, ConversationRecord, Corpus, GenConfig};
use eo_instruct::BBox;

/// Generates a fixture tree and ingests every source in it.
pub fn ingest_fixture(root: &Path, seed: u64, scenes: usize) -> Vec<IngestOutput> {
    let cfg = FixtureConfig::new(seed, scenes);
    generate(root, &cfg).expect("fixtures");
    source_descriptors(root, &cfg.split)
        .iter()
        .map(|d| ingest_source(d).expect("ingest"))
        .collect()
}

pub fn build_corpus(root: &Path, seed: u64, scenes: usize) -> Corpus {
    let outputs = ingest_fixture(root, seed, scenes);
    emit_corpus(&outputs, &GenConfig::new(seed)).expect("corpus")
}

pub fn oracle_predictions(
    records: &[ConversationRecord],
    spec: &OracleSpec,
    seed: u64,
) -> Vec<Prediction> {
    records
        .iter()
        .map(|r| {
            let mut rng = record_rng(seed, &format!("oracle:{}", r.id));
            Prediction::text(r.id.clone(), oracle_respond(r, spec, &mut rng))
        })
        .collect()
}

/// Even-odd containment of `(px, py)` by ray casting over raw rings.
pub fn inside_rings(rings: &[Vec<(f64, f64)>], px: f64, py: f64) -> bool {
    let mut inside = false;
    for ring in rings {
        let n = ring.len();
        for i in 0..n {
            let (x0, y0) = ring[i];
            let (x1, y1) = ring[(i + 1) % n];
            if (y0 > py) != (y1 > py) {
                let x = x0 + (py - y0) * (x1 - x0) / (y1 - y0);
                if px < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

/// Polygon rings with a label.
pub type RawShape = (Vec<Vec<(f64, f64)>>, u8);

/// Label per pixel from a pixel-center loop; later shapes overwrite.
pub fn brute_raster(shapes: &[RawShape], w: u32, h: u32) -> Vec<u8> {
    let mut out = vec![0u8; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let (cx, cy) = (f64::from(x) + 0.5, f64::from(y) + 0.5);
            for (rings, label) in shapes {
                if inside_rings(rings, cx, cy) {
                    out[(y * w + x) as usize] = *label;
                }
            }
        }
    }
    out
}

/// Binary F1 by direct counting; both-empty scores 1.
pub fn brute_f1(pred: &[u8], gt: &[u8]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0f64, 0f64, 0f64);
    for (&p, &g) in pred.iter().zip(gt) {
        match (p != 0, g != 0) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    if tp + fp + fn_ == 0.0 {
        1.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}

/// Support-weighted mean of one-vs-rest F1 over foreground classes.
/// `None` when the ground truth has no foreground.
pub fn brute_weighted_f1(pred: &[u8], gt: &[u8], classes: u8) -> Option<f64> {
    let mut total = 0f64;
    let mut acc = 0f64;
    for c in 1..classes {
        let support = gt.iter().filter(|&&g| g == c).count() as f64;
        if support == 0.0 {
            continue;
        }
        let p: Vec<u8> = pred.iter().map(|&v| u8::from(v == c)).collect();
        let g: Vec<u8> = gt.iter().map(|&v| u8::from(v == c)).collect();
        acc += support * brute_f1(&p, &g);
        total += support;
    }
    (total > 0.0).then(|| acc / total)
}

/// Raw rings of a polygon, for the brute-force oracles.
pub fn rings_of(p: &eo_instruct::Polygon) -> Vec<Vec<(f64, f64)>> {
    p.rings()
        .map(|r| r.iter().map(|q| (q.x, q.y)).collect())
        .collect()
}

const PROSE: [&str; 12] = [
    "The",
    "buildings",
    "are",
    "at",
    "located",
    "and",
    "here:",
    "see",
    "damaged",
    "region",
    "Image 2",
    "none",
];

/// A response that follows the box grammar: prose words, then boxes with
/// random spacing joined by commas, periods, newlines or "and".
pub fn grammar_response<R: rand::Rng>(rng: &mut R) -> (String, Vec<BBox>) {
    let mut text = String::new();
    for _ in 0..rng.random_range(0..4) {
        text.push_str(PROSE[rng.random_range(0..PROSE.len())]);
        text.push(' ');
    }
    let n = rng.random_range(0..6);
    let mut boxes = Vec::with_capacity(n);
    for i in 0..n {
        let x0 = rng.random_range(0..2000u32);
        let y0 = rng.random_range(0..2000u32);
        let b = BBox::new(
            x0,
            y0,
            x0 + rng.random_range(1..500),
            y0 + rng.random_range(1..500),
        )
        .unwrap();
        if i > 0 {
            text.push_str([", ", ",", ". ", "\n", " and ", ",\n"][rng.random_range(0..6)]);
        }
        let pad = |rng: &mut R| [" ", "", "  ", "\t"][rng.random_range(0..4)];
        let v = [b.x_min, b.y_min, b.x_max, b.y_max];
        text.push('[');
        text.push_str(pad(rng));
        for (k, c) in v.iter().enumerate() {
            if k > 0 {
                text.push_str(pad(rng));
                text.push(',');
                text.push_str(pad(rng));
            }
            text.push_str(&c.to_string());
        }
        text.push_str(pad(rng));
        text.push(']');
        boxes.push(b);
    }
    if rng.random_bool(0.5) {
        text.push('.');
    }
    (text, boxes)
}

pub fn random_boxes<R: rand::Rng>(rng: &mut R, side: u32) -> Vec<BBox> {
    (0..rng.random_range(0..5))
        .map(|_| {
            let x0 = rng.random_range(0..side - 1);
            let y0 = rng.random_range(0..side - 1);
            let x1 = rng.random_range(x0 + 1..=side.min(x0 + 14));
            let y1 = rng.random_range(y0 + 1..=side.min(y0 + 14));
            BBox::new(x0, y0, x1, y1).unwrap()
        })
        .collect()
}

pub fn covers(b: &BBox, x: u32, y: u32) -> bool {
    x >= b.x_min && x < b.x_max && y >= b.y_min && y < b.y_max
}

pub fn meet(a: &BBox, b: &BBox) -> bool {
    a.x_min.max(b.x_min) < a.x_max.min(b.x_max) && a.y_min.max(b.y_min) < a.y_max.min(b.y_max)
}

pub fn cut(a: &BBox, r: &BBox) -> Option<BBox> {
    meet(a, r).then(|| BBox {
        x_min: a.x_min.max(r.x_min),
        y_min: a.y_min.max(r.y_min),
        x_max: a.x_max.min(r.x_max),
        y_max: a.y_max.min(r.y_max),
    })
}

/// Per-pixel oracle for the difference with overlap masking and for the
/// two one-sided differences.
pub fn diff_oracle(t1: &[BBox], t2: &[BBox], side: u32) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    let pairs: Vec<(&BBox, &BBox)> = t1
        .iter()
        .flat_map(|p| t2.iter().map(move |q| (p, q)))
        .filter(|(p, q)| meet(p, q))
        .collect();
    let (mut diff, mut destructed, mut constructed) = (Vec::new(), Vec::new(), Vec::new());
    for y in 0..side {
        for x in 0..side {
            let a = t1.iter().any(|b| covers(b, x, y));
            let b = t2.iter().any(|b| covers(b, x, y));
            let masked = pairs
                .iter()
                .any(|(p, q)| covers(p, x, y) || covers(q, x, y));
            diff.push(u8::from(a != b && !masked));
            destructed.push(u8::from(a && !b));
            constructed.push(u8::from(b && !a));
        }
    }
    (diff, destructed, constructed)
}

pub fn qa_oracle(t1: &[BBox], t2: &[BBox], region: Option<BBox>) -> bool {
    let keep = |bs: &[BBox]| -> Vec<BBox> {
        match region {
            Some(r) => bs.iter().filter_map(|b| cut(b, &r)).collect(),
            None => bs.to_vec(),
        }
    };
    let (a, b) = (keep(t1), keep(t2));
    a.iter().any(|x| !b.iter().any(|y| meet(x, y)))
        || b.iter().any(|y| !a.iter().any(|x| meet(x, y)))
}
