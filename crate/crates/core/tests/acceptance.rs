//! Acceptance suite: one PASS/FAIL/SKIP line per criterion, nonzero exit
//! when any criterion fails. Runs without the libtest harness so the lines
//! are always printed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use common::{
    brute_f1, brute_raster, brute_weighted_f1, diff_oracle, grammar_response, oracle_predictions,
    qa_oracle, random_boxes, rings_of,
};
use eo_instruct::baseline::{
    change_qa_from_detections, constructed_destructed_split, detection_diff,
};
use eo_instruct::eval::evaluate;
use eo_instruct::fixtures::{generate, source_descriptors, FixtureConfig};
use eo_instruct::geom::{rasterize, rasterize_boxes};
use eo_instruct::ingest::{
    ingest_source, tile, ImageRef, SceneRecord, SourceKind, TileGrid, REFERENCE_TOTAL,
};
use eo_instruct::metrics::{class_weighted_f1, pixel_f1, MetricName, PixelCounts, TaskCategory};
use eo_instruct::respond::{interpret, parse, OracleSpec, Prediction};
use eo_instruct::rng::record_rng;
use eo_instruct::taskgen::{emit_corpus, sample_sequence, GenConfig, MixSpec};
use eo_instruct::{BBox, Mask, Point, Polygon, Shape};

/// Environment variable naming a directory with the full upstream sources
/// laid out like the fixture tree (`<dir>/<kind>/train/...`).
const FULL_DATA_ENV: &str = "EOI_FULL_DATA";

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn star<R: Rng>(rng: &mut R, w: u32, h: u32) -> Vec<(f64, f64)> {
    let cx = rng.random_range(0.0..f64::from(w));
    let cy = rng.random_range(0.0..f64::from(h));
    let n = rng.random_range(3..10);
    let phase = rng.random_range(0.0..1.0);
    (0..n)
        .map(|i| {
            let r = rng.random_range(1.0..24.0);
            let a = phase + std::f64::consts::TAU * f64::from(i) / f64::from(n);
            (cx + r * a.cos(), cy + r * a.sin())
        })
        .collect()
}

fn polygon(ring: &[(f64, f64)]) -> Polygon {
    Polygon::new(
        ring.iter().map(|&(x, y)| Point::new(x, y)).collect(),
        Vec::new(),
    )
    .unwrap()
}

type RawShapes = Vec<common::RawShape>;

fn random_scene<R: Rng>(rng: &mut R, w: u32, h: u32, classes: u8) -> RawShapes {
    (0..rng.random_range(0..5))
        .map(|_| (vec![star(rng, w, h)], rng.random_range(1..classes)))
        .collect()
}

fn library_raster(shapes: &RawShapes, w: u32, h: u32, classes: u8) -> Mask {
    let shapes: Vec<(Shape, u8)> = shapes
        .iter()
        .map(|(rings, l)| (Shape::from(polygon(&rings[0])), *l))
        .collect();
    rasterize(&shapes, w, h, classes).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = record_rng(1, "acceptance:1");
    let mut worst = 0f64;
    for case in 0..1000 {
        let (w, h) = (rng.random_range(1..=64u32), rng.random_range(1..=64u32));
        let classes = rng.random_range(2..=5u8);
        let gt_shapes = random_scene(&mut rng, w, h, classes);
        let pred_shapes = random_scene(&mut rng, w, h, classes);
        let gt = library_raster(&gt_shapes, w, h, classes);
        let pred = library_raster(&pred_shapes, w, h, classes);
        let gt_oracle = brute_raster(&gt_shapes, w, h);
        let pred_oracle = brute_raster(&pred_shapes, w, h);
        if gt.as_slice() != gt_oracle.as_slice() || pred.as_slice() != pred_oracle.as_slice() {
            return Outcome::Fail(format!(
                "case {case}: raster differs from pixel-center loop"
            ));
        }
        let f1: f64 = pixel_f1(&pred, &gt).unwrap();
        worst = worst.max((f1 - brute_f1(&pred_oracle, &gt_oracle)).abs());
        let wf1: Option<f64> = class_weighted_f1(&pred, &gt, classes).unwrap();
        match (wf1, brute_weighted_f1(&pred_oracle, &gt_oracle, classes)) {
            (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
            (None, None) => {}
            other => return Outcome::Fail(format!("case {case}: weighted F1 {other:?}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-12 && secs < 30.0,
        format!("1000 fixtures, max |diff| {worst:.1e}, {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let rec = SceneRecord {
        id: "big".into(),
        source: SourceKind::Xbd,
        images: vec![ImageRef::new("a.png"), ImageRef::new("b.png")],
        order: vec![0, 1],
        width: 1024,
        height: 1024,
        labels: Vec::new(),
        sequence_class: None,
        sensor: None,
        resolution: None,
        disaster_type: None,
        transforms: Vec::new(),
    };
    let tiles = tile(&rec, 256);
    let all_256 = tiles.iter().all(|t| t.width == 256 && t.height == 256);
    let grid = TileGrid::new(10_000, 10_000, 256);
    let n = grid.tile_count();
    println!("    remainder policy: {}", grid.policy());
    check(
        tiles.len() == 16 && all_256 && (1521..=1600).contains(&n),
        format!("1024 -> {} tiles of 256, 10000 -> {n} tiles", tiles.len()),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = record_rng(3, "acceptance:3");
    let kinds = [SourceKind::Qfabric, SourceKind::FmowRgb, SourceKind::Xbd];
    let mut longest = 0;
    for i in 0..10_000u32 {
        let n = rng.random_range(1..=20usize);
        let rec = SceneRecord {
            id: format!("s{i}"),
            source: kinds[i as usize % kinds.len()],
            images: (0..n).map(|k| ImageRef::new(format!("{k}.png"))).collect(),
            order: (0..n as u32).collect(),
            width: 224,
            height: 224,
            labels: Vec::new(),
            sequence_class: None,
            sensor: None,
            resolution: None,
            disaster_type: None,
            transforms: Vec::new(),
        };
        let out = sample_sequence(&rec, 8, 0.3, &mut rng);
        longest = longest.max(out.images.len());
        let ordered = out.order.windows(2).all(|w| w[0] < w[1]);
        let consistent = out
            .images
            .iter()
            .zip(&out.order)
            .all(|(img, k)| img.path == format!("{k}.png"));
        if out.images.len() > 8 || out.images.is_empty() || !ordered || !consistent {
            return Outcome::Fail(format!("sequence {i} of length {n}: order {:?}", out.order));
        }
    }
    check(
        longest == 8,
        format!("10000 sequences, longest output {longest}"),
    )
}

fn criterion_4() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let corpus = common::build_corpus(dir.path(), 41, 12);
    let mut turns = 0;
    for r in &corpus.records {
        let Some(target) = &r.meta.target else {
            continue;
        };
        let answer = r.first_assistant().unwrap_or_default();
        let (got, _) = interpret(answer, target.kind(), &r.meta.options, r.images.len());
        if got.as_ref() != Some(target) {
            return Outcome::Fail(format!("{}: {answer:?} does not re-parse", r.id));
        }
        turns += 1;
    }
    let mut rng = record_rng(4, "acceptance:4");
    let mut failures = 0;
    let none: [&str; 0] = [];
    for _ in 0..100_000 {
        let (text, boxes) = grammar_response(&mut rng);
        if parse(&text, &none).boxes != boxes {
            failures += 1;
        }
    }
    check(
        failures == 0 && turns > 0,
        format!("{turns} assistant turns round-trip, {failures} box failures in 100000 fuzzed responses"),
    )
}

/// Bounding box of a polygon's vertices, snapped outward to whole pixels.
fn vertex_box(rings: &[Vec<(f64, f64)>]) -> BBox {
    let pts = rings.iter().flatten();
    let x0 = pts
        .clone()
        .map(|p| p.0)
        .fold(f64::INFINITY, f64::min)
        .floor();
    let y0 = pts
        .clone()
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min)
        .floor();
    let x1 = pts
        .clone()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil();
    let y1 = pts.map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil();
    BBox::new(x0 as u32, y0 as u32, x1 as u32, y1 as u32).unwrap()
}

fn criterion_5() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let corpus = common::build_corpus(dir.path(), 7, 12);
    let preds = oracle_predictions(&corpus.records, &OracleSpec::perfect(), 0);
    let ev = evaluate(&corpus.records, &preds).unwrap();
    let mut acc_rows = 0;
    for cat in [TaskCategory::Qa, TaskCategory::Rqa, TaskCategory::Tre] {
        let rows: Vec<_> = ev
            .reports
            .iter()
            .filter(|r| r.category == cat && r.metric == MetricName::Accuracy)
            .collect();
        if rows.is_empty() {
            return Outcome::Fail(format!("no {cat} accuracy rows"));
        }
        if let Some(r) = rows.iter().find(|r| r.value != Some(1.0)) {
            return Outcome::Fail(format!("{cat} {}: {:?}", r.dataset, r.value));
        }
        acc_rows += rows.len();
    }

    // Localization: answer every polygon with its vertex box and compare
    // the scored F1 with a pixel-loop ceiling over the same boxes.
    let mut cfg = GenConfig::new(7);
    cfg.mix = "xbd=cd_loc".parse::<MixSpec>().unwrap();
    let outputs: Vec<_> = common::ingest_fixture(&dir.path().join("loc"), 7, 12)
        .into_iter()
        .filter(|o| {
            o.records
                .first()
                .is_some_and(|r| r.source == SourceKind::Xbd)
        })
        .collect();
    let loc = emit_corpus(&outputs, &cfg).unwrap().records;
    let mut counts = PixelCounts::default();
    let mut box_preds = Vec::new();
    for r in &loc {
        let eval = r.meta.eval.as_ref().unwrap();
        let (w, h) = (eval.width, eval.height);
        let rings: Vec<_> = eval.polygons.iter().map(|p| rings_of(&p.polygon)).collect();
        let boxes: Vec<BBox> = rings.iter().map(|r| vertex_box(r)).collect();
        let gt = brute_raster(
            &rings.iter().map(|r| (r.clone(), 1)).collect::<Vec<_>>(),
            w,
            h,
        );
        for y in 0..h {
            for x in 0..w {
                let p = boxes.iter().any(|b| common::covers(b, x, y));
                match (p, gt[(y * w + x) as usize] != 0) {
                    (true, true) => counts.tp += 1,
                    (true, false) => counts.fp += 1,
                    (false, true) => counts.fn_ += 1,
                    _ => {}
                }
            }
        }
        let text: Vec<String> = boxes.iter().map(BBox::to_string).collect();
        box_preds.push(Prediction::text(r.id.clone(), text.join(", ")));
    }
    let ceiling: f64 = counts.f1().unwrap();
    let ev = evaluate(&loc, &box_preds).unwrap();
    let scored = ev.reports[0].value.unwrap();
    check(
        (scored - ceiling).abs() <= 1e-9 && ceiling < 1.0,
        format!(
            "{acc_rows} QA/RQA/TRE accuracy rows at 1.0; localization F1 {scored:.6} vs ceiling {ceiling:.6} over {} records",
            loc.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = record_rng(6, "acceptance:6");
    let side = 32;
    for case in 0..500 {
        let t1 = random_boxes(&mut rng, side);
        let t2 = random_boxes(&mut rng, side);
        let region = if rng.random_bool(0.5) {
            random_boxes(&mut rng, side).pop()
        } else {
            None
        };
        let (diff, destructed, constructed) = diff_oracle(&t1, &t2, side);
        let got = detection_diff(&t1, &t2, side, side, 0.0).unwrap();
        let (d, c) = constructed_destructed_split(&t1, &t2, side, side).unwrap();
        let qa = change_qa_from_detections(&t1, &t2, region, 0.0);
        if got.as_slice() != diff.as_slice()
            || d.as_slice() != destructed.as_slice()
            || c.as_slice() != constructed.as_slice()
            || qa != qa_oracle(&t1, &t2, region)
        {
            return Outcome::Fail(format!("case {case} differs from the set-algebra oracle"));
        }
    }
    Outcome::Pass("500 fixtures: diff, split and change-QA match".into())
}

fn hash_tree(root: &Path, dir: &Path, h: &mut Sha256) {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            hash_tree(root, &p, h);
        } else {
            h.update(p.strip_prefix(root).unwrap().to_string_lossy().as_bytes());
            h.update(std::fs::read(&p).unwrap());
        }
    }
}

/// fixtures -> ingest -> corpus -> perfect responses -> evaluation, hashed.
fn pipeline_hash(workers: usize) -> String {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .unwrap();
    pool.install(|| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = FixtureConfig::new(7, 6);
        generate(dir.path(), &cfg).unwrap();
        let mut h = Sha256::new();
        hash_tree(dir.path(), dir.path(), &mut h);
        let outputs: Vec<_> = source_descriptors(dir.path(), &cfg.split)
            .iter()
            .map(|d| ingest_source(d).unwrap())
            .collect();
        let corpus = emit_corpus(&outputs, &GenConfig::new(7)).unwrap();
        let preds = oracle_predictions(&corpus.records, &OracleSpec::perfect(), 0);
        let ev = evaluate(&corpus.records, &preds).unwrap();
        h.update(corpus.to_jsonl());
        h.update(serde_json::to_string(&corpus.manifest).unwrap());
        h.update(eo_instruct::jsonl::to_jsonl(&preds));
        h.update(serde_json::to_string(&ev).unwrap());
        format!("{:x}", h.finalize())
    })
}

fn criterion_7() -> Outcome {
    let mut hashes = Vec::new();
    for workers in [1, 8] {
        for _ in 0..3 {
            hashes.push(pipeline_hash(workers));
        }
    }
    let same = hashes.iter().all(|h| *h == hashes[0]);
    check(
        same,
        format!(
            "6 runs (3 x workers 1, 3 x workers 8), sha256 {}",
            &hashes[0][..16]
        ),
    )
}

fn criterion_8() -> Outcome {
    let Some(root) = std::env::var_os(FULL_DATA_ENV) else {
        return Outcome::Skip(format!("{FULL_DATA_ENV} not set"));
    };
    let root = Path::new(&root);
    let mut outputs = Vec::new();
    for d in source_descriptors(root, "train") {
        if d.split_dir().is_dir() {
            match ingest_source(&d) {
                Ok(o) => outputs.push(o),
                Err(e) => return Outcome::Fail(format!("{}: {e}", d.kind)),
            }
        }
    }
    let corpus = match emit_corpus(&outputs, &GenConfig::new(0)) {
        Ok(c) => c,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let m = &corpus.manifest;
    let mut lines = Vec::new();
    let mut ok = m.total as u64 == REFERENCE_TOTAL;
    for (name, c) in &m.datasets {
        ok &= c.emitted as u64 == c.reference;
        lines.push(format!("{name} {}/{}", c.emitted, c.reference));
    }
    ok &= m.datasets.len() == 5;
    lines.push(format!("total {}/{REFERENCE_TOTAL}", m.total));
    check(ok, lines.join(", "))
}

/// A 224 x 224 example: a few rectilinear buildings as ground truth and
/// jittered boxes as the prediction.
fn perf_example(i: u64) -> PixelCounts {
    let mut rng = record_rng(9, &format!("acceptance:9:{i}"));
    let mut shapes = Vec::new();
    let mut boxes = Vec::new();
    for _ in 0..rng.random_range(1..12) {
        let x0 = rng.random_range(0.0..200.0f64);
        let y0 = rng.random_range(0.0..200.0f64);
        let x1 = (x0 + rng.random_range(4.0..40.0)).min(224.0);
        let y1 = (y0 + rng.random_range(4.0..40.0)).min(224.0);
        let xm = (x0 + x1) / 2.0;
        let ring = [
            (x0, y0),
            (x1, y0),
            (x1, (y0 + y1) / 2.0),
            (xm, (y0 + y1) / 2.0),
            (xm, y1),
            (x0, y1),
        ];
        shapes.push((Shape::from(polygon(&ring)), 1u8));
        let j = |v: f64, rng: &mut rand_chacha::ChaCha8Rng| {
            (v + rng.random_range(-3.0..3.0)).clamp(0.0, 224.0) as u32
        };
        let (a, b, c, d) = (
            j(x0, &mut rng),
            j(y0, &mut rng),
            j(x1, &mut rng),
            j(y1, &mut rng),
        );
        if a < c && b < d {
            boxes.push(BBox::new(a, b, c, d).unwrap());
        }
    }
    let gt = rasterize(&shapes, 224, 224, 2).unwrap();
    let pred = rasterize_boxes(&boxes, 224, 224).unwrap();
    PixelCounts::from_masks(&pred, &gt).unwrap()
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let total: PixelCounts = (0..10_000u64).into_par_iter().map(perf_example).sum();
    let secs = start.elapsed().as_secs_f64();
    let f1: f64 = total.f1().unwrap_or(0.0);
    check(
        secs < 60.0,
        format!(
            "10000 examples of 224x224 in {secs:.2} s on {} threads, micro F1 {f1:.4}",
            rayon::current_num_threads()
        ),
    )
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("raster and metric oracle equivalence", criterion_1),
        ("tiling counts", criterion_2),
        ("sequence cap", criterion_3),
        ("round-trip parsing", criterion_4),
        ("oracle ceilings", criterion_5),
        ("baseline procedures", criterion_6),
        ("determinism", criterion_7),
        ("full-data corpus counts", criterion_8),
        ("performance budget", criterion_9),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|x| *x == n.to_string()) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| (*s).to_owned()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {n} {tag}: {name}: {detail}");
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
