//! Per-source task variants. Each variant inspects a record, returns
//! [`TaskError::MissingField`] when the record lacks what it needs, and
//! otherwise renders one instruction/answer pair with its scoring
//! protocol.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::bank::{self, fill, pick};
use super::vocab::{
    capitalize, number_word, status_change_phrase, with_article, GridCell, DAMAGE_CLASSES,
    DISASTERS, FMOW_CLASSES, QFABRIC_CHANGE, QFABRIC_STATUS,
};
use super::{EvalPolygon, Protocol, Target, TaskError, TaskTag};
use crate::geom::{fill_polygon, BBox, Mask};
use crate::ingest::{ChangeKind, GeoLabel, SceneRecord, SourceKind};
use crate::respond::canonicalize;
use crate::rng::RecordRng;

/// One rendered task before prompt assembly.
#[derive(Clone, Debug)]
pub struct Draft {
    pub variant: &'static str,
    pub dataset: String,
    pub instruction: String,
    pub answer: String,
    pub target: Target,
    pub protocol: Protocol,
    pub options: Vec<String>,
    pub show_options: bool,
    pub wants_boxes: bool,
    pub query_box: Option<BBox>,
    pub eval: Option<Vec<EvalPolygon>>,
    /// Image indices to keep, when the task uses a subset.
    pub images: Option<Vec<usize>>,
}

impl Draft {
    fn new(
        variant: &'static str,
        dataset: &str,
        instruction: String,
        answer: String,
        target: Target,
    ) -> Self {
        Self {
            variant,
            dataset: dataset.to_owned(),
            instruction,
            answer,
            target,
            protocol: Protocol::Accuracy,
            options: Vec::new(),
            show_options: false,
            wants_boxes: false,
            query_box: None,
            eval: None,
            images: None,
        }
    }

    fn protocol(mut self, p: Protocol) -> Self {
        self.protocol = p;
        self
    }

    fn options(mut self, options: &[&str], show: bool) -> Self {
        self.options = options.iter().map(|s| (*s).to_owned()).collect();
        self.show_options = show;
        self
    }

    fn boxes_requested(mut self) -> Self {
        self.wants_boxes = true;
        self
    }

    fn query(mut self, b: BBox) -> Self {
        self.query_box = Some(b);
        self
    }

    fn eval(mut self, polygons: Vec<EvalPolygon>) -> Self {
        self.eval = Some(polygons);
        self
    }
}

pub type VariantFn = fn(&SceneRecord, &mut RecordRng) -> Result<Draft, TaskError>;

/// Variants implementing `tag` for records of `kind`.
pub fn variants(kind: SourceKind, tag: TaskTag) -> &'static [VariantFn] {
    use SourceKind::*;
    use TaskTag::*;
    match (kind, tag) {
        (FmowRgb | FmowSentinel, Tsc) => &[fmow_tsc],
        (Xbd, CdLoc) => &[xbd_loc],
        (Xbd, CdDmg) => &[xbd_dmg],
        (Xbd, Qa) => &[
            xbd_disaster,
            xbd_most_affected,
            xbd_count_destroyed,
            xbd_any_damaged,
        ],
        (Xbd, Rqa) => &[xbd_region_damaged, xbd_building_severity],
        (Xbd, Sre) => &[xbd_severe, xbd_section, xbd_area_class],
        (Xbd, RegionCaption) => &[xbd_building_caption],
        (Xbd, DetailedDesc) => &[xbd_detailed],
        (Xbd, GroundedDesc) => &[xbd_grounded],
        (S2looking, CdDet) => &[s2_det],
        (S2looking, Qa) => &[s2_any_kind, s2_count_changed],
        (S2looking, Rqa) => &[s2_area_changed],
        (S2looking, Sre) => &[s2_kind_boxes, s2_largest],
        (S2looking, DetailedDesc) => &[s2_detailed],
        (S2looking, GroundedDesc) => &[s2_grounded],
        (S2looking, RegionCaption) => &[s2_region_caption],
        (Qfabric, Tre) => &[qf_transition, qf_visible, qf_single_transition],
        (Qfabric, Rqa) => &[qf_developed, qf_change_type],
        (Qfabric, Rtqa) => &[qf_developed_between, qf_status],
        (Qfabric, RegionCaption) => &[qf_history, qf_history_between],
        _ => &[],
    }
}

fn missing(field: &'static str) -> TaskError {
    TaskError::MissingField { field }
}

/// A labelled object that can be referred to by a box.
struct Obj<'a> {
    label: &'a GeoLabel,
    bbox: BBox,
}

fn objects(rec: &SceneRecord) -> Vec<Obj<'_>> {
    rec.labels
        .iter()
        .filter_map(|l| l.prompt_box().map(|bbox| Obj { label: l, bbox }))
        .collect()
}

fn sorted_boxes<'a>(objs: impl Iterator<Item = &'a Obj<'a>>) -> Vec<BBox> {
    let mut b: Vec<BBox> = objs.map(|o| o.bbox).collect();
    b.sort_by_key(|b| (b.y_min, b.x_min, b.y_max, b.x_max));
    b
}

pub fn box_list(boxes: &[BBox]) -> String {
    boxes
        .iter()
        .map(|b| b.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn boxes_answer(boxes: &[BBox], empty: &str) -> String {
    if boxes.is_empty() {
        empty.to_owned()
    } else {
        format!("{}.", box_list(boxes))
    }
}

fn polys<'a>(labels: impl Iterator<Item = &'a GeoLabel>) -> Vec<EvalPolygon> {
    labels
        .map(|l| EvalPolygon {
            polygon: l.polygon.clone(),
            label: 1,
        })
        .collect()
}

/// Random query window of at least 48 px per side, or with probability
/// one half a window around a random object.
fn query_region(rec: &SceneRecord, rng: &mut RecordRng) -> BBox {
    let objs = objects(rec);
    let (w, h) = (rec.width, rec.height);
    if !objs.is_empty() && rng.random_bool(0.5) {
        let o = &objs[rng.random_range(0..objs.len())];
        let pad = rng.random_range(0..=16);
        return BBox {
            x_min: o.bbox.x_min.saturating_sub(pad),
            y_min: o.bbox.y_min.saturating_sub(pad),
            x_max: (o.bbox.x_max + pad).min(w),
            y_max: (o.bbox.y_max + pad).min(h),
        };
    }
    let span = |extent: u32, rng: &mut RecordRng| {
        let min = 48.min(extent);
        let len = rng.random_range(min..=extent);
        let start = rng.random_range(0..=extent - len);
        (start, start + len)
    };
    let (x0, x1) = span(w, rng);
    let (y0, y1) = span(h, rng);
    BBox {
        x_min: x0,
        y_min: y0,
        x_max: x1,
        y_max: y1,
    }
}

fn counted(n: usize, noun: &str) -> String {
    let s = if n == 1 { "" } else { "s" };
    format!("{} {noun}{s}", number_word(n))
}

fn ordinal(k: usize) -> String {
    const ORD: [&str; 8] = [
        "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth",
    ];
    ORD.get(k.wrapping_sub(1))
        .map(|s| (*s).to_owned())
        .unwrap_or_else(|| format!("{k}th"))
}

// ----- fMoW -----

fn fmow_dataset(kind: SourceKind) -> &'static str {
    if kind == SourceKind::FmowSentinel {
        "fMoW Sentinel"
    } else {
        "fMoW RGB"
    }
}

fn fmow_tsc(rec: &SceneRecord, _rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let raw = rec
        .sequence_class
        .as_deref()
        .ok_or(missing("sequence_class"))?;
    let class = canonicalize(raw, &FMOW_CLASSES).ok_or(missing("sequence_class"))?;
    Ok(Draft::new(
        "sequence_class",
        fmow_dataset(rec.source),
        "What class does this sequence of images belong to?".into(),
        format!("{class}."),
        Target::Class(class.into()),
    )
    .options(&FMOW_CLASSES, true))
}

// ----- xBD -----

fn damage_of(label: &GeoLabel) -> Option<&'static str> {
    let raw = label.sequence_class.as_deref().or_else(|| {
        label
            .classes_per_timestep
            .as_ref()?
            .last()
            .map(String::as_str)
    })?;
    canonicalize(raw, &DAMAGE_CLASSES)
}

fn damage_index(class: &str) -> u8 {
    DAMAGE_CLASSES.iter().position(|c| *c == class).unwrap_or(0) as u8
}

fn is_damaged(class: &str) -> bool {
    class != DAMAGE_CLASSES[0]
}

fn classified<'a>(objs: &'a [Obj<'a>]) -> impl Iterator<Item = (&'a Obj<'a>, &'static str)> {
    objs.iter()
        .filter_map(|o| damage_of(o.label).map(|c| (o, c)))
}

fn require_classified(rec: &SceneRecord) -> Result<(), TaskError> {
    if rec.labels.iter().any(|l| damage_of(l).is_some()) {
        Ok(())
    } else {
        Err(missing("damage class"))
    }
}

fn disaster_of(rec: &SceneRecord) -> Option<&'static str> {
    canonicalize(rec.disaster_type.as_deref()?, &DISASTERS)
}

fn xbd_loc(rec: &SceneRecord, _rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let objs = objects(rec);
    let boxes = sorted_boxes(objs.iter());
    Ok(Draft::new(
        "localization",
        "xBD Loc.",
        "Identify all the buildings in the image.".into(),
        boxes_answer(&boxes, "There are no buildings in the image."),
        Target::Boxes(boxes),
    )
    .protocol(Protocol::PixelF1)
    .boxes_requested()
    .eval(polys(rec.labels.iter())))
}

fn xbd_dmg(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let objs = objects(rec);
    let cands: Vec<_> = classified(&objs).collect();
    let &(o, class) = cands.choose(rng).ok_or(missing("damage class"))?;
    Ok(Draft::new(
        "damage_classification",
        "xBD Dmg Cls.",
        format!(
            "Classify the level of damage experienced by the building at location {} in the second image.",
            o.bbox
        ),
        format!("{class}."),
        Target::Class(class.into()),
    )
    .options(&DAMAGE_CLASSES, true)
    .protocol(Protocol::ClassWeightedF1 {
        classes: DAMAGE_CLASSES.map(String::from).to_vec(),
    })
    .query(o.bbox)
    .eval(vec![EvalPolygon {
        polygon: o.label.polygon.clone(),
        label: damage_index(class) + 1,
    }]))
}

fn xbd_disaster(rec: &SceneRecord, _rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let d = disaster_of(rec).ok_or(missing("disaster_type"))?;
    Ok(Draft::new(
        "disaster_type",
        "xBD",
        "What disaster has occurred here?".into(),
        format!("{}.", capitalize(&with_article(d))),
        Target::Class(d.into()),
    )
    .options(&DISASTERS, true))
}

/// Damaged-pixel count per grid cell, row-major.
fn damaged_pixels_per_cell(rec: &SceneRecord) -> [u64; 9] {
    let mut counts = [0u64; 9];
    let Ok(mut mask) = Mask::binary(rec.width, rec.height) else {
        return counts;
    };
    for l in &rec.labels {
        if damage_of(l).is_some_and(is_damaged) {
            fill_polygon(&mut mask, &l.polygon, 1);
        }
    }
    for (i, cell) in GridCell::ALL.iter().enumerate() {
        let w = cell.window(rec.width, rec.height);
        for y in w.y_min..w.y_max {
            for x in w.x_min..w.x_max {
                counts[i] += u64::from(mask.get(x, y));
            }
        }
    }
    counts
}

/// Cell with the most damaged pixels; ties go to the first cell in
/// row-major order.
pub fn most_affected_cell(rec: &SceneRecord) -> Option<GridCell> {
    let counts = damaged_pixels_per_cell(rec);
    let max = *counts.iter().max()?;
    (max > 0).then(|| GridCell::ALL[counts.iter().position(|&c| c == max).unwrap_or(0)])
}

fn xbd_most_affected(rec: &SceneRecord, _rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let cell = most_affected_cell(rec).ok_or(missing("damaged building"))?;
    Ok(Draft::new(
        "most_affected",
        "xBD",
        "Which part of the image was most affected by the disaster?".into(),
        format!("The {cell} of the image was most affected by the disaster."),
        Target::GridCell(cell),
    ))
}

fn xbd_count_destroyed(rec: &SceneRecord, _rng: &mut RecordRng) -> Result<Draft, TaskError> {
    require_classified(rec)?;
    let objs = objects(rec);
    let n = classified(&objs).filter(|(_, c)| *c == "Destroyed").count() as u32;
    Ok(Draft::new(
        "count_destroyed",
        "xBD",
        "How many buildings in the image have been destroyed?".into(),
        format!("{n}."),
        Target::Count(n),
    ))
}

fn yes_no(b: bool) -> String {
    if b { "Yes." } else { "No." }.to_owned()
}

fn xbd_any_damaged(rec: &SceneRecord, _rng: &mut RecordRng) -> Result<Draft, TaskError> {
    require_classified(rec)?;
    let objs = objects(rec);
    let any = classified(&objs).any(|(_, c)| is_damaged(c));
    Ok(Draft::new(
        "any_damaged",
        "xBD",
        "Are there any damaged buildings in the image?".into(),
        yes_no(any),
        Target::YesNo(any),
    ))
}

fn xbd_region_damaged(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    require_classified(rec)?;
    let region = query_region(rec, rng);
    let objs = objects(rec);
    let any = classified(&objs).any(|(o, c)| is_damaged(c) && o.bbox.intersects(&region));
    Ok(Draft::new(
        "region_damaged",
        "xBD",
        format!("Are there any damaged buildings in this region {region}?"),
        yes_no(any),
        Target::YesNo(any),
    )
    .query(region))
}

fn building_phrase(class: &str, idx: usize) -> String {
    if class == "Destroyed" {
        bank::BUILDING_DESTROYED[idx].to_owned()
    } else {
        fill(
            bank::BUILDING_LEVEL[idx],
            &[("level", &class.to_lowercase())],
        )
    }
}

fn xbd_building_severity(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let objs = objects(rec);
    let cands: Vec<_> = classified(&objs).collect();
    let &(o, class) = cands.choose(rng).ok_or(missing("damage class"))?;
    Ok(Draft::new(
        "building_severity",
        "xBD",
        format!("How severe is the damage to this building {}?", o.bbox),
        building_phrase(class, 0),
        Target::Class(class.into()),
    )
    .options(&DAMAGE_CLASSES, false)
    .query(o.bbox))
}

fn xbd_building_caption(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let objs = objects(rec);
    let cands: Vec<_> = classified(&objs).collect();
    let &(o, class) = cands.choose(rng).ok_or(missing("damage class"))?;
    let idx = rng.random_range(0..bank::BUILDING_LEVEL.len());
    Ok(Draft::new(
        "building_caption",
        "xBD",
        format!("How has this building {} changed?", o.bbox),
        building_phrase(class, idx),
        Target::Class(class.into()),
    )
    .options(&DAMAGE_CLASSES, false)
    .protocol(Protocol::Unscored)
    .query(o.bbox))
}

fn sre_draft(
    variant: &'static str,
    dataset: &str,
    instruction: String,
    selected: &[&GeoLabel],
    empty: &str,
) -> Draft {
    let objs: Vec<Obj> = selected
        .iter()
        .filter_map(|l| l.prompt_box().map(|bbox| Obj { label: l, bbox }))
        .collect();
    let boxes = sorted_boxes(objs.iter());
    Draft::new(
        variant,
        dataset,
        instruction,
        boxes_answer(&boxes, empty),
        Target::Boxes(boxes),
    )
    .protocol(Protocol::PixelF1)
    .boxes_requested()
    .eval(polys(selected.iter().copied()))
}

fn xbd_severe(rec: &SceneRecord, _rng: &mut RecordRng) -> Result<Draft, TaskError> {
    require_classified(rec)?;
    let selected: Vec<&GeoLabel> = rec
        .labels
        .iter()
        .filter(|l| matches!(damage_of(l), Some("Major Damage" | "Destroyed")))
        .collect();
    Ok(sre_draft(
        "severe_or_destroyed",
        "xBD",
        "Identify the severely damaged or destroyed buildings in the image.".into(),
        &selected,
        "There are no severely damaged or destroyed buildings in the image.",
    ))
}

fn xbd_section(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    require_classified(rec)?;
    let cell = GridCell::ALL[rng.random_range(0..9)];
    let selected: Vec<&GeoLabel> = rec
        .labels
        .iter()
        .filter(|l| damage_of(l).is_some_and(is_damaged))
        .filter(|l| {
            l.bbox()
                .is_ok_and(|b| GridCell::of_box(&b, rec.width, rec.height) == cell)
        })
        .collect();
    Ok(sre_draft(
        "damaged_in_section",
        "xBD",
        format!("Identify the damaged buildings in the {cell} of the image."),
        &selected,
        &format!("There are no damaged buildings in the {cell} of the image."),
    ))
}

fn damage_noun(class: &str) -> &'static str {
    match class {
        "No damage" => "undamaged buildings",
        "Minor Damage" => "buildings with minor damage",
        "Major Damage" => "buildings with major damage",
        _ => "destroyed buildings",
    }
}

fn xbd_area_class(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    require_classified(rec)?;
    let class = DAMAGE_CLASSES[rng.random_range(1..DAMAGE_CLASSES.len())];
    let region = query_region(rec, rng);
    let selected: Vec<&GeoLabel> = rec
        .labels
        .iter()
        .filter(|l| damage_of(l) == Some(class))
        .filter(|l| l.bbox().is_ok_and(|b| b.intersects(&region)))
        .collect();
    let noun = damage_noun(class);
    Ok(sre_draft(
        "class_in_area",
        "xBD",
        format!("Identify the {noun} in this area {region}."),
        &selected,
        &format!("There are no {noun} in the given area."),
    )
    .query(region))
}

fn xbd_summary(rec: &SceneRecord, rng: &mut RecordRng) -> Result<(String, Vec<BBox>), TaskError> {
    require_classified(rec)?;
    let d = disaster_of(rec).unwrap_or("disaster");
    let objs = objects(rec);
    let damaged: Vec<&Obj> = classified(&objs)
        .filter(|(_, c)| is_damaged(c))
        .map(|(o, _)| o)
        .collect();
    let text = if damaged.is_empty() {
        fill(pick(&bank::NO_DAMAGE_SUMMARY, rng), &[("d", d)])
    } else {
        let a_d = with_article(d);
        fill(
            pick(&bank::DAMAGE_SUMMARY, rng),
            &[
                ("a_d", &a_d),
                ("A_d", &capitalize(&a_d)),
                ("cn", &counted(damaged.len(), "building")),
            ],
        )
    };
    Ok((text, sorted_boxes(damaged.into_iter())))
}

fn xbd_detailed(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let (text, _) = xbd_summary(rec, rng)?;
    Ok(Draft::new(
        "detailed_description",
        "xBD",
        "Describe how the buildings have changed.".into(),
        text,
        Target::Description(vec![]),
    )
    .protocol(Protocol::Unscored))
}

fn grounded(text: String, boxes: &[BBox], what: &str, rng: &mut RecordRng) -> String {
    if boxes.is_empty() {
        return text;
    }
    let suffix = fill(
        pick(&bank::GROUNDING_SUFFIX, rng),
        &[("what", what), ("boxes", &box_list(boxes))],
    );
    format!("{text} {suffix}")
}

fn xbd_grounded(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let (text, boxes) = xbd_summary(rec, rng)?;
    let text = grounded(text, &boxes, "damaged buildings", rng);
    Ok(Draft::new(
        "grounded_description",
        "xBD",
        "Describe how the buildings have changed. Include bounding boxes.".into(),
        text,
        Target::Description(boxes),
    )
    .protocol(Protocol::Unscored)
    .boxes_requested())
}

// ----- S2Looking -----

fn change_of(l: &GeoLabel) -> Option<ChangeKind> {
    l.change
}

fn s2_det(rec: &SceneRecord, _rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let objs = objects(rec);
    let boxes = sorted_boxes(objs.iter());
    Ok(Draft::new(
        "change_detection",
        "S2Looking Det.",
        "Identify all changed buildings.".into(),
        boxes_answer(&boxes, "There are no changed buildings in the image."),
        Target::Boxes(boxes),
    )
    .protocol(Protocol::PixelF1)
    .boxes_requested()
    .eval(polys(rec.labels.iter())))
}

fn kind_words(kind: ChangeKind) -> (&'static str, &'static str) {
    match kind {
        ChangeKind::Constructed => ("constructed", "constructed"),
        ChangeKind::Demolished => ("destroyed", "destructed"),
    }
}

fn s2_any_kind(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let kind = if rng.random_bool(0.5) {
        ChangeKind::Constructed
    } else {
        ChangeKind::Demolished
    };
    let any = objects(rec)
        .iter()
        .any(|o| change_of(o.label) == Some(kind));
    Ok(Draft::new(
        "any_of_kind",
        "S2Looking",
        format!(
            "Have any buildings been {} in the area? Please answer with Yes or No.",
            kind_words(kind).0
        ),
        yes_no(any),
        Target::YesNo(any),
    ))
}

fn s2_count_changed(rec: &SceneRecord, _rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let n = objects(rec).len() as u32;
    Ok(Draft::new(
        "count_changed",
        "S2Looking",
        "How many buildings in the image have been built or destroyed?".into(),
        format!("{n}."),
        Target::Count(n),
    ))
}

fn s2_area_changed(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let region = query_region(rec, rng);
    let any = objects(rec).iter().any(|o| o.bbox.intersects(&region));
    Ok(Draft::new(
        "area_changed",
        "S2Looking",
        format!("Has the area {region} changed? Please answer with Yes or No."),
        yes_no(any),
        Target::YesNo(any),
    )
    .query(region))
}

fn s2_kind_boxes(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let kind = if rng.random_bool(0.5) {
        ChangeKind::Constructed
    } else {
        ChangeKind::Demolished
    };
    let word = kind_words(kind).1;
    let selected: Vec<&GeoLabel> = rec
        .labels
        .iter()
        .filter(|l| l.change == Some(kind))
        .collect();
    Ok(sre_draft(
        if kind == ChangeKind::Constructed {
            "constructed"
        } else {
            "destructed"
        },
        "S2Looking",
        format!("Identify the {word} buildings in the image."),
        &selected,
        &format!("There are no {word} buildings in the image."),
    ))
}

fn s2_largest(rec: &SceneRecord, _rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let objs = objects(rec);
    let o = objs
        .iter()
        .reduce(|a, b| {
            if b.label.polygon.area() > a.label.polygon.area() {
                b
            } else {
                a
            }
        })
        .ok_or(missing("changed building"))?;
    Ok(Draft::new(
        "largest_changed",
        "S2Looking",
        "What is the largest building that experienced a change?".into(),
        format!("{}.", o.bbox),
        Target::Boxes(vec![o.bbox]),
    )
    .protocol(Protocol::PixelF1)
    .boxes_requested()
    .eval(polys(std::iter::once(o.label))))
}

fn change_clause(constructed: usize, destroyed: usize) -> String {
    let part = |n: usize, verb: &str| {
        let have = if n == 1 { "has" } else { "have" };
        format!("{} {have} been {verb}", counted(n, "building"))
    };
    match (constructed, destroyed) {
        (0, 0) => "no buildings have been constructed or destroyed".to_owned(),
        (c, 0) => part(c, "constructed"),
        (0, d) => part(d, "destroyed"),
        (c, d) => format!("{} and {}", part(c, "constructed"), part(d, "destroyed")),
    }
}

fn s2_summary<'a>(objs: &[&Obj<'a>], rng: &mut RecordRng) -> String {
    let c = objs
        .iter()
        .filter(|o| o.label.change == Some(ChangeKind::Constructed))
        .count();
    let d = objs
        .iter()
        .filter(|o| o.label.change == Some(ChangeKind::Demolished))
        .count();
    let clause = change_clause(c, d);
    fill(
        pick(&bank::CHANGE_SUMMARY, rng),
        &[("Summary", &capitalize(&clause)), ("summary", &clause)],
    )
}

fn s2_detailed(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let objs = objects(rec);
    let text = s2_summary(&objs.iter().collect::<Vec<_>>(), rng);
    Ok(Draft::new(
        "detailed_description",
        "S2Looking",
        "Provide a detailed description of the buildings that have changed.".into(),
        text,
        Target::Description(vec![]),
    )
    .protocol(Protocol::Unscored))
}

fn s2_grounded(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let objs = objects(rec);
    let text = s2_summary(&objs.iter().collect::<Vec<_>>(), rng);
    let boxes = sorted_boxes(objs.iter());
    let text = grounded(text, &boxes, "changed buildings", rng);
    Ok(Draft::new(
        "grounded_description",
        "S2Looking",
        "Provide a detailed description of the buildings that have changed. Include bounding boxes in your output."
            .into(),
        text,
        Target::Description(boxes),
    )
    .protocol(Protocol::Unscored)
    .boxes_requested())
}

fn s2_region_caption(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let region = query_region(rec, rng);
    let objs = objects(rec);
    let inside: Vec<&Obj> = objs.iter().filter(|o| o.bbox.intersects(&region)).collect();
    let text = s2_summary(&inside, rng);
    Ok(Draft::new(
        "region_caption",
        "S2Looking",
        format!("Describe how the buildings have changed in this area: {region}."),
        text,
        Target::Description(vec![]),
    )
    .protocol(Protocol::Unscored)
    .query(region))
}

// ----- QFabric -----

fn statuses(l: &GeoLabel) -> Option<Vec<&'static str>> {
    l.classes_per_timestep
        .as_ref()?
        .iter()
        .map(|s| canonicalize(s, &QFABRIC_STATUS))
        .collect()
}

fn change_type(l: &GeoLabel) -> Option<&'static str> {
    canonicalize(l.sequence_class.as_deref()?, &QFABRIC_CHANGE)
}

/// Objects with a full status history.
fn status_objects(rec: &SceneRecord) -> Vec<(Obj<'_>, Vec<&'static str>)> {
    objects(rec)
        .into_iter()
        .filter_map(|o| statuses(o.label).map(|s| (o, s)))
        .collect()
}

/// 1-based images where the status becomes `s` relative to the previous
/// image.
fn transitions(history: &[&str], s: &str) -> Vec<u32> {
    (1..history.len())
        .filter(|&k| history[k] == s && history[k - 1] != s)
        .map(|k| k as u32 + 1)
        .collect()
}

fn refs_answer(refs: &[u32]) -> String {
    refs.iter()
        .map(|k| format!("Image {k}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn qf_transition_candidates(rec: &SceneRecord) -> Vec<(BBox, &'static str, Vec<u32>)> {
    let mut out = Vec::new();
    for (o, hist) in status_objects(rec) {
        for s in QFABRIC_STATUS {
            let t = transitions(&hist, s);
            if !t.is_empty() {
                out.push((o.bbox, s, t));
            }
        }
    }
    out
}

fn qf_transition(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let cands = qf_transition_candidates(rec);
    let (b, s, refs) = cands.choose(rng).ok_or(missing("status transition"))?;
    Ok(Draft::new(
        "status_transition",
        "QFabric",
        format!(
            "Identify all images in which {} in this region {b} from the previous image.",
            status_change_phrase(s)
        ),
        refs_answer(refs),
        Target::ImageRefs(refs.clone()),
    )
    .query(*b))
}

fn qf_single_transition(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let cands: Vec<_> = qf_transition_candidates(rec)
        .into_iter()
        .filter(|c| c.2.len() == 1)
        .collect();
    let (b, s, refs) = cands
        .choose(rng)
        .ok_or(missing("single status transition"))?;
    Ok(Draft::new(
        "single_transition",
        "QFabric",
        format!(
            "Identify the image when {} in this region {b}.",
            status_change_phrase(s)
        ),
        refs_answer(refs),
        Target::ImageRefs(refs.clone()),
    )
    .query(*b))
}

fn qf_visible(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let objs = status_objects(rec);
    let (o, hist) = objs.choose(rng).ok_or(missing("classes_per_timestep"))?;
    let s = *hist.choose(rng).ok_or(missing("classes_per_timestep"))?;
    let refs: Vec<u32> = hist
        .iter()
        .enumerate()
        .filter(|(_, h)| **h == s)
        .map(|(k, _)| k as u32 + 1)
        .collect();
    Ok(Draft::new(
        "status_visible",
        "QFabric",
        format!("In which images is {s} visible in this region {}?", o.bbox),
        refs_answer(&refs),
        Target::ImageRefs(refs),
    )
    .query(o.bbox))
}

fn change_objects(rec: &SceneRecord) -> Vec<(Obj<'_>, &'static str)> {
    objects(rec)
        .into_iter()
        .filter_map(|o| change_type(o.label).map(|c| (o, c)))
        .collect()
}

fn qf_developed(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let objs = change_objects(rec);
    let (o, c) = objs.choose(rng).ok_or(missing("sequence_class"))?;
    let yes = *c != QFABRIC_CHANGE[0];
    Ok(Draft::new(
        "developed",
        "QFabric",
        format!("Has there been urban development in this area {}?", o.bbox),
        yes_no(yes),
        Target::YesNo(yes),
    )
    .query(o.bbox))
}

fn qf_change_type(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    if rec.images.len() < 2 {
        return Err(missing("second image"));
    }
    let objs = change_objects(rec);
    let (o, c) = objs.choose(rng).ok_or(missing("sequence_class"))?;
    let label = QFABRIC_CHANGE.iter().position(|x| x == c).unwrap_or(0) as u8 + 1;
    let mut d = Draft::new(
        "change_type",
        "QFabric [2 images]",
        format!(
            "Identify the type of urban development that has occurred in this area {}.",
            o.bbox
        ),
        format!("{c}."),
        Target::Class((*c).into()),
    )
    .options(&QFABRIC_CHANGE, true)
    .protocol(Protocol::QFabric {
        classes: QFABRIC_CHANGE.map(String::from).to_vec(),
        window: 2,
        timestep: 0,
    })
    .query(o.bbox)
    .eval(vec![EvalPolygon {
        polygon: o.label.polygon.clone(),
        label,
    }]);
    d.images = Some(vec![0, rec.images.len() - 1]);
    Ok(d)
}

fn qf_developed_between(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let n = rec.images.len();
    if n < 2 {
        return Err(missing("second image"));
    }
    let objs = status_objects(rec);
    let (o, hist) = objs.choose(rng).ok_or(missing("classes_per_timestep"))?;
    let a = rng.random_range(0..n - 1);
    let b = rng.random_range(a + 1..n);
    let yes = hist[a] != hist[b];
    Ok(Draft::new(
        "developed_between",
        "QFabric",
        format!(
            "Has there been urban development in this area {} between image {} and image {}?",
            o.bbox,
            a + 1,
            b + 1
        ),
        yes_no(yes),
        Target::YesNo(yes),
    )
    .query(o.bbox))
}

fn qf_status(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let objs = status_objects(rec);
    let (o, hist) = objs.choose(rng).ok_or(missing("classes_per_timestep"))?;
    let n = rng.random_range(0..hist.len());
    let s = hist[n];
    let five = hist.len() == 5;
    let d = Draft::new(
        "status",
        if five {
            "QFabric [5 images]"
        } else {
            "QFabric"
        },
        format!(
            "What is the development status in this region {} in image {}?",
            o.bbox,
            n + 1
        ),
        format!("{s}."),
        Target::Class(s.into()),
    )
    .options(&QFABRIC_STATUS, true)
    .query(o.bbox);
    if !five {
        return Ok(d);
    }
    let label = QFABRIC_STATUS.iter().position(|x| *x == s).unwrap_or(0) as u8 + 1;
    Ok(d.protocol(Protocol::QFabric {
        classes: QFABRIC_STATUS.map(String::from).to_vec(),
        window: 5,
        timestep: n,
    })
    .eval(vec![EvalPolygon {
        polygon: o.label.polygon.clone(),
        label,
    }]))
}

fn history_story(hist: &[&str]) -> String {
    let mut steps: Vec<String> = hist.iter().map(|s| s.to_lowercase()).collect();
    steps.dedup();
    match steps.as_slice() {
        [only] => format!("remained {only} throughout"),
        [first, rest @ ..] => {
            let mut s = format!("was {first} at first");
            for (i, r) in rest.iter().enumerate() {
                s.push_str(if i == 0 {
                    ", and then became "
                } else {
                    " and then became "
                });
                s.push_str(r);
            }
            s
        }
        [] => "did not change".to_owned(),
    }
}

fn qf_history(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let objs = status_objects(rec);
    let (o, hist) = objs.choose(rng).ok_or(missing("classes_per_timestep"))?;
    let text = fill(
        pick(&bank::REGION_HISTORY, rng),
        &[("story", &history_story(hist))],
    );
    Ok(Draft::new(
        "region_history",
        "QFabric",
        format!(
            "How has the area {} changed as a result of urban development?",
            o.bbox
        ),
        text,
        Target::Description(vec![]),
    )
    .protocol(Protocol::Unscored)
    .query(o.bbox))
}

fn qf_history_between(rec: &SceneRecord, rng: &mut RecordRng) -> Result<Draft, TaskError> {
    let n = rec.images.len();
    if n < 2 {
        return Err(missing("second image"));
    }
    let objs = status_objects(rec);
    let (o, hist) = objs.choose(rng).ok_or(missing("classes_per_timestep"))?;
    let a = rng.random_range(0..n - 1);
    let b = rng.random_range(a + 1..n);
    let body = fill(
        pick(&bank::REGION_HISTORY, rng),
        &[("story", &history_story(&hist[a..=b]))],
    );
    let mut body_chars = body.chars();
    let lowered: String = body_chars
        .next()
        .map(|c| c.to_lowercase().chain(body_chars).collect())
        .unwrap_or_default();
    let text = format!(
        "Between the {} and {} images, {lowered}",
        ordinal(a + 1),
        ordinal(b + 1)
    );
    Ok(Draft::new(
        "region_history_between",
        "QFabric",
        format!(
            "How has the area {} changed due to urban development from image {} to image {}?",
            o.bbox,
            a + 1,
            b + 1
        ),
        text,
        Target::Description(vec![]),
    )
    .protocol(Protocol::Unscored)
    .query(o.bbox))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transitions_are_one_based() {
        let h = [
            "Greenland",
            "Land Cleared",
            "Land Cleared",
            "Excavation",
            "Land Cleared",
        ];
        assert_eq!(transitions(&h, "Land Cleared"), vec![2, 5]);
        assert_eq!(transitions(&h, "Greenland"), Vec::<u32>::new());
    }

    #[test]
    fn stories() {
        assert_eq!(
            history_story(&["Greenland", "Greenland", "Construction Done"]),
            "was greenland at first, and then became construction done"
        );
        assert_eq!(
            history_story(&["Operational"]),
            "remained operational throughout"
        );
    }

    #[test]
    fn change_clauses() {
        assert_eq!(change_clause(5, 0), "five buildings have been constructed");
        assert_eq!(
            change_clause(1, 2),
            "one building has been constructed and two buildings have been destroyed"
        );
    }
}
