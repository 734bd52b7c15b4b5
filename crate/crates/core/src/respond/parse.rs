use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::geom::BBox;
use crate::taskgen::vocab::{number_from_word, GridCell};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Yes,
    No,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// Bracketed text that is not four non-negative numbers.
    MalformedBox { text: String },
    /// Four numbers with `max <= min` on some axis.
    InvertedBox { text: String },
    /// Both a yes and a no token; the first one was used.
    ConflictingPolarity,
    /// More than one option matched; the longest was used.
    AmbiguousClass { matched: Vec<String> },
    /// Boxes appeared where the target is not box-valued; they were
    /// ignored for scoring.
    IgnoredBoxes { count: usize },
    /// An image reference outside the record's sequence.
    ImageRefOutOfRange { index: u32, images: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub boxes: Vec<BBox>,
    pub classes: Vec<String>,
    pub image_refs: Vec<u32>,
    pub polarity: Option<Polarity>,
    pub grid_cell: Option<GridCell>,
    pub count: Option<u32>,
    pub free_text: String,
    pub diagnostics: Vec<Diagnostic>,
}

pub(crate) static BRACKET: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[([^\[\]]*)\]").expect("valid pattern"));
static IMAGE_REF: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bimage\s+(\d{1,9})\b").expect("valid pattern"));
pub(crate) static POLARITY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(yes|no)\b").expect("valid pattern"));
static GRID: LazyLock<Regex> = LazyLock::new(|| {
    let names: Vec<String> = GridCell::ALL
        .iter()
        .map(|c| c.name().replace(' ', r"[\s\-_]+"))
        .collect();
    Regex::new(&format!(r"(?i)\b(?:{})\b", names.join("|"))).expect("valid pattern")
});
static INTEGER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:^|[^\w.])(\d{1,9})(?:\.\d+)?\b|\b(zero|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|thirteen|fourteen|fifteen|sixteen|seventeen|eighteen|nineteen|twenty)\b")
        .expect("valid pattern")
});

/// Box candidates found in `text`: span and outcome.
pub(crate) fn box_candidates(text: &str) -> Vec<(Range<usize>, Result<BBox, Diagnostic>)> {
    BRACKET
        .captures_iter(text)
        .map(|c| {
            let whole = c.get(0).expect("match");
            (whole.range(), parse_box(&c[1], whole.as_str()))
        })
        .collect()
}

fn parse_box(inner: &str, raw: &str) -> Result<BBox, Diagnostic> {
    let malformed = || Diagnostic::MalformedBox {
        text: raw.to_owned(),
    };
    let fields: Vec<&str> = inner.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(malformed());
    }
    let mut v = [0f64; 4];
    for (slot, f) in v.iter_mut().zip(&fields) {
        let x: f64 = f.parse().map_err(|_| malformed())?;
        if !x.is_finite() || x < 0.0 || x > f64::from(u32::MAX) {
            return Err(malformed());
        }
        *slot = x;
    }
    let (x0, y0, x1, y1) = (
        v[0].floor() as u32,
        v[1].floor() as u32,
        v[2].ceil() as u32,
        v[3].ceil() as u32,
    );
    BBox::new(x0, y0, x1, y1).map_err(|_| Diagnostic::InvertedBox {
        text: raw.to_owned(),
    })
}

/// Case-folds, turns every non-alphanumeric character into a space and
/// collapses whitespace.
pub fn canonical_text(s: &str) -> String {
    let mapped: String = s
        .chars()
        .map(|c| {
            if c.is_alphanumeric() {
                c.to_lowercase().next().unwrap_or(c)
            } else {
                ' '
            }
        })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Every option contained in `text` at word boundaries after
/// canonicalization, longest first (ties keep option order).
pub fn matching_options<'a, S: AsRef<str>>(text: &str, options: &'a [S]) -> Vec<&'a str> {
    let hay = format!(" {} ", canonical_text(text));
    let mut hits: Vec<(usize, usize, &str)> = options
        .iter()
        .enumerate()
        .filter_map(|(i, o)| {
            let c = canonical_text(o.as_ref());
            (!c.is_empty() && hay.contains(&format!(" {c} "))).then(|| (c.len(), i, o.as_ref()))
        })
        .collect();
    hits.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    hits.into_iter().map(|(_, _, o)| o).collect()
}

/// The option `text` names, if any: longest canonical containment.
pub fn canonicalize<'a, S: AsRef<str>>(text: &str, options: &'a [S]) -> Option<&'a str> {
    matching_options(text, options).into_iter().next()
}

/// Total parser: never fails; anything suspicious lands in
/// `diagnostics`.
pub fn parse<S: AsRef<str>>(text: &str, options: &[S]) -> ParsedResponse {
    let mut out = ParsedResponse::default();
    let mut masked: Vec<Range<usize>> = Vec::new();
    for (span, result) in box_candidates(text) {
        match result {
            Ok(b) => out.boxes.push(b),
            Err(d) => out.diagnostics.push(d),
        }
        masked.push(span);
    }

    for c in IMAGE_REF.captures_iter(text) {
        if let Ok(k) = c[1].parse::<u32>() {
            out.image_refs.push(k);
        }
        masked.push(c.get(0).expect("match").range());
    }

    let polarity: Vec<Polarity> = POLARITY
        .captures_iter(text)
        .map(|c| {
            if c[1].eq_ignore_ascii_case("yes") {
                Polarity::Yes
            } else {
                Polarity::No
            }
        })
        .collect();
    out.polarity = polarity.first().copied();
    if polarity.iter().any(|p| Some(*p) != out.polarity) {
        out.diagnostics.push(Diagnostic::ConflictingPolarity);
    }

    // Earliest position, longest name at that position.
    let mut best: Option<(usize, usize, GridCell)> = None;
    for m in GRID.find_iter(text) {
        let canon = canonical_text(m.as_str());
        if let Some(cell) = GridCell::ALL.iter().find(|c| c.name() == canon) {
            let cand = (m.start(), m.len(), *cell);
            best = match best {
                Some(b) if b.0 < cand.0 || (b.0 == cand.0 && b.1 >= cand.1) => Some(b),
                _ => Some(cand),
            };
        }
    }
    out.grid_cell = best.map(|b| b.2);

    out.free_text = strip_spans(text, &masked);
    out.count = INTEGER.captures_iter(&out.free_text).find_map(|c| {
        if let Some(d) = c.get(1) {
            d.as_str().parse().ok()
        } else {
            c.get(2).and_then(|w| number_from_word(w.as_str()))
        }
    });

    let matched = matching_options(&out.free_text, options);
    if matched.len() > 1 {
        out.diagnostics.push(Diagnostic::AmbiguousClass {
            matched: matched.iter().map(|s| (*s).to_owned()).collect(),
        });
    }
    out.classes = matched.into_iter().take(1).map(str::to_owned).collect();
    out
}

fn strip_spans(text: &str, spans: &[Range<usize>]) -> String {
    let mut spans = spans.to_vec();
    spans.sort_by_key(|r| r.start);
    let mut out = String::with_capacity(text.len());
    let mut at = 0;
    for r in spans {
        if r.start >= at {
            out.push_str(&text[at..r.start]);
            out.push(' ');
            at = r.end;
        } else if r.end > at {
            at = r.end;
        }
    }
    out.push_str(&text[at..]);
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}
