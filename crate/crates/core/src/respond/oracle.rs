use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::parse::{box_candidates, BRACKET, POLARITY};
use crate::geom::BBox;
use crate::taskgen::vocab::GridCell;
use crate::taskgen::{ConversationRecord, Target};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OracleMode {
    /// The ground-truth answer verbatim.
    Perfect,
    /// The ground-truth answer with boxes jittered or dropped and labels
    /// flipped.
    Noisy,
    /// The same text for every record.
    Constant { text: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    #[serde(flatten)]
    pub mode: OracleMode,
    /// Maximum absolute per-coordinate box shift in pixels.
    #[serde(default)]
    pub jitter: u32,
    /// Probability of replacing a class, polarity, count, cell or image
    /// reference answer with a wrong one.
    #[serde(default)]
    pub flip_rate: f64,
    /// Probability of dropping each box.
    #[serde(default)]
    pub miss_rate: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("rate {0} is outside [0, 1]")]
    Rate(f64),
}

impl OracleSpec {
    pub fn perfect() -> Self {
        Self {
            mode: OracleMode::Perfect,
            jitter: 0,
            flip_rate: 0.0,
            miss_rate: 0.0,
        }
    }

    pub fn constant(text: impl Into<String>) -> Self {
        Self {
            mode: OracleMode::Constant { text: text.into() },
            ..Self::perfect()
        }
    }

    pub fn noisy(jitter: u32, flip_rate: f64, miss_rate: f64) -> Result<Self, OracleError> {
        let s = Self {
            mode: OracleMode::Noisy,
            jitter,
            flip_rate,
            miss_rate,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        for r in [self.flip_rate, self.miss_rate] {
            if !(0.0..=1.0).contains(&r) {
                return Err(OracleError::Rate(r));
            }
        }
        Ok(())
    }
}

/// Synthetic response for `record`. Records without an assistant turn
/// get an empty response.
pub fn oracle_respond<R: Rng + ?Sized>(
    record: &ConversationRecord,
    spec: &OracleSpec,
    rng: &mut R,
) -> String {
    let truth = record.first_assistant().unwrap_or_default();
    match &spec.mode {
        OracleMode::Perfect => truth.to_owned(),
        OracleMode::Constant { text } => text.clone(),
        OracleMode::Noisy => {
            if spec.jitter == 0 && spec.flip_rate == 0.0 && spec.miss_rate == 0.0 {
                return truth.to_owned();
            }
            let (w, h) = record
                .meta
                .eval
                .as_ref()
                .map_or((224, 224), |e| (e.width, e.height));
            let text = perturb_boxes(truth, spec, w, h, rng);
            match &record.meta.target {
                Some(t) if spec.flip_rate > 0.0 && rng.random_bool(spec.flip_rate) => {
                    flip_answer(&text, t, &record.meta.options, record.images.len(), rng)
                }
                _ => text,
            }
        }
    }
}

fn perturb_boxes<R: Rng + ?Sized>(
    text: &str,
    spec: &OracleSpec,
    width: u32,
    height: u32,
    rng: &mut R,
) -> String {
    let mut out = String::with_capacity(text.len());
    let mut at = 0;
    for (span, parsed) in box_candidates(text) {
        let Ok(b) = parsed else { continue };
        out.push_str(&text[at..span.start]);
        at = span.end;
        if spec.miss_rate > 0.0 && rng.random_bool(spec.miss_rate) {
            // Swallow the separator that follows the dropped box.
            let rest = &text[at..];
            let sep = rest.len() - rest.trim_start_matches([',', ' ']).len();
            if rest[..sep].contains(',') {
                at += sep;
            }
            continue;
        }
        out.push_str(&jitter_box(b, spec.jitter, width, height, rng).to_string());
    }
    out.push_str(&text[at..]);
    // Tidy a trailing separator left by a dropped final box.
    let tidy = Regex::new(r",\s*([.\n]|$)").expect("valid pattern");
    let out = tidy.replace_all(&out, "$1").into_owned();
    if BRACKET.is_match(text) && !BRACKET.is_match(&out) && out.trim_matches(['.', ' ']).is_empty()
    {
        return "There are no buildings in the image.".to_owned();
    }
    out
}

fn jitter_box<R: Rng + ?Sized>(b: BBox, j: u32, width: u32, height: u32, rng: &mut R) -> BBox {
    if j == 0 {
        return b;
    }
    let j = i64::from(j);
    let mut shift = |v: u32, limit: u32| -> u32 {
        (i64::from(v) + rng.random_range(-j..=j)).clamp(0, i64::from(limit)) as u32
    };
    let (mut x0, mut y0) = (shift(b.x_min, width), shift(b.y_min, height));
    let (mut x1, mut y1) = (shift(b.x_max, width), shift(b.y_max, height));
    if x0 > x1 {
        std::mem::swap(&mut x0, &mut x1);
    }
    if y0 > y1 {
        std::mem::swap(&mut y0, &mut y1);
    }
    if x0 == x1 {
        if x1 < width {
            x1 += 1
        } else {
            x0 -= 1
        }
    }
    if y0 == y1 {
        if y1 < height {
            y1 += 1
        } else {
            y0 -= 1
        }
    }
    BBox::new(x0, y0, x1, y1).unwrap_or(b)
}

fn flip_answer<R: Rng + ?Sized>(
    text: &str,
    target: &Target,
    options: &[String],
    n_images: usize,
    rng: &mut R,
) -> String {
    match target {
        Target::Class(gt) => {
            let others: Vec<&String> = options.iter().filter(|o| *o != gt).collect();
            if others.is_empty() {
                return text.to_owned();
            }
            let other = others[rng.random_range(0..others.len())];
            let re = Regex::new(&format!(r"(?i)\b{}\b", regex::escape(gt))).expect("escaped");
            if re.is_match(text) {
                re.replacen(text, 1, regex::NoExpand(other)).into_owned()
            } else {
                format!("{other}.")
            }
        }
        Target::YesNo(_) => POLARITY
            .replacen(text, 1, |c: &regex::Captures| {
                let yes = c[1].eq_ignore_ascii_case("yes");
                let word = if yes { "no" } else { "yes" };
                if c[1].starts_with(|ch: char| ch.is_uppercase()) {
                    let mut w = word.to_owned();
                    w[..1].make_ascii_uppercase();
                    w
                } else {
                    word.to_owned()
                }
            })
            .into_owned(),
        Target::Count(n) => format!("{}.", n + 1),
        Target::GridCell(cell) => {
            let others: Vec<GridCell> = GridCell::ALL.into_iter().filter(|c| c != cell).collect();
            let other = others[rng.random_range(0..others.len())];
            text.replacen(cell.name(), other.name(), 1)
        }
        Target::ImageRefs(refs) if n_images > 0 => {
            let mut refs = refs.clone();
            let k = rng.random_range(1..=n_images as u32);
            match refs.iter().position(|&r| r == k) {
                Some(i) if refs.len() > 1 => {
                    refs.remove(i);
                }
                Some(_) => refs = vec![if k == 1 { 2 } else { 1 }],
                None => {
                    refs.push(k);
                    refs.sort_unstable();
                }
            }
            refs.iter()
                .map(|r| format!("Image {r}"))
                .collect::<Vec<_>>()
                .join(", ")
        }
        _ => text.to_owned(),
    }
}
