//! Reader for the single-image instruction corpus.
//!
//! Input lines are `{"id", "image", "conversations": [{"from", "value"}]}`
//! where `from` is `human` or `gpt`. Task tokens are replaced by plain
//! instructions and boxes written as `{<x1><y1><x2><y2>|<angle>}` on a
//! 0–100 scale are rewritten as `[x_min, y_min, x_max, y_max]` in the
//! 224 frame (angle dropped, extent rounded outward).

use std::io::BufRead;
use std::path::Path;
use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use super::{IngestError, FRAME_SIZE};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingleTurn {
    pub from: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingleImageExample {
    pub id: String,
    pub image: String,
    pub conversations: Vec<SingleTurn>,
}

const TASK_TOKENS: [(&str, &str); 3] = [
    (
        "[grounding]",
        "Please include bounding boxes of the form [x_min, y_min, x_max, y_max] in your response.",
    ),
    (
        "[refer]",
        "Give the bounding box of the described object in the form [x_min, y_min, x_max, y_max].",
    ),
    ("[identify]", "Identify what is in the given region."),
];

static BOX: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\{<(-?\d+(?:\.\d+)?)><(-?\d+(?:\.\d+)?)><(-?\d+(?:\.\d+)?)><(-?\d+(?:\.\d+)?)>(?:\|<[^>]*>)?\}")
        .expect("valid box pattern")
});

fn to_frame(v: f64, outward_up: bool) -> u32 {
    let s = (v.clamp(0.0, 100.0) * f64::from(FRAME_SIZE)) / 100.0;
    let r = if outward_up { s.ceil() } else { s.floor() };
    r as u32
}

/// Rewrites one turn: task tokens become instructions, boxes become
/// bracketed 224-frame boxes, and the `<image>` placeholder is removed.
pub fn convert_single_turn(text: &str) -> String {
    let mut body = text.replace("<image>", "");
    let mut appended = Vec::new();
    for (token, instruction) in TASK_TOKENS {
        if body.contains(token) {
            body = body.replace(token, "");
            appended.push(instruction);
        }
    }
    let body = BOX.replace_all(&body, |c: &Captures| {
        let v = |i: usize| c[i].parse::<f64>().unwrap_or(0.0);
        let (x0, y0, x1, y1) = (
            v(1).min(v(3)),
            v(2).min(v(4)),
            v(1).max(v(3)),
            v(2).max(v(4)),
        );
        let (a, b) = (to_frame(x0, false), to_frame(y0, false));
        let (mut c2, mut d) = (to_frame(x1, true), to_frame(y1, true));
        if c2 <= a {
            c2 = (a + 1).min(FRAME_SIZE);
        }
        if d <= b {
            d = (b + 1).min(FRAME_SIZE);
        }
        format!("[{a}, {b}, {c2}, {d}]")
    });
    let mut out = body.split_whitespace().collect::<Vec<_>>().join(" ");
    for instruction in appended {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(instruction);
    }
    out
}

/// Reads and converts the corpus file. Errors carry the line number as
/// the record index.
pub fn read_single_corpus(path: &Path) -> Result<Vec<SingleImageExample>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut out = Vec::new();
    for (index, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| IngestError::Io {
            path: path.to_owned(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut ex: SingleImageExample =
            serde_json::from_str(&line).map_err(|e| IngestError::Label {
                path: path.to_owned(),
                index,
                message: e.to_string(),
            })?;
        if ex.conversations.is_empty() {
            return Err(IngestError::Label {
                path: path.to_owned(),
                index,
                message: "no conversation turns".into(),
            });
        }
        for turn in &mut ex.conversations {
            turn.value = convert_single_turn(&turn.value);
        }
        out.push(ex);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grounding_token_replaced() {
        let s = convert_single_turn("<image>\n[grounding] Describe the image in detail.");
        assert_eq!(
            s,
            "Describe the image in detail. Please include bounding boxes of the form \
             [x_min, y_min, x_max, y_max] in your response."
        );
        assert!(!s.contains("[grounding]"));
    }

    #[test]
    fn boxes_rescaled_and_angle_dropped() {
        let s = convert_single_turn("There is a plane {<10><20.5><50><60>|<35>} here.");
        // 10*2.24 = 22.4 -> 22; 20.5*2.24 = 45.92 -> 45; 112; 134.4 -> 135.
        assert_eq!(s, "There is a plane [22, 45, 112, 135] here.");
    }

    #[test]
    fn identify_token() {
        let s = convert_single_turn("[identify] {<0><0><100><100>|<0>}");
        assert_eq!(s, "[0, 0, 224, 224] Identify what is in the given region.");
    }
}
