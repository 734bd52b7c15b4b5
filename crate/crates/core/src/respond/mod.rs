//! Response parsing, option canonicalization and synthetic responders.

mod oracle;
mod parse;

use serde::{Deserialize, Serialize};

pub use oracle::{oracle_respond, OracleError, OracleMode, OracleSpec};
pub use parse::{
    canonical_text, canonicalize, matching_options, parse, Diagnostic, ParsedResponse, Polarity,
};

use crate::geom::RleMask;
use crate::taskgen::{Target, TargetKind};

/// One line of a prediction file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub response_text: String,
    /// Pixel-level change mask from an adapter; preferred over boxes by
    /// mask-based protocols when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub change_mask: Option<RleMask>,
}

impl Prediction {
    pub fn text(id: impl Into<String>, response_text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            response_text: response_text.into(),
            change_mask: None,
        }
    }
}

/// Reads the structured answer of the requested kind out of a parsed
/// response. `None` when the response does not contain one.
pub fn decode(parsed: &ParsedResponse, kind: TargetKind) -> Option<Target> {
    Some(match kind {
        TargetKind::Class => Target::Class(parsed.classes.first()?.clone()),
        TargetKind::Boxes => Target::Boxes(parsed.boxes.clone()),
        TargetKind::YesNo => Target::YesNo(parsed.polarity? == Polarity::Yes),
        TargetKind::Count => Target::Count(parsed.count?),
        TargetKind::GridCell => Target::GridCell(parsed.grid_cell?),
        TargetKind::ImageRefs => {
            if parsed.image_refs.is_empty() {
                return None;
            }
            let mut refs = parsed.image_refs.clone();
            refs.sort_unstable();
            refs.dedup();
            Target::ImageRefs(refs)
        }
        TargetKind::Description => Target::Description(parsed.boxes.clone()),
    })
}

/// Parses and decodes in one step, recording box-on-non-box-task and
/// out-of-range image diagnostics.
pub fn interpret<S: AsRef<str>>(
    text: &str,
    kind: TargetKind,
    options: &[S],
    n_images: usize,
) -> (Option<Target>, ParsedResponse) {
    let mut parsed = parse(text, options);
    if !matches!(kind, TargetKind::Boxes | TargetKind::Description) && !parsed.boxes.is_empty() {
        parsed.diagnostics.push(Diagnostic::IgnoredBoxes {
            count: parsed.boxes.len(),
        });
    }
    for &k in &parsed.image_refs {
        if k == 0 || k as usize > n_images {
            parsed.diagnostics.push(Diagnostic::ImageRefOutOfRange {
                index: k,
                images: n_images,
            });
        }
    }
    (decode(&parsed, kind), parsed)
}
