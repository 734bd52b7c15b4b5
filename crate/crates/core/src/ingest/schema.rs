//! Normalized interchange schema: one JSON file per scene.
//!
//! ```json
//! {
//!   "id": "scene-0001",
//!   "images": ["images/scene-0001_0.png", "images/scene-0001_1.png"],
//!   "width": 1024,
//!   "height": 1024,
//!   "sensor": "WorldView-2",
//!   "resolution": "high",
//!   "disaster_type": "flood",
//!   "sequence_class": null,
//!   "crop_box": [x0, y0, x1, y1],
//!   "labels": [
//!     {
//!       "polygon": [[x, y], ...],
//!       "holes": [[[x, y], ...]],
//!       "classes_per_timestep": ["Greenland", ...],
//!       "sequence_class": "Minor Damage",
//!       "change": "constructed"
//!     }
//!   ]
//! }
//! ```
//!
//! Optional fields are omitted rather than written as `null`. Image
//! paths are relative to the split directory. Field order above is the
//! serialization order, so a file written by [`SceneFile::to_json`]
//! reads back and re-serializes to identical bytes.

use serde::{Deserialize, Serialize};

use super::record::{ChangeKind, Resolution};
use crate::geom::BBox;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub id: String,
    pub images: Vec<String>,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disaster_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop_box: Option<BBox>,
    #[serde(default)]
    pub labels: Vec<LabelEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelEntry {
    pub polygon: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holes: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes_per_timestep: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub change: Option<ChangeKind>,
}

impl SceneFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scene file serializes")
    }
}
