use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::vocab::GridCell;
use super::TaskError;
use crate::geom::BBox;
use crate::ingest::{ImageRef, Resolution, SourceKind};
use crate::metrics::TaskCategory;
use crate::Polygon;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskTag {
    Tsc,
    CdLoc,
    CdDmg,
    CdDet,
    Sre,
    Qa,
    Rqa,
    Tre,
    Rtqa,
    RegionCaption,
    DetailedDesc,
    GroundedDesc,
    SingleImagePassthrough,
}

impl TaskTag {
    pub const ALL: [TaskTag; 13] = [
        TaskTag::Tsc,
        TaskTag::CdLoc,
        TaskTag::CdDmg,
        TaskTag::CdDet,
        TaskTag::Sre,
        TaskTag::Qa,
        TaskTag::Rqa,
        TaskTag::Tre,
        TaskTag::Rtqa,
        TaskTag::RegionCaption,
        TaskTag::DetailedDesc,
        TaskTag::GroundedDesc,
        TaskTag::SingleImagePassthrough,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskTag::Tsc => "tsc",
            TaskTag::CdLoc => "cd_loc",
            TaskTag::CdDmg => "cd_dmg",
            TaskTag::CdDet => "cd_det",
            TaskTag::Sre => "sre",
            TaskTag::Qa => "qa",
            TaskTag::Rqa => "rqa",
            TaskTag::Tre => "tre",
            TaskTag::Rtqa => "rtqa",
            TaskTag::RegionCaption => "region_caption",
            TaskTag::DetailedDesc => "detailed_desc",
            TaskTag::GroundedDesc => "grounded_desc",
            TaskTag::SingleImagePassthrough => "single_image_passthrough",
        }
    }

    /// Scored category; `None` for captions and passthrough.
    pub fn category(self) -> Option<TaskCategory> {
        Some(match self {
            TaskTag::Tsc => TaskCategory::Tsc,
            TaskTag::CdLoc | TaskTag::CdDmg | TaskTag::CdDet => TaskCategory::Cd,
            TaskTag::Sre => TaskCategory::Sre,
            TaskTag::Qa => TaskCategory::Qa,
            TaskTag::Rqa => TaskCategory::Rqa,
            TaskTag::Tre => TaskCategory::Tre,
            TaskTag::Rtqa => TaskCategory::Rtqa,
            _ => return None,
        })
    }
}

impl fmt::Display for TaskTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskTag {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| TaskError::UnknownTask(s.to_owned()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
}

/// Structured ground truth of the (first) assistant turn.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Target {
    Class(String),
    Boxes(Vec<BBox>),
    YesNo(bool),
    Count(u32),
    GridCell(GridCell),
    /// 1-based, ascending.
    ImageRefs(Vec<u32>),
    /// Free text whose boxes are the structured part.
    Description(Vec<BBox>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Class,
    Boxes,
    YesNo,
    Count,
    GridCell,
    ImageRefs,
    Description,
}

impl Target {
    pub fn kind(&self) -> TargetKind {
        match self {
            Target::Class(_) => TargetKind::Class,
            Target::Boxes(_) => TargetKind::Boxes,
            Target::YesNo(_) => TargetKind::YesNo,
            Target::Count(_) => TargetKind::Count,
            Target::GridCell(_) => TargetKind::GridCell,
            Target::ImageRefs(_) => TargetKind::ImageRefs,
            Target::Description(_) => TargetKind::Description,
        }
    }

    pub fn boxes(&self) -> &[BBox] {
        match self {
            Target::Boxes(b) | Target::Description(b) => b,
            _ => &[],
        }
    }
}

/// How a record is scored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    Accuracy,
    /// Predicted boxes (or a supplied change mask) against the union of
    /// the evaluation polygons.
    PixelF1,
    /// The predicted class painted into the evaluation polygon, scored
    /// against the true class over the whole split.
    ClassWeightedF1 {
        classes: Vec<String>,
    },
    QFabric {
        classes: Vec<String>,
        window: u8,
        timestep: usize,
    },
    Unscored,
}

/// Ground-truth polygon for mask-based scoring; `label` is 1-based
/// (`0` is background).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPolygon {
    pub polygon: Polygon,
    pub label: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalGeometry {
    pub width: u32,
    pub height: u32,
    pub polygons: Vec<EvalPolygon>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub source: SourceKind,
    /// Report row label, e.g. `xBD Loc.`.
    pub dataset: String,
    pub variant: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
    pub protocol: Protocol,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_box: Option<BBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalGeometry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub id: String,
    pub images: Vec<ImageRef>,
    pub conversations: Vec<Turn>,
    pub task: TaskTag,
    pub meta: RecordMeta,
}

impl ConversationRecord {
    pub fn first_user(&self) -> Option<&str> {
        self.turn(Role::User)
    }

    pub fn first_assistant(&self) -> Option<&str> {
        self.turn(Role::Assistant)
    }

    fn turn(&self, role: Role) -> Option<&str> {
        self.conversations
            .iter()
            .find(|t| t.role == role)
            .map(|t| t.text.as_str())
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}
