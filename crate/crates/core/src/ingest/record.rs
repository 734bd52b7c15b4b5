use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{RecordError, SourceKind};
use crate::geom::{min_aabb, BBox, GeomError};
use crate::{Polygon, TileTransform};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    High,
    Low,
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resolution::High => "high",
            Resolution::Low => "low",
        })
    }
}

/// Building-change flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Constructed,
    Demolished,
}

/// Image path plus an optional pixel window inside it.
///
/// Serialized as a single string: `path` or `path#crop=x0,y0,x1,y1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ImageRef {
    pub path: String,
    pub crop: Option<BBox>,
}

const CROP_MARK: &str = "#crop=";

impl ImageRef {
    pub fn new(path: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            crop: None,
        }
    }

    /// Narrows the crop window; `window` is relative to the current crop.
    pub fn cropped(&self, window: BBox) -> Self {
        let crop = match self.crop {
            None => window,
            Some(c) => BBox {
                x_min: c.x_min + window.x_min,
                y_min: c.y_min + window.y_min,
                x_max: c.x_min + window.x_max,
                y_max: c.y_min + window.y_max,
            },
        };
        Self {
            path: self.path.clone(),
            crop: Some(crop),
        }
    }
}

impl fmt::Display for ImageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.path)?;
        if let Some(c) = self.crop {
            write!(
                f,
                "{CROP_MARK}{},{},{},{}",
                c.x_min, c.y_min, c.x_max, c.y_max
            )?;
        }
        Ok(())
    }
}

impl FromStr for ImageRef {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let Some((path, spec)) = s.rsplit_once(CROP_MARK) else {
            return Ok(ImageRef::new(s));
        };
        let nums: Vec<u32> = spec
            .split(',')
            .filter_map(|v| v.trim().parse().ok())
            .collect();
        let crop = match nums.as_slice() {
            &[a, b, c, d] if spec.split(',').count() == 4 => BBox::new(a, b, c, d)?,
            _ => return Ok(ImageRef::new(s)),
        };
        Ok(ImageRef {
            path: path.to_owned(),
            crop: Some(crop),
        })
    }
}

impl Serialize for ImageRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ImageRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One annotated object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoLabel {
    pub polygon: Polygon,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes_per_timestep: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub change: Option<ChangeKind>,
    /// Set when tiling cut this object down to a sliver: its polygon is
    /// kept for masks, but it is not offered as a box.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub edge_sliver: bool,
}

impl GeoLabel {
    pub fn bbox(&self) -> Result<BBox, GeomError> {
        min_aabb(&self.polygon)
    }

    /// Box for prompts and answers; `None` for slivers and degenerate
    /// geometry.
    pub fn prompt_box(&self) -> Option<BBox> {
        if self.edge_sliver {
            return None;
        }
        self.bbox().ok()
    }
}

/// One normalized example: an image sequence with its labels, expressed
/// in a single pixel frame of size `width x height`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub id: String,
    pub source: SourceKind,
    pub images: Vec<ImageRef>,
    pub order: Vec<u32>,
    pub width: u32,
    pub height: u32,
    pub labels: Vec<GeoLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disaster_type: Option<String>,
    /// Map from the source image frame to this record's frame, one per
    /// image.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<TileTransform>,
}

impl SceneRecord {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        let n = self.images.len();
        if n == 0 {
            return Err(RecordError::NoImages);
        }
        if self.order.len() != n {
            return Err(RecordError::OrderLength {
                images: n,
                order: self.order.len(),
            });
        }
        if self.order.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RecordError::OrderNotIncreasing);
        }
        if !self.transforms.is_empty() && self.transforms.len() != n {
            return Err(RecordError::TransformCount {
                images: n,
                transforms: self.transforms.len(),
            });
        }
        let (w, h) = (f64::from(self.width), f64::from(self.height));
        for (i, label) in self.labels.iter().enumerate() {
            label
                .polygon
                .check_rings()
                .map_err(|source| RecordError::Geometry { label: i, source })?;
            let (lo, hi) = label.polygon.bounds();
            if lo.x < 0.0 || lo.y < 0.0 || hi.x > w || hi.y > h {
                return Err(RecordError::OutOfFrame { label: i });
            }
            if label.classes_per_timestep.is_none()
                && label.sequence_class.is_none()
                && label.change.is_none()
            {
                return Err(RecordError::Unlabelled { label: i });
            }
            if let Some(c) = &label.classes_per_timestep {
                if c.len() != n {
                    return Err(RecordError::TimestepLength {
                        label: i,
                        expected: n,
                        found: c.len(),
                    });
                }
            }
        }
        Ok(())
    }
}
