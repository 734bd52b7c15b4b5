use std::fmt;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::GeomError;

/// Integer pixel box, origin top-left, half-open on the max edges.
///
/// Serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[u32; 4]", into = "[u32; 4]")]
pub struct BBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl BBox {
    pub fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Result<Self, GeomError> {
        if x_min >= x_max || y_min >= y_max {
            return Err(GeomError::InvalidBox([x_min, y_min, x_max, y_max]));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn width(&self) -> u32 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> u32 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    /// Positive-area overlap, `None` when the boxes only touch or are disjoint.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x_min = self.x_min.max(other.x_min);
        let y_min = self.y_min.max(other.y_min);
        let x_max = self.x_max.min(other.x_max);
        let y_max = self.y_max.min(other.y_max);
        (x_min < x_max && y_min < y_max).then_some(BBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.intersection(other).is_some()
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }

    /// Clip to `[0, width) x [0, height)`.
    pub fn clip_to(&self, width: u32, height: u32) -> Option<BBox> {
        self.intersection(&BBox {
            x_min: 0,
            y_min: 0,
            x_max: width,
            y_max: height,
        })
    }

    pub fn fits_within(&self, width: u32, height: u32) -> bool {
        self.x_max <= width && self.y_max <= height
    }

    pub fn iou<T: Float>(&self, other: &BBox) -> T {
        let inter = self.intersection(other).map_or(0, |b| b.area());
        let union = self.area() + other.area() - inter;
        let inter = T::from(inter).unwrap();
        let union = T::from(union).unwrap();
        inter / union
    }

    pub fn to_array(self) -> [u32; 4] {
        self.into()
    }
}

impl TryFrom<[u32; 4]> for BBox {
    type Error = GeomError;

    fn try_from(v: [u32; 4]) -> Result<Self, Self::Error> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [u32; 4] {
    fn from(b: BBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

/// Renders the response-grammar token, e.g. `[10, 20, 30, 40]`.
impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}, {}, {}]",
            self.x_min, self.y_min, self.x_max, self.y_max
        )
    }
}
