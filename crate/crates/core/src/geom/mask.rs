use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{BBox, GeomError};

/// Dense row-major label grid. Label 0 is background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    classes: u8,
    data: Vec<u8>,
}

impl Mask {
    /// All-background mask with `classes` labels (including background).
    pub fn new(width: u32, height: u32, classes: u8) -> Result<Self, GeomError> {
        if width == 0 || height == 0 {
            return Err(GeomError::EmptyExtent { width, height });
        }
        if classes < 2 {
            return Err(GeomError::ClassCount(classes));
        }
        Ok(Self {
            width,
            height,
            classes,
            data: vec![0; width as usize * height as usize],
        })
    }

    pub fn binary(width: u32, height: u32) -> Result<Self, GeomError> {
        Self::new(width, height, 2)
    }

    pub fn from_vec(
        width: u32,
        height: u32,
        classes: u8,
        data: Vec<u8>,
    ) -> Result<Self, GeomError> {
        let mut m = Self::new(width, height, classes)?;
        if data.len() != m.data.len() {
            return Err(GeomError::ExtentMismatch {
                expected: (width, height),
                found: (data.len() as u32, 1),
            });
        }
        if let Some(&bad) = data.iter().find(|&&v| v >= classes) {
            return Err(GeomError::LabelOutOfRange {
                label: bad,
                classes,
            });
        }
        m.data = data;
        Ok(m)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn extent(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn classes(&self) -> u8 {
        self.classes
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[self.index(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, label: u8) {
        debug_assert!(label < self.classes);
        let i = self.index(x, y);
        self.data[i] = label;
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub(crate) fn row_mut(&mut self, y: u32) -> &mut [u8] {
        let w = self.width as usize;
        let start = y as usize * w;
        &mut self.data[start..start + w]
    }

    /// Fills the half-open box, clipped to the extent.
    pub fn fill_box(&mut self, b: &BBox, label: u8) {
        let Some(b) = b.clip_to(self.width, self.height) else {
            return;
        };
        for y in b.y_min..b.y_max {
            self.row_mut(y)[b.x_min as usize..b.x_max as usize].fill(label);
        }
    }

    pub fn count(&self, label: u8) -> u64 {
        self.data.iter().filter(|&&v| v == label).count() as u64
    }

    pub fn foreground_count(&self) -> u64 {
        self.data.iter().filter(|&&v| v != 0).count() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn check_same_extent(&self, other: &Mask) -> Result<(), GeomError> {
        if self.extent() != other.extent() {
            return Err(GeomError::ExtentMismatch {
                expected: self.extent(),
                found: other.extent(),
            });
        }
        Ok(())
    }

    /// Collapse every foreground label to 1.
    pub fn to_binary(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            classes: 2,
            data: self.data.iter().map(|&v| u8::from(v != 0)).collect(),
        }
    }

    /// 8-bit grayscale PNG with label values written as-is.
    pub fn write_png<W: Write>(&self, w: W) -> Result<(), png::EncodingError> {
        let mut enc = png::Encoder::new(w, self.width, self.height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&self.data)?;
        writer.finish()
    }

    pub fn to_rle(&self) -> RleMask {
        let mut counts = Vec::new();
        let mut current = 0u8;
        let mut run = 0u32;
        for &v in &self.data {
            let v = u8::from(v != 0);
            if v == current {
                run += 1;
            } else {
                counts.push(run);
                current = v;
                run = 1;
            }
        }
        counts.push(run);
        RleMask {
            width: self.width,
            height: self.height,
            counts,
        }
    }
}

/// Binary mask as alternating background/foreground run lengths in
/// row-major order, starting with background.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub width: u32,
    pub height: u32,
    pub counts: Vec<u32>,
}

impl RleMask {
    pub fn decode(&self) -> Result<Mask, GeomError> {
        let mut m = Mask::binary(self.width, self.height)?;
        let total: u64 = self.counts.iter().map(|&c| u64::from(c)).sum();
        if total != m.data.len() as u64 {
            return Err(GeomError::RleLength {
                expected: m.data.len() as u64,
                found: total,
            });
        }
        let mut pos = 0usize;
        for (i, &c) in self.counts.iter().enumerate() {
            let end = pos + c as usize;
            if i % 2 == 1 {
                m.data[pos..end].fill(1);
            }
            pos = end;
        }
        Ok(m)
    }
}
