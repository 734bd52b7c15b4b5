use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{BBox, Point};

/// Clipped boxes below this area (px²) are dropped.
pub const MIN_KEPT_AREA: u64 = 10;
/// Clipped boxes keeping less than this fraction of their area are dropped.
pub const MIN_KEPT_FRACTION: f64 = 0.10;

/// Scale-then-crop map from a source frame to a target frame:
/// `x' = x * scale - dx`, `y' = y * scale - dy`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileTransform<T> {
    pub src_w: u32,
    pub src_h: u32,
    pub scale: T,
    pub dx: T,
    pub dy: T,
    pub dst_w: u32,
    pub dst_h: u32,
}

impl<T: Float> TileTransform<T> {
    pub fn identity(width: u32, height: u32) -> Self {
        Self {
            src_w: width,
            src_h: height,
            scale: T::one(),
            dx: T::zero(),
            dy: T::zero(),
            dst_w: width,
            dst_h: height,
        }
    }

    /// Pure crop of the window `[x0, x0 + w) x [y0, y0 + h)`.
    pub fn crop(src_w: u32, src_h: u32, x0: u32, y0: u32, w: u32, h: u32) -> Self {
        Self {
            src_w,
            src_h,
            scale: T::one(),
            dx: T::from(x0).unwrap(),
            dy: T::from(y0).unwrap(),
            dst_w: w,
            dst_h: h,
        }
    }

    /// Resize so the shorter side equals `target`, then center-crop to
    /// `target x target`.
    pub fn shorter_side_center_crop(src_w: u32, src_h: u32, target: u32) -> Self {
        let short = src_w.min(src_h);
        let scale = T::from(target).unwrap() / T::from(short).unwrap();
        let two = T::one() + T::one();
        let scaled_w = T::from(src_w).unwrap() * scale;
        let scaled_h = T::from(src_h).unwrap() * scale;
        let t = T::from(target).unwrap();
        Self {
            src_w,
            src_h,
            scale,
            dx: ((scaled_w - t) / two).round(),
            dy: ((scaled_h - t) / two).round(),
            dst_w: target,
            dst_h: target,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.scale == T::one()
            && self.dx == T::zero()
            && self.dy == T::zero()
            && self.src_w == self.dst_w
            && self.src_h == self.dst_h
    }

    pub fn apply(&self, p: Point<T>) -> Point<T> {
        Point::new(p.x * self.scale - self.dx, p.y * self.scale - self.dy)
    }

    pub fn invert(&self, p: Point<T>) -> Point<T> {
        Point::new((p.x + self.dx) / self.scale, (p.y + self.dy) / self.scale)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &TileTransform<T>) -> TileTransform<T> {
        TileTransform {
            src_w: self.src_w,
            src_h: self.src_h,
            scale: self.scale * next.scale,
            dx: self.dx * next.scale + next.dx,
            dy: self.dy * next.scale + next.dy,
            dst_w: next.dst_w,
            dst_h: next.dst_h,
        }
    }

    /// The transform from target back to source, without clipping.
    pub fn inverse(&self) -> TileTransform<T> {
        TileTransform {
            src_w: self.dst_w,
            src_h: self.dst_h,
            scale: T::one() / self.scale,
            dx: -self.dx / self.scale,
            dy: -self.dy / self.scale,
            dst_w: self.src_w,
            dst_h: self.src_h,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxOutcome {
    Kept(BBox),
    /// Clipped remainder too small; `clipped_area` is 0 when the box left
    /// the frame entirely.
    Dropped {
        clipped_area: u64,
        scaled_area: u64,
    },
}

impl BoxOutcome {
    pub fn kept(self) -> Option<BBox> {
        match self {
            BoxOutcome::Kept(b) => Some(b),
            BoxOutcome::Dropped { .. } => None,
        }
    }
}

/// Maps a box into the target frame with outward rounding, clips it to
/// the target extent and applies the sliver threshold.
pub fn transform_box<T: Float>(b: &BBox, t: &TileTransform<T>) -> BoxOutcome {
    let lo = t.apply(Point::new(
        T::from(b.x_min).unwrap(),
        T::from(b.y_min).unwrap(),
    ));
    let hi = t.apply(Point::new(
        T::from(b.x_max).unwrap(),
        T::from(b.y_max).unwrap(),
    ));
    let x0 = lo.x.floor().to_i64().unwrap_or(i64::MIN);
    let y0 = lo.y.floor().to_i64().unwrap_or(i64::MIN);
    let x1 = hi.x.ceil().to_i64().unwrap_or(i64::MAX);
    let y1 = hi.y.ceil().to_i64().unwrap_or(i64::MAX);
    let scaled_area = ((x1 - x0).max(0) as u64) * ((y1 - y0).max(0) as u64);

    let cx0 = x0.max(0);
    let cy0 = y0.max(0);
    let cx1 = x1.min(i64::from(t.dst_w));
    let cy1 = y1.min(i64::from(t.dst_h));
    if cx0 >= cx1 || cy0 >= cy1 {
        return BoxOutcome::Dropped {
            clipped_area: 0,
            scaled_area,
        };
    }
    let clipped_area = ((cx1 - cx0) * (cy1 - cy0)) as u64;
    if clipped_area < MIN_KEPT_AREA
        || (clipped_area as f64) < MIN_KEPT_FRACTION * scaled_area as f64
    {
        return BoxOutcome::Dropped {
            clipped_area,
            scaled_area,
        };
    }
    BoxOutcome::Kept(BBox {
        x_min: cx0 as u32,
        y_min: cy0 as u32,
        x_max: cx1 as u32,
        y_max: cy1 as u32,
    })
}
