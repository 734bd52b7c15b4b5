use num_traits::Float;

use super::{Point, Polygon};

/// Axis-aligned clip window `[x_min, x_max] x [y_min, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClipRect<T> {
    pub x_min: T,
    pub y_min: T,
    pub x_max: T,
    pub y_max: T,
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

impl<T: Float> ClipRect<T> {
    fn inside(&self, side: Side, p: Point<T>) -> bool {
        match side {
            Side::Left => p.x >= self.x_min,
            Side::Right => p.x <= self.x_max,
            Side::Top => p.y >= self.y_min,
            Side::Bottom => p.y <= self.y_max,
        }
    }

    fn cut(&self, side: Side, a: Point<T>, b: Point<T>) -> Point<T> {
        match side {
            Side::Left | Side::Right => {
                let x = if matches!(side, Side::Left) {
                    self.x_min
                } else {
                    self.x_max
                };
                let t = (x - a.x) / (b.x - a.x);
                Point::new(x, a.y + t * (b.y - a.y))
            }
            Side::Top | Side::Bottom => {
                let y = if matches!(side, Side::Top) {
                    self.y_min
                } else {
                    self.y_max
                };
                let t = (y - a.y) / (b.y - a.y);
                Point::new(a.x + t * (b.x - a.x), y)
            }
        }
    }
}

/// Sutherland–Hodgman clip of one closed ring. Returns the open vertex
/// list (not repeated at the end); fewer than 3 vertices means nothing is
/// left.
pub fn clip_ring<T: Float>(ring: &[Point<T>], rect: &ClipRect<T>) -> Vec<Point<T>> {
    let mut out: Vec<Point<T>> = ring.to_vec();
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    for side in [Side::Left, Side::Right, Side::Top, Side::Bottom] {
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        let mut prev = *input.last().unwrap();
        for &cur in &input {
            let cur_in = rect.inside(side, cur);
            let prev_in = rect.inside(side, prev);
            if cur_in {
                if !prev_in {
                    out.push(rect.cut(side, prev, cur));
                }
                out.push(cur);
            } else if prev_in {
                out.push(rect.cut(side, prev, cur));
            }
            prev = cur;
        }
    }
    // Interpolated coordinates can land one ulp outside the window.
    for p in &mut out {
        p.x = p.x.max(rect.x_min).min(rect.x_max);
        p.y = p.y.max(rect.y_min).min(rect.y_max);
    }
    out.dedup();
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

/// Clips every ring of `polygon` to `rect`. `None` when the clipped
/// exterior has no area left. Holes that vanish are dropped.
pub fn clip_polygon<T: Float>(polygon: &Polygon<T>, rect: &ClipRect<T>) -> Option<Polygon<T>> {
    let exterior = clip_ring(&polygon.exterior, rect);
    if exterior.len() < 3 {
        return None;
    }
    let interiors: Vec<Vec<Point<T>>> = polygon
        .interiors
        .iter()
        .map(|r| clip_ring(r, rect))
        .filter(|r| r.len() >= 3)
        .collect();
    let clipped = Polygon::new_lenient(exterior, interiors).ok()?;
    (clipped.area() > T::zero()).then_some(clipped)
}
