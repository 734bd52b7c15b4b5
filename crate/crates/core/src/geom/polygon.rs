use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{BBox, GeomError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    from = "[T; 2]",
    into = "[T; 2]",
    bound(serialize = "T: Serialize + Copy", deserialize = "T: Deserialize<'de>")
)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T> Point<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

impl<T> From<[T; 2]> for Point<T> {
    fn from([x, y]: [T; 2]) -> Self {
        Self { x, y }
    }
}

impl<T> From<Point<T>> for [T; 2] {
    fn from(p: Point<T>) -> Self {
        [p.x, p.y]
    }
}

/// Polygon with an exterior ring and optional holes, in pixel coordinates.
///
/// Rings are stored closed (first vertex repeated at the end). Interior
/// membership follows the even-odd rule over all rings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize + Copy",
    deserialize = "T: Deserialize<'de> + Copy"
))]
pub struct Polygon<T> {
    pub exterior: Vec<Point<T>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interiors: Vec<Vec<Point<T>>>,
}

impl<T: Float> Polygon<T> {
    /// Closes the rings and runs the full validation, including the
    /// self-intersection check.
    pub fn new(exterior: Vec<Point<T>>, interiors: Vec<Vec<Point<T>>>) -> Result<Self, GeomError> {
        let poly = Self::new_lenient(exterior, interiors)?;
        poly.check_simple()?;
        Ok(poly)
    }

    /// Closes the rings and checks vertex counts and finiteness only.
    ///
    /// Used for rings produced by clipping, which may carry zero-width
    /// spurs along the clip edges.
    pub fn new_lenient(
        exterior: Vec<Point<T>>,
        interiors: Vec<Vec<Point<T>>>,
    ) -> Result<Self, GeomError> {
        let poly = Self {
            exterior: close_ring(exterior),
            interiors: interiors.into_iter().map(close_ring).collect(),
        };
        poly.check_rings()?;
        Ok(poly)
    }

    pub fn from_rect(x_min: T, y_min: T, x_max: T, y_max: T) -> Result<Self, GeomError> {
        Self::new(
            vec![
                Point::new(x_min, y_min),
                Point::new(x_max, y_min),
                Point::new(x_max, y_max),
                Point::new(x_min, y_max),
            ],
            Vec::new(),
        )
    }

    pub fn rings(&self) -> impl Iterator<Item = &[Point<T>]> {
        std::iter::once(self.exterior.as_slice()).chain(self.interiors.iter().map(Vec::as_slice))
    }

    /// Ring structure checks: closed, at least three distinct vertices,
    /// finite coordinates.
    pub fn check_rings(&self) -> Result<(), GeomError> {
        for (ring_idx, ring) in self.rings().enumerate() {
            if ring.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
                return Err(GeomError::NonFinite { ring: ring_idx });
            }
            if ring.len() < 4 || ring.first() != ring.last() {
                return Err(GeomError::TooFewVertices {
                    ring: ring_idx,
                    count: ring.len().saturating_sub(1),
                });
            }
        }
        Ok(())
    }

    /// Rejects any pair of non-adjacent edges that touch or cross,
    /// within a ring or across rings.
    pub fn check_simple(&self) -> Result<(), GeomError> {
        self.check_rings()?;
        let rings: Vec<&[Point<T>]> = self.rings().collect();
        for (ri, ring_a) in rings.iter().enumerate() {
            let edges_a = ring_a.len() - 1;
            for i in 0..edges_a {
                let (a0, a1) = (ring_a[i], ring_a[i + 1]);
                if a0 == a1 {
                    return Err(GeomError::SelfIntersecting { ring: ri });
                }
                for (rj, ring_b) in rings.iter().enumerate().skip(ri) {
                    let edges_b = ring_b.len() - 1;
                    let start = if rj == ri { i + 1 } else { 0 };
                    for j in start..edges_b {
                        if rj == ri {
                            let adjacent = j == i + 1 || (i == 0 && j == edges_a - 1);
                            if adjacent {
                                // Adjacent edges share one vertex; they may
                                // only overlap if collinear and folding back.
                                if folds_back(a0, a1, ring_b[j], ring_b[j + 1]) {
                                    return Err(GeomError::SelfIntersecting { ring: ri });
                                }
                                continue;
                            }
                        }
                        if segments_touch(a0, a1, ring_b[j], ring_b[j + 1]) {
                            return Err(GeomError::SelfIntersecting { ring: ri });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Unsigned area: exterior minus holes (shoelace).
    pub fn area(&self) -> T {
        let ext = ring_signed_area(&self.exterior).abs();
        self.interiors
            .iter()
            .fold(ext, |acc, r| acc - ring_signed_area(r).abs())
    }

    /// Even-odd containment of a point, crossing-number form.
    pub fn contains(&self, p: Point<T>) -> bool {
        let mut inside = false;
        for ring in self.rings() {
            for w in ring.windows(2) {
                if let Some(x) = crossing_x(w[0], w[1], p.y) {
                    if p.x < x {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }

    pub fn bounds(&self) -> (Point<T>, Point<T>) {
        let mut lo = self.exterior[0];
        let mut hi = self.exterior[0];
        for p in &self.exterior {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    pub fn map_points(&self, f: impl Fn(Point<T>) -> Point<T>) -> Self {
        Self {
            exterior: self.exterior.iter().map(|&p| f(p)).collect(),
            interiors: self
                .interiors
                .iter()
                .map(|r| r.iter().map(|&p| f(p)).collect())
                .collect(),
        }
    }

    pub fn cast<U: Float>(&self) -> Polygon<U> {
        let c = |p: &Point<T>| Point::new(U::from(p.x).unwrap(), U::from(p.y).unwrap());
        Polygon {
            exterior: self.exterior.iter().map(c).collect(),
            interiors: self
                .interiors
                .iter()
                .map(|r| r.iter().map(c).collect())
                .collect(),
        }
    }
}

/// Smallest half-open integer box containing every exterior vertex
/// (floor the mins, ceil the maxes). Negative coordinates clamp to 0.
pub fn min_aabb<T: Float>(polygon: &Polygon<T>) -> Result<BBox, GeomError> {
    let (lo, hi) = polygon.bounds();
    let to_u32 = |v: T| -> u32 {
        let v = v.max(T::zero());
        v.to_u32().unwrap_or(u32::MAX)
    };
    let x_min = to_u32(lo.x.floor());
    let y_min = to_u32(lo.y.floor());
    let x_max = to_u32(hi.x.ceil());
    let y_max = to_u32(hi.y.ceil());
    BBox::new(x_min, y_min, x_max, y_max)
        .map_err(|_| GeomError::Degenerate([x_min, y_min, x_max, y_max]))
}

/// x-coordinate where edge `a -> b` crosses the horizontal line at `y`,
/// using the half-open rule `(a.y > y) != (b.y > y)`.
#[inline]
pub(crate) fn crossing_x<T: Float>(a: Point<T>, b: Point<T>, y: T) -> Option<T> {
    if (a.y > y) != (b.y > y) {
        Some(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y))
    } else {
        None
    }
}

fn close_ring<T: Float>(mut ring: Vec<Point<T>>) -> Vec<Point<T>> {
    ring.dedup();
    if let (Some(first), Some(last)) = (ring.first().copied(), ring.last().copied()) {
        if first != last {
            ring.push(first);
        }
    }
    ring
}

fn ring_signed_area<T: Float>(ring: &[Point<T>]) -> T {
    let two = T::one() + T::one();
    ring.windows(2).fold(T::zero(), |acc, w| {
        acc + (w[0].x * w[1].y - w[1].x * w[0].y)
    }) / two
}

fn orient<T: Float>(a: Point<T>, b: Point<T>, c: Point<T>) -> T {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment<T: Float>(a: Point<T>, b: Point<T>, p: Point<T>) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_touch<T: Float>(p1: Point<T>, p2: Point<T>, q1: Point<T>, q2: Point<T>) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    let zero = T::zero();
    if ((d1 > zero && d2 < zero) || (d1 < zero && d2 > zero))
        && ((d3 > zero && d4 < zero) || (d3 < zero && d4 > zero))
    {
        return true;
    }
    (d1 == zero && on_segment(q1, q2, p1))
        || (d2 == zero && on_segment(q1, q2, p2))
        || (d3 == zero && on_segment(p1, p2, q1))
        || (d4 == zero && on_segment(p1, p2, q2))
}

/// Adjacent edges (sharing one endpoint) that are collinear and overlap.
fn folds_back<T: Float>(a0: Point<T>, a1: Point<T>, b0: Point<T>, b1: Point<T>) -> bool {
    if orient(a0, a1, b0) != T::zero() || orient(a0, a1, b1) != T::zero() {
        return false;
    }
    // Shared vertex is either a1 == b0 or a0 == b1; the other endpoints
    // must lie on opposite sides of it for a straight continuation.
    let (shared, pa, pb) = if a1 == b0 { (a1, a0, b1) } else { (a0, a1, b0) };
    let da = (pa.x - shared.x, pa.y - shared.y);
    let db = (pb.x - shared.x, pb.y - shared.y);
    da.0 * db.0 + da.1 * db.1 > T::zero()
}
