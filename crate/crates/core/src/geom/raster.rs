use num_traits::Float;

use super::polygon::crossing_x;
use super::{BBox, GeomError, Mask, Point, Polygon};

/// A labelled region to burn into a mask.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape<T> {
    Polygon(Polygon<T>),
    Box(BBox),
}

impl<T> From<BBox> for Shape<T> {
    fn from(b: BBox) -> Self {
        Shape::Box(b)
    }
}

impl<T> From<Polygon<T>> for Shape<T> {
    fn from(p: Polygon<T>) -> Self {
        Shape::Polygon(p)
    }
}

/// Burns `shapes` into a fresh mask in list order; later shapes overwrite
/// earlier ones. A pixel takes a shape's label iff its center lies inside
/// the shape (even-odd for polygons, half-open for boxes). Shapes running
/// past the extent are clipped.
pub fn rasterize<T: Float>(
    shapes: &[(Shape<T>, u8)],
    width: u32,
    height: u32,
    classes: u8,
) -> Result<Mask, GeomError> {
    let mut mask = Mask::new(width, height, classes)?;
    let mut scratch = Scanline::default();
    for (index, (shape, label)) in shapes.iter().enumerate() {
        if *label == 0 || *label >= classes {
            return Err(GeomError::ShapeLabel {
                index,
                label: *label,
                classes,
            });
        }
        match shape {
            Shape::Box(b) => mask.fill_box(b, *label),
            Shape::Polygon(p) => {
                p.check_simple().map_err(|e| GeomError::InvalidShape {
                    index,
                    source: Box::new(e),
                })?;
                scratch.fill(&mut mask, p, *label);
            }
        }
    }
    Ok(mask)
}

/// Binary mask of a box list.
pub fn rasterize_boxes(boxes: &[BBox], width: u32, height: u32) -> Result<Mask, GeomError> {
    let mut mask = Mask::binary(width, height)?;
    for b in boxes {
        mask.fill_box(b, 1);
    }
    Ok(mask)
}

/// Burns one polygon into an existing mask without re-validating it.
///
/// Clipped polygons (which may carry zero-width spurs on the clip edge)
/// go through here; their even-odd interior is still well defined.
pub fn fill_polygon<T: Float>(mask: &mut Mask, polygon: &Polygon<T>, label: u8) {
    Scanline::default().fill(mask, polygon, label);
}

struct Scanline<T> {
    edges: Vec<(Point<T>, Point<T>)>,
    xs: Vec<T>,
}

impl<T> Default for Scanline<T> {
    fn default() -> Self {
        Self {
            edges: Vec::new(),
            xs: Vec::new(),
        }
    }
}

impl<T: Float> Scanline<T> {
    fn fill(&mut self, mask: &mut Mask, polygon: &Polygon<T>, label: u8) {
        let (width, height) = mask.extent();
        let half = T::from(0.5).unwrap();
        let mut y_lo = T::infinity();
        let mut y_hi = T::neg_infinity();
        self.edges.clear();
        for ring in polygon.rings() {
            for w in ring.windows(2) {
                if w[0].y != w[1].y {
                    self.edges.push((w[0], w[1]));
                }
                y_lo = y_lo.min(w[0].y);
                y_hi = y_hi.max(w[0].y);
            }
        }
        if self.edges.is_empty() {
            return;
        }
        let row_start = first_center_at_or_after(y_lo, height);
        let row_end = first_center_at_or_after(y_hi, height);
        for y in row_start..row_end {
            let yc = T::from(y).unwrap() + half;
            self.xs.clear();
            for &(a, b) in &self.edges {
                if let Some(x) = crossing_x(a, b, yc) {
                    self.xs.push(x);
                }
            }
            self.xs
                .sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            let row = mask.row_mut(y);
            for pair in self.xs.chunks_exact(2) {
                let start = first_center_at_or_after(pair[0], width) as usize;
                let end = first_center_at_or_after(pair[1], width) as usize;
                if start < end {
                    row[start..end].fill(label);
                }
            }
        }
    }
}

/// Smallest pixel index `i` in `[0, limit]` whose center `i + 0.5` is `>= x`.
#[inline]
fn first_center_at_or_after<T: Float>(x: T, limit: u32) -> u32 {
    let half = T::from(0.5).unwrap();
    let lim = T::from(limit).unwrap();
    if x <= half {
        return 0;
    }
    if x > lim + half {
        return limit;
    }
    let mut i = (x - half)
        .ceil()
        .to_i64()
        .unwrap_or(0)
        .clamp(0, i64::from(limit));
    while i < i64::from(limit) && T::from(i).unwrap() + half < x {
        i += 1;
    }
    while i > 0 && T::from(i - 1).unwrap() + half >= x {
        i -= 1;
    }
    i as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_fills_half_open_cells() {
        let m = rasterize::<f64>(&[(BBox::new(0, 0, 2, 2).unwrap().into(), 1)], 4, 4, 2).unwrap();
        let set: Vec<(u32, u32)> = (0..4)
            .flat_map(|y| (0..4).map(move |x| (x, y)))
            .filter(|&(x, y)| m.get(x, y) == 1)
            .collect();
        assert_eq!(set, vec![(0, 0), (1, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn empty_list_is_background() {
        let m = rasterize::<f64>(&[], 8, 8, 2).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn later_shapes_overwrite() {
        let shapes: Vec<(Shape<f64>, u8)> = vec![
            (BBox::new(0, 0, 4, 4).unwrap().into(), 1),
            (BBox::new(2, 2, 6, 6).unwrap().into(), 2),
        ];
        let m = rasterize(&shapes, 8, 8, 3).unwrap();
        assert_eq!(m.get(1, 1), 1);
        assert_eq!(m.get(3, 3), 2);
        assert_eq!(m.count(1), 12);
        assert_eq!(m.count(2), 16);
    }

    #[test]
    fn bad_label_and_bad_polygon_name_the_index() {
        let ok: Shape<f64> = BBox::new(0, 0, 1, 1).unwrap().into();
        let err = rasterize(&[(ok.clone(), 1), (ok.clone(), 0)], 4, 4, 2).unwrap_err();
        assert!(matches!(err, GeomError::ShapeLabel { index: 1, .. }));

        let bowtie = Polygon::new_lenient(
            vec![
                Point::new(0.0, 0.0),
                Point::new(4.0, 4.0),
                Point::new(4.0, 0.0),
                Point::new(0.0, 4.0),
            ],
            vec![],
        )
        .unwrap();
        let err = rasterize(&[(ok, 1), (bowtie.into(), 1)], 4, 4, 2).unwrap_err();
        assert!(matches!(err, GeomError::InvalidShape { index: 1, .. }));
    }

    #[test]
    fn shapes_past_the_extent_are_clipped() {
        let p = Polygon::from_rect(-3.0, -3.0, 2.0, 20.0).unwrap();
        let m = rasterize(&[(p.into(), 1)], 4, 4, 2).unwrap();
        assert_eq!(m.count(1), 8);
    }

    #[test]
    fn f32_and_f64_agree_on_rectangles() {
        let p64 = Polygon::from_rect(1.25, 0.5, 5.5, 3.75).unwrap();
        let p32: Polygon<f32> = p64.cast();
        let a = rasterize(&[(p64.into(), 1)], 8, 8, 2).unwrap();
        let b = rasterize(&[(p32.into(), 1)], 8, 8, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.count(1), 4 * 4);
    }

    #[test]
    fn center_rounding_is_exact_on_half_pixels() {
        // Edge at x = 2.5 passes exactly through a column of centers; the
        // half-open rule puts those centers inside.
        let p = Polygon::from_rect(2.5, 0.0, 4.0, 1.0).unwrap();
        let m = rasterize(&[(p.into(), 1)], 6, 1, 2).unwrap();
        assert_eq!(m.as_slice(), &[0, 0, 1, 1, 0, 0]);
    }
}
