mod common;

use common::{brute_raster, inside_rings};
use eo_instruct::geom::{
    clip_polygon, fill_polygon, rasterize, rasterize_boxes, transform_box, BBox, ClipRect, Mask,
};
use eo_instruct::ingest::{tile, GeoLabel, ImageRef, SceneRecord, SourceKind};
use eo_instruct::{Point, Polygon, Shape, TileTransform};
use proptest::prelude::*;

/// Star-shaped ring around `(cx, cy)`: angles sorted, radii random, so
/// the ring is always simple.
fn star(cx: f64, cy: f64, radii: &[f64], phase: f64) -> Vec<(f64, f64)> {
    let n = radii.len();
    radii
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let a = phase + std::f64::consts::TAU * i as f64 / n as f64;
            (cx + r * a.cos(), cy + r * a.sin())
        })
        .collect()
}

fn polygon(ring: &[(f64, f64)]) -> Polygon {
    Polygon::new(
        ring.iter().map(|&(x, y)| Point::new(x, y)).collect(),
        Vec::new(),
    )
    .unwrap()
}

fn star_strategy() -> impl Strategy<Value = (u32, u32, Vec<(f64, f64)>)> {
    (8u32..=64, 8u32..=64).prop_flat_map(|(w, h)| {
        (
            Just(w),
            Just(h),
            0.0..f64::from(w),
            0.0..f64::from(h),
            prop::collection::vec(1.0f64..40.0, 3..12),
            0.0f64..1.0,
        )
            .prop_map(|(w, h, cx, cy, radii, phase)| (w, h, star(cx, cy, &radii, phase)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn raster_matches_pixel_center_oracle((w, h, ring) in star_strategy()) {
        let shapes = vec![(Shape::from(polygon(&ring)), 1u8)];
        let m = rasterize(&shapes, w, h, 2).unwrap();
        let expected = brute_raster(&[(vec![ring], 1)], w, h);
        prop_assert_eq!(m.as_slice(), expected.as_slice());
    }

    #[test]
    fn quarter_pixel_rectangles_match_oracle(
        x0 in 0u32..30, y0 in 0u32..30, dw in 1u32..30, dh in 1u32..30,
        fx in prop::sample::select(vec![0.0, 0.25, 0.75]),
        fy in prop::sample::select(vec![0.0, 0.25, 0.75]),
    ) {
        let (ax, ay) = (f64::from(x0) + fx, f64::from(y0) + fy);
        let (bx, by) = (ax + f64::from(dw), ay + f64::from(dh));
        let ring = vec![(ax, ay), (bx, ay), (bx, by), (ax, by)];
        let m = rasterize(&[(Shape::from(polygon(&ring)), 1u8)], 64, 64, 2).unwrap();
        let expected = brute_raster(&[(vec![ring], 1)], 64, 64);
        prop_assert_eq!(m.as_slice(), expected.as_slice());
    }

    #[test]
    fn clipping_keeps_exactly_the_pixels_inside_the_rect(
        (w, h, ring) in star_strategy(),
        rx in 0u32..32, ry in 0u32..32, rw in 1u32..32, rh in 1u32..32,
    ) {
        let p = polygon(&ring);
        let rect = ClipRect {
            x_min: f64::from(rx),
            y_min: f64::from(ry),
            x_max: f64::from(rx + rw),
            y_max: f64::from(ry + rh),
        };
        let full = brute_raster(&[(vec![ring], 1)], w, h);
        let mut clipped = Mask::binary(w, h).unwrap();
        if let Some(c) = clip_polygon(&p, &rect) {
            fill_polygon(&mut clipped, &c, 1);
        }
        for y in 0..h {
            for x in 0..w {
                let in_rect = x >= rx && x < rx + rw && y >= ry && y < ry + rh;
                let want = u8::from(in_rect && full[(y * w + x) as usize] == 1);
                prop_assert_eq!(clipped.get(x, y), want, "pixel ({}, {})", x, y);
            }
        }
    }

    #[test]
    fn rle_round_trips(bits in prop::collection::vec(0u8..2, 1..400), w in 1u32..20) {
        let h = (bits.len() as u32).div_ceil(w);
        let mut data = bits.clone();
        data.resize((w * h) as usize, 0);
        let m = Mask::from_vec(w, h, 2, data).unwrap();
        prop_assert_eq!(m.to_rle().decode().unwrap(), m);
    }

    #[test]
    fn transformed_boxes_stay_in_frame_and_nest(
        x0 in 0u32..200, y0 in 0u32..200, dw in 1u32..100, dh in 1u32..100,
        ox in 0u32..200, oy in 0u32..200,
        shrink in 0u32..10,
    ) {
        let outer = BBox::new(x0, y0, x0 + dw + 2 * shrink, y0 + dh + 2 * shrink).unwrap();
        let inner = BBox::new(x0 + shrink, y0 + shrink, x0 + shrink + dw, y0 + shrink + dh).unwrap();
        let t = TileTransform::crop(512, 512, ox, oy, 256, 256)
            .then(&TileTransform::shorter_side_center_crop(256, 256, 224));
        let a = transform_box(&outer, &t).kept();
        let b = transform_box(&inner, &t).kept();
        for k in [a, b].into_iter().flatten() {
            prop_assert!(k.fits_within(224, 224));
        }
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert!(a.contains_box(&b));
        }
    }
}

#[test]
fn identity_transform_keeps_boxes() {
    let t = TileTransform::identity(100, 100);
    let b = BBox::new(3, 4, 50, 60).unwrap();
    assert_eq!(transform_box(&b, &t).kept(), Some(b));
}

#[test]
fn boxes_raster_as_half_open_cells() {
    let m = rasterize_boxes(&[BBox::new(1, 2, 4, 3).unwrap()], 6, 6).unwrap();
    assert_eq!(m.foreground_count(), 3);
    assert!(inside_rings(
        &[vec![(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]],
        1.0,
        1.0
    ));
}

fn scene(width: u32, height: u32, rings: &[Vec<(f64, f64)>]) -> SceneRecord {
    SceneRecord {
        id: "s".into(),
        source: SourceKind::Xbd,
        images: vec![ImageRef::new("a.png"), ImageRef::new("b.png")],
        order: vec![0, 1],
        width,
        height,
        labels: rings
            .iter()
            .map(|r| GeoLabel {
                polygon: polygon(r),
                classes_per_timestep: None,
                sequence_class: Some("destroyed".into()),
                change: None,
                edge_sliver: false,
            })
            .collect(),
        sequence_class: None,
        sensor: None,
        resolution: None,
        disaster_type: None,
        transforms: Vec::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    /// Foreground over all tiles equals the source foreground when the
    /// grid divides the extent.
    #[test]
    fn tiling_conserves_foreground(
        centers in prop::collection::vec((0.0f64..512.0, 0.0f64..512.0, 4.0f64..60.0), 1..12),
        side in prop::sample::select(vec![256u32, 512]),
    ) {
        let rings: Vec<Vec<(f64, f64)>> = centers
            .iter()
            .map(|&(cx, cy, r)| {
                let cx = cx.clamp(r, f64::from(side) - r);
                let cy = cy.clamp(r, f64::from(side) - r);
                star(cx, cy, &[r, r * 0.7, r, r * 0.8, r * 0.9], 0.3)
            })
            .collect();
        let rec = scene(side, side, &rings);
        let mut src = Mask::binary(side, side).unwrap();
        for l in &rec.labels {
            fill_polygon(&mut src, &l.polygon, 1);
        }
        let tiles = tile(&rec, 256);
        prop_assert_eq!(tiles.len() as u32, (side / 256).pow(2));
        let mut total = 0u64;
        for t in &tiles {
            let mut m = Mask::binary(t.width, t.height).unwrap();
            for l in &t.labels {
                fill_polygon(&mut m, &l.polygon, 1);
            }
            total += m.foreground_count();
        }
        prop_assert_eq!(total, src.foreground_count());
    }
}
