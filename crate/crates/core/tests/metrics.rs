mod common;

use common::{brute_f1, brute_raster, brute_weighted_f1};
use eo_instruct::geom::{BBox, Mask};
use eo_instruct::metrics::{
    acc_at_iou, accuracy, class_weighted_f1, pixel_f1, pixel_f1_micro, ConfusionMatrix,
    QFabricAccumulator, QFabricWindow,
};
use proptest::prelude::*;

fn mask_strategy(classes: u8) -> impl Strategy<Value = (u32, u32, Vec<u8>, Vec<u8>)> {
    (1u32..=64, 1u32..=64).prop_flat_map(move |(w, h)| {
        let n = (w * h) as usize;
        (
            Just(w),
            Just(h),
            prop::collection::vec(0..classes, n),
            prop::collection::vec(0..classes, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pixel_f1_matches_counting((w, h, p, g) in mask_strategy(2)) {
        let pm = Mask::from_vec(w, h, 2, p.clone()).unwrap();
        let gm = Mask::from_vec(w, h, 2, g.clone()).unwrap();
        let got: f64 = pixel_f1(&pm, &gm).unwrap();
        prop_assert!((got - brute_f1(&p, &g)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn weighted_f1_matches_counting(k in 2u8..6, seed in any::<u64>()) {
        let mut rng = eo_instruct::rng::record_rng(seed, "m");
        use rand::Rng;
        let (w, h) = (rng.random_range(1..=64u32), rng.random_range(1..=64u32));
        let n = (w * h) as usize;
        let p: Vec<u8> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let g: Vec<u8> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let pm = Mask::from_vec(w, h, k, p.clone()).unwrap();
        let gm = Mask::from_vec(w, h, k, g.clone()).unwrap();
        let got: Option<f64> = class_weighted_f1(&pm, &gm, k).unwrap();
        match (got, brute_weighted_f1(&p, &g, k)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
            (None, None) => {}
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn two_class_weighted_equals_pixel_f1((w, h, p, g) in mask_strategy(2)) {
        prop_assume!(g.contains(&1));
        let pm = Mask::from_vec(w, h, 2, p).unwrap();
        let gm = Mask::from_vec(w, h, 2, g).unwrap();
        let a: f64 = pixel_f1(&pm, &gm).unwrap();
        let b: f64 = class_weighted_f1(&pm, &gm, 2).unwrap().unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    /// Summing counts over a split equals scoring the concatenated masks,
    /// in any order.
    #[test]
    fn micro_average_is_concatenation(
        parts in prop::collection::vec(prop::collection::vec((0u8..2, 0u8..2), 1..50), 1..8),
        rot in 0usize..8,
    ) {
        let masks: Vec<(Mask, Mask)> = parts
            .iter()
            .map(|v| {
                let n = v.len() as u32;
                (
                    Mask::from_vec(n, 1, 2, v.iter().map(|x| x.0).collect()).unwrap(),
                    Mask::from_vec(n, 1, 2, v.iter().map(|x| x.1).collect()).unwrap(),
                )
            })
            .collect();
        let p: Vec<u8> = parts.iter().flatten().map(|x| x.0).collect();
        let g: Vec<u8> = parts.iter().flatten().map(|x| x.1).collect();
        let mut order: Vec<&(Mask, Mask)> = masks.iter().collect();
        let r = rot % order.len();
        order.rotate_left(r);
        let got: f64 = pixel_f1_micro(order.iter().map(|(a, b)| (a, b))).unwrap();
        prop_assert!((got - brute_f1(&p, &g)).abs() < 1e-12);
    }

    /// Scaling both boxes by one integer factor never changes a pass/fail.
    #[test]
    fn acc_at_iou_is_scale_invariant(
        a in (0u32..50, 0u32..50, 1u32..30, 1u32..30),
        b in (0u32..50, 0u32..50, 1u32..30, 1u32..30),
        s in 1u32..4,
    ) {
        let bx = |(x, y, w, h): (u32, u32, u32, u32)| BBox::new(x, y, x + w, y + h).unwrap();
        let (pa, gb) = (bx(a), bx(b));
        let scaled = |b: &BBox| BBox::new(b.x_min * s, b.y_min * s, b.x_max * s, b.y_max * s).unwrap();
        let (sa, sb) = (scaled(&pa), scaled(&gb));
        let x: f64 = acc_at_iou(&[Some(pa)], &[gb], 0.5).unwrap();
        let y: f64 = acc_at_iou(&[Some(sa)], &[sb], 0.5).unwrap();
        prop_assert_eq!(x, y);
    }
}

#[test]
fn accuracy_on_ten_with_seven_matching() {
    let gts = ["a"; 10];
    let preds = ["a", "a", "a", "a", "a", "a", "a", "b", "b", "b"];
    let v: f64 = accuracy(&preds, &gts).unwrap();
    assert!((v - 0.7).abs() < 1e-12);
}

#[test]
fn acc_at_iou_third_overlap_fails() {
    let p = BBox::new(0, 0, 10, 10).unwrap();
    let g = BBox::new(5, 0, 15, 10).unwrap();
    assert!((p.iou::<f64>(&g) - 1.0 / 3.0).abs() < 1e-12);
    let v: f64 = acc_at_iou(&[Some(p)], &[g], 0.5).unwrap();
    assert_eq!(v, 0.0);
    let v: f64 = acc_at_iou(&[None], &[g], 0.5).unwrap();
    assert_eq!(v, 0.0);
}

/// Three classes painted into separate polygons; every prediction is one
/// fixed class. One-vs-rest counting gives, for the predicted class `c`
/// with `n_c` of `N` labelled pixels, `F1_c = 2 n_c / (n_c + N)` and 0 for
/// the rest, so the support-weighted score is `(n_c / N) * 2 n_c / (n_c + N)`.
#[test]
fn constant_class_prediction_matches_counting_oracle() {
    let shapes = vec![
        (
            vec![vec![(2.0, 2.0), (20.0, 2.0), (20.0, 14.0), (2.0, 14.0)]],
            1u8,
        ),
        (vec![vec![(30.0, 5.0), (40.0, 5.0), (35.0, 25.0)]], 2u8),
        (
            vec![vec![
                (5.0, 30.0),
                (25.0, 30.0),
                (25.0, 40.0),
                (15.0, 45.0),
                (5.0, 40.0),
            ]],
            3u8,
        ),
    ];
    let gt = brute_raster(&shapes, 48, 48);
    let total = gt.iter().filter(|&&v| v != 0).count() as f64;
    for c in 1..=3u8 {
        let pred: Vec<u8> = gt.iter().map(|&v| if v != 0 { c } else { 0 }).collect();
        let nc = gt.iter().filter(|&&v| v == c).count() as f64;
        let expected = nc / total * 2.0 * nc / (nc + total);
        let gm = Mask::from_vec(48, 48, 4, gt.clone()).unwrap();
        let pm = Mask::from_vec(48, 48, 4, pred).unwrap();
        let got: f64 = class_weighted_f1(&pm, &gm, 4).unwrap().unwrap();
        assert!(
            (got - expected).abs() < 1e-12,
            "class {c}: {got} vs {expected}"
        );

        let mut acc = QFabricAccumulator::new(QFabricWindow::Two, 4);
        for k in 1..=3u8 {
            let n = gt.iter().filter(|&&v| v == k).count() as u64;
            acc.add_pixels(0, k, c, n).unwrap();
        }
        let q: f64 = acc.score().unwrap();
        assert!((q - expected).abs() < 1e-12);
    }
}

#[test]
fn five_step_window_with_one_wrong_step_averages_to_point_eight() {
    let mut acc = QFabricAccumulator::new(QFabricWindow::Five, 4);
    for step in 0..5 {
        let pred = if step == 3 { 2 } else { 1 };
        acc.add_pixels(step, 1, pred, 100).unwrap();
    }
    let v: f64 = acc.score().unwrap();
    assert!((v - 0.8).abs() < 1e-12);
}

#[test]
fn confusion_merge_is_order_free() {
    let mut a = ConfusionMatrix::new(3);
    let mut b = ConfusionMatrix::new(3);
    a.add(1, 2, 5);
    b.add(2, 2, 7);
    let mut ab = a.clone();
    ab.merge(&b).unwrap();
    let mut ba = b.clone();
    ba.merge(&a).unwrap();
    assert_eq!(ab, ba);
}
