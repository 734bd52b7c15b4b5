use super::{BBox, GeomError, Mask};

/// Overlap suppression for [`mask_diff`].
#[derive(Clone, Copy, Debug, Default)]
pub enum OverlapMasking<'a> {
    #[default]
    Off,
    /// Boxes predicted on each side. Every pair (one from each side) with
    /// IoU above `min_iou` has the union of its two boxes forced to
    /// background in the diff.
    Boxes {
        first: &'a [BBox],
        second: &'a [BBox],
        min_iou: f64,
    },
}

/// Boxes that overlap across the two sides: IoU strictly above `min_iou`.
pub fn overlapping_pairs(first: &[BBox], second: &[BBox], min_iou: f64) -> Vec<(BBox, BBox)> {
    let mut pairs = Vec::new();
    for a in first {
        for b in second {
            if a.intersects(b) && a.iou::<f64>(b) > min_iou {
                pairs.push((*a, *b));
            }
        }
    }
    pairs
}

/// Binary symmetric difference of two masks, optionally with overlapping
/// box pairs blanked out.
pub fn mask_diff(a: &Mask, b: &Mask, masking: OverlapMasking<'_>) -> Result<Mask, GeomError> {
    a.check_same_extent(b)?;
    let (w, h) = a.extent();
    let data: Vec<u8> = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| u8::from((x != 0) != (y != 0)))
        .collect();
    let mut out = Mask::from_vec(w, h, 2, data)?;
    if let OverlapMasking::Boxes {
        first,
        second,
        min_iou,
    } = masking
    {
        for (p, q) in overlapping_pairs(first, second, min_iou) {
            out.fill_box(&p, 0);
            out.fill_box(&q, 0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rasterize_boxes;

    #[test]
    fn equal_masks_give_no_change() {
        let m = rasterize_boxes(&[BBox::new(1, 1, 5, 3).unwrap()], 8, 8).unwrap();
        assert!(mask_diff(&m, &m, OverlapMasking::Off).unwrap().is_empty());
    }

    #[test]
    fn diff_against_empty_is_identity() {
        let a = rasterize_boxes(&[BBox::new(0, 0, 4, 4).unwrap()], 8, 8).unwrap();
        let b = Mask::binary(8, 8).unwrap();
        assert_eq!(mask_diff(&a, &b, OverlapMasking::Off).unwrap(), a);
    }

    #[test]
    fn overlap_masking_blanks_the_pair() {
        let first = [BBox::new(0, 0, 4, 4).unwrap()];
        let second = [
            BBox::new(1, 0, 5, 4).unwrap(),
            BBox::new(6, 6, 8, 8).unwrap(),
        ];
        let a = rasterize_boxes(&first, 8, 8).unwrap();
        let b = rasterize_boxes(&second, 8, 8).unwrap();
        let plain = mask_diff(&a, &b, OverlapMasking::Off).unwrap();
        assert_eq!(plain.foreground_count(), 4 + 4 + 4);
        let masked = mask_diff(
            &a,
            &b,
            OverlapMasking::Boxes {
                first: &first,
                second: &second,
                min_iou: 0.0,
            },
        )
        .unwrap();
        assert_eq!(masked.foreground_count(), 4);
        assert_eq!(masked.get(7, 7), 1);
    }

    #[test]
    fn extent_mismatch_is_an_error() {
        let a = Mask::binary(4, 4).unwrap();
        let b = Mask::binary(4, 5).unwrap();
        assert!(mask_diff(&a, &b, OverlapMasking::Off).is_err());
    }
}
