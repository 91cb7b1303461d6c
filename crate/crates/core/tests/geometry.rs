mod oracle;

use deixis_core::scene::{expand_plural_region, overlap_ratio, BBox, FrameMeta, PixelPoint};
use proptest::prelude::*;

fn int_box(max_w: u32, max_h: u32) -> impl Strategy<Value = [f64; 4]> {
    (0..max_w - 1, 0..max_h - 1).prop_flat_map(move |(x0, y0)| {
        (x0 + 1..=max_w, y0 + 1..=max_h)
            .prop_map(move |(x1, y1)| [x0 as f64, y0 as f64, x1 as f64, y1 as f64])
    })
}

fn bbox(b: [f64; 4]) -> BBox {
    BBox::new(b[0], b[1], b[2], b[3]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn overlap_matches_pixel_count(child in int_box(64, 48), parent in int_box(64, 48)) {
        let (shared, total) = oracle::pixel_overlap(child, parent, 64, 48);
        let expected = shared as f64 / total as f64;
        let got = overlap_ratio(&bbox(child), &bbox(parent)).unwrap();
        prop_assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }

    #[test]
    fn plural_region_edges_within_one_pixel(x in -20.0f64..340.0, y in -20.0f64..260.0) {
        let frame = FrameMeta::new(320, 240).unwrap();
        let got: [f64; 4] = expand_plural_region(PixelPoint::new(x, y), &frame).into();
        let want = oracle::plural_region_pixels((x, y), 320, 240).unwrap();
        for i in 0..4 {
            prop_assert!((got[i] - want[i]).abs() <= 1.0, "edge {i}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn region_clipped_at_corner() {
    let frame = FrameMeta::new(1920, 1080).unwrap();
    let r: [f64; 4] = expand_plural_region(PixelPoint::new(0.0, 0.0), &frame).into();
    assert_eq!(r, [0.0, 0.0, 480.0, 270.0]);
    assert_eq!(oracle::plural_region_pixels((0.0, 0.0), 1920, 1080), Some(r));
}
