//! Frame normalization against hand-computed bilinear samples.

use fplfix_core::dataset_io::GrayImage;
use fplfix_core::preprocess::{crop_resize, frame_point, resize_bilinear};

fn bilinear(src: &[[f64; 4]; 4], x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, 3.0);
    let y = y.clamp(0.0, 3.0);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(3), (y0 + 1).min(3));
    let (ax, ay) = (x - x0 as f64, y - y0 as f64);
    let top = src[y0][x0] * (1.0 - ax) + src[y0][x1] * ax;
    let bottom = src[y1][x0] * (1.0 - ax) + src[y1][x1] * ax;
    top * (1.0 - ay) + bottom * ay
}

#[test]
fn toy_upscale_matches_bilinear_formula() {
    let src = [
        [0.0, 40.0, 80.0, 120.0],
        [10.0, 60.0, 110.0, 160.0],
        [20.0, 90.0, 160.0, 230.0],
        [30.0, 100.0, 170.0, 240.0],
    ];
    let img = GrayImage::from_fn(4, 4, |x, y| src[y][x] as u8);
    let out = resize_bilinear(&img, 10, 10);
    for y in 0..10 {
        for x in 0..10 {
            let sx = (x as f64 + 0.5) * 0.4 - 0.5;
            let sy = (y as f64 + 0.5) * 0.4 - 0.5;
            let expected = bilinear(&src, sx, sy).round() as u8;
            assert_eq!(out.get(x, y), expected, "({x},{y})");
        }
    }
}

#[test]
fn landscape_image_is_cropped_then_resized() {
    // 400x300: crop columns 50..350, then scale 300 -> 299
    let img = GrayImage::from_fn(400, 300, |x, y| ((x * 7 + y * 3) % 256) as u8);
    let out = crop_resize(&img);
    assert_eq!((out.width(), out.height()), (299, 299));
    let scale = 300.0 / 299.0;
    for &(x, y) in &[(0usize, 0usize), (150, 150), (298, 298), (17, 250)] {
        let sx = ((x as f64 + 0.5) * scale - 0.5).clamp(0.0, 299.0) + 50.0;
        let sy = ((y as f64 + 0.5) * scale - 0.5).clamp(0.0, 299.0);
        let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
        let (ax, ay) = (sx - x0 as f64, sy - y0 as f64);
        let p = |xx: usize, yy: usize| f64::from(img.get(xx.min(349), yy.min(299)));
        let v = (p(x0, y0) * (1.0 - ax) + p(x0 + 1, y0) * ax) * (1.0 - ay)
            + (p(x0, y0 + 1) * (1.0 - ax) + p(x0 + 1, y0 + 1) * ax) * ay;
        assert_eq!(out.get(x, y), v.round() as u8, "({x},{y})");
        // and frame_point inverts the sampling position
        let (fx, fy) = frame_point(400, 300, sx, sy);
        assert!((fx - x as f64).abs() < 1e-9 && (fy - y as f64).abs() < 1e-9);
    }
}
