//! Minimal raster drawing for annotated output.

use crate::font::render_text;
use crate::raster::ImageRgb;

/// Sets one pixel if it lies inside the image.
pub fn dot(img: &mut ImageRgb, x: f64, y: f64, color: [u8; 3]) {
    let (xi, yi) = (x.round(), y.round());
    if xi >= 0.0 && yi >= 0.0 && (xi as usize) < img.width() && (yi as usize) < img.height() {
        img.put_pixel(xi as usize, yi as usize, color);
    }
}

/// Square-brush line of the given thickness.
pub fn line(img: &mut ImageRgb, a: (f64, f64), b: (f64, f64), color: [u8; 3], thickness: usize) {
    let steps = (b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil().max(1.0) as usize;
    let half = thickness.saturating_sub(1) as f64 / 2.0;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let (x, y) = (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t);
        for dy in 0..thickness.max(1) {
            for dx in 0..thickness.max(1) {
                dot(img, x - half + dx as f64, y - half + dy as f64, color);
            }
        }
    }
}

pub fn polygon(img: &mut ImageRgb, pts: &[(f64, f64)], color: [u8; 3], thickness: usize) {
    for i in 0..pts.len() {
        line(img, pts[i], pts[(i + 1) % pts.len()], color, thickness);
    }
}

/// Bitmap text with its top-left corner at `(x, y)`, each font cell drawn
/// as a `scale x scale` block.
pub fn text(img: &mut ImageRgb, s: &str, x: f64, y: f64, scale: usize, color: [u8; 3]) {
    let bm = render_text(s);
    let scale = scale.max(1);
    for r in 0..bm.rows {
        for c in 0..bm.cols {
            if !bm.lit(c, r) {
                continue;
            }
            for dy in 0..scale {
                for dx in 0..scale {
                    dot(img, x + (c * scale + dx) as f64, y + (r * scale + dy) as f64, color);
                }
            }
        }
    }
}
