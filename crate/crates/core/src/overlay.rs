//! Draws detection hulls onto a copy of the input image.

use crate::error::{Error, Result};
use crate::pipeline::DetectionResult;
use crate::raster::{Image, Rgb};
use crate::shape::Point;

pub const OUTLINE_COLOR: Rgb = [255, 0, 0];
/// Outline width in pixels, centered on each hull edge.
pub const OUTLINE_WIDTH: i64 = 3;

/// Pixels on the Bresenham line from `a` to `b`, endpoints included.
fn line_pixels(a: Point, b: Point) -> Vec<(i64, i64)> {
    let (dx, dy) = ((b.x - a.x).abs(), -(b.y - a.y).abs());
    let (sx, sy) = (if a.x < b.x { 1 } else { -1 }, if a.y < b.y { 1 } else { -1 });
    let (mut x, mut y, mut err) = (a.x, a.y, dx + dy);
    let mut out = Vec::new();
    loop {
        out.push((x, y));
        if x == b.x && y == b.y {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Paints a closed polygon outline `OUTLINE_WIDTH` pixels wide.
pub fn draw_polygon(img: &mut Image, vertices: &[Point], color: Rgb) {
    let r = OUTLINE_WIDTH / 2;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let n = vertices.len();
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        for (x, y) in line_pixels(a, b) {
            for yy in y - r..=y + r {
                for xx in x - r..=x + r {
                    if xx >= 0 && yy >= 0 && xx < w && yy < h {
                        img.set_pixel(xx as usize, yy as usize, color);
                    }
                }
            }
        }
    }
}

/// Copy of `img` with every detection hull outlined. The result must have
/// been computed on an image of the same size.
pub fn render_overlay(img: &Image, result: &DetectionResult) -> Result<Image> {
    if (result.width, result.height) != (img.width(), img.height()) {
        return Err(Error::invalid(format!(
            "result is for a {}x{} image but the image is {}x{}",
            result.width,
            result.height,
            img.width(),
            img.height()
        )));
    }
    let mut out = img.clone();
    for d in &result.detections {
        draw_polygon(&mut out, &d.hull, OUTLINE_COLOR);
    }
    Ok(out)
}
