//! Text presence test inside a candidate's convex hull.
//!
//! The region's coarse blocks rarely cover all of the background around
//! the text. Coverage is grown inside the hull with progressively smaller
//! blocks, finishing at single pixels: a block joins when it touches the
//! background claimed so far and its mean color is close to the region's.
//! Whatever remains unclaimed inside the hull is foreground, and text is
//! declared when foreground and background colors are far apart.

use std::collections::VecDeque;

use crate::config::Config;
use crate::raster::{color_distance, ColorVec, Image};
use crate::regiongraph::Region;
use crate::shape::{hull_of_blocks, Hull};

/// Pixel-resolution boolean raster over a rectangle of the image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn new(x0: usize, y0: usize, width: usize, height: usize) -> Self {
        Self {
            x0,
            y0,
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    /// Membership of an absolute image pixel; false outside the rectangle.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        x >= self.x0
            && y >= self.y0
            && x < self.x0 + self.width
            && y < self.y0 + self.height
            && self.bits[(y - self.y0) * self.width + (x - self.x0)]
    }

    #[inline]
    fn set(&mut self, x: usize, y: usize) {
        self.bits[(y - self.y0) * self.width + (x - self.x0)] = true;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True when every set pixel of `other` is also set here.
    pub fn contains(&self, other: &PixelMask) -> bool {
        (0..other.height).all(|dy| {
            (0..other.width).all(|dx| {
                let (x, y) = (other.x0 + dx, other.y0 + dy);
                !other.get(x, y) || self.get(x, y)
            })
        })
    }

    /// Absolute coordinates of set pixels, row-major.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|&(_, &b)| b)
            .map(|(i, _)| (self.x0 + i % self.width, self.y0 + i / self.width))
    }
}

/// A region that passed the shape test, with its background/foreground split.
#[derive(Debug, Clone)]
pub struct CandidateArea {
    pub region: Region,
    pub hull: Hull,
    pub background_mask: PixelMask,
    pub bg_color: ColorVec,
    pub fg_color: ColorVec,
    pub contrast: f64,
    pub text_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextVerdict {
    Text,
    NoText,
}

/// Block sides visited while expanding from a region of block side `k`:
/// halving down to `min_block_size`, then single pixels.
pub fn refinement_levels(k: usize, min_block_size: usize) -> Vec<usize> {
    let mut levels = Vec::new();
    let mut s = k / 2;
    while s >= min_block_size.max(2) {
        levels.push(s);
        s /= 2;
    }
    levels.push(1);
    levels
}

/// Hull pixel-center test cached over the hull's bounding box.
struct HullRaster {
    x0: usize,
    y0: usize,
    width: usize,
    height: usize,
    inside: Vec<bool>,
}

impl HullRaster {
    fn new(hull: &Hull, img: &Image) -> Self {
        let (lo, hi) = hull.bounds().unwrap_or_default();
        let x0 = lo.x.clamp(0, img.width() as i64) as usize;
        let y0 = lo.y.clamp(0, img.height() as i64) as usize;
        let x1 = hi.x.clamp(0, img.width() as i64) as usize;
        let y1 = hi.y.clamp(0, img.height() as i64) as usize;
        let (width, height) = (x1 - x0, y1 - y0);
        let mut inside = vec![false; width * height];
        for dy in 0..height {
            for dx in 0..width {
                inside[dy * width + dx] = hull.contains_pixel((x0 + dx) as i64, (y0 + dy) as i64);
            }
        }
        Self {
            x0,
            y0,
            width,
            height,
            inside,
        }
    }

    #[inline]
    fn get(&self, x: usize, y: usize) -> bool {
        x >= self.x0
            && y >= self.y0
            && x < self.x0 + self.width
            && y < self.y0 + self.height
            && self.inside[(y - self.y0) * self.width + (x - self.x0)]
    }

    /// Every pixel of the `s`×`s` block at `(x, y)` is inside. The hull is
    /// convex, so checking the four corner pixels suffices.
    fn holds_block(&self, x: usize, y: usize, s: usize) -> bool {
        self.get(x, y) && self.get(x + s - 1, y) && self.get(x, y + s - 1) && self.get(x + s - 1, y + s - 1)
    }
}

fn mean_of(img: &Image, x: usize, y: usize, s: usize) -> ColorVec {
    let mut sums = [0u64; 3];
    for yy in y..y + s {
        for p in &img.row(yy)[x..x + s] {
            for c in 0..3 {
                sums[c] += p[c] as u64;
            }
        }
    }
    ColorVec::from_sums(sums, (s * s) as u64)
}

fn touches(mask: &PixelMask, x: usize, y: usize, s: usize) -> bool {
    let above = y > 0 && (x..x + s).any(|xx| mask.get(xx, y - 1));
    let below = (x..x + s).any(|xx| mask.get(xx, y + s));
    let left = x > 0 && (y..y + s).any(|yy| mask.get(x - 1, yy));
    let right = (y..y + s).any(|yy| mask.get(x + s, yy));
    above || below || left || right
}

fn grow_level(mask: &mut PixelMask, raster: &HullRaster, img: &Image, target: ColorVec, s: usize, cfg: &Config) {
    let (gx0, gy0) = (raster.x0 / s, raster.y0 / s);
    let gx1 = (raster.x0 + raster.width).min(img.width()) / s;
    let gy1 = (raster.y0 + raster.height).min(img.height()) / s;
    if gx1 <= gx0 || gy1 <= gy0 {
        return;
    }
    let (gw, gh) = (gx1 - gx0, gy1 - gy0);
    // 0 = ineligible, 1 = eligible, 2 = claimed
    let mut state = vec![0u8; gw * gh];
    let mut queue = VecDeque::new();
    for gy in 0..gh {
        for gx in 0..gw {
            let (x, y) = ((gx0 + gx) * s, (gy0 + gy) * s);
            if !raster.holds_block(x, y, s) {
                continue;
            }
            let full = (y..y + s).all(|yy| (x..x + s).all(|xx| mask.get(xx, yy)));
            if full {
                continue;
            }
            if color_distance(mean_of(img, x, y, s), target) <= cfg.color_merge_threshold {
                state[gy * gw + gx] = 1;
                if touches(mask, x, y, s) {
                    queue.push_back((gx, gy));
                }
            }
        }
    }
    while let Some((gx, gy)) = queue.pop_front() {
        let i = gy * gw + gx;
        if state[i] != 1 {
            continue;
        }
        state[i] = 2;
        let (x, y) = ((gx0 + gx) * s, (gy0 + gy) * s);
        for yy in y..y + s {
            for xx in x..x + s {
                mask.set(xx, yy);
            }
        }
        if gx > 0 {
            queue.push_back((gx - 1, gy));
        }
        if gx + 1 < gw {
            queue.push_back((gx + 1, gy));
        }
        if gy > 0 {
            queue.push_back((gx, gy - 1));
        }
        if gy + 1 < gh {
            queue.push_back((gx, gy + 1));
        }
    }
}

/// Background masks after each refinement step. Entry 0 is the region's
/// own blocks; the last entry is the final background.
pub fn expand_background_levels(region: &Region, hull: &Hull, img: &Image, cfg: &Config) -> Vec<PixelMask> {
    let raster = HullRaster::new(hull, img);
    let mut mask = PixelMask::new(raster.x0, raster.y0, raster.width, raster.height);
    for b in &region.blocks {
        let (x0, y0) = b.origin();
        for y in y0..y0 + b.k {
            for x in x0..x0 + b.k {
                if raster.get(x, y) {
                    mask.set(x, y);
                }
            }
        }
    }
    let mut levels = vec![mask.clone()];
    for s in refinement_levels(region.k, cfg.min_block_size) {
        grow_level(&mut mask, &raster, img, region.mean_color, s, cfg);
        levels.push(mask.clone());
    }
    levels
}

/// Final background mask of `region` inside `hull`.
pub fn expand_background(region: &Region, hull: &Hull, img: &Image, cfg: &Config) -> PixelMask {
    expand_background_levels(region, hull, img, cfg)
        .pop()
        .expect("at least the initial level")
}

/// Splits the hull's pixels by `background` and measures both sides.
pub fn measure(region: Region, hull: Hull, background: PixelMask, img: &Image) -> CandidateArea {
    let mut sums = [[0u64; 3]; 2];
    let mut counts = [0u64; 2];
    let (x0, y0) = (background.x0, background.y0);
    for y in y0..y0 + background.height {
        for x in x0..x0 + background.width {
            if !hull.contains_pixel(x as i64, y as i64) {
                continue;
            }
            let j = (!background.get(x, y)) as usize;
            let p = img.pixel(x, y);
            counts[j] += 1;
            for c in 0..3 {
                sums[j][c] += p[c] as u64;
            }
        }
    }
    let bg_color = if counts[0] > 0 {
        ColorVec::from_sums(sums[0], counts[0])
    } else {
        region.mean_color
    };
    let (fg_color, contrast) = if counts[1] > 0 {
        let fg = ColorVec::from_sums(sums[1], counts[1]);
        (fg, color_distance(bg_color, fg))
    } else {
        (bg_color, 0.0)
    };
    let total = counts[0] + counts[1];
    let text_fraction = if total > 0 {
        counts[1] as f64 / total as f64
    } else {
        0.0
    };
    CandidateArea {
        region,
        hull,
        background_mask: background,
        bg_color,
        fg_color,
        contrast,
        text_fraction,
    }
}

/// Hull, background expansion and color statistics for one region.
pub fn analyze_region(region: Region, img: &Image, cfg: &Config) -> CandidateArea {
    let hull = hull_of_blocks(&region.blocks);
    let background = expand_background(&region, &hull, img, cfg);
    measure(region, hull, background, img)
}

/// Text iff enough of the hull is foreground and it contrasts enough.
pub fn text_presence(area: &CandidateArea, cfg: &Config) -> TextVerdict {
    verdict(area.contrast, area.text_fraction, cfg)
}

pub fn verdict(contrast: f64, text_fraction: f64, cfg: &Config) -> TextVerdict {
    if text_fraction >= cfg.min_text_fraction && contrast >= cfg.text_contrast_threshold {
        TextVerdict::Text
    } else {
        TextVerdict::NoText
    }
}
