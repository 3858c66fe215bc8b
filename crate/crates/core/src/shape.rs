//! Shape analysis of candidate regions.
//!
//! A text background surrounds its text, so a region that is connected,
//! hole-free and convex cannot be one. Convexity of a block mask is measured
//! by solidity: member cells over the cells the convex hull covers.

use std::collections::VecDeque;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::raster::BlockCoord;

/// Integer point in pixel (or block) coordinates. `y` grows downward.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }
}

#[inline]
fn cross(o: Point, a: Point, b: Point) -> i128 {
    (a.x - o.x) as i128 * (b.y - o.y) as i128 - (a.y - o.y) as i128 * (b.x - o.x) as i128
}

/// Convex polygon with vertices in counter-clockwise order (positive
/// orientation in the `(x, y)` frame as given), no three collinear.
/// Degenerate hulls have one or two vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hull {
    pub vertices: Vec<Point>,
}

impl Hull {
    /// Twice the enclosed area.
    pub fn area2(&self) -> i128 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0;
        }
        (0..v.len())
            .map(|i| {
                let (a, b) = (v[i], v[(i + 1) % v.len()]);
                a.x as i128 * b.y as i128 - b.x as i128 * a.y as i128
            })
            .sum()
    }

    pub fn area(&self) -> f64 {
        self.area2() as f64 / 2.0
    }

    /// Inclusive containment of a point given in doubled coordinates, so
    /// that half-integer points stay exact.
    fn contains_doubled(&self, px: i64, py: i64) -> bool {
        let v = &self.vertices;
        let d = |i: usize| Point::new(2 * v[i].x, 2 * v[i].y);
        let p = Point::new(px, py);
        match v.len() {
            0 => false,
            1 => d(0) == p,
            2 => {
                let (a, b) = (d(0), d(1));
                cross(a, b, p) == 0
                    && p.x >= a.x.min(b.x)
                    && p.x <= a.x.max(b.x)
                    && p.y >= a.y.min(b.y)
                    && p.y <= a.y.max(b.y)
            }
            n => (0..n).all(|i| cross(d(i), d((i + 1) % n), p) >= 0),
        }
    }

    pub fn contains_point(&self, p: Point) -> bool {
        self.contains_doubled(2 * p.x, 2 * p.y)
    }

    /// Whether the center of pixel `(x, y)`, i.e. `(x + ½, y + ½)`, lies in
    /// the hull (boundary included).
    pub fn contains_pixel(&self, x: i64, y: i64) -> bool {
        self.contains_doubled(2 * x + 1, 2 * y + 1)
    }

    /// Inclusive bounding box `(min, max)` of the vertices.
    pub fn bounds(&self) -> Option<(Point, Point)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), p| {
            (
                Point::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }

    pub fn as_f64(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(|p| [p.x as f64, p.y as f64]).collect()
    }

    /// Area of the intersection with an axis-aligned box, by clipping the
    /// box against each hull edge.
    fn clipped_box_area(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
        let mut poly = vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        for i in 0..v.len() {
            let a = [v[i].x as f64, v[i].y as f64];
            let b = [v[(i + 1) % v.len()].x as f64, v[(i + 1) % v.len()].y as f64];
            let side = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            let mut out = Vec::with_capacity(poly.len() + 1);
            for j in 0..poly.len() {
                let (p, q) = (poly[j], poly[(j + 1) % poly.len()]);
                let (sp, sq) = (side(p), side(q));
                if sp >= 0.0 {
                    out.push(p);
                }
                if (sp >= 0.0) != (sq >= 0.0) {
                    let t = sp / (sp - sq);
                    out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
                }
            }
            poly = out;
            if poly.is_empty() {
                return 0.0;
            }
        }
        let n = poly.len();
        (0..n)
            .map(|i| poly[i][0] * poly[(i + 1) % n][1] - poly[(i + 1) % n][0] * poly[i][1])
            .sum::<f64>()
            .abs()
            / 2.0
    }
}

/// Andrew's monotone chain. Interior and collinear boundary points are
/// dropped; collinear input collapses to its two extremes.
pub fn convex_hull(points: &[Point]) -> Hull {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return Hull { vertices: pts };
    }
    let mut lower: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && lower[0] == lower[1] {
        lower.pop();
    }
    Hull { vertices: lower }
}

/// Hull of all pixel-space corner points of the blocks.
pub fn hull_of_blocks(blocks: &[BlockCoord]) -> Hull {
    let corners: Vec<Point> = blocks
        .iter()
        .flat_map(|b| {
            let (x, y) = b.origin();
            let (x0, y0, k) = (x as i64, y as i64, b.k as i64);
            [
                Point::new(x0, y0),
                Point::new(x0 + k, y0),
                Point::new(x0, y0 + k),
                Point::new(x0 + k, y0 + k),
            ]
        })
        .collect();
    convex_hull(&corners)
}

/// Binary membership grid over a region's tight bounding box, in block units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    pub k: usize,
    pub col0: usize,
    pub row0: usize,
    pub cols: usize,
    pub rows: usize,
    cells: Vec<bool>,
}

impl RegionMask {
    pub fn from_blocks(blocks: &[BlockCoord]) -> Result<Self> {
        let first = blocks.first().ok_or_else(|| Error::invalid("empty region mask"))?;
        if blocks.iter().any(|b| b.k != first.k) {
            return Err(Error::invalid("mask blocks must share one block size"));
        }
        let col0 = blocks.iter().map(|b| b.col).min().unwrap_or(0);
        let row0 = blocks.iter().map(|b| b.row).min().unwrap_or(0);
        let cols = blocks.iter().map(|b| b.col).max().unwrap_or(0) - col0 + 1;
        let rows = blocks.iter().map(|b| b.row).max().unwrap_or(0) - row0 + 1;
        let mut cells = vec![false; cols * rows];
        for b in blocks {
            cells[(b.row - row0) * cols + (b.col - col0)] = true;
        }
        Ok(Self {
            k: first.k,
            col0,
            row0,
            cols,
            rows,
            cells,
        })
    }

    /// Mask from rows of `'#'` (member) and anything else (not a member),
    /// anchored at block (0, 0). Handy in tests.
    pub fn from_art(k: usize, art: &[&str]) -> Result<Self> {
        let blocks: Vec<BlockCoord> = art
            .iter()
            .enumerate()
            .flat_map(|(r, line)| {
                line.chars()
                    .enumerate()
                    .filter(|&(_, ch)| ch == '#')
                    .map(move |(c, _)| BlockCoord::new(c, r, k))
            })
            .collect();
        Self::from_blocks(&blocks)
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    pub fn member_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Member cells as absolute block coordinates.
    pub fn blocks(&self) -> Vec<BlockCoord> {
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| (c, r)))
            .filter(|&(c, r)| self.get(c, r))
            .map(|(c, r)| BlockCoord::new(c + self.col0, r + self.row0, self.k))
            .collect()
    }

    /// 4-connected components of cells whose membership equals `member`.
    fn components(&self, member: bool) -> Vec<Vec<(usize, usize)>> {
        let mut seen = vec![false; self.cells.len()];
        let mut out = Vec::new();
        for start in 0..self.cells.len() {
            if seen[start] || self.cells[start] != member {
                continue;
            }
            seen[start] = true;
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                let (c, r) = (i % self.cols, i / self.cols);
                comp.push((c, r));
                let mut visit = |c: usize, r: usize| {
                    let j = r * self.cols + c;
                    if !seen[j] && self.cells[j] == member {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                };
                if c > 0 {
                    visit(c - 1, r);
                }
                if c + 1 < self.cols {
                    visit(c + 1, r);
                }
                if r > 0 {
                    visit(c, r - 1);
                }
                if r + 1 < self.rows {
                    visit(c, r + 1);
                }
            }
            out.push(comp);
        }
        out
    }

    /// Non-member components of the bounding box, split into
    /// `(enclosed, touching the box border)` counts.
    pub fn background_components(&self) -> (usize, usize) {
        let comps = self.components(false);
        let touching = comps
            .iter()
            .filter(|comp| {
                comp.iter()
                    .any(|&(c, r)| c == 0 || r == 0 || c + 1 == self.cols || r + 1 == self.rows)
            })
            .count();
        (comps.len() - touching, touching)
    }

    /// Hull of the member cells' corners, in block units relative to the box.
    fn local_hull(&self) -> Hull {
        let corners: Vec<Point> = (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| (c, r)))
            .filter(|&(c, r)| self.get(c, r))
            .flat_map(|(c, r)| {
                let (c, r) = (c as i64, r as i64);
                [
                    Point::new(c, r),
                    Point::new(c + 1, r),
                    Point::new(c, r + 1),
                    Point::new(c + 1, r + 1),
                ]
            })
            .collect();
        convex_hull(&corners)
    }

    /// Member cells divided by the cells that overlap the convex hull with
    /// positive area. Always in (0, 1].
    pub fn solidity(&self) -> f64 {
        let hull = self.local_hull();
        let mut covered = 0usize;
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(c, r) {
                    covered += 1;
                    continue;
                }
                let (x, y) = (c as f64, r as f64);
                if hull.clipped_box_area(x, y, x + 1.0, y + 1.0) > 1e-9 {
                    covered += 1;
                }
            }
        }
        self.member_count() as f64 / covered as f64
    }

    /// Hull of the member blocks in pixel coordinates.
    pub fn pixel_hull(&self) -> Hull {
        hull_of_blocks(&self.blocks())
    }
}

/// True iff all member cells form one 4-connected component.
pub fn is_connected(m: &RegionMask) -> bool {
    m.components(true).len() == 1
}

/// Number of enclosed non-member components (holes).
pub fn count_holes(m: &RegionMask) -> usize {
    m.background_components().0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeVerdict {
    Keep,
    Eliminate,
}

/// Drops regions that are connected, hole-free and (nearly) convex.
pub fn shape_test(m: &RegionMask, cfg: &Config) -> ShapeVerdict {
    if is_connected(m) && count_holes(m) == 0 && m.solidity() >= cfg.solidity_threshold {
        ShapeVerdict::Eliminate
    } else {
        ShapeVerdict::Keep
    }
}
