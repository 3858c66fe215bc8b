//! Grouping of uniform blocks into regions and gap-aware region merging.
//!
//! Adjacent uniform blocks (4-connectivity on the block grid) join when
//! their mean colors are close. Regions are then merged pairwise when their
//! mean colors are close *and* the pixels between them are either one color
//! or two well-separated colors. The second case is text lying across a
//! single background: background on both sides, strokes in between.

use std::collections::{HashMap, HashSet};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::raster::{block_sums, color_distance, BlockCoord, ColorVec, Image, Rgb};

/// A set of same-scale blocks treated as one candidate background.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: usize,
    pub k: usize,
    /// Sorted row-major, no duplicates.
    pub blocks: Vec<BlockCoord>,
    pub mean_color: ColorVec,
    sums: [u64; 3],
}

impl Region {
    /// Builds a region from blocks of `img`, computing the exact pixel mean.
    pub fn from_blocks(id: usize, mut blocks: Vec<BlockCoord>, img: &Image) -> Result<Self> {
        blocks.sort();
        blocks.dedup();
        let Some(first) = blocks.first() else {
            return Err(Error::invalid("a region needs at least one block"));
        };
        let k = first.k;
        let mut sums = [0u64; 3];
        for b in &blocks {
            if b.k != k {
                return Err(Error::invalid("all blocks of a region must share one block size"));
            }
            b.check_inside(img)?;
            let s = block_sums(img, *b);
            for c in 0..3 {
                sums[c] += s[c];
            }
        }
        let mean_color = ColorVec::from_sums(sums, (blocks.len() * k * k) as u64);
        Ok(Self {
            id,
            k,
            blocks,
            mean_color,
            sums,
        })
    }

    pub fn pixel_count(&self) -> u64 {
        (self.blocks.len() * self.k * self.k) as u64
    }

    fn block_set(&self) -> HashSet<(usize, usize)> {
        self.blocks.iter().map(|b| (b.col, b.row)).collect()
    }

    /// Blocks with at least one 4-neighbor outside the region.
    fn boundary_blocks(&self) -> Vec<BlockCoord> {
        let set = self.block_set();
        self.blocks
            .iter()
            .copied()
            .filter(|b| {
                let (c, r) = (b.col, b.row);
                c == 0
                    || r == 0
                    || !set.contains(&(c - 1, r))
                    || !set.contains(&(c + 1, r))
                    || !set.contains(&(c, r - 1))
                    || !set.contains(&(c, r + 1))
            })
            .collect()
    }

    fn absorb(&mut self, other: Region) {
        self.blocks.extend(other.blocks);
        self.blocks.sort();
        self.blocks.dedup();
        for c in 0..3 {
            self.sums[c] += other.sums[c];
        }
        self.mean_color = ColorVec::from_sums(self.sums, self.pixel_count());
    }
}

/// Pixels read from the space between two regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapSample {
    pub pixels: Vec<Rgb>,
    pub source: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapClass {
    Unimodal,
    BimodalMergeable,
    BimodalSplit,
}

impl GapClass {
    pub fn allows_merge(self) -> bool {
        !matches!(self, GapClass::BimodalSplit)
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Splits uniform blocks into regions: blocks join when 4-adjacent with
/// mean colors closer than `cfg.color_merge_threshold`, transitively.
/// Regions come back ordered by their first block, ids `0..n`.
pub fn group_connected(uniform: &[BlockCoord], img: &Image, cfg: &Config) -> Result<Vec<Region>> {
    let means = uniform
        .iter()
        .map(|&b| crate::raster::block_mean_color(img, b))
        .collect::<Result<Vec<_>>>()?;
    group_with_means(uniform, &means, img, cfg)
}

pub(crate) fn group_with_means(
    uniform: &[BlockCoord],
    means: &[ColorVec],
    img: &Image,
    cfg: &Config,
) -> Result<Vec<Region>> {
    let Some(first) = uniform.first() else {
        return Ok(Vec::new());
    };
    if uniform.iter().any(|b| b.k != first.k) {
        return Err(Error::invalid("uniform blocks must share one block size"));
    }
    let index: HashMap<(usize, usize), usize> = uniform.iter().enumerate().map(|(i, b)| ((b.col, b.row), i)).collect();
    let mut sets = DisjointSet::new(uniform.len());
    for (i, b) in uniform.iter().enumerate() {
        for (c, r) in [(b.col + 1, b.row), (b.col, b.row + 1)] {
            if let Some(&j) = index.get(&(c, r)) {
                if color_distance(means[i], means[j]) < cfg.color_merge_threshold {
                    sets.union(i, j);
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<BlockCoord>> = HashMap::new();
    for (i, b) in uniform.iter().enumerate() {
        groups.entry(sets.find(i)).or_default().push(*b);
    }
    let mut groups: Vec<Vec<BlockCoord>> = groups.into_values().collect();
    for g in groups.iter_mut() {
        g.sort();
    }
    groups.sort_by_key(|g| g[0]);
    groups
        .into_iter()
        .enumerate()
        .map(|(id, blocks)| Region::from_blocks(id, blocks, img))
        .collect()
}

/// Closest pair of blocks (by center distance), one from each region.
fn closest_blocks(a: &Region, b: &Region) -> (BlockCoord, BlockCoord) {
    let (ea, eb) = (a.boundary_blocks(), b.boundary_blocks());
    let mut best = (u128::MAX, ea[0], eb[0]);
    for &p in &ea {
        for &q in &eb {
            let dc = p.col.abs_diff(q.col) as u128;
            let dr = p.row.abs_diff(q.row) as u128;
            let d = dc * dc + dr * dr;
            // strict < keeps the first pair in row-major order on ties
            if d < best.0 {
                best = (d, p, q);
            }
        }
    }
    (best.1, best.2)
}

/// Reads pixels along the straight segment joining the centers of the
/// closest pair of blocks, at 1-pixel steps, skipping pixels inside either
/// region. Adjacent regions give an empty sample.
pub fn sample_gap(a: &Region, b: &Region, img: &Image) -> GapSample {
    let source = (a.id, b.id);
    if a.blocks.is_empty() || b.blocks.is_empty() {
        return GapSample {
            pixels: Vec::new(),
            source,
        };
    }
    let (pa, pb) = closest_blocks(a, b);
    let (x0, y0) = pa.center();
    let (x1, y1) = pb.center();
    let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize;
    let (sa, sb) = (a.block_set(), b.block_set());
    let ka = a.k;
    let kb = b.k;
    let mut pixels = Vec::new();
    let mut last = None;
    for i in 0..=steps {
        let t = if steps == 0 { 0.0 } else { i as f64 / steps as f64 };
        let x = (x0 + t * (x1 - x0)).floor();
        let y = (y0 + t * (y1 - y0)).floor();
        if x < 0.0 || y < 0.0 {
            continue;
        }
        let (x, y) = (x as usize, y as usize);
        if x >= img.width() || y >= img.height() || last == Some((x, y)) {
            continue;
        }
        last = Some((x, y));
        if sa.contains(&(x / ka, y / ka)) || sb.contains(&(x / kb, y / kb)) {
            continue;
        }
        pixels.push(img.pixel(x, y));
    }
    GapSample { pixels, source }
}

/// Result of 2-means clustering in RGB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoMeans {
    pub centers: [ColorVec; 2],
    /// Mean distance of each sample to its own center.
    pub within: f64,
}

fn dist2(p: Rgb, c: ColorVec) -> f64 {
    let d = [p[0] as f64 - c.r, p[1] as f64 - c.g, p[2] as f64 - c.b];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// 2-means seeded at the two most distant sample colors. `None` when the
/// sample holds fewer than two distinct colors.
pub fn two_means(pixels: &[Rgb]) -> Option<TwoMeans> {
    let mut unique = pixels.to_vec();
    unique.sort_unstable();
    unique.dedup();
    if unique.len() < 2 {
        return None;
    }
    let mut far = (0i64, 0, 1);
    for i in 0..unique.len() {
        for j in i + 1..unique.len() {
            let d: i64 = (0..3)
                .map(|c| {
                    let v = unique[i][c] as i64 - unique[j][c] as i64;
                    v * v
                })
                .sum();
            if d > far.0 {
                far = (d, i, j);
            }
        }
    }
    let mut centers = [ColorVec::from_rgb(unique[far.1]), ColorVec::from_rgb(unique[far.2])];
    for _ in 0..50 {
        let mut sums = [[0u64; 3]; 2];
        let mut counts = [0u64; 2];
        for &p in pixels {
            let j = (dist2(p, centers[1]) < dist2(p, centers[0])) as usize;
            counts[j] += 1;
            for c in 0..3 {
                sums[j][c] += p[c] as u64;
            }
        }
        let mut moved: f64 = 0.0;
        for j in 0..2 {
            if counts[j] > 0 {
                let next = ColorVec::from_sums(sums[j], counts[j]);
                moved = moved.max(color_distance(next, centers[j]));
                centers[j] = next;
            }
        }
        if moved < 1e-6 {
            break;
        }
    }
    let within = pixels
        .iter()
        .map(|&p| dist2(p, centers[0]).min(dist2(p, centers[1])).sqrt())
        .sum::<f64>()
        / pixels.len() as f64;
    Some(TwoMeans { centers, within })
}

/// Decides whether the colors between two regions have one mode or two,
/// and whether two modes are far enough apart to allow a merge.
pub fn classify_gap(s: &GapSample, cfg: &Config) -> GapClass {
    let Some(tm) = two_means(&s.pixels) else {
        return GapClass::Unimodal;
    };
    let d = color_distance(tm.centers[0], tm.centers[1]);
    if d < (2.0 * tm.within).max(20.0) {
        GapClass::Unimodal
    } else if d >= cfg.peak_separation_threshold {
        GapClass::BimodalMergeable
    } else {
        GapClass::BimodalSplit
    }
}

/// Repeatedly merges the closest-colored qualifying pair until none is left.
/// Pairs are tried in ascending (mean-color distance, lower id, higher id)
/// order; the merged region keeps the lower id.
pub fn merge_regions(regions: Vec<Region>, img: &Image, cfg: &Config) -> Result<Vec<Region>> {
    if let Some(first) = regions.first() {
        if regions.iter().any(|r| r.k != first.k) {
            return Err(Error::invalid("regions of different block sizes cannot be merged"));
        }
    }
    let mut regions = regions;
    regions.sort_by_key(|r| r.id);
    let mut verdicts: HashMap<(usize, usize), bool> = HashMap::new();
    loop {
        let mut pairs = Vec::new();
        for i in 0..regions.len() {
            for j in i + 1..regions.len() {
                let d = color_distance(regions[i].mean_color, regions[j].mean_color);
                if d < cfg.color_merge_threshold {
                    pairs.push((d, i, j));
                }
            }
        }
        // ids are sorted, so index order is id order
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let chosen = pairs.into_iter().find(|&(_, i, j)| {
            let key = (regions[i].id, regions[j].id);
            *verdicts
                .entry(key)
                .or_insert_with(|| classify_gap(&sample_gap(&regions[i], &regions[j], img), cfg).allows_merge())
        });
        let Some((_, i, j)) = chosen else {
            break;
        };
        let absorbed = regions.remove(j);
        let (id_i, id_j) = (regions[i].id, absorbed.id);
        verdicts.retain(|&(p, q), _| p != id_i && q != id_i && p != id_j && q != id_j);
        regions[i].absorb(absorbed);
    }
    Ok(regions)
}
