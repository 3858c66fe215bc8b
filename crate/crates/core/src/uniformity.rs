//! Block texture uniformity.
//!
//! Each `k`×`k` block is split into its red, green and blue planes, and each
//! plane (flattened row-major to length k²) is projected onto the 2-D
//! Walsh–Hadamard filters of order `k`. Every filter has ±1 entries that sum
//! to zero, so a projection measures the color imbalance between two
//! equal-size halves of the block. The all-ones (DC) vector is left out: it
//! only carries the mean color. A block's score is the L2 norm of its
//! 3·(k²−1) coefficients, each divided by the filter norm `k`.
//!
//! [`FilterBasis`] materializes the filters for inspection and small-`k`
//! scoring. The pipeline uses [`BlockGrid`], which gets the same
//! coefficients from an in-place fast Walsh–Hadamard transform in
//! O(k² log k) per plane.

use rayon::prelude::*;

use crate::config::SelectionRule;
use crate::error::{Error, Result};
use crate::raster::{block_sums, BlockCoord, ColorVec, Image};

/// Entry `(y, x)` of Walsh–Hadamard filter `index` of order `k`
/// (Sylvester ordering: `index = a·k + b` is the outer product of 1-D
/// Hadamard rows `a` (vertical) and `b` (horizontal)).
#[inline]
pub fn walsh_entry(k: usize, index: usize, y: usize, x: usize) -> i8 {
    let (a, b) = (index / k, index % k);
    if ((a & y).count_ones() + (b & x).count_ones()).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn check_block_side(k: usize) -> Result<()> {
    if k < 2 || !k.is_power_of_two() {
        return Err(Error::invalid(format!(
            "block side must be a power of two >= 2, got {k}"
        )));
    }
    Ok(())
}

/// The k²−1 non-DC Walsh–Hadamard filters of order `k`, each a row-major
/// ±1 vector of length k².
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterBasis {
    k: usize,
    filters: Vec<Vec<i8>>,
}

impl FilterBasis {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn filters(&self) -> &[Vec<i8>] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    /// Shared Euclidean norm of every filter, √(k²) = k.
    pub fn norm(&self) -> f64 {
        self.k as f64
    }
}

/// Builds the filter basis of order `k`. Memory grows as k⁴, so this is meant
/// for small blocks; large blocks are scored through [`BlockGrid`].
pub fn build_basis(k: usize) -> Result<FilterBasis> {
    check_block_side(k)?;
    let n = k * k;
    let filters = (1..n)
        .map(|i| (0..n).map(|p| walsh_entry(k, i, p / k, p % k)).collect())
        .collect();
    Ok(FilterBasis { k, filters })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformityScore {
    pub block: BlockCoord,
    pub score: f64,
}

/// Row-major channel planes of one block.
pub fn block_planes(img: &Image, b: BlockCoord) -> Result<[Vec<f64>; 3]> {
    b.check_inside(img)?;
    let (x0, y0) = b.origin();
    let n = b.k * b.k;
    let mut planes = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for y in y0..y0 + b.k {
        for p in &img.row(y)[x0..x0 + b.k] {
            for c in 0..3 {
                planes[c].push(p[c] as f64);
            }
        }
    }
    Ok(planes)
}

/// Scores channel planes by explicit dot products with every filter.
pub fn score_planes_with_basis(planes: &[Vec<f64>; 3], basis: &FilterBasis) -> f64 {
    let norm = basis.norm();
    let mut sum = 0.0;
    for plane in planes {
        for f in &basis.filters {
            let dot: f64 = f.iter().zip(plane).map(|(&s, &v)| s as f64 * v).sum();
            let coef = dot / norm;
            sum += coef * coef;
        }
    }
    sum.sqrt()
}

/// Scores one block against an explicit basis.
pub fn score_block(img: &Image, b: BlockCoord, basis: &FilterBasis) -> Result<UniformityScore> {
    if basis.k != b.k {
        return Err(Error::invalid(format!(
            "basis of order {} cannot score a block of side {}",
            basis.k, b.k
        )));
    }
    let planes = block_planes(img, b)?;
    Ok(UniformityScore {
        block: b,
        score: score_planes_with_basis(&planes, basis),
    })
}

/// In-place 2-D fast Walsh–Hadamard transform of a row-major `k`×`k`
/// plane. Afterwards `plane[i]` holds the (unnormalized) dot product with
/// filter `i` in [`walsh_entry`] order; `plane[0]` is the DC sum.
pub fn fwht2d(plane: &mut [f64], k: usize) {
    debug_assert_eq!(plane.len(), k * k);
    debug_assert!(k.is_power_of_two());
    for row in plane.chunks_exact_mut(k) {
        fwht1d(row);
    }
    // columns
    let mut h = 1;
    while h < k {
        for y0 in (0..k).step_by(2 * h) {
            for y in y0..y0 + h {
                let (top, bottom) = plane.split_at_mut((y + h) * k);
                let a = &mut top[y * k..y * k + k];
                let b = &mut bottom[..k];
                for (u, v) in a.iter_mut().zip(b.iter_mut()) {
                    let (s, d) = (*u + *v, *u - *v);
                    *u = s;
                    *v = d;
                }
            }
        }
        h *= 2;
    }
}

fn fwht1d(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Filter coefficients of a block for each channel, divided by the filter
/// norm `k`. Index 0 is the DC coefficient; indices 1.. follow
/// [`FilterBasis::filters`] order.
pub fn block_coefficients(img: &Image, b: BlockCoord) -> Result<[Vec<f64>; 3]> {
    check_block_side(b.k)?;
    let mut planes = block_planes(img, b)?;
    for p in planes.iter_mut() {
        fwht2d(p, b.k);
        let k = b.k as f64;
        p.iter_mut().for_each(|c| *c /= k);
    }
    Ok(planes)
}

/// Uniformity score of `k`×`k` channel planes via the fast transform.
/// Planes are consumed as scratch space.
pub fn score_planes(planes: &mut [Vec<f64>; 3], k: usize) -> f64 {
    let kk = (k * k) as f64;
    let mut sum = 0.0;
    for p in planes.iter_mut() {
        fwht2d(p, k);
        sum += p[1..].iter().map(|c| c * c).sum::<f64>();
    }
    (sum / kk).sqrt()
}

/// Scores and mean colors for every whole block of one scale.
#[derive(Debug, Clone)]
pub struct BlockGrid {
    pub k: usize,
    pub cols: usize,
    pub rows: usize,
    scores: Vec<f64>,
    means: Vec<ColorVec>,
}

impl BlockGrid {
    pub fn compute(img: &Image, k: usize) -> Result<Self> {
        check_block_side(k)?;
        let (cols, rows) = img.grid_dims(k);
        if cols == 0 || rows == 0 {
            return Err(Error::invalid(format!(
                "a {}x{} image holds no whole {k}x{k} block",
                img.width(),
                img.height()
            )));
        }
        let per_row: Vec<Vec<(f64, ColorVec)>> = (0..rows)
            .into_par_iter()
            .map(|row| {
                let mut planes = [vec![0.0; k * k], vec![0.0; k * k], vec![0.0; k * k]];
                (0..cols)
                    .map(|col| {
                        let b = BlockCoord::new(col, row, k);
                        let (x0, y0) = b.origin();
                        for (dy, y) in (y0..y0 + k).enumerate() {
                            for (dx, p) in img.row(y)[x0..x0 + k].iter().enumerate() {
                                for c in 0..3 {
                                    planes[c][dy * k + dx] = p[c] as f64;
                                }
                            }
                        }
                        let mean = ColorVec::from_sums(block_sums(img, b), (k * k) as u64);
                        (score_planes(&mut planes, k), mean)
                    })
                    .collect()
            })
            .collect();
        let (scores, means) = per_row.into_iter().flatten().unzip();
        Ok(Self {
            k,
            cols,
            rows,
            scores,
            means,
        })
    }

    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.cols + col
    }

    pub fn block(&self, index: usize) -> BlockCoord {
        BlockCoord::new(index % self.cols, index / self.cols, self.k)
    }

    pub fn score(&self, col: usize, row: usize) -> f64 {
        self.scores[self.index(col, row)]
    }

    pub fn mean(&self, col: usize, row: usize) -> ColorVec {
        self.means[self.index(col, row)]
    }

    pub fn raw_scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn means(&self) -> &[ColorVec] {
        &self.means
    }

    pub fn scores(&self) -> Vec<UniformityScore> {
        self.scores
            .iter()
            .enumerate()
            .map(|(i, &score)| UniformityScore {
                block: self.block(i),
                score,
            })
            .collect()
    }

    /// Blocks picked by `rule`, in row-major order.
    pub fn select(&self, rule: SelectionRule) -> Vec<BlockCoord> {
        uniform_mask(&self.scores, rule)
            .into_iter()
            .enumerate()
            .filter(|&(_, keep)| keep)
            .map(|(i, _)| self.block(i))
            .collect()
    }
}

/// Score cutoff for `rule`. Under `MeanMinusStd` a block must score strictly
/// below it; under `Percentile` at or below it.
pub fn selection_threshold(scores: &[f64], rule: SelectionRule) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    match rule {
        SelectionRule::MeanMinusStd => {
            let n = scores.len() as f64;
            let mean = scores.iter().sum::<f64>() / n;
            let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
            Some(mean - var.sqrt())
        }
        SelectionRule::Percentile(q) => {
            let mut sorted = scores.to_vec();
            sorted.sort_by(f64::total_cmp);
            let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
            Some(sorted[rank.clamp(1, sorted.len()) - 1])
        }
    }
}

pub(crate) fn uniform_mask(scores: &[f64], rule: SelectionRule) -> Vec<bool> {
    let Some(t) = selection_threshold(scores, rule) else {
        return Vec::new();
    };
    match rule {
        SelectionRule::MeanMinusStd => scores.iter().map(|&s| s < t).collect(),
        SelectionRule::Percentile(_) => scores.iter().map(|&s| s <= t).collect(),
    }
}

/// Blocks whose score passes `rule`, sorted row-major. May be empty.
pub fn select_uniform_blocks(scores: &[UniformityScore], rule: SelectionRule) -> Vec<BlockCoord> {
    let raw: Vec<f64> = scores.iter().map(|s| s.score).collect();
    let mut out: Vec<BlockCoord> = uniform_mask(&raw, rule)
        .into_iter()
        .zip(scores)
        .filter(|(keep, _)| *keep)
        .map(|(_, s)| s.block)
        .collect();
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn planes_of(px: &[[u8; 3]]) -> [Vec<f64>; 3] {
        let mut planes = [vec![], vec![], vec![]];
        for p in px {
            for c in 0..3 {
                planes[c].push(p[c] as f64);
            }
        }
        planes
    }

    #[test]
    fn order_two_filters() {
        let basis = build_basis(2).unwrap();
        assert_eq!(
            basis.filters(),
            &[vec![1, -1, 1, -1], vec![1, 1, -1, -1], vec![1, -1, -1, 1]]
        );
        for f in basis.filters() {
            assert_eq!(f.iter().map(|&v| v as i32).sum::<i32>(), 0);
            assert_eq!(f.iter().map(|&v| (v as i32).pow(2)).sum::<i32>(), 4);
        }
        assert_eq!(basis.norm(), 2.0);
    }

    #[test]
    fn order_four_filters_are_orthogonal() {
        let basis = build_basis(4).unwrap();
        assert_eq!(basis.len(), 15);
        let f = basis.filters();
        for i in 0..f.len() {
            assert_eq!(f[i].iter().map(|&v| v as i32).sum::<i32>(), 0);
            for j in i + 1..f.len() {
                let dot: i32 = f[i].iter().zip(&f[j]).map(|(&a, &b)| a as i32 * b as i32).sum();
                assert_eq!(dot, 0, "filters {i} and {j}");
            }
        }
    }

    #[test]
    fn non_power_of_two_is_rejected() {
        for k in [0, 1, 3, 6, 12] {
            assert!(build_basis(k).is_err(), "{k}");
        }
    }

    #[test]
    fn constant_block_scores_zero() {
        let img = Image::filled(8, 8, [93, 14, 201]).unwrap();
        for k in [2, 4, 8] {
            let basis = build_basis(k).unwrap();
            let s = score_block(&img, BlockCoord::new(0, 0, k), &basis).unwrap();
            assert_eq!(s.score, 0.0);
        }
    }

    #[test]
    fn half_black_half_white_block() {
        let img = Image::new(2, 2, vec![[0; 3], [0; 3], [255; 3], [255; 3]]).unwrap();
        let b = BlockCoord::new(0, 0, 2);
        let coeffs = block_coefficients(&img, b).unwrap();
        for c in &coeffs {
            // filter 2 is (+,+,-,-)
            assert_eq!(&c[1..], &[0.0, -255.0, 0.0]);
        }
        let s = score_block(&img, b, &build_basis(2).unwrap()).unwrap();
        assert_abs_diff_eq!(s.score, 441.67, epsilon = 0.01);
        assert_abs_diff_eq!(s.score, 255.0 * 3f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn single_red_bump() {
        let img = Image::new(2, 2, vec![[12, 20, 30], [10, 20, 30], [10, 20, 30], [10, 20, 30]]).unwrap();
        let b = BlockCoord::new(0, 0, 2);
        let coeffs = block_coefficients(&img, b).unwrap();
        assert_eq!(&coeffs[0][1..], &[1.0, 1.0, 1.0]);
        assert_eq!(&coeffs[1][1..], &[0.0, 0.0, 0.0]);
        assert_eq!(&coeffs[2][1..], &[0.0, 0.0, 0.0]);
        let s = score_block(&img, b, &build_basis(2).unwrap()).unwrap();
        assert_abs_diff_eq!(s.score, 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn score_block_rejects_mismatched_order() {
        let img = Image::filled(8, 8, [0; 3]).unwrap();
        let basis = build_basis(4).unwrap();
        assert!(score_block(&img, BlockCoord::new(0, 0, 2), &basis).is_err());
        assert!(score_block(&img, BlockCoord::new(2, 0, 4), &basis).is_err());
    }

    #[test]
    fn selection_worked_example() {
        let raw = [10.0, 12.0, 11.0, 200.0, 210.0, 205.0, 198.0, 202.0];
        let t = selection_threshold(&raw, SelectionRule::MeanMinusStd).unwrap();
        // 131 - sqrt(69210 / 8); the hand value 38.0 rounds the deviation to 93.0
        assert_abs_diff_eq!(t, 131.0 - (69210.0f64 / 8.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(t, 37.988, epsilon = 0.001);
        let scores: Vec<_> = raw
            .iter()
            .enumerate()
            .map(|(i, &score)| UniformityScore {
                block: BlockCoord::new(i, 0, 2),
                score,
            })
            .collect();
        let picked = select_uniform_blocks(&scores, SelectionRule::MeanMinusStd);
        assert_eq!(
            picked,
            vec![
                BlockCoord::new(0, 0, 2),
                BlockCoord::new(1, 0, 2),
                BlockCoord::new(2, 0, 2)
            ]
        );
    }

    #[test]
    fn equal_scores_select_nothing() {
        assert!(uniform_mask(&[7.0; 10], SelectionRule::MeanMinusStd)
            .iter()
            .all(|&b| !b));
    }

    #[test]
    fn heavy_tail_selects_nothing() {
        let raw = [5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 200.0];
        let t = selection_threshold(&raw, SelectionRule::MeanMinusStd).unwrap();
        assert!(t < 0.0);
        assert!(uniform_mask(&raw, SelectionRule::MeanMinusStd).iter().all(|&b| !b));
        // the percentile fallback still picks the flat blocks
        let picked = uniform_mask(&raw, SelectionRule::Percentile(50.0));
        assert_eq!(picked.iter().filter(|&&b| b).count(), 7);
    }

    #[test]
    fn grid_matches_explicit_basis() {
        let img = Image::from_fn(24, 16, |x, y| {
            [(x * 37 + y * 11) as u8, (x * x + 3 * y) as u8, ((x ^ y) * 9) as u8]
        })
        .unwrap();
        for k in [2, 4, 8] {
            let basis = build_basis(k).unwrap();
            let grid = BlockGrid::compute(&img, k).unwrap();
            assert_eq!((grid.cols, grid.rows), (24 / k, 16 / k));
            for s in grid.scores() {
                let slow = score_block(&img, s.block, &basis).unwrap().score;
                assert_abs_diff_eq!(s.score, slow, epsilon = 1e-9);
                let mean = block_mean_color(&img, s.block);
                assert_eq!(grid.mean(s.block.col, s.block.row), mean);
            }
        }
    }

    fn block_mean_color(img: &Image, b: BlockCoord) -> ColorVec {
        crate::raster::block_mean_color(img, b).unwrap()
    }

    #[test]
    fn fast_transform_matches_filters_in_order() {
        let k = 4;
        let basis = build_basis(k).unwrap();
        let plane: Vec<f64> = (0..16).map(|i| ((i * 7919) % 31) as f64).collect();
        let mut t = plane.clone();
        fwht2d(&mut t, k);
        assert_eq!(t[0], plane.iter().sum::<f64>());
        for (i, f) in basis.filters().iter().enumerate() {
            let dot: f64 = f.iter().zip(&plane).map(|(&s, &v)| s as f64 * v).sum();
            assert_eq!(t[i + 1], dot);
        }
    }

    proptest! {
        #[test]
        fn selection_ignores_input_order(
            raw in prop::collection::vec(0.0..500.0f64, 1..40),
            rot in 0usize..40,
            q in 1.0..100.0f64,
        ) {
            let scores: Vec<_> = raw.iter().enumerate().map(|(i, &score)| UniformityScore {
                block: BlockCoord::new(i, 0, 2), score,
            }).collect();
            let mut rotated = scores.clone();
            rotated.rotate_left(rot % scores.len());
            rotated.reverse();
            for rule in [SelectionRule::MeanMinusStd, SelectionRule::Percentile(q)] {
                prop_assert_eq!(
                    select_uniform_blocks(&scores, rule),
                    select_uniform_blocks(&rotated, rule)
                );
            }
        }

        #[test]
        fn explicit_and_fast_scores_agree(px in prop::collection::vec(any::<[u8; 3]>(), 16)) {
            let planes = planes_of(&px);
            let basis = build_basis(4).unwrap();
            let slow = score_planes_with_basis(&planes, &basis);
            let mut scratch = planes.clone();
            let fast = score_planes(&mut scratch, 4);
            prop_assert!((slow - fast).abs() < 1e-9);
        }
    }
}
