//! Scale-descent driver.
//!
//! At each block size: score blocks, select uniform ones, group and merge
//! them into regions, drop convex regions, and test the hull of each
//! survivor for text. The block size starts at a quarter of the shorter
//! image side (rounded down to a power of two) and halves until text is
//! found or `min_block_size` has been processed.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Deserialize;

use crate::config::{Config, SelectionRule};
use crate::error::{Error, Result};
use crate::raster::{ColorVec, Image};
use crate::regiongraph::{group_with_means, merge_regions, Region};
use crate::shape::{shape_test, Point, RegionMask, ShapeVerdict};
use crate::synthbench::polygon_iou;
use crate::textcheck::{analyze_region, text_presence, CandidateArea, TextVerdict};
use crate::uniformity::BlockGrid;

/// One accepted text area.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub scale: usize,
    pub hull: Vec<Point>,
    pub bg_color: ColorVec,
    pub fg_color: ColorVec,
    pub contrast: f64,
    pub text_fraction: f64,
}

impl Detection {
    fn from_candidate(scale: usize, c: &CandidateArea) -> Self {
        Self {
            scale,
            hull: c.hull.vertices.clone(),
            bg_color: c.bg_color,
            fg_color: c.fg_color,
            contrast: c.contrast,
            text_fraction: c.text_fraction,
        }
    }

    pub fn hull_f64(&self) -> Vec<[f64; 2]> {
        self.hull.iter().map(|p| [p.x as f64, p.y as f64]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub width: usize,
    pub height: usize,
    pub config: Config,
    /// Block sizes processed, strictly decreasing.
    pub scales_visited: Vec<usize>,
    pub detections: Vec<Detection>,
}

/// Largest power of two not above a quarter of the shorter side, but never
/// below `cfg.min_block_size`.
pub fn initial_block_size(img: &Image, cfg: &Config) -> Result<usize> {
    let short = img.width().min(img.height());
    if short < 2 * cfg.min_block_size {
        return Err(Error::invalid(format!(
            "a {}x{} image is too small for min_block_size {} (needs at least {} pixels per side)",
            img.width(),
            img.height(),
            cfg.min_block_size,
            2 * cfg.min_block_size
        )));
    }
    let quarter = short / 4;
    let k = if quarter == 0 {
        0
    } else {
        1usize << (usize::BITS - 1 - quarter.leading_zeros())
    };
    Ok(k.max(cfg.min_block_size))
}

/// Halving schedule from `k0` down to `min_block_size`, inclusive.
pub fn scale_schedule(k0: usize, min_block_size: usize) -> Vec<usize> {
    std::iter::successors(Some(k0), |&k| Some(k / 2))
        .take_while(|&k| k >= min_block_size && k > 0)
        .collect()
}

/// Everything computed at one block size.
#[derive(Debug, Clone)]
pub struct ScaleReport {
    pub k: usize,
    pub grid: BlockGrid,
    pub uniform: Vec<crate::raster::BlockCoord>,
    /// Regions after merging.
    pub regions: Vec<Region>,
    /// Regions that survived the shape test, with their text verdicts.
    pub candidates: Vec<(CandidateArea, TextVerdict)>,
}

impl ScaleReport {
    pub fn detections(&self) -> Vec<Detection> {
        self.candidates
            .iter()
            .filter(|(_, v)| *v == TextVerdict::Text)
            .map(|(c, _)| Detection::from_candidate(self.k, c))
            .collect()
    }
}

/// Runs every stage at block size `k`.
pub fn run_scale(img: &Image, k: usize, cfg: &Config) -> Result<ScaleReport> {
    let grid = BlockGrid::compute(img, k)?;
    let uniform = grid.select(cfg.selection_rule);
    let means: Vec<ColorVec> = uniform.iter().map(|b| grid.mean(b.col, b.row)).collect();
    let regions = group_with_means(&uniform, &means, img, cfg)?;
    let regions = merge_regions(regions, img, cfg)?;
    let kept: Vec<Region> = regions
        .iter()
        .filter(|r| {
            RegionMask::from_blocks(&r.blocks)
                .map(|m| shape_test(&m, cfg) == ShapeVerdict::Keep)
                .unwrap_or(false)
        })
        .cloned()
        .collect();
    let candidates = kept
        .into_par_iter()
        .map(|r| {
            let area = analyze_region(r, img, cfg);
            let v = text_presence(&area, cfg);
            (area, v)
        })
        .collect();
    Ok(ScaleReport {
        k,
        grid,
        uniform,
        regions,
        candidates,
    })
}

/// Full detection; `on_scale` sees the intermediate results of every scale.
pub fn detect_traced(img: &Image, cfg: &Config, mut on_scale: impl FnMut(&ScaleReport)) -> Result<DetectionResult> {
    cfg.validate()?;
    let k0 = initial_block_size(img, cfg)?;
    let mut scales_visited = Vec::new();
    let mut detections = Vec::new();
    for k in scale_schedule(k0, cfg.min_block_size) {
        let report = run_scale(img, k, cfg)?;
        on_scale(&report);
        scales_visited.push(k);
        let found = report.detections();
        let stop = cfg.stop_at_first_detection && !found.is_empty();
        detections.extend(found);
        if stop {
            break;
        }
    }
    if !cfg.stop_at_first_detection {
        detections = dedup_across_scales(detections);
    }
    Ok(DetectionResult {
        width: img.width(),
        height: img.height(),
        config: cfg.clone(),
        scales_visited,
        detections,
    })
}

pub fn detect(img: &Image, cfg: &Config) -> Result<DetectionResult> {
    detect_traced(img, cfg, |_| {})
}

/// Among detections from different scales whose hulls overlap with
/// IoU > 0.5, keeps only the higher-contrast one. Order is preserved.
fn dedup_across_scales(detections: Vec<Detection>) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .contrast
            .total_cmp(&detections[a].contrast)
            .then(a.cmp(&b))
    });
    let polys: Vec<_> = detections.iter().map(Detection::hull_f64).collect();
    let mut keep = vec![false; detections.len()];
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let dup = kept
            .iter()
            .any(|&j| detections[j].scale != detections[i].scale && polygon_iou(&polys[i], &polys[j]) > 0.5);
        if !dup {
            keep[i] = true;
            kept.push(i);
        }
    }
    detections
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(d, _)| d)
        .collect()
}

fn fmt_color(out: &mut String, c: ColorVec) {
    let _ = write!(out, "[{:.4}, {:.4}, {:.4}]", c.r, c.g, c.b);
}

impl DetectionResult {
    /// JSON document with a fixed field order and 4-decimal floats.
    pub fn to_json(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "{{");
        let _ = writeln!(
            s,
            "  \"image\": {{\"width\": {}, \"height\": {}}},",
            self.width, self.height
        );
        let _ = writeln!(
            s,
            "  \"config\": {{\"min_block_size\": {}, \"color_merge_threshold\": {:.4}, \
             \"peak_separation_threshold\": {:.4}, \"text_contrast_threshold\": {:.4}, \
             \"solidity_threshold\": {:.4}, \"min_text_fraction\": {:.4}, \
             \"stop_at_first_detection\": {}, \"selection_rule\": \"{}\"}},",
            c.min_block_size,
            c.color_merge_threshold,
            c.peak_separation_threshold,
            c.text_contrast_threshold,
            c.solidity_threshold,
            c.min_text_fraction,
            c.stop_at_first_detection,
            c.selection_rule
        );
        let scales: Vec<String> = self.scales_visited.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "  \"scales_visited\": [{}],", scales.join(", "));
        if self.detections.is_empty() {
            let _ = writeln!(s, "  \"detections\": []");
        } else {
            let _ = writeln!(s, "  \"detections\": [");
            for (i, d) in self.detections.iter().enumerate() {
                let hull: Vec<String> = d.hull.iter().map(|p| format!("[{}, {}]", p.x, p.y)).collect();
                let _ = write!(
                    s,
                    "    {{\"scale\": {}, \"hull\": [{}], \"bg_color\": ",
                    d.scale,
                    hull.join(", ")
                );
                fmt_color(&mut s, d.bg_color);
                s.push_str(", \"fg_color\": ");
                fmt_color(&mut s, d.fg_color);
                let _ = write!(
                    s,
                    ", \"contrast\": {:.4}, \"text_fraction\": {:.4}}}",
                    d.contrast, d.text_fraction
                );
                s.push_str(if i + 1 < self.detections.len() { ",\n" } else { "\n" });
            }
            let _ = writeln!(s, "  ]");
        }
        s.push_str("}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ResultDoc = serde_json::from_str(text)?;
        let selection_rule: SelectionRule = doc.config.selection_rule.parse()?;
        let config = Config {
            min_block_size: doc.config.min_block_size,
            color_merge_threshold: doc.config.color_merge_threshold,
            peak_separation_threshold: doc.config.peak_separation_threshold,
            text_contrast_threshold: doc.config.text_contrast_threshold,
            solidity_threshold: doc.config.solidity_threshold,
            min_text_fraction: doc.config.min_text_fraction,
            stop_at_first_detection: doc.config.stop_at_first_detection,
            selection_rule,
        };
        let color = |c: [f64; 3]| ColorVec::new(c[0], c[1], c[2]);
        Ok(Self {
            width: doc.image.width,
            height: doc.image.height,
            config,
            scales_visited: doc.scales_visited,
            detections: doc
                .detections
                .into_iter()
                .map(|d| Detection {
                    scale: d.scale,
                    hull: d.hull.into_iter().map(|[x, y]| Point::new(x, y)).collect(),
                    bg_color: color(d.bg_color),
                    fg_color: color(d.fg_color),
                    contrast: d.contrast,
                    text_fraction: d.text_fraction,
                })
                .collect(),
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResultDoc {
    image: ImageDoc,
    config: ConfigDoc,
    scales_visited: Vec<usize>,
    detections: Vec<DetectionDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageDoc {
    width: usize,
    height: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    min_block_size: usize,
    color_merge_threshold: f64,
    peak_separation_threshold: f64,
    text_contrast_threshold: f64,
    solidity_threshold: f64,
    min_text_fraction: f64,
    stop_at_first_detection: bool,
    selection_rule: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionDoc {
    scale: usize,
    hull: Vec<[i64; 2]>,
    bg_color: [f64; 3],
    fg_color: [f64; 3],
    contrast: f64,
    text_fraction: f64,
}
