//! Synthetic signs with known geometry, and detection scoring against them.
//!
//! A generated image is a background (flat, gradient or noise), a flat
//! quadrilateral sign, and random polyline "glyphs" drawn inside the sign at
//! a requested RGB distance from the sign color. Negative images carry the
//! sign but no glyphs. The ground truth is the exact sign quad.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::DetectionResult;
use crate::raster::{Image, Rgb, MAX_COLOR_DISTANCE};
use crate::shape::Point;

pub const MANIFEST_FILE: &str = "manifest.json";

/// IoU at which a detection counts as finding the sign.
pub const MATCH_IOU: f64 = 0.5;
/// Detections overlapping the truth less than this are false positives.
pub const FALSE_POSITIVE_IOU: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Background {
    Flat,
    Gradient,
    /// Per-channel Gaussian noise with this standard deviation.
    Noise(f64),
}

pub const DEFAULT_NOISE_SIGMA: f64 = 24.0;

impl fmt::Display for Background {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Background::Flat => f.write_str("flat"),
            Background::Gradient => f.write_str("gradient"),
            Background::Noise(s) if *s == DEFAULT_NOISE_SIGMA => f.write_str("noise"),
            Background::Noise(s) => write!(f, "noise({s})"),
        }
    }
}

impl FromStr for Background {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Background::Flat),
            "gradient" => Ok(Background::Gradient),
            "noise" => Ok(Background::Noise(DEFAULT_NOISE_SIGMA)),
            _ => s
                .strip_prefix("noise(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite() && *v >= 0.0)
                .map(Background::Noise)
                .ok_or_else(|| Error::invalid(format!("unknown background `{s}` (flat, gradient, noise, noise(σ))"))),
        }
    }
}

/// Everything needed to render one synthetic image.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub background: Background,
    /// Background base color; gradients run from the first to the second.
    pub background_colors: [Rgb; 2],
    /// Sign corners: top-left, top-right, bottom-right, bottom-left.
    pub sign: [Point; 4],
    pub sign_color: Rgb,
    /// Gaussian noise standard deviation on the sign fill.
    pub sign_noise: f64,
    pub glyph_count: usize,
    /// Stroke thickness range in pixels, `(min, max)`.
    pub stroke_thickness: (f64, f64),
    /// RGB distance between sign fill and glyph color.
    pub contrast: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Random sign geometry and colors drawn from `seed`.
    pub fn random(seed: u64, width: usize, height: usize, background: Background, contrast: f64, glyphs: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (width as f64, height as f64);
        let sw = w * rng.random_range(0.38..0.55);
        let sh = h * rng.random_range(0.32..0.50);
        let pad = 16.0f64.min(w * 0.02);
        let sx = rng.random_range(pad..(w - sw - pad).max(pad + 1.0));
        let sy = rng.random_range(pad..(h - sh - pad).max(pad + 1.0));
        let jitter = 0.03 * sw.min(sh);
        let mut corner = |x: f64, y: f64, dx: f64, dy: f64| {
            Point::new(
                (x + dx * rng.random_range(0.0..=jitter)).round() as i64,
                (y + dy * rng.random_range(0.0..=jitter)).round() as i64,
            )
        };
        let sign = [
            corner(sx, sy, 1.0, 1.0),
            corner(sx + sw, sy, -1.0, 1.0),
            corner(sx + sw, sy + sh, -1.0, -1.0),
            corner(sx, sy + sh, 1.0, -1.0),
        ];
        let dark = |rng: &mut ChaCha8Rng| -> Rgb { [0; 3].map(|_| rng.random_range(20..=110)) };
        let background_colors = [dark(&mut rng), dark(&mut rng)];
        let sign_color: Rgb = [0; 3].map(|_| rng.random_range(140..=255));
        let glyph_count = if glyphs { rng.random_range(4..=9) } else { 0 };
        let scale = (h / 768.0).max(0.25);
        let stroke_thickness = ((5.0 * scale).max(2.0), (10.0 * scale).max(3.0));
        Self {
            width,
            height,
            background,
            background_colors,
            sign,
            sign_color,
            sign_noise: 2.0,
            glyph_count,
            stroke_thickness,
            contrast,
            seed,
        }
    }

    /// Largest axis-aligned rectangle `(x0, y0, x1, y1)` implied by the
    /// corner order, guaranteed inside the convex quad.
    fn inner_rect(&self) -> (f64, f64, f64, f64) {
        let [tl, tr, br, bl] = self.sign;
        (
            tl.x.max(bl.x) as f64,
            tl.y.max(tr.y) as f64,
            tr.x.min(br.x) as f64,
            bl.y.min(br.y) as f64,
        )
    }

    /// Region glyphs are drawn in: the inner rectangle inset by a margin
    /// that leaves at least one stroke width of sign around every stroke.
    fn text_box(&self) -> (f64, f64, f64, f64) {
        let (x0, y0, x1, y1) = self.inner_rect();
        let t = self.stroke_thickness.1;
        let mx = (0.28 * (x1 - x0)).max(2.0 * t);
        let my = (0.28 * (y1 - y0)).max(2.0 * t);
        (x0 + mx, y0 + my, x1 - mx, y1 - my)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("image size must be positive"));
        }
        for p in &self.sign {
            if p.x < 0 || p.y < 0 || p.x > self.width as i64 || p.y > self.height as i64 {
                return Err(Error::invalid(format!(
                    "sign corner ({}, {}) lies outside the image",
                    p.x, p.y
                )));
            }
        }
        let [tl, tr, br, bl] = self.sign;
        if !(tl.x < tr.x && bl.x < br.x && tl.y < bl.y && tr.y < br.y) {
            return Err(Error::invalid(
                "sign corners must be ordered top-left, top-right, bottom-right, bottom-left",
            ));
        }
        let turns: Vec<i64> = (0..4)
            .map(|i| {
                let (a, b, c) = (self.sign[i], self.sign[(i + 1) % 4], self.sign[(i + 2) % 4]);
                (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x)
            })
            .collect();
        if !turns.iter().all(|&t| t > 0) {
            return Err(Error::invalid("sign quad must be strictly convex"));
        }
        let (t0, t1) = self.stroke_thickness;
        if !(t0 > 0.0 && t0 <= t1 && t1.is_finite()) {
            return Err(Error::invalid(format!("bad stroke thickness range ({t0}, {t1})")));
        }
        if self.glyph_count > 0 {
            let (x0, y0, x1, y1) = self.text_box();
            if x1 - x0 < t1 || y1 - y0 < t1 {
                return Err(Error::invalid(
                    "sign too small to hold glyphs with a stroke-width margin",
                ));
            }
            glyph_color(self.sign_color, self.contrast)?;
        }
        if !(self.sign_noise >= 0.0 && self.sign_noise.is_finite()) {
            return Err(Error::invalid("sign noise must be a finite deviation >= 0"));
        }
        if let Background::Noise(s) = self.background {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::invalid("background noise must be a finite deviation >= 0"));
            }
        }
        Ok(())
    }
}

/// Color at RGB distance `contrast` from `fill`, heading for the cube
/// corner farthest from it.
pub fn glyph_color(fill: Rgb, contrast: f64) -> Result<Rgb> {
    let corner = fill.map(|c| if c >= 128 { 0.0 } else { 255.0 });
    let dir = [0, 1, 2].map(|c| corner[c] - fill[c] as f64);
    let reach = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    if contrast.is_nan() || contrast < 0.0 || contrast > reach + 1e-9 || contrast > MAX_COLOR_DISTANCE {
        return Err(Error::invalid(format!(
            "contrast {contrast} is not reachable from fill {fill:?} (at most {reach:.2})"
        )));
    }
    if reach == 0.0 {
        return Ok(fill);
    }
    let t = contrast / reach;
    Ok([0, 1, 2].map(|c| (fill[c] as f64 + t * dir[c]).round().clamp(0.0, 255.0) as u8))
}

/// Ground truth for one generated image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub file: String,
    /// The sign quad, `[[x, y]; 4]`.
    pub sign: Vec<[i64; 2]>,
    /// False for negative (glyph-free) images.
    pub has_text: bool,
    pub seed: u64,
    pub contrast: f64,
    pub background: String,
    pub glyph_count: usize,
}

impl GroundTruth {
    pub fn polygon(&self) -> Vec<[f64; 2]> {
        self.sign.iter().map(|&[x, y]| [x as f64, y as f64]).collect()
    }
}

/// Canonical corpus file name for a seed.
pub fn image_file_name(seed: u64) -> String {
    format!("img_{seed:06}.png")
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn segment_distance2(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx - px, a.1 + t * dy - py);
    qx * qx + qy * qy
}

struct Stroke {
    a: (f64, f64),
    b: (f64, f64),
    half: f64,
}

/// Renders the image and its ground truth. Deterministic in `spec.seed`.
pub fn generate(spec: &SynthSpec) -> Result<(Image, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x005e_ed0f_91a9_4e5d);
    let (w, h) = (spec.width, spec.height);
    let [c0, c1] = spec.background_colors;

    let mut img = match spec.background {
        Background::Flat => Image::filled(w, h, c0)?,
        Background::Gradient => {
            let span = (w + h).saturating_sub(2).max(1) as f64;
            Image::from_fn(w, h, |x, y| {
                let t = (x + y) as f64 / span;
                [0, 1, 2].map(|c| clamp_u8(c0[c] as f64 + t * (c1[c] as f64 - c0[c] as f64)))
            })?
        }
        Background::Noise(sigma) => {
            let noise = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
            Image::from_fn(w, h, |_, _| {
                [0, 1, 2].map(|c| clamp_u8(c0[c] as f64 + noise.sample(&mut rng)))
            })?
        }
    };

    // re-orders the corners for the containment test
    let quad = crate::shape::convex_hull(&spec.sign);
    let sign_noise = Normal::new(0.0, spec.sign_noise).map_err(|e| Error::invalid(e.to_string()))?;
    let (lo, hi) = quad.bounds().unwrap_or_default();
    for y in lo.y.max(0)..hi.y.min(h as i64) {
        for x in lo.x.max(0)..hi.x.min(w as i64) {
            if quad.contains_pixel(x, y) {
                let c = spec
                    .sign_color
                    .map(|v| clamp_u8(v as f64 + sign_noise.sample(&mut rng)));
                img.set_pixel(x as usize, y as usize, c);
            }
        }
    }

    if spec.glyph_count > 0 {
        let ink = glyph_color(spec.sign_color, spec.contrast)?;
        let (bx0, by0, bx1, by1) = spec.text_box();
        let lines = if spec.glyph_count > 5 { 2 } else { 1 };
        let per_line = spec.glyph_count.div_ceil(lines);
        let cell_w = (bx1 - bx0) / per_line as f64;
        let cell_h = (by1 - by0) / lines as f64;
        let (t0, t1) = spec.stroke_thickness;
        let mut strokes = Vec::new();
        for g in 0..spec.glyph_count {
            let (line, slot) = (g / per_line, g % per_line);
            let thickness = if t1 > t0 { rng.random_range(t0..=t1) } else { t0 };
            let half = thickness / 2.0;
            // keep stroke edges inside the cell
            let cx0 = bx0 + slot as f64 * cell_w + half + 0.1 * cell_w;
            let cx1 = bx0 + (slot + 1) as f64 * cell_w - half - 0.1 * cell_w;
            let cy0 = by0 + line as f64 * cell_h + half + 0.1 * cell_h;
            let cy1 = by0 + (line + 1) as f64 * cell_h - half - 0.1 * cell_h;
            if cx1 <= cx0 || cy1 <= cy0 {
                continue;
            }
            let n = rng.random_range(3..=5);
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.random_range(cx0..=cx1), rng.random_range(cy0..=cy1)))
                .collect();
            for pair in pts.windows(2) {
                strokes.push(Stroke {
                    a: pair[0],
                    b: pair[1],
                    half,
                });
            }
        }
        for s in &strokes {
            let xa = (s.a.0.min(s.b.0) - s.half).floor().max(0.0) as usize;
            let xb = ((s.a.0.max(s.b.0) + s.half).ceil() as usize).min(w);
            let ya = (s.a.1.min(s.b.1) - s.half).floor().max(0.0) as usize;
            let yb = ((s.a.1.max(s.b.1) + s.half).ceil() as usize).min(h);
            for y in ya..yb {
                for x in xa..xb {
                    if segment_distance2(x as f64 + 0.5, y as f64 + 0.5, s.a, s.b) <= s.half * s.half {
                        img.set_pixel(x, y, ink);
                    }
                }
            }
        }
    }

    let truth = GroundTruth {
        file: image_file_name(spec.seed),
        sign: spec.sign.iter().map(|p| [p.x, p.y]).collect(),
        has_text: spec.glyph_count > 0,
        seed: spec.seed,
        contrast: spec.contrast,
        background: spec.background.to_string(),
        glyph_count: spec.glyph_count,
    };
    Ok((img, truth))
}

/// Parameters of a whole corpus, mirroring the `synth` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub count: usize,
    pub seed: u64,
    pub contrast: f64,
    pub background: Background,
    pub negatives: usize,
    pub width: usize,
    pub height: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            count: 50,
            seed: 1,
            contrast: 200.0,
            background: Background::Noise(DEFAULT_NOISE_SIGMA),
            negatives: 0,
            width: 1024,
            height: 768,
        }
    }
}

impl CorpusSpec {
    /// Positives use seeds `seed..seed+count`; negatives follow on.
    pub fn specs(&self) -> Vec<SynthSpec> {
        (0..self.count + self.negatives)
            .map(|i| {
                let seed = self.seed + i as u64;
                SynthSpec::random(
                    seed,
                    self.width,
                    self.height,
                    self.background,
                    self.contrast,
                    i < self.count,
                )
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    images: Vec<GroundTruth>,
}

/// Writes every image as PNG plus `manifest.json` into `dir`.
pub fn write_corpus(dir: &Path, corpus: &CorpusSpec) -> Result<Vec<GroundTruth>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let truths = corpus
        .specs()
        .par_iter()
        .map(|spec| {
            let (img, truth) = generate(spec)?;
            crate::io::save_png(&img, &dir.join(&truth.file))?;
            Ok(truth)
        })
        .collect::<Result<Vec<_>>>()?;
    write_manifest(dir, &truths)?;
    Ok(truths)
}

pub fn write_manifest(dir: &Path, truths: &[GroundTruth]) -> Result<()> {
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&Manifest {
        images: truths.to_vec(),
    })?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_manifest(dir: &Path) -> Result<Vec<GroundTruth>> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str::<Manifest>(&text)?.images)
}

/// Half-open sample-index spans `[i0, i1)` where the row at height `y`
/// crosses the inside of `poly` (even-odd rule). Sample `i` sits at
/// `(i + 0.5) / res`.
fn row_spans(poly: &[[f64; 2]], y: f64, res: f64) -> Vec<(i64, i64)> {
    let n = poly.len();
    let mut xs = Vec::new();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        if (p[1] <= y && y < q[1]) || (q[1] <= y && y < p[1]) {
            xs.push(p[0] + (y - p[1]) * (q[0] - p[0]) / (q[1] - p[1]));
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.chunks_exact(2)
        .map(|c| ((c[0] * res - 0.5).ceil() as i64, (c[1] * res - 0.5).ceil() as i64))
        .filter(|(a, b)| b > a)
        .collect()
}

fn span_len(spans: &[(i64, i64)]) -> i64 {
    spans.iter().map(|(a, b)| b - a).sum()
}

fn span_overlap(a: &[(i64, i64)], b: &[(i64, i64)]) -> i64 {
    let mut total = 0;
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            total += (a1.min(b1) - a0.max(b0)).max(0);
        }
    }
    total
}

/// Intersection over union of two simple polygons, rasterized at
/// `samples_per_unit` samples per unit length along each axis.
pub fn polygon_iou_at(a: &[[f64; 2]], b: &[[f64; 2]], samples_per_unit: f64) -> f64 {
    if a.len() < 3 || b.len() < 3 {
        return 0.0;
    }
    let all = a.iter().chain(b);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let res = samples_per_unit;
    let (j0, j1) = ((y0 * res - 0.5).ceil() as i64, (y1 * res - 0.5).ceil() as i64);
    let (mut inter, mut area_a, mut area_b) = (0i64, 0i64, 0i64);
    for j in j0..j1 {
        let y = (j as f64 + 0.5) / res;
        let sa = row_spans(a, y, res);
        let sb = row_spans(b, y, res);
        area_a += span_len(&sa);
        area_b += span_len(&sb);
        inter += span_overlap(&sa, &sb);
    }
    let union = area_a + area_b - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Intersection over union at pixel resolution.
pub fn polygon_iou(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    polygon_iou_at(a, b, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEval {
    pub file: String,
    pub has_text: bool,
    pub matched: bool,
    pub best_iou: f64,
    pub false_positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Matched images over images that contain text.
    pub recall: f64,
    /// Images with at least one false positive over all images.
    pub fp_image_rate: f64,
    pub per_image: Vec<ImageEval>,
}

fn stem(name: &str) -> &str {
    let base = name.rsplit(['/', '\\']).next().unwrap_or(name);
    base.rsplit_once('.').map_or(base, |(s, _)| s)
}

/// Scores one result per truth. Results are keyed by file name (any
/// extension); pairing is by stem. Unpaired entries are an input error.
pub fn evaluate(results: &[(String, DetectionResult)], truths: &[GroundTruth]) -> Result<EvalReport> {
    let by_stem: BTreeMap<&str, &DetectionResult> = results.iter().map(|(n, r)| (stem(n), r)).collect();
    let truth_stems: BTreeMap<&str, &GroundTruth> = truths.iter().map(|t| (stem(&t.file), t)).collect();
    let mut orphans: Vec<String> = by_stem
        .keys()
        .filter(|s| !truth_stems.contains_key(*s))
        .map(|s| format!("{s} (result without truth)"))
        .collect();
    orphans.extend(
        truth_stems
            .keys()
            .filter(|s| !by_stem.contains_key(*s))
            .map(|s| format!("{s} (truth without result)")),
    );
    if !orphans.is_empty() || by_stem.len() != results.len() || truth_stems.len() != truths.len() {
        if orphans.is_empty() {
            orphans.push("duplicate file names".into());
        }
        return Err(Error::invalid(format!(
            "unpaired corpus entries: {}",
            orphans.join(", ")
        )));
    }

    let per_image: Vec<ImageEval> = truth_stems
        .iter()
        .map(|(s, truth)| {
            let result = by_stem[s];
            let poly = truth.polygon();
            let ious: Vec<f64> = result
                .detections
                .iter()
                .map(|d| polygon_iou(&d.hull_f64(), &poly))
                .collect();
            let best_iou = ious.iter().copied().fold(0.0, f64::max);
            let (matched, false_positives) = if truth.has_text {
                (
                    best_iou >= MATCH_IOU,
                    ious.iter().filter(|&&v| v < FALSE_POSITIVE_IOU).count(),
                )
            } else {
                (false, ious.len())
            };
            ImageEval {
                file: truth.file.clone(),
                has_text: truth.has_text,
                matched,
                best_iou,
                false_positives,
            }
        })
        .collect();

    let positives = per_image.iter().filter(|e| e.has_text).count();
    let matched = per_image.iter().filter(|e| e.matched).count();
    let with_fp = per_image.iter().filter(|e| e.false_positives > 0).count();
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(EvalReport {
        recall: ratio(matched, positives),
        fp_image_rate: ratio(with_fp, per_image.len()),
        per_image,
    })
}
