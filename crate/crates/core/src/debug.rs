//! Per-scale debug dumps: score heat maps (PGM), region label maps
//! (indexed PNG), and candidate background masks (PBM).

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{save_indexed_png, save_pbm, save_pgm};
use crate::pipeline::ScaleReport;
use crate::raster::Rgb;
use crate::regiongraph::Region;
use crate::textcheck::PixelMask;
use crate::uniformity::BlockGrid;

/// Block scores mapped linearly onto 0..=255 (maximum score → 255), one
/// pixel per block.
pub fn score_heatmap(grid: &BlockGrid) -> Vec<u8> {
    let max = grid.raw_scores().iter().copied().fold(0.0, f64::max);
    grid.raw_scores()
        .iter()
        .map(|&s| if max > 0.0 { (s / max * 255.0).round() as u8 } else { 0 })
        .collect()
}

/// Region label per image pixel: 0 outside every region, otherwise a
/// palette index derived from the region id (1..=255, wrapping).
pub fn region_labels(regions: &[Region], width: usize, height: usize) -> Vec<u8> {
    let mut labels = vec![0u8; width * height];
    for r in regions {
        let label = (r.id % 255) as u8 + 1;
        for b in &r.blocks {
            let (x0, y0) = b.origin();
            for y in y0..(y0 + b.k).min(height) {
                for x in x0..(x0 + b.k).min(width) {
                    labels[y * width + x] = label;
                }
            }
        }
    }
    labels
}

/// 256-entry palette: black, then well-spread hues.
pub fn label_palette() -> Vec<Rgb> {
    let mut pal = vec![[0, 0, 0]];
    for i in 1..256u32 {
        // golden-angle hue walk
        let h = (i as f64 * 137.507_764) % 360.0;
        let (s, v) = (0.75, 0.95);
        let c = v * s;
        let x = c * (1.0 - ((h / 60.0) % 2.0 - 1.0).abs());
        let (r, g, b) = match (h / 60.0) as u32 {
            0 => (c, x, 0.0),
            1 => (x, c, 0.0),
            2 => (0.0, c, x),
            3 => (0.0, x, c),
            4 => (x, 0.0, c),
            _ => (c, 0.0, x),
        };
        let m = v - c;
        pal.push([r, g, b].map(|u| ((u + m) * 255.0).round() as u8));
    }
    pal
}

fn mask_bits(m: &PixelMask) -> Vec<bool> {
    (0..m.height)
        .flat_map(|dy| (0..m.width).map(move |dx| (dx, dy)))
        .map(|(dx, dy)| m.get(m.x0 + dx, m.y0 + dy))
        .collect()
}

/// Writes all dumps for one scale into `dir`; returns the files written.
pub fn dump_scale(report: &ScaleReport, width: usize, height: usize, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let k = report.k;
    let mut written = Vec::new();

    let path = dir.join(format!("scale{k:04}_scores.pgm"));
    save_pgm(report.grid.cols, report.grid.rows, &score_heatmap(&report.grid), &path)?;
    written.push(path);

    let path = dir.join(format!("scale{k:04}_regions.png"));
    save_indexed_png(
        width,
        height,
        &region_labels(&report.regions, width, height),
        &label_palette(),
        &path,
    )?;
    written.push(path);

    for (i, (cand, _)) in report.candidates.iter().enumerate() {
        let m = &cand.background_mask;
        if m.width == 0 || m.height == 0 {
            continue;
        }
        let path = dir.join(format!("scale{k:04}_cand{i:03}_x{}_y{}_background.pbm", m.x0, m.y0));
        save_pbm(m.width, m.height, &mask_bits(m), &path)?;
        written.push(path);
    }
    Ok(written)
}
