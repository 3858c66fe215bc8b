use textseg::raster::{color_distance, BlockCoord, ColorVec, Image, Rgb};
use textseg::regiongraph::Region;
use textseg::shape::{hull_of_blocks, Point};
use textseg::synthbench::{generate, polygon_iou, Background, SynthSpec};
use textseg::textcheck::{analyze_region, expand_background_levels};
use textseg::{detect, Config};

/// White sign with black strokes on dark noise, aligned to the 128-px grid
/// the detector starts on.
fn white_sign(contrast: f64) -> SynthSpec {
    let mut spec = SynthSpec::random(7, 1024, 768, Background::Noise(24.0), contrast, true);
    spec.sign = [
        Point::new(256, 128),
        Point::new(768, 128),
        Point::new(768, 640),
        Point::new(256, 640),
    ];
    spec.sign_color = [255, 255, 255];
    spec
}

fn corpus_image(seed: u64) -> (Image, Vec<[f64; 2]>) {
    let spec = SynthSpec::random(seed, 1024, 768, Background::Noise(24.0), 200.0, true);
    let (img, truth) = generate(&spec).unwrap();
    (img, truth.polygon())
}

#[test]
fn white_sign_is_found_once_with_tight_hull() {
    let (img, truth) = generate(&white_sign(441.67)).unwrap();
    let r = detect(&img, &Config::default()).unwrap();
    assert_eq!(r.detections.len(), 1, "{}", r.to_json());
    let iou = polygon_iou(&r.detections[0].hull_f64(), &truth.polygon());
    assert!(iou >= 0.8, "iou {iou}");
    assert!(r.detections[0].contrast >= 100.0);
}

#[test]
fn low_contrast_glyphs_are_not_text() {
    let (img, _) = generate(&white_sign(50.0)).unwrap();
    let r = detect(&img, &Config::default()).unwrap();
    assert!(r.detections.is_empty(), "{}", r.to_json());
}

#[test]
fn glyph_free_sign_is_not_text() {
    let mut spec = white_sign(200.0);
    spec.glyph_count = 0;
    let (img, _) = generate(&spec).unwrap();
    assert!(detect(&img, &Config::default()).unwrap().detections.is_empty());
}

#[test]
fn detection_is_deterministic() {
    let (img, _) = corpus_image(3);
    let cfg = Config::default();
    assert_eq!(
        detect(&img, &cfg).unwrap().to_json(),
        detect(&img, &cfg).unwrap().to_json()
    );
}

#[test]
fn hulls_stay_inside_the_image_and_scales_descend() {
    for seed in [1, 2, 5, 8] {
        let (img, _) = corpus_image(seed);
        let r = detect(&img, &Config::default()).unwrap();
        assert!(r.scales_visited.windows(2).all(|w| w[0] == 2 * w[1]));
        for d in &r.detections {
            assert!(d.hull.len() >= 3);
            for p in &d.hull {
                assert!((0..=1024).contains(&p.x) && (0..=768).contains(&p.y), "{p:?}");
            }
            assert!(r.scales_visited.contains(&d.scale));
        }
    }
}

#[test]
fn all_scales_covers_early_stop() {
    for seed in [1, 4, 9] {
        let (img, _) = corpus_image(seed);
        let early = detect(&img, &Config::default()).unwrap();
        let full = detect(
            &img,
            &Config {
                stop_at_first_detection: false,
                ..Config::default()
            },
        )
        .unwrap();
        assert!(full.scales_visited.len() >= early.scales_visited.len());
        for d in &early.detections {
            let best = full
                .detections
                .iter()
                .map(|f| polygon_iou(&d.hull_f64(), &f.hull_f64()))
                .fold(0.0, f64::max);
            assert!(best > 0.5, "seed {seed}: early detection lost (best iou {best})");
        }
    }
}

const B: Rgb = [200, 190, 170];
const G: Rgb = [30, 40, 60];

/// 128x128 image of color B with open G strokes in the middle, and the
/// ring of 16-px blocks around the stroke area as a region.
fn two_color_case() -> (Image, Region) {
    let img = Image::from_fn(128, 128, |x, y| {
        let in_box = (40..88).contains(&x) && (40..88).contains(&y);
        let bar = x % 12 < 3;
        let spur = (60..63).contains(&y) && x % 12 < 6;
        if in_box && (bar || spur) {
            G
        } else {
            B
        }
    })
    .unwrap();
    let ring: Vec<BlockCoord> = (1..7)
        .flat_map(|r| (1..7).map(move |c| (c, r)))
        .filter(|&(c, r)| c == 1 || c == 6 || r == 1 || r == 6)
        .map(|(c, r)| BlockCoord::new(c, r, 16))
        .collect();
    let region = Region::from_blocks(0, ring, &img).unwrap();
    (img, region)
}

#[test]
fn foreground_converges_to_glyph_color_at_fine_blocks() {
    let (img, region) = two_color_case();
    let cfg = Config {
        min_block_size: 2,
        ..Config::default()
    };
    let area = analyze_region(region, &img, &cfg);
    let fg = area.fg_color.to_array();
    for c in 0..3 {
        assert!((fg[c] - G[c] as f64).abs() <= 5.0, "fg {fg:?}");
    }
    let truth = color_distance(ColorVec::from_rgb(B), ColorVec::from_rgb(G));
    assert!((area.contrast - truth).abs() <= 10.0, "{} vs {truth}", area.contrast);
}

#[test]
fn background_growth_is_monotone_and_color_bounded() {
    let (img, region) = two_color_case();
    for min_block in [2, 4, 8] {
        let cfg = Config {
            min_block_size: min_block,
            ..Config::default()
        };
        let hull = hull_of_blocks(&region.blocks);
        let levels = expand_background_levels(&region, &hull, &img, &cfg);
        let sizes = textseg::textcheck::refinement_levels(region.k, min_block);
        assert_eq!(levels.len(), sizes.len() + 1);
        for (i, pair) in levels.windows(2).enumerate() {
            let (before, after) = (&pair[0], &pair[1]);
            assert!(after.contains(before), "level {i} lost pixels");
            // every sub-block added at this level has a mean close to the region's
            let s = sizes[i];
            for (x, y) in after.iter_set() {
                if before.get(x, y) {
                    continue;
                }
                let (bx, by) = (x / s * s, y / s * s);
                let mean = textseg::block_mean_color(&img, BlockCoord::new(bx / s, by / s, s)).unwrap();
                assert!(color_distance(mean, region.mean_color) <= cfg.color_merge_threshold);
                assert!(hull.contains_pixel(x as i64, y as i64));
            }
        }
    }
}
