//! Acceptance report: one PASS/FAIL line per criterion. Exits non-zero if
//! any criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use textseg::io::load_image;
use textseg::pipeline::DetectionResult;
use textseg::raster::{block_mean_color, color_distance, BlockCoord, Image};
use textseg::regiongraph::group_connected;
use textseg::shape::{convex_hull, Point, RegionMask};
use textseg::synthbench::{evaluate, write_corpus, Background, CorpusSpec, EvalReport, GroundTruth};
use textseg::uniformity::{
    block_coefficients, build_basis, fwht2d, score_block, select_uniform_blocks, selection_threshold, UniformityScore,
};
use textseg::{detect, Config, SelectionRule};

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn run_corpus(dir: &Path, corpus: &CorpusSpec) -> (EvalReport, f64) {
    let truths = write_corpus(dir, corpus).expect("corpus");
    let cfg = Config::default();
    let mut slowest = 0.0f64;
    let results: Vec<(String, DetectionResult)> = truths
        .iter()
        .map(|t| {
            let img = load_image(&dir.join(&t.file)).expect("image");
            let start = Instant::now();
            let r = detect(&img, &cfg).expect("detect");
            slowest = slowest.max(start.elapsed().as_secs_f64());
            (t.file.clone(), r)
        })
        .collect();
    (evaluate(&results, &truths).expect("eval"), slowest)
}

fn synthetic_criteria(rep: &mut Report) {
    let tmp = tempfile::tempdir().unwrap();

    // positives on seeds 1..=50, negatives on 51..=70
    let main = CorpusSpec {
        count: 50,
        seed: 1,
        contrast: 200.0,
        background: Background::Noise(24.0),
        negatives: 20,
        ..CorpusSpec::default()
    };
    let (report, slowest) = run_corpus(&tmp.path().join("main"), &main);
    rep.line(
        "synthetic recall (50 images, contrast 200, noise)",
        report.recall >= 0.90 && slowest < 5.0,
        format!(
            "recall {:.3} (>= 0.90), slowest image {slowest:.3} s (< 5 s)",
            report.recall
        ),
    );
    let negatives: Vec<_> = report.per_image.iter().filter(|e| !e.has_text).collect();
    let flagged = negatives.iter().filter(|e| e.false_positives > 0).count();
    let rate = flagged as f64 / negatives.len().max(1) as f64;
    rep.line(
        "negative control (20 solid signs)",
        negatives.len() == 20 && rate <= 0.10,
        format!("false-positive image rate {rate:.3} (<= 0.10) over {} negatives", negatives.len()),
    );

    let low = CorpusSpec {
        contrast: 50.0,
        negatives: 0,
        ..main
    };
    let (report, _) = run_corpus(&tmp.path().join("low"), &low);
    rep.line(
        "contrast floor (50 images, contrast 50)",
        report.recall <= 0.10,
        format!("recall {:.3} (<= 0.10)", report.recall),
    );

    // (f) determinism on ten corpus images
    let truths: Vec<GroundTruth> = textseg::synthbench::read_manifest(&tmp.path().join("main")).unwrap();
    let cfg = Config::default();
    let mut identical = 0;
    for t in truths.iter().take(10) {
        let img = load_image(&tmp.path().join("main").join(&t.file)).unwrap();
        if detect(&img, &cfg).unwrap().to_json() == detect(&img, &cfg).unwrap().to_json() {
            identical += 1;
        }
    }
    rep.line(
        "(f) pipeline determinism",
        identical == 10,
        format!("{identical}/10 images byte-identical across two runs"),
    );
}

/// (a) zero sum, ±1 entries, exact pairwise orthogonality.
fn basis_suite(rep: &mut Report) {
    let mut bad = Vec::new();
    for k in [2usize, 4, 8, 16] {
        let basis = build_basis(k).unwrap();
        let f = basis.filters();
        let ok_count = f.len() == k * k - 1;
        let ok_entries = f
            .iter()
            .all(|v| v.len() == k * k && v.iter().all(|&e| e == 1 || e == -1));
        let ok_sum = f.iter().all(|v| v.iter().map(|&e| e as i64).sum::<i64>() == 0);
        let mut ok_orth = true;
        for i in 0..f.len() {
            for j in 0..f.len() {
                let dot: i64 = f[i].iter().zip(&f[j]).map(|(&a, &b)| a as i64 * b as i64).sum();
                let want = if i == j { (k * k) as i64 } else { 0 };
                ok_orth &= dot == want;
            }
        }
        if !(ok_count && ok_entries && ok_sum && ok_orth) {
            bad.push(k);
        }
    }
    rep.line(
        "(a) filter basis",
        bad.is_empty(),
        format!("k in {{2,4,8,16}}, failing orders {bad:?}"),
    );
}

fn random_block(rng: &mut ChaCha8Rng, k: usize, constant: bool, max: u8) -> Image {
    let c = [0; 3].map(|_| rng.random_range(0..=max));
    Image::from_fn(k, k, |_, _| {
        if constant {
            c
        } else {
            [0; 3].map(|_| rng.random_range(0..=max))
        }
    })
    .unwrap()
}

/// (b) zero iff constant, offset invariance; (c) Parseval reconstruction.
fn score_suites(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97);
    let (mut zero_iff, mut offset_err) = (0usize, 0.0f64);
    for i in 0..1000 {
        let k = [2usize, 4, 8, 16][i % 4];
        let basis = build_basis(k).unwrap();
        // every third block constant; others random but occasionally near-constant
        let constant = i % 3 == 0;
        let max = if i % 7 == 1 { 1 } else { 200 };
        let img = random_block(&mut rng, k, constant, max);
        let is_constant = img.pixels().iter().all(|&p| p == img.pixel(0, 0));
        let b = BlockCoord::new(0, 0, k);
        let s = score_block(&img, b, &basis).unwrap().score;
        if (s == 0.0) == is_constant {
            zero_iff += 1;
        }
        let off = [0; 3].map(|_| rng.random_range(0..=55u8));
        let shifted = Image::from_fn(k, k, |x, y| {
            let p = img.pixel(x, y);
            [p[0] + off[0], p[1] + off[1], p[2] + off[2]]
        })
        .unwrap();
        let s2 = score_block(&shifted, b, &basis).unwrap().score;
        offset_err = offset_err.max((s - s2).abs());
    }
    rep.line(
        "(b) score zero iff constant, offset invariant",
        zero_iff == 1000 && offset_err <= 1e-9,
        format!("{zero_iff}/1000 zero-iff-constant, max offset change {offset_err:.2e} (<= 1e-9)"),
    );

    let mut worst = 0.0f64;
    for i in 0..1000 {
        let k = [2usize, 4, 8, 16][i % 4];
        let img = random_block(&mut rng, k, false, 255);
        let coefs = block_coefficients(&img, BlockCoord::new(0, 0, k)).unwrap();
        for (c, plane) in coefs.iter().enumerate() {
            // coefficients are H·x/k and H·H = k²·I, so x = H·coef/k
            let mut back = plane.clone();
            fwht2d(&mut back, k);
            for (j, v) in back.iter().enumerate() {
                let orig = img.pixel(j % k, j / k)[c] as f64;
                worst = worst.max((v / k as f64 - orig).abs());
            }
            // energy: sum of squared coefficients equals sum of squared samples
            let e_coef: f64 = plane.iter().map(|v| v * v).sum();
            let e_pix: f64 = img.pixels().iter().map(|p| (p[c] as f64).powi(2)).sum();
            worst = worst.max((e_coef - e_pix).abs() / e_pix.max(1.0));
        }
    }
    rep.line(
        "(c) Parseval reconstruction",
        worst <= 1e-6,
        format!("max reconstruction/energy error {worst:.2e} (<= 1e-6) on 1000 blocks"),
    );
}

fn orient(a: Point, b: Point, c: Point) -> i64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    orient(a, b, p) == 0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn in_closed_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    if orient(a, b, c) == 0 {
        return on_segment(p, a, b) || on_segment(p, b, c) || on_segment(p, a, c);
    }
    let (d1, d2, d3) = (orient(a, b, p), orient(b, c, p), orient(c, a, p));
    (d1 >= 0 && d2 >= 0 && d3 >= 0) || (d1 <= 0 && d2 <= 0 && d3 <= 0)
}

/// Hull vertices by triangle elimination: a point survives unless some
/// triangle (or segment) of other points covers it.
fn brute_hull(points: &[Point]) -> BTreeSet<(i64, i64)> {
    let pts: Vec<Point> = points.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let n = pts.len();
    let mut out = BTreeSet::new();
    'next: for i in 0..n {
        let others: Vec<Point> = (0..n).filter(|&j| j != i).map(|j| pts[j]).collect();
        for a in 0..others.len() {
            for b in a + 1..others.len() {
                if on_segment(pts[i], others[a], others[b]) {
                    continue 'next;
                }
                for c in b + 1..others.len() {
                    if in_closed_triangle(pts[i], others[a], others[b], others[c]) {
                        continue 'next;
                    }
                }
            }
        }
        out.insert((pts[i].x, pts[i].y));
    }
    out
}

/// (d) hull against the brute-force oracle.
fn hull_suite(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4011);
    let mut agree = 0;
    for i in 0..200 {
        let n = rng.random_range(1..=50);
        let span = if i % 4 == 0 { 6 } else { 100 };
        let pts: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.random_range(-span..=span), rng.random_range(-span..=span)))
            .collect();
        let hull = convex_hull(&pts);
        let got: BTreeSet<(i64, i64)> = hull.vertices.iter().map(|p| (p.x, p.y)).collect();
        let v = &hull.vertices;
        let ccw = v.len() < 3 || (0..v.len()).all(|j| orient(v[j], v[(j + 1) % v.len()], v[(j + 2) % v.len()]) > 0);
        if got == brute_hull(&pts) && got.len() == v.len() && ccw {
            agree += 1;
        }
    }
    rep.line(
        "(d) convex hull vs triangle elimination",
        agree == 200,
        format!("{agree}/200 point sets agree"),
    );
}

/// (e) grouping against brute-force label propagation.
fn grouping_suite(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e0);
    let cfg = Config::default();
    let k = 2;
    let mut agree = 0;
    for _ in 0..100 {
        let (cols, rows) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let base = [0; 3].map(|_| rng.random_range(0..=180u8));
        let colors: Vec<[u8; 3]> = (0..cols * rows)
            .map(|_| [0, 1, 2].map(|c| base[c] + rng.random_range(0..=60u8)))
            .collect();
        let img = Image::from_fn(cols * k, rows * k, |x, y| colors[(y / k) * cols + x / k]).unwrap();
        let uniform: Vec<BlockCoord> = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| BlockCoord::new(c, r, k)))
            .filter(|_| rng.random_bool(0.7))
            .collect();

        let got: BTreeSet<Vec<BlockCoord>> = group_connected(&uniform, &img, &cfg)
            .unwrap()
            .into_iter()
            .map(|r| r.blocks)
            .collect();

        let mut label: Vec<usize> = (0..uniform.len()).collect();
        let means: Vec<_> = uniform.iter().map(|&b| block_mean_color(&img, b).unwrap()).collect();
        loop {
            let mut changed = false;
            for i in 0..uniform.len() {
                for j in 0..uniform.len() {
                    let (a, b) = (uniform[i], uniform[j]);
                    let adjacent = a.row.abs_diff(b.row) + a.col.abs_diff(b.col) == 1;
                    if adjacent && color_distance(means[i], means[j]) < cfg.color_merge_threshold && label[j] > label[i]
                    {
                        label[j] = label[i];
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let want: BTreeSet<Vec<BlockCoord>> = label
            .iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(|&l| {
                let mut v: Vec<BlockCoord> = (0..uniform.len())
                    .filter(|&i| label[i] == l)
                    .map(|i| uniform[i])
                    .collect();
                v.sort();
                v
            })
            .collect();
        if got == want {
            agree += 1;
        }
    }
    rep.line(
        "(e) group_connected vs brute-force union-find",
        agree == 100,
        format!("{agree}/100 grids agree"),
    );
}

fn worked_examples(rep: &mut Report) {
    let img = Image::from_fn(2, 2, |_, y| if y == 0 { [0; 3] } else { [255; 3] }).unwrap();
    let s = score_block(&img, BlockCoord::new(0, 0, 2), &build_basis(2).unwrap())
        .unwrap()
        .score;
    rep.line(
        "worked example score_block",
        (s - 441.67).abs() <= 0.01,
        format!("{s:.4} vs 441.67 +/- 0.01"),
    );

    let raw = [10.0, 12.0, 11.0, 200.0, 210.0, 205.0, 198.0, 202.0];
    let t = selection_threshold(&raw, SelectionRule::MeanMinusStd).unwrap();
    let scores: Vec<UniformityScore> = raw
        .iter()
        .enumerate()
        .map(|(i, &score)| UniformityScore {
            block: BlockCoord::new(i, 0, 2),
            score,
        })
        .collect();
    let picked: Vec<usize> = select_uniform_blocks(&scores, SelectionRule::MeanMinusStd)
        .iter()
        .map(|b| b.col)
        .collect();
    rep.line(
        "worked example selection threshold",
        (t - 38.0).abs() <= 0.01 && picked == [0, 1, 2],
        format!("{t:.4} vs 38.0 +/- 0.01, selected {picked:?}"),
    );

    let m = RegionMask::from_art(8, &["##", "#."]).unwrap();
    let sol = m.solidity();
    rep.line(
        "worked example L-shape solidity",
        (sol - 0.75).abs() <= 0.01,
        format!("{sol:.4} vs 0.75 +/- 0.01"),
    );
}

fn main() {
    let mut rep = Report { failed: 0 };
    synthetic_criteria(&mut rep);
    basis_suite(&mut rep);
    score_suites(&mut rep);
    hull_suite(&mut rep);
    grouping_suite(&mut rep);
    worked_examples(&mut rep);
    if rep.failed > 0 {
        println!("{} criterion line(s) failed", rep.failed);
        std::process::exit(1);
    }
}
