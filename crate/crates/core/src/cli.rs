//! `textseg` command-line front end.
//!
//! Data goes to stdout (or `--out`), diagnostics to stderr. Exit codes:
//! 0 success, 1 internal failure, 2 bad input (unreadable files, bad flags,
//! mismatched inputs).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{Config, SelectionRule};
use crate::error::Error;
use crate::io::{load_image, save_png};
use crate::pipeline::{detect_traced, DetectionResult};
use crate::synthbench::{self, Background, CorpusSpec};

#[derive(Debug, Parser)]
#[command(name = "textseg", version, about = "Find text areas by their uniform backgrounds")]
pub struct Cli {
    /// More diagnostics on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect text areas and write the result JSON.
    Detect(DetectArgs),
    /// Draw detection hulls onto the image.
    Overlay(OverlayArgs),
    /// Generate a synthetic sign corpus with ground truth.
    Synth(SynthArgs),
    /// Score detection results against a synthetic corpus.
    Eval(EvalArgs),
}

/// One flag per detector parameter.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Smallest block side (power of two).
    #[arg(long = "min-block", default_value_t = 8)]
    pub min_block: usize,
    /// Mean-color distance for grouping blocks and merging regions.
    #[arg(long, default_value_t = 45.0)]
    pub color_merge_threshold: f64,
    /// Minimum distance between the two color modes of a mergeable gap.
    #[arg(long = "peak-separation", default_value_t = 100.0)]
    pub peak_separation: f64,
    /// Minimum background/foreground contrast for text.
    #[arg(long = "text-contrast", default_value_t = 100.0)]
    pub text_contrast: f64,
    /// Solidity at or above which hole-free connected regions count as convex.
    #[arg(long, default_value_t = 0.95)]
    pub solidity: f64,
    /// Minimum share of foreground pixels inside a hull.
    #[arg(long, default_value_t = 0.01)]
    pub min_text_fraction: f64,
    /// Keep descending after the first scale with detections.
    #[arg(long)]
    pub all_scales: bool,
    /// Uniform-block rule: `mean-std` or a percentile such as `p20`.
    #[arg(long, default_value = "mean-std", value_parser = parse_rule)]
    pub selection_rule: SelectionRule,
}

fn parse_rule(s: &str) -> Result<SelectionRule, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_background(s: &str) -> Result<Background, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl ConfigArgs {
    pub fn to_config(&self) -> Config {
        Config {
            min_block_size: self.min_block,
            color_merge_threshold: self.color_merge_threshold,
            peak_separation_threshold: self.peak_separation,
            text_contrast_threshold: self.text_contrast,
            solidity_threshold: self.solidity,
            min_text_fraction: self.min_text_fraction,
            stop_at_first_detection: !self.all_scales,
            selection_rule: self.selection_rule,
        }
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// PNG or binary PPM input(s).
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    /// Result file (single image only); stdout when absent.
    #[arg(long, conflicts_with = "out_dir")]
    pub out: Option<PathBuf>,
    /// Directory for `<stem>.json` results, one per image.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Write per-scale score maps, region maps and background masks here.
    #[arg(long)]
    pub debug_dir: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    pub image: PathBuf,
    pub result: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of images with text.
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// RGB distance between sign fill and glyphs.
    #[arg(long, default_value_t = 200.0)]
    pub contrast: f64,
    /// flat, gradient, noise, or noise(σ).
    #[arg(long, default_value = "noise", value_parser = parse_background)]
    pub background: Background,
    /// Additional glyph-free images.
    #[arg(long, default_value_t = 0)]
    pub negatives: usize,
    #[arg(long, default_value_t = 1024)]
    pub width: usize,
    #[arg(long, default_value_t = 768)]
    pub height: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Corpus directory holding manifest.json and the images.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Directory of `<stem>.json` results. When absent the detector runs
    /// on the corpus with the configuration flags below.
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Failure split by exit code.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| internal(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn detect_file(path: &Path, cfg: &Config, verbose: u8, debug_dir: Option<&Path>) -> Result<DetectionResult, CliError> {
    let img = load_image(path).map_err(input)?;
    let start = Instant::now();
    let mut dump_err = None;
    let result = detect_traced(&img, cfg, |report| {
        if verbose > 0 {
            let kept = report.candidates.len();
            let text = report.detections().len();
            eprintln!(
                "{}: k={} uniform={} regions={} kept={} text={}",
                path.display(),
                report.k,
                report.uniform.len(),
                report.regions.len(),
                kept,
                text
            );
        }
        if let Some(dir) = debug_dir {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            if let Err(e) = crate::debug::dump_scale(report, img.width(), img.height(), &dir.join(stem)) {
                dump_err.get_or_insert(e);
            }
        }
    })
    .map_err(|e| match e {
        Error::InvalidInput(_) => input(e),
        other => internal(other),
    })?;
    if let Some(e) = dump_err {
        return Err(internal(e));
    }
    if verbose > 0 {
        eprintln!(
            "{}: {} detection(s) in {:.3}s",
            path.display(),
            result.detections.len(),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(result)
}

fn validated(cfg: &ConfigArgs) -> Result<Config, CliError> {
    let cfg = cfg.to_config();
    cfg.validate().map_err(input)?;
    Ok(cfg)
}

fn cmd_detect(args: &DetectArgs, verbose: u8) -> Result<(), CliError> {
    let cfg = validated(&args.config)?;
    if args.images.len() > 1 && args.out_dir.is_none() {
        return Err(input("several images need --out-dir"));
    }
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| internal(format!("{}: {e}", dir.display())))?;
    }
    for path in &args.images {
        let result = detect_file(path, &cfg, verbose, args.debug_dir.as_deref())?;
        let json = result.to_json();
        match &args.out_dir {
            Some(dir) => {
                let stem = path.file_stem().unwrap_or(path.as_os_str());
                let mut name = stem.to_os_string();
                name.push(".json");
                write_text(Some(&dir.join(name)), &json)?;
            }
            None => write_text(args.out.as_deref(), &json)?,
        }
    }
    Ok(())
}

fn cmd_overlay(args: &OverlayArgs) -> Result<(), CliError> {
    let img = load_image(&args.image).map_err(input)?;
    let text = std::fs::read_to_string(&args.result).map_err(|e| input(format!("{}: {e}", args.result.display())))?;
    let result = DetectionResult::from_json(&text).map_err(|e| input(format!("{}: {e}", args.result.display())))?;
    let out = crate::overlay::render_overlay(&img, &result).map_err(input)?;
    save_png(&out, &args.out).map_err(internal)
}

fn cmd_synth(args: &SynthArgs, verbose: u8) -> Result<(), CliError> {
    let corpus = CorpusSpec {
        count: args.count,
        seed: args.seed,
        contrast: args.contrast,
        background: args.background,
        negatives: args.negatives,
        width: args.width,
        height: args.height,
    };
    let truths = synthbench::write_corpus(&args.out_dir, &corpus).map_err(|e| match e {
        Error::InvalidInput(_) => input(e),
        other => internal(other),
    })?;
    if verbose > 0 {
        eprintln!("wrote {} image(s) to {}", truths.len(), args.out_dir.display());
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs, verbose: u8) -> Result<(), CliError> {
    let truths = synthbench::read_manifest(&args.corpus).map_err(input)?;
    let mut results: Vec<(String, DetectionResult)> = match &args.results {
        Some(dir) => {
            let entries = std::fs::read_dir(dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
            let mut out = Vec::new();
            for entry in entries {
                let path = entry.map_err(input)?.path();
                if path.extension().and_then(|e| e.to_str()) != Some("json") {
                    continue;
                }
                let text = std::fs::read_to_string(&path).map_err(|e| input(format!("{}: {e}", path.display())))?;
                let r = DetectionResult::from_json(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
                out.push((path.file_name().unwrap_or_default().to_string_lossy().into_owned(), r));
            }
            out
        }
        None => {
            let cfg = validated(&args.config)?;
            truths
                .par_iter()
                .map(|t| {
                    let r = detect_file(&args.corpus.join(&t.file), &cfg, verbose, None)?;
                    Ok((t.file.clone(), r))
                })
                .collect::<Result<_, CliError>>()?
        }
    };
    results.sort_by(|a, b| a.0.cmp(&b.0));
    let report = synthbench::evaluate(&results, &truths).map_err(input)?;
    let json = serde_json::to_string_pretty(&report).map_err(internal)?;
    write_text(args.out.as_deref(), &(json + "\n"))
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Detect(a) => cmd_detect(a, cli.verbose),
        Command::Overlay(a) => cmd_overlay(a),
        Command::Synth(a) => cmd_synth(a, cli.verbose),
        Command::Eval(a) => cmd_eval(a, cli.verbose),
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Input(m) => eprintln!("error: {m}"),
                CliError::Internal(m) => eprintln!("internal error: {m}"),
            }
            e.exit_code()
        }
    }
}
