use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How uniform blocks are picked from the per-block scores of one scale.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SelectionRule {
    /// Scores strictly below `mean - population_std`.
    #[default]
    MeanMinusStd,
    /// Scores at or below the q-th percentile (nearest rank), q in (0, 100].
    Percentile(f64),
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionRule::MeanMinusStd => f.write_str("mean-std"),
            SelectionRule::Percentile(q) => write!(f, "p{q}"),
        }
    }
}

impl FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "mean-std" {
            return Ok(SelectionRule::MeanMinusStd);
        }
        let q = s
            .strip_prefix('p')
            .and_then(|q| q.parse::<f64>().ok())
            .ok_or_else(|| Error::invalid(format!("selection rule must be `mean-std` or `pN`, got `{s}`")))?;
        let rule = SelectionRule::Percentile(q);
        rule.validate()?;
        Ok(rule)
    }
}

impl SelectionRule {
    fn validate(&self) -> Result<()> {
        match *self {
            SelectionRule::MeanMinusStd => Ok(()),
            SelectionRule::Percentile(q) if q.is_finite() && q > 0.0 && q <= 100.0 => Ok(()),
            SelectionRule::Percentile(q) => Err(Error::invalid(format!("percentile must lie in (0, 100], got {q}"))),
        }
    }
}

/// Detector parameters. Distances are RGB Euclidean on 0–255 channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Smallest block side visited by the scale descent and by background
    /// expansion. Power of two, at least 2.
    pub min_block_size: usize,
    /// Mean-color distance below which adjacent blocks group and regions merge.
    pub color_merge_threshold: f64,
    /// Minimum distance between the two modes of a bimodal gap for a merge.
    pub peak_separation_threshold: f64,
    /// Minimum background/foreground contrast inside a hull to report text.
    pub text_contrast_threshold: f64,
    /// Regions at or above this solidity (and connected, without holes) are
    /// treated as convex and dropped.
    pub solidity_threshold: f64,
    /// Minimum share of non-background pixels inside a hull.
    pub min_text_fraction: f64,
    pub stop_at_first_detection: bool,
    pub selection_rule: SelectionRule,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            min_block_size: 8,
            color_merge_threshold: 45.0,
            peak_separation_threshold: 100.0,
            text_contrast_threshold: 100.0,
            solidity_threshold: 0.95,
            min_text_fraction: 0.01,
            stop_at_first_detection: true,
            selection_rule: SelectionRule::MeanMinusStd,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let k = self.min_block_size;
        if k < 2 || !k.is_power_of_two() {
            return Err(Error::invalid(format!(
                "min_block_size must be a power of two >= 2, got {k}"
            )));
        }
        // Thresholds above the largest RGB distance are allowed; they simply
        // can never be met.
        for (name, v) in [
            ("color_merge_threshold", self.color_merge_threshold),
            ("peak_separation_threshold", self.peak_separation_threshold),
            ("text_contrast_threshold", self.text_contrast_threshold),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be a finite distance >= 0, got {v}"
                )));
            }
        }
        if !(self.solidity_threshold > 0.0 && self.solidity_threshold <= 1.0) {
            return Err(Error::invalid(format!(
                "solidity_threshold must lie in (0, 1], got {}",
                self.solidity_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.min_text_fraction) {
            return Err(Error::invalid(format!(
                "min_text_fraction must lie in [0, 1], got {}",
                self.min_text_fraction
            )));
        }
        self.selection_rule.validate()
    }
}
