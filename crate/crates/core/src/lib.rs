//! Hierarchical text-area segmentation for natural images.
//!
//! The detector looks for the *background* of text first: near-uniform
//! regions that contain holes. Each surviving region's convex hull is then
//! checked for foreground pixels that contrast strongly with the background.
//! When nothing is found the block size is halved and every stage reruns.
//!
//! Stage modules, in pipeline order:
//!
//! - [`uniformity`]: ±1 zero-sum Walsh–Hadamard filters, block scores, and
//!   uniform-block selection.
//! - [`regiongraph`]: grouping of adjacent similar blocks and gap-aware
//!   region merging.
//! - [`shape`]: connectivity, holes, convex hulls, and the convexity test.
//! - [`textcheck`]: background expansion inside the hull and the contrast test.
//! - [`pipeline`]: the scale-descent driver and result serialization.
//!
//! [`synthbench`] generates synthetic signs with ground truth and scores
//! detections; [`cli`] wires everything to the `textseg` binary.

pub mod cli;
pub mod config;
pub mod debug;
pub mod error;
pub mod io;
pub mod overlay;
pub mod pipeline;
pub mod raster;
pub mod regiongraph;
pub mod shape;
pub mod synthbench;
pub mod textcheck;
pub mod uniformity;

pub use config::{Config, SelectionRule};
pub use error::{Error, Result};
pub use pipeline::{detect, Detection, DetectionResult};
pub use raster::{block_mean_color, color_distance, BlockCoord, ColorVec, Image, Rgb};
