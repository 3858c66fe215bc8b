//! Python bindings: `import textseg_py`.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use textseg::raster::{BlockCoord, ColorVec, Image};
use textseg::shape::Point;
use textseg::synthbench::{Background, SynthSpec};
use textseg::uniformity::build_basis as core_basis;
use textseg::{Error, SelectionRule};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Detector parameters. Keyword arguments mirror the CLI flags.
#[pyclass(name = "Config", module = "textseg_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    #[pyo3(get, set)]
    pub min_block_size: usize,
    #[pyo3(get, set)]
    pub color_merge_threshold: f64,
    #[pyo3(get, set)]
    pub peak_separation_threshold: f64,
    #[pyo3(get, set)]
    pub text_contrast_threshold: f64,
    #[pyo3(get, set)]
    pub solidity_threshold: f64,
    #[pyo3(get, set)]
    pub min_text_fraction: f64,
    #[pyo3(get, set)]
    pub stop_at_first_detection: bool,
    /// `"mean-std"` or `"pN"`.
    #[pyo3(get, set)]
    pub selection_rule: String,
}

impl PyConfig {
    fn to_core(&self) -> PyResult<textseg::Config> {
        let selection_rule: SelectionRule = self.selection_rule.parse().map_err(to_py)?;
        let cfg = textseg::Config {
            min_block_size: self.min_block_size,
            color_merge_threshold: self.color_merge_threshold,
            peak_separation_threshold: self.peak_separation_threshold,
            text_contrast_threshold: self.text_contrast_threshold,
            solidity_threshold: self.solidity_threshold,
            min_text_fraction: self.min_text_fraction,
            stop_at_first_detection: self.stop_at_first_detection,
            selection_rule,
        };
        cfg.validate().map_err(to_py)?;
        Ok(cfg)
    }
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (
        min_block_size = 8,
        color_merge_threshold = 45.0,
        peak_separation_threshold = 100.0,
        text_contrast_threshold = 100.0,
        solidity_threshold = 0.95,
        min_text_fraction = 0.01,
        stop_at_first_detection = true,
        selection_rule = "mean-std".to_string(),
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        min_block_size: usize,
        color_merge_threshold: f64,
        peak_separation_threshold: f64,
        text_contrast_threshold: f64,
        solidity_threshold: f64,
        min_text_fraction: f64,
        stop_at_first_detection: bool,
        selection_rule: String,
    ) -> PyResult<Self> {
        let cfg = Self {
            min_block_size,
            color_merge_threshold,
            peak_separation_threshold,
            text_contrast_threshold,
            solidity_threshold,
            min_text_fraction,
            stop_at_first_detection,
            selection_rule,
        };
        cfg.to_core()?;
        Ok(cfg)
    }

    /// Raises `ValueError` if any field is out of range.
    fn validate(&self) -> PyResult<()> {
        self.to_core().map(|_| ())
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(min_block_size={}, color_merge_threshold={}, peak_separation_threshold={}, \
             text_contrast_threshold={}, solidity_threshold={}, min_text_fraction={}, \
             stop_at_first_detection={}, selection_rule='{}')",
            self.min_block_size,
            self.color_merge_threshold,
            self.peak_separation_threshold,
            self.text_contrast_threshold,
            self.solidity_threshold,
            self.min_text_fraction,
            if self.stop_at_first_detection { "True" } else { "False" },
            self.selection_rule
        )
    }
}

/// 8-bit RGB raster.
#[pyclass(name = "Image", module = "textseg_py")]
pub struct PyImage {
    inner: Image,
}

#[pymethods]
impl PyImage {
    /// Builds an image from packed RGB bytes, row-major.
    #[staticmethod]
    fn from_bytes(width: usize, height: usize, data: &[u8]) -> PyResult<Self> {
        Ok(Self {
            inner: Image::from_rgb_bytes(width, height, data).map_err(to_py)?,
        })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn pixel(&self, x: usize, y: usize) -> PyResult<(u8, u8, u8)> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err(format!("pixel ({x}, {y}) outside the image")));
        }
        let [r, g, b] = self.inner.pixel(x, y);
        Ok((r, g, b))
    }

    /// Packed RGB bytes, row-major.
    fn to_bytes(&self) -> Vec<u8> {
        self.inner.to_rgb_bytes()
    }

    fn save_png(&self, path: PathBuf) -> PyResult<()> {
        textseg::io::save_png(&self.inner, &path).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.inner.width(), self.inner.height())
    }
}

/// Loads a PNG or binary PPM file.
#[pyfunction]
fn load_image(path: PathBuf) -> PyResult<PyImage> {
    Ok(PyImage {
        inner: textseg::io::load_image(&path).map_err(to_py)?,
    })
}

/// Runs the detector; returns the result as a JSON string.
#[pyfunction]
#[pyo3(signature = (image, config = None))]
fn detect(py: Python<'_>, image: PyRef<'_, PyImage>, config: Option<PyRef<'_, PyConfig>>) -> PyResult<String> {
    let cfg = match config {
        Some(c) => c.to_core()?,
        None => textseg::Config::default(),
    };
    let img = image.inner.clone();
    py.detach(move || textseg::detect(&img, &cfg))
        .map(|r| r.to_json())
        .map_err(to_py)
}

/// Euclidean RGB distance.
#[pyfunction]
fn color_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    textseg::color_distance(ColorVec::new(a[0], a[1], a[2]), ColorVec::new(b[0], b[1], b[2]))
}

/// The k²−1 non-DC ±1 filters, each row-major over the block.
#[pyfunction]
fn build_basis(k: usize) -> PyResult<Vec<Vec<i8>>> {
    Ok(core_basis(k).map_err(to_py)?.filters().to_vec())
}

/// Uniformity score of the `k`×`k` block at grid position (col, row).
#[pyfunction]
fn score_block(image: PyRef<'_, PyImage>, col: usize, row: usize, k: usize) -> PyResult<f64> {
    let basis = core_basis(k).map_err(to_py)?;
    textseg::uniformity::score_block(&image.inner, BlockCoord::new(col, row, k), &basis)
        .map(|s| s.score)
        .map_err(to_py)
}

/// Counter-clockwise hull vertices of integer points.
#[pyfunction]
fn convex_hull(points: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    let pts: Vec<Point> = points.into_iter().map(|(x, y)| Point::new(x, y)).collect();
    textseg::shape::convex_hull(&pts)
        .vertices
        .into_iter()
        .map(|p| (p.x, p.y))
        .collect()
}

/// Intersection over union of two convex polygons.
#[pyfunction]
fn polygon_iou(a: Vec<[f64; 2]>, b: Vec<[f64; 2]>) -> f64 {
    textseg::synthbench::polygon_iou(&a, &b)
}

/// Renders one synthetic sign image; returns `(image, truth_json)`.
#[pyfunction]
#[pyo3(signature = (seed, width = 1024, height = 768, contrast = 200.0, background = "noise", glyphs = true))]
fn generate(
    seed: u64,
    width: usize,
    height: usize,
    contrast: f64,
    background: &str,
    glyphs: bool,
) -> PyResult<(PyImage, String)> {
    let bg: Background = background.parse().map_err(to_py)?;
    let spec = SynthSpec::random(seed, width, height, bg, contrast, glyphs);
    let (img, truth) = textseg::synthbench::generate(&spec).map_err(to_py)?;
    let json = serde_json::to_string(&truth).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((PyImage { inner: img }, json))
}

#[pymodule]
fn textseg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyImage>()?;
    m.add_function(wrap_pyfunction!(load_image, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(color_distance, m)?)?;
    m.add_function(wrap_pyfunction!(build_basis, m)?)?;
    m.add_function(wrap_pyfunction!(score_block, m)?)?;
    m.add_function(wrap_pyfunction!(convex_hull, m)?)?;
    m.add_function(wrap_pyfunction!(polygon_iou, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add("MAX_COLOR_DISTANCE", textseg::raster::MAX_COLOR_DISTANCE)?;
    Ok(())
}
