//! RGB rasters, mean colors, and block tiling.

use crate::error::{Error, Result};

/// One 8-bit RGB pixel.
pub type Rgb = [u8; 3];

/// Largest possible RGB Euclidean distance, √(3·255²).
pub const MAX_COLOR_DISTANCE: f64 = 441.672_955_930_063_7;

/// Row-major 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "{} pixels supplied for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self> {
        Self::new(width, height, vec![color; width * height])
    }

    /// Builds an image from interleaved `r, g, b` bytes.
    pub fn from_rgb_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * 3 {
            return Err(Error::invalid(format!(
                "{} bytes supplied for a {width}x{height} RGB image",
                bytes.len()
            )));
        }
        let pixels = bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(width, height, pixels)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, color: Rgb) {
        self.pixels[y * self.width + x] = color;
    }

    #[inline]
    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[Rgb] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn to_rgb_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }

    /// Number of whole `k`×`k` blocks across and down. Remainder strips on
    /// the right and bottom edges are not part of the grid.
    pub fn grid_dims(&self, k: usize) -> (usize, usize) {
        if k == 0 {
            return (0, 0);
        }
        (self.width / k, self.height / k)
    }

    /// All grid blocks of side `k` in row-major order.
    pub fn blocks(&self, k: usize) -> impl Iterator<Item = BlockCoord> {
        let (cols, rows) = self.grid_dims(k);
        (0..rows).flat_map(move |row| (0..cols).map(move |col| BlockCoord::new(col, row, k)))
    }
}

/// Real-valued mean color, channels in `[0, 255]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ColorVec {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl ColorVec {
    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub fn from_rgb(c: Rgb) -> Self {
        Self::new(c[0] as f64, c[1] as f64, c[2] as f64)
    }

    /// Mean color from per-channel integer sums over `count` pixels.
    pub fn from_sums(sums: [u64; 3], count: u64) -> Self {
        if count == 0 {
            return Self::default();
        }
        let n = count as f64;
        Self::new(sums[0] as f64 / n, sums[1] as f64 / n, sums[2] as f64 / n)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn is_valid(&self) -> bool {
        self.to_array()
            .iter()
            .all(|c| c.is_finite() && (0.0..=255.0).contains(c))
    }
}

impl From<Rgb> for ColorVec {
    fn from(c: Rgb) -> Self {
        Self::from_rgb(c)
    }
}

/// Euclidean distance in raw RGB.
#[inline]
pub fn color_distance(a: ColorVec, b: ColorVec) -> f64 {
    let dr = a.r - b.r;
    let dg = a.g - b.g;
    let db = a.b - b.b;
    (dr * dr + dg * dg + db * db).sqrt()
}

/// A `k`×`k` tile of the image grid at one scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockCoord {
    // field order gives row-major sorting
    pub row: usize,
    pub col: usize,
    pub k: usize,
}

impl BlockCoord {
    pub const fn new(col: usize, row: usize, k: usize) -> Self {
        Self { row, col, k }
    }

    /// Pixel coordinates of the top-left corner.
    #[inline]
    pub fn origin(&self) -> (usize, usize) {
        (self.col * self.k, self.row * self.k)
    }

    /// Pixel-space center of the block.
    #[inline]
    pub fn center(&self) -> (f64, f64) {
        let (x, y) = self.origin();
        let h = self.k as f64 / 2.0;
        (x as f64 + h, y as f64 + h)
    }

    pub fn fits(&self, img: &Image) -> bool {
        let (x, y) = self.origin();
        self.k > 0 && x + self.k <= img.width() && y + self.k <= img.height()
    }

    pub fn contains_pixel(&self, x: usize, y: usize) -> bool {
        let (x0, y0) = self.origin();
        x >= x0 && x < x0 + self.k && y >= y0 && y < y0 + self.k
    }

    pub(crate) fn check_inside(&self, img: &Image) -> Result<()> {
        if self.fits(img) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "block (col {}, row {}, k {}) does not fit inside a {}x{} image",
                self.col,
                self.row,
                self.k,
                img.width(),
                img.height()
            )))
        }
    }
}

/// Integer channel sums over a block.
pub(crate) fn block_sums(img: &Image, b: BlockCoord) -> [u64; 3] {
    let (x0, y0) = b.origin();
    let mut sums = [0u64; 3];
    for y in y0..y0 + b.k {
        for p in &img.row(y)[x0..x0 + b.k] {
            sums[0] += p[0] as u64;
            sums[1] += p[1] as u64;
            sums[2] += p[2] as u64;
        }
    }
    sums
}

/// Per-channel arithmetic mean over the block's k² pixels.
pub fn block_mean_color(img: &Image, b: BlockCoord) -> Result<ColorVec> {
    b.check_inside(img)?;
    Ok(ColorVec::from_sums(block_sums(img, b), (b.k * b.k) as u64))
}
