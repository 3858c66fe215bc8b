//! Raster file I/O: PNG and binary PPM in, PNG/PGM/PBM out.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use crate::error::{Error, Result};
use crate::raster::{Image, Rgb};

/// Composites straight alpha over white.
fn over_white(r: u8, g: u8, b: u8, a: u8) -> Rgb {
    let a = a as u32;
    [r, g, b].map(|c| ((c as u32 * a + 255 * (255 - a) + 127) / 255) as u8)
}

fn from_dynamic(img: DynamicImage) -> Result<Image> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels = if img.color().has_alpha() {
        img.into_rgba8()
            .pixels()
            .map(|p| over_white(p[0], p[1], p[2], p[3]))
            .collect()
    } else {
        img.into_rgb8().pixels().map(|p| p.0).collect()
    };
    Image::new(w, h, pixels)
}

/// Decodes a PNG or binary PPM (P6) from memory.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let format = match bytes {
        [0x89, b'P', b'N', b'G', ..] => ImageFormat::Png,
        [b'P', b'6', ..] => ImageFormat::Pnm,
        _ => {
            return Err(Error::Decode {
                path: "<memory>".into(),
                message: "not a PNG or binary PPM (P6) stream".into(),
            })
        }
    };
    let img = image::load_from_memory_with_format(bytes, format).map_err(|e| Error::Decode {
        path: "<memory>".into(),
        message: e.to_string(),
    })?;
    from_dynamic(img)
}

/// Loads a PNG or binary PPM (P6) file. Alpha is composited over white.
pub fn load_image(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| match e {
        Error::Decode { message, .. } => Error::Decode {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn encode_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

pub fn save_png(img: &Image, path: &Path) -> Result<()> {
    let out = create(path)?;
    image::codecs::png::PngEncoder::new(out)
        .write_image(
            &img.to_rgb_bytes(),
            img.width() as u32,
            img.height() as u32,
            ExtendedColorType::Rgb8,
        )
        .map_err(|e| encode_err(path, e))
}

/// Binary PGM (P5), 8-bit.
pub fn save_pgm(width: usize, height: usize, gray: &[u8], path: &Path) -> Result<()> {
    let out = create(path)?;
    PnmEncoder::new(out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(gray, width as u32, height as u32, ExtendedColorType::L8)
        .map_err(|e| encode_err(path, e))
}

/// Binary PBM (P4). `true` is written as black (1).
pub fn save_pbm(width: usize, height: usize, bits: &[bool], path: &Path) -> Result<()> {
    if bits.len() != width * height {
        return Err(Error::invalid(format!(
            "{} bits for a {width}x{height} bitmap",
            bits.len()
        )));
    }
    let mut out = format!("P4\n{width} {height}\n").into_bytes();
    for row in bits.chunks(width.max(1)).take(height) {
        for byte in row.chunks(8) {
            out.push(
                byte.iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i))),
            );
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// 8-bit indexed PNG with an explicit palette.
pub fn save_indexed_png(width: usize, height: usize, indices: &[u8], palette: &[Rgb], path: &Path) -> Result<()> {
    let out = create(path)?;
    let mut enc = png::Encoder::new(out, width as u32, height as u32);
    enc.set_color(png::ColorType::Indexed);
    enc.set_depth(png::BitDepth::Eight);
    enc.set_palette(palette.iter().flatten().copied().collect::<Vec<u8>>());
    let mut writer = enc.write_header().map_err(|e| encode_err(path, e))?;
    writer.write_image_data(indices).map_err(|e| encode_err(path, e))?;
    writer.finish().map_err(|e| encode_err(path, e))
}
