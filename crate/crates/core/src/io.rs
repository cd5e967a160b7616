//! Image file I/O: PPM (P6) and PNG, 8-bit RGB only.
//!
//! Loading maps each 8-bit value v to v/255. Saving quantizes once with
//! round-half-up after clamping to [0, 1], so load∘save∘load is the
//! identity on sample values.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{Image, CHANNELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Ppm,
    Png,
}

impl Format {
    /// Pick a format from a file extension (case-insensitive).
    pub fn from_path(path: &Path) -> Result<Format> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("ppm") => Ok(Format::Ppm),
            Some("png") => Ok(Format::Png),
            other => Err(Error::Unsupported(format!(
                "cannot infer image format from extension {:?} of {}",
                other.unwrap_or(""),
                path.display()
            ))),
        }
    }
}

/// Quantize one sample to 8 bits: clamp to [0,1], scale by 255, round half up.
#[inline]
pub fn quantize(sample: f64) -> u8 {
    (sample.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

pub fn load_image(path: &Path) -> Result<Image> {
    match Format::from_path(path)? {
        Format::Ppm => load_ppm(path),
        Format::Png => load_png(path),
    }
}

pub fn save_image(img: &Image, path: &Path) -> Result<()> {
    match Format::from_path(path)? {
        Format::Ppm => save_ppm(img, path),
        Format::Png => save_png(img, path),
    }
}

pub fn load_ppm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes)
}

/// Parse a binary P6 PPM. Errors name the byte offset of the problem.
pub fn decode_ppm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0usize;
    if bytes.len() < 2 || &bytes[0..2] != b"P6" {
        return Err(Error::Parse {
            offset: 0,
            msg: "expected magic \"P6\"".into(),
        });
    }
    pos += 2;
    let width = read_ppm_int(bytes, &mut pos)?;
    let height = read_ppm_int(bytes, &mut pos)?;
    let maxval = read_ppm_int(bytes, &mut pos)?;
    if maxval != 255 {
        return Err(Error::Unsupported(format!(
            "PPM maxval {maxval} (only 8-bit, maxval 255, is supported)"
        )));
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::Parse {
                offset: pos,
                msg: "expected single whitespace byte before pixel data".into(),
            })
        }
    }
    if width == 0 || height == 0 {
        return Err(Error::Parse {
            offset: pos,
            msg: format!("degenerate dimensions {width}x{height}"),
        });
    }
    let need = CHANNELS * width * height;
    let payload = &bytes[pos..];
    if payload.len() < need {
        return Err(Error::Parse {
            offset: bytes.len(),
            msg: format!(
                "truncated payload: need {need} bytes from offset {pos}, have {}",
                payload.len()
            ),
        });
    }
    let mut data = vec![0.0; need];
    let plane = width * height;
    for (i, px) in payload[..need].chunks_exact(CHANNELS).enumerate() {
        for c in 0..CHANNELS {
            data[c * plane + i] = px[c] as f64 / 255.0;
        }
    }
    Image::from_data(height, width, data)
}

/// Read an ASCII unsigned integer, skipping whitespace and `#` comments.
fn read_ppm_int(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(b) = bytes.get(*pos) {
                    *pos += 1;
                    if *b == b'\n' {
                        break;
                    }
                }
            }
            _ => break,
        }
    }
    let start = *pos;
    let mut value: usize = 0;
    while let Some(b) = bytes.get(*pos) {
        if b.is_ascii_digit() {
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as usize))
                .ok_or(Error::Parse {
                    offset: *pos,
                    msg: "integer overflow in header field".into(),
                })?;
            *pos += 1;
        } else {
            break;
        }
    }
    if *pos == start {
        return Err(Error::Parse {
            offset: start,
            msg: "expected ASCII integer in header".into(),
        });
    }
    Ok(value)
}

pub fn save_ppm(img: &Image, path: &Path) -> Result<()> {
    fs::write(path, encode_ppm(img)).map_err(|e| Error::io(path, e))
}

/// Encode as binary P6: "P6\n<w> <h>\n255\n" then raw interleaved RGB.
pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", img.width(), img.height());
    let mut out = header.into_bytes();
    out.reserve(CHANNELS * img.height() * img.width());
    for r in 0..img.height() {
        for col in 0..img.width() {
            for c in 0..CHANNELS {
                out.push(quantize(img.get(c, r, col)));
            }
        }
    }
    out
}

pub fn load_png(path: &Path) -> Result<Image> {
    let reader = image::ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|e| Error::Parse {
        offset: 0,
        msg: format!("PNG decode failed for {}: {e}", path.display()),
    })?;
    let rgb = match decoded {
        image::DynamicImage::ImageRgb8(rgb) => rgb,
        other => {
            return Err(Error::Unsupported(format!(
                "PNG {} has color type {:?}; only 8-bit RGB without alpha is supported",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let plane = w * h;
    let mut data = vec![0.0; CHANNELS * plane];
    for (i, px) in rgb.pixels().enumerate() {
        for c in 0..CHANNELS {
            data[c * plane + i] = px.0[c] as f64 / 255.0;
        }
    }
    Image::from_data(h, w, data)
}

pub fn save_png(img: &Image, path: &Path) -> Result<()> {
    let (h, w) = (img.height(), img.width());
    let mut buf = image::RgbImage::new(w as u32, h as u32);
    for r in 0..h {
        for col in 0..w {
            let px = image::Rgb([
                quantize(img.get(0, r, col)),
                quantize(img.get(1, r, col)),
                quantize(img.get(2, r, col)),
            ]);
            buf.put_pixel(col as u32, r as u32, px);
        }
    }
    buf.save(path).map_err(|e| Error::Parse {
        offset: 0,
        msg: format!("PNG encode failed for {}: {e}", path.display()),
    })
}
