//! Planar RGB pixel buffer and per-channel statistics.
//!
//! Samples are `f64` in a nominal `[0, 1]` range, stored as three
//! row-major planes (R, G, B). Quantization to 8 bits happens only in
//! the file I/O layer, at save time.

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;

/// A 3-channel real-valued image, planar layout: `data[c*H*W + r*W + col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

/// A rectangular region in pixel coordinates (top-left corner plus extent).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn full(img: &Image) -> Self {
        Rect {
            row: 0,
            col: 0,
            height: img.height(),
            width: img.width(),
        }
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }
}

impl Image {
    /// All-zero image of the given dimensions.
    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Shape(format!(
                "image dimensions must be >= 1, got {height}x{width}"
            )));
        }
        Ok(Image {
            height,
            width,
            data: vec![0.0; CHANNELS * height * width],
        })
    }

    /// Build from a planar sample buffer of length `3*height*width`.
    /// Rejects NaN/Inf samples.
    pub fn from_data(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Shape(format!(
                "image dimensions must be >= 1, got {height}x{width}"
            )));
        }
        let expected = CHANNELS * height * width;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "sample buffer length {} does not match 3*{height}*{width} = {expected}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!(
                "non-finite sample at flat index {bad}"
            )));
        }
        Ok(Image {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width
    }

    #[inline]
    pub fn index(&self, channel: usize, row: usize, col: usize) -> usize {
        debug_assert!(channel < CHANNELS && row < self.height && col < self.width);
        (channel * self.height + row) * self.width + col
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.data[self.index(channel, row, col)]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, row: usize, col: usize, value: f64) {
        let i = self.index(channel, row, col);
        self.data[i] = value;
    }

    /// Row-major plane for one channel.
    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Copy of the given rectangle as a standalone image.
    pub fn crop(&self, rect: Rect) -> Result<Image> {
        self.check_rect(rect)?;
        let mut out = Vec::with_capacity(CHANNELS * rect.area());
        for c in 0..CHANNELS {
            for r in rect.row..rect.row + rect.height {
                let start = self.index(c, r, rect.col);
                out.extend_from_slice(&self.data[start..start + rect.width]);
            }
        }
        Image::from_data(rect.height, rect.width, out)
    }

    /// Clamp every sample to `[0, 1]` in place.
    pub fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    fn check_rect(&self, rect: Rect) -> Result<()> {
        if rect.area() == 0 {
            return Err(Error::Bounds(format!(
                "empty region {}x{}",
                rect.height, rect.width
            )));
        }
        if rect.row + rect.height > self.height || rect.col + rect.width > self.width {
            return Err(Error::Bounds(format!(
                "region at ({},{}) size {}x{} exceeds image {}x{}",
                rect.row, rect.col, rect.height, rect.width, self.height, self.width
            )));
        }
        Ok(())
    }
}

/// Per-channel mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStats {
    pub mu: [f64; CHANNELS],
    pub sigma: [f64; CHANNELS],
}

/// Mean and population standard deviation (divide by N) of each channel
/// over `rect`, accumulated two-pass in fixed row-major order.
pub fn channel_stats(img: &Image, rect: Rect) -> Result<ChannelStats> {
    img.check_rect(rect)?;
    let n = rect.area() as f64;
    let mut mu = [0.0; CHANNELS];
    let mut sigma = [0.0; CHANNELS];
    for c in 0..CHANNELS {
        let mut sum = 0.0;
        for r in rect.row..rect.row + rect.height {
            let start = img.index(c, r, rect.col);
            for v in &img.data[start..start + rect.width] {
                sum += v;
            }
        }
        let mean = sum / n;
        let mut sq = 0.0;
        for r in rect.row..rect.row + rect.height {
            let start = img.index(c, r, rect.col);
            for v in &img.data[start..start + rect.width] {
                let d = v - mean;
                sq += d * d;
            }
        }
        mu[c] = mean;
        sigma[c] = (sq / n).sqrt();
    }
    Ok(ChannelStats { mu, sigma })
}

/// Stats over the whole image.
pub fn image_stats(img: &Image) -> ChannelStats {
    channel_stats(img, Rect::full(img)).expect("full rect is always valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(h: usize, w: usize, v: [f64; 3]) -> Image {
        let mut data = Vec::new();
        for c in 0..3 {
            data.extend(std::iter::repeat(v[c]).take(h * w));
        }
        Image::from_data(h, w, data).unwrap()
    }

    #[test]
    fn constant_image_stats() {
        let img = constant(4, 5, [0.5, 0.5, 0.5]);
        let s = image_stats(&img);
        assert_eq!(s.mu, [0.5, 0.5, 0.5]);
        assert_eq!(s.sigma, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_sample_population_std() {
        // R samples {0, 1}: mu = 0.5, population sigma = 0.5
        let img = Image::from_data(1, 2, vec![0.0, 1.0, 0.2, 0.2, 0.7, 0.7]).unwrap();
        let s = image_stats(&img);
        assert_eq!(s.mu[0], 0.5);
        assert_eq!(s.sigma[0], 0.5);
    }

    #[test]
    fn partition_mean_is_weighted_combination() {
        let mut img = Image::zeros(4, 4).unwrap();
        for c in 0..3 {
            for r in 0..4 {
                for col in 0..4 {
                    img.set(c, r, col, (c + 1) as f64 * 0.01 * (r * 4 + col) as f64);
                }
            }
        }
        let full = image_stats(&img);
        let top = channel_stats(
            &img,
            Rect {
                row: 0,
                col: 0,
                height: 2,
                width: 4,
            },
        )
        .unwrap();
        let bottom = channel_stats(
            &img,
            Rect {
                row: 2,
                col: 0,
                height: 2,
                width: 4,
            },
        )
        .unwrap();
        for c in 0..3 {
            let combined = 0.5 * top.mu[c] + 0.5 * bottom.mu[c];
            assert!((combined - full.mu[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_zero_iff_constant() {
        // Exactly representable constants so the two-pass mean hits them.
        let img = Image::from_data(1, 3, vec![0.25, 0.25, 0.25, 0.2, 0.3, 0.2, 0.5, 0.5, 0.5])
            .unwrap();
        let s = image_stats(&img);
        assert_eq!(s.sigma[0], 0.0);
        assert!(s.sigma[1] > 0.0);
        assert_eq!(s.sigma[2], 0.0);
    }

    #[test]
    fn out_of_bounds_region_rejected() {
        let img = Image::zeros(4, 4).unwrap();
        let bad = Rect {
            row: 2,
            col: 2,
            height: 3,
            width: 1,
        };
        assert!(matches!(
            channel_stats(&img, bad),
            Err(Error::Bounds(_))
        ));
        let empty = Rect {
            row: 0,
            col: 0,
            height: 0,
            width: 4,
        };
        assert!(matches!(
            channel_stats(&img, empty),
            Err(Error::Bounds(_))
        ));
    }

    #[test]
    fn non_finite_samples_rejected() {
        let mut data = vec![0.0; 12];
        data[5] = f64::NAN;
        assert!(Image::from_data(2, 2, data).is_err());
    }

    #[test]
    fn crop_copies_rectangle() {
        let img = Image::from_data(
            2,
            2,
            vec![
                0.0, 0.1, 0.2, 0.3, // R
                0.4, 0.5, 0.6, 0.7, // G
                0.8, 0.9, 1.0, 0.95, // B
            ],
        )
        .unwrap();
        let c = img
            .crop(Rect {
                row: 1,
                col: 0,
                height: 1,
                width: 2,
            })
            .unwrap();
        assert_eq!(c.get(0, 0, 0), 0.2);
        assert_eq!(c.get(0, 0, 1), 0.3);
        assert_eq!(c.get(2, 0, 1), 0.95);
    }
}
