//! 8-bit raster images and binary patterns.

use std::fmt;
use std::io::Cursor;
use std::path::Path;
use std::str::FromStr;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};
use ndarray::Array2;

use crate::error::{Error, Result};

/// An 8-bit image with one (gray) or three (RGB) interleaved channels,
/// stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RasterImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParams(format!(
                "images must have 1 or 3 channels, got {channels}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidParams("image has no pixels".into()));
        }
        let expected = width * height * channels;
        if pixels.len() != expected {
            return Err(Error::dims(
                format!("{expected} samples"),
                format!("{} samples", pixels.len()),
            ));
        }
        Ok(RasterImage {
            width,
            height,
            channels,
            pixels,
        })
    }

    /// Builds an image sample by sample; `f(row, col, channel)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height * channels);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..channels {
                    pixels.push(f(r, c, ch));
                }
            }
        }
        RasterImage::new(width, height, channels, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> u8 {
        self.pixels[(row * self.width + col) * self.channels + channel]
    }

    pub fn set(&mut self, row: usize, col: usize, channel: usize, value: u8) {
        self.pixels[(row * self.width + col) * self.channels + channel] = value;
    }

    pub fn same_shape(&self, other: &RasterImage) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn check_channel(&self, channel: usize) -> Result<()> {
        if channel >= self.channels {
            return Err(Error::InvalidParams(format!(
                "channel {channel} out of range for a {}-channel image",
                self.channels
            )));
        }
        Ok(())
    }

    /// One channel as a real matrix of shape (height, width).
    pub fn channel_matrix(&self, channel: usize) -> Result<Array2<f64>> {
        self.check_channel(channel)?;
        Ok(Array2::from_shape_fn(
            (self.height, self.width),
            |(r, c)| f64::from(self.get(r, c, channel)),
        ))
    }

    /// Writes a real matrix into one channel, clamping to [0, 255] and
    /// rounding to the nearest integer.
    pub fn set_channel_matrix(&mut self, channel: usize, values: &Array2<f64>) -> Result<()> {
        self.check_channel(channel)?;
        if values.dim() != (self.height, self.width) {
            return Err(Error::dims(
                format!("{}x{}", self.height, self.width),
                format!("{}x{}", values.nrows(), values.ncols()),
            ));
        }
        for ((r, c), v) in values.indexed_iter() {
            self.set(r, c, channel, quantize(*v));
        }
        Ok(())
    }

    /// Decodes PNG or JPEG bytes. Alpha is dropped; gray images stay
    /// single-channel, everything else becomes RGB.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes)?;
        Ok(RasterImage::from_dynamic(img))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        RasterImage::decode(&std::fs::read(path)?)
    }

    pub fn from_dynamic(img: DynamicImage) -> Self {
        let gray = matches!(
            img.color(),
            image::ColorType::L8
                | image::ColorType::La8
                | image::ColorType::L16
                | image::ColorType::La16
        );
        let (width, height) = (img.width() as usize, img.height() as usize);
        if gray {
            RasterImage {
                width,
                height,
                channels: 1,
                pixels: img.into_luma8().into_raw(),
            }
        } else {
            RasterImage {
                width,
                height,
                channels: 3,
                pixels: img.into_rgb8().into_raw(),
            }
        }
    }

    pub fn to_dynamic(&self) -> DynamicImage {
        let (w, h) = (self.width as u32, self.height as u32);
        if self.channels == 1 {
            DynamicImage::ImageLuma8(
                GrayImage::from_raw(w, h, self.pixels.clone())
                    .expect("buffer sized at construction"),
            )
        } else {
            DynamicImage::ImageRgb8(
                RgbImage::from_raw(w, h, self.pixels.clone())
                    .expect("buffer sized at construction"),
            )
        }
    }

    /// Non-interlaced 8-bit PNG encoding.
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        self.to_dynamic()
            .write_to(&mut out, ImageFormat::Png)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        Ok(out.into_inner())
    }
}

/// Clamp to [0, 255] then round half away from zero.
pub fn quantize(value: f64) -> u8 {
    value.clamp(0.0, 255.0).round() as u8
}

/// A matrix over {0, 1}: a watermark, an extracted watermark, or a bit plane.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryPattern {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl fmt::Debug for BinaryPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryPattern {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            if r > 0 {
                f.write_str("/")?;
            }
            for c in 0..self.cols.min(32) {
                f.write_str(if self.get(r, c) == 1 { "1" } else { "0" })?;
            }
        }
        f.write_str("]")
    }
}

impl BinaryPattern {
    /// Fails with [`Error::NonBinaryInput`] on any value other than 0 or 1.
    pub fn new(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParams("pattern has no cells".into()));
        }
        if bits.len() != rows * cols {
            return Err(Error::dims(
                format!("{} bits", rows * cols),
                format!("{} bits", bits.len()),
            ));
        }
        if let Some(&bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::NonBinaryInput(bad));
        }
        Ok(BinaryPattern { rows, cols, bits })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        BinaryPattern::from_fn(rows, cols, |_, _| false)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(rows > 0 && cols > 0, "pattern has no cells");
        let mut bits = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                bits.push(u8::from(f(r, c)));
            }
        }
        BinaryPattern { rows, cols, bits }
    }

    /// Thresholds an image: luma >= 128 is 1.
    pub fn from_image(img: &RasterImage) -> Self {
        BinaryPattern::from_fn(img.height(), img.width(), |r, c| {
            let luma = if img.channels() == 1 {
                f64::from(img.get(r, c, 0))
            } else {
                0.299 * f64::from(img.get(r, c, 0))
                    + 0.587 * f64::from(img.get(r, c, 1))
                    + 0.114 * f64::from(img.get(r, c, 2))
            };
            luma >= 128.0
        })
    }

    /// Gray image with 1 drawn as white and 0 as black.
    pub fn to_image(&self) -> RasterImage {
        let pixels = self.bits.iter().map(|&b| b * 255).collect();
        RasterImage::new(self.cols, self.rows, 1, pixels).expect("pattern is non-empty")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.cols + col]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Nearest-neighbor resampling that samples at cell centers, so that
    /// upsampling followed by downsampling back to the original size is the
    /// identity.
    pub fn resample(&self, rows: usize, cols: usize) -> BinaryPattern {
        if (rows, cols) == self.dims() {
            return self.clone();
        }
        BinaryPattern::from_fn(rows, cols, |r, c| {
            self.get(nearest(r, rows, self.rows), nearest(c, cols, self.cols)) == 1
        })
    }
}

/// Source index whose cell contains the center of destination cell `i`.
pub(crate) fn nearest(i: usize, dst_len: usize, src_len: usize) -> usize {
    ((2 * i + 1) * src_len) / (2 * dst_len)
}

/// Which channels of a color image an embedding touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelPolicy {
    Single(usize),
    All,
}

impl ChannelPolicy {
    /// Blue for RGB images (least perceptible), the only channel for gray.
    pub fn least_visible(channels: usize) -> Self {
        if channels == 3 {
            ChannelPolicy::Single(2)
        } else {
            ChannelPolicy::Single(0)
        }
    }

    pub fn resolve(self, img: &RasterImage) -> Result<Vec<usize>> {
        match self {
            ChannelPolicy::All => Ok((0..img.channels()).collect()),
            ChannelPolicy::Single(ch) => {
                img.check_channel(ch)?;
                Ok(vec![ch])
            }
        }
    }
}

impl FromStr for ChannelPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(ChannelPolicy::All),
            "gray" | "r" | "red" => Ok(ChannelPolicy::Single(0)),
            "g" | "green" => Ok(ChannelPolicy::Single(1)),
            "b" | "blue" => Ok(ChannelPolicy::Single(2)),
            other => other
                .parse::<usize>()
                .map(ChannelPolicy::Single)
                .map_err(|_| Error::InvalidParams(format!("unknown channel {s:?}"))),
        }
    }
}

impl fmt::Display for ChannelPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelPolicy::All => f.write_str("all"),
            ChannelPolicy::Single(ch) => write!(f, "{ch}"),
        }
    }
}

/// Majority vote across per-channel patterns of equal size.
pub(crate) fn majority(patterns: &[BinaryPattern]) -> BinaryPattern {
    let first = &patterns[0];
    if patterns.len() == 1 {
        return first.clone();
    }
    BinaryPattern::from_fn(first.rows, first.cols, |r, c| {
        let ones = patterns.iter().filter(|p| p.get(r, c) == 1).count();
        2 * ones > patterns.len()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(RasterImage::new(2, 2, 2, vec![0; 8]).is_err());
        assert!(RasterImage::new(2, 2, 1, vec![0; 3]).is_err());
        assert!(matches!(
            BinaryPattern::new(1, 2, vec![0, 2]),
            Err(Error::NonBinaryInput(2))
        ));
    }

    #[test]
    fn quantize_clamps_and_rounds() {
        assert_eq!(quantize(-3.0), 0);
        assert_eq!(quantize(300.0), 255);
        assert_eq!(quantize(10.5), 11);
        assert_eq!(quantize(10.49), 10);
    }

    #[test]
    fn resample_up_then_down_is_identity() {
        let m = BinaryPattern::from_fn(5, 7, |r, c| (r * 3 + c) % 4 == 1);
        for (rows, cols) in [(5, 7), (10, 14), (13, 29), (64, 7), (6, 8)] {
            assert_eq!(m.resample(rows, cols).resample(5, 7), m, "{rows}x{cols}");
        }
    }

    #[test]
    fn png_round_trip_is_lossless() {
        let img =
            RasterImage::from_fn(9, 4, 3, |r, c, ch| (r * 31 + c * 7 + ch * 90) as u8).unwrap();
        let back = RasterImage::decode(&img.encode_png().unwrap()).unwrap();
        assert_eq!(back, img);
        let gray = RasterImage::from_fn(3, 3, 1, |r, c, _| (r * 3 + c) as u8).unwrap();
        assert_eq!(
            RasterImage::decode(&gray.encode_png().unwrap()).unwrap(),
            gray
        );
    }

    #[test]
    fn threshold_mark() {
        let img = RasterImage::new(3, 1, 1, vec![0, 127, 128]).unwrap();
        assert_eq!(BinaryPattern::from_image(&img).bits(), &[0, 0, 1]);
    }

    #[test]
    fn channel_policy_parsing() {
        assert_eq!("all".parse::<ChannelPolicy>().unwrap(), ChannelPolicy::All);
        assert_eq!(
            "blue".parse::<ChannelPolicy>().unwrap(),
            ChannelPolicy::Single(2)
        );
        assert_eq!(
            "1".parse::<ChannelPolicy>().unwrap(),
            ChannelPolicy::Single(1)
        );
        assert!("purple".parse::<ChannelPolicy>().is_err());
        let gray = RasterImage::new(1, 1, 1, vec![0]).unwrap();
        assert!(ChannelPolicy::Single(2).resolve(&gray).is_err());
    }
}
