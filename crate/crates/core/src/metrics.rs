//! Distortion measures between original and extracted marks or images.
//!
//! Relative entropy is the Kullback-Leibler divergence `KL(P || Q)` in nats,
//! where `P` is the intensity histogram of the *original* and `Q` that of
//! the distorted version. Both histograms are smoothed additively with
//! `eps = 1 / (count * bins)` per bin and renormalized, so `Q` never has an
//! empty bin.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::raster::{BinaryPattern, RasterImage};

/// Anything that can be compared sample by sample.
pub trait Samples {
    /// (rows, cols, channels)
    fn shape(&self) -> (usize, usize, usize);
    fn samples(&self) -> &[u8];
    /// Number of distinct sample values: 256 for images, 2 for patterns.
    fn levels(&self) -> usize;
}

impl Samples for RasterImage {
    fn shape(&self) -> (usize, usize, usize) {
        (self.height(), self.width(), self.channels())
    }

    fn samples(&self) -> &[u8] {
        self.pixels()
    }

    fn levels(&self) -> usize {
        256
    }
}

impl Samples for BinaryPattern {
    fn shape(&self) -> (usize, usize, usize) {
        (self.rows(), self.cols(), 1)
    }

    fn samples(&self) -> &[u8] {
        self.bits()
    }

    fn levels(&self) -> usize {
        2
    }
}

fn same_shape<A: Samples + ?Sized, B: Samples + ?Sized>(a: &A, b: &B) -> Result<()> {
    if a.shape() != b.shape() {
        let fmt = |(r, c, ch): (usize, usize, usize)| format!("{r}x{c}x{ch}");
        return Err(Error::dims(fmt(a.shape()), fmt(b.shape())));
    }
    Ok(())
}

/// Fraction of positions where the two patterns differ.
pub fn hamming(a: &BinaryPattern, b: &BinaryPattern) -> Result<f64> {
    same_shape(a, b)?;
    let differing = a
        .bits()
        .iter()
        .zip(b.bits())
        .filter(|(x, y)| x != y)
        .count();
    Ok(differing as f64 / a.bits().len() as f64)
}

/// Mean squared error over all samples (all channels jointly).
pub fn mse<S: Samples + ?Sized>(a: &S, b: &S) -> Result<f64> {
    same_shape(a, b)?;
    let sum: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum();
    Ok(sum / a.samples().len() as f64)
}

pub fn rmse<S: Samples + ?Sized>(a: &S, b: &S) -> Result<f64> {
    mse(a, b).map(f64::sqrt)
}

/// PSNR in dB with peak 255; `f64::INFINITY` for identical inputs.
pub fn psnr<S: Samples + ?Sized>(a: &S, b: &S) -> Result<f64> {
    psnr_with_peak(a, b, 255.0)
}

pub fn psnr_with_peak<S: Samples + ?Sized>(a: &S, b: &S, peak: f64) -> Result<f64> {
    let mse = mse(a, b)?;
    Ok(psnr_from_mse(mse, peak))
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// Smoothed, normalized histogram with `bins` equal-width bins.
pub fn histogram<S: Samples + ?Sized>(img: &S, bins: usize) -> Vec<f64> {
    let levels = img.levels();
    let mut counts = vec![0usize; bins];
    for &v in img.samples() {
        counts[usize::from(v) * bins / levels] += 1;
    }
    let total = img.samples().len() as f64;
    let eps = 1.0 / (total * bins as f64);
    let norm = 1.0 + bins as f64 * eps;
    counts
        .into_iter()
        .map(|c| (c as f64 / total + eps) / norm)
        .collect()
}

/// `KL(hist(original) || hist(distorted))` in nats.
pub fn relative_entropy<S: Samples + ?Sized>(
    original: &S,
    distorted: &S,
    bins: usize,
) -> Result<f64> {
    if original.levels() != distorted.levels() {
        return Err(Error::InvalidParams(format!(
            "cannot compare {}-level and {}-level samples",
            original.levels(),
            distorted.levels()
        )));
    }
    if bins == 0 || bins > original.levels() {
        return Err(Error::InvalidParams(format!(
            "bin count must be in 1..={}, got {bins}",
            original.levels()
        )));
    }
    let p = histogram(original, bins);
    let q = histogram(distorted, bins);
    let kl: f64 = p.iter().zip(&q).map(|(&pi, &qi)| pi * (pi / qi).ln()).sum();
    // Rounding can leave a tiny negative residue for equal histograms.
    Ok(kl.max(0.0))
}

fn serialize_db<S: Serializer>(value: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if value.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*value)
    }
}

fn format_db(value: f64) -> String {
    if value.is_infinite() {
        "inf".to_string()
    } else {
        value.to_string()
    }
}

/// The distortion suite for one comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionReport {
    /// Only present for binary patterns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ham: Option<f64>,
    pub rmse: f64,
    #[serde(serialize_with = "serialize_db")]
    pub psnr: f64,
    pub relent: f64,
}

impl DistortionReport {
    /// Mark comparison: PSNR uses peak 1 and relent two bins, so
    /// `rmse^2 == ham` and `psnr == -10 log10(ham)`.
    pub fn for_patterns(original: &BinaryPattern, extracted: &BinaryPattern) -> Result<Self> {
        Ok(DistortionReport {
            ham: Some(hamming(original, extracted)?),
            rmse: rmse(original, extracted)?,
            psnr: psnr_with_peak(original, extracted, 1.0)?,
            relent: relative_entropy(original, extracted, 2)?,
        })
    }

    pub fn for_images(original: &RasterImage, distorted: &RasterImage) -> Result<Self> {
        Ok(DistortionReport {
            ham: None,
            rmse: rmse(original, distorted)?,
            psnr: psnr(original, distorted)?,
            relent: relative_entropy(original, distorted, 256)?,
        })
    }

    /// `key=value` lines, PSNR written as `inf` when infinite.
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        if let Some(ham) = self.ham {
            out.push_str(&format!("ham={ham}\n"));
        }
        out.push_str(&format!("rmse={}\n", self.rmse));
        out.push_str(&format!("psnr={}\n", format_db(self.psnr)));
        out.push_str(&format!("relent={}\n", self.relent));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report fields are always serializable")
    }
}
