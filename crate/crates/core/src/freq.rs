//! Subband-replacement watermarking in the wavelet domain.
//!
//! A fraction `u` of one subband (the top `floor(u * rows)` rows, all
//! columns) is overwritten with `a * M`, `M` resampled to fill it. Detection
//! transforms again and thresholds the same region at `a / 2`.
//!
//! Images with an odd dimension are transformed on their even-sized core;
//! the trailing row or column passes through untouched. Padding would
//! otherwise make the inverse lossy, since the crop discards part of what
//! the modified coefficients encode.

use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::raster::{majority, BinaryPattern, ChannelPolicy, RasterImage};
use crate::wavelet::{Band, Wavelet, WaveletSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqParams {
    pub wavelet: WaveletSpec,
    pub band: Band,
    /// Share `u` of the band's rows replaced by the mark, in (0, 1].
    pub fraction: f64,
    /// Coefficient value `a` written for a 1 bit.
    pub brightness: f64,
    pub channels: ChannelPolicy,
}

impl FreqParams {
    pub fn new(
        wavelet: WaveletSpec,
        band: Band,
        fraction: f64,
        brightness: f64,
        channels: ChannelPolicy,
    ) -> Result<Self> {
        let p = FreqParams {
            wavelet,
            band,
            fraction,
            brightness,
            channels,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "fraction must be in (0, 1], got {}",
                self.fraction
            )));
        }
        if !(self.brightness > 0.0 && self.brightness.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "brightness must be positive, got {}",
                self.brightness
            )));
        }
        Ok(())
    }
}

impl Default for FreqParams {
    /// Haar, cD, u = 0.5, a = 20 on the least visible channel of RGB.
    fn default() -> Self {
        FreqParams {
            wavelet: WaveletSpec::HAAR,
            band: Band::D,
            fraction: 0.5,
            brightness: 20.0,
            channels: ChannelPolicy::Single(2),
        }
    }
}

/// Top-left block of a subband that receives the mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionSpec {
    pub rows: usize,
    pub cols: usize,
}

pub fn select_region(
    band_dims: (usize, usize),
    fraction: f64,
    mark_dims: (usize, usize),
) -> Result<RegionSpec> {
    if band_dims.0 == 0 || band_dims.1 == 0 {
        return Err(Error::InvalidParams("subband is empty".into()));
    }
    if mark_dims.0 == 0 || mark_dims.1 == 0 {
        return Err(Error::InvalidParams("mark is empty".into()));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    // The epsilon keeps 0.7 * 10 from landing on 6.999...
    let rows = ((fraction * band_dims.0 as f64 + 1e-9).floor() as usize).min(band_dims.0);
    if rows == 0 {
        return Err(Error::RegionTooSmall {
            band_rows: band_dims.0,
            fraction,
        });
    }
    Ok(RegionSpec {
        rows,
        cols: band_dims.1,
    })
}

fn even_core(dims: (usize, usize)) -> Result<(usize, usize)> {
    let core = (dims.0 & !1, dims.1 & !1);
    if core.0 == 0 || core.1 == 0 {
        return Err(Error::InvalidParams(format!(
            "a {}x{} image is too small to carry a frequency mark",
            dims.0, dims.1
        )));
    }
    Ok(core)
}

/// Region the mark occupies for a plane of `plane_dims`.
pub fn region_for(
    plane_dims: (usize, usize),
    p: &FreqParams,
    mark_dims: (usize, usize),
) -> Result<RegionSpec> {
    let core = even_core(plane_dims)?;
    select_region((core.0 / 2, core.1 / 2), p.fraction, mark_dims)
}

/// True when the region is at least as large as the mark in both axes, so
/// resampling loses nothing and detection can be exact.
pub fn mark_fits(plane_dims: (usize, usize), p: &FreqParams, mark_dims: (usize, usize)) -> bool {
    region_for(plane_dims, p, mark_dims)
        .map(|r| r.rows >= mark_dims.0 && r.cols >= mark_dims.1)
        .unwrap_or(false)
}

/// Real-valued embedding into one plane, without clamping or rounding.
pub fn embed_plane(
    plane: &Array2<f64>,
    mark: &BinaryPattern,
    p: &FreqParams,
) -> Result<Array2<f64>> {
    p.validate()?;
    let core = even_core(plane.dim())?;
    let wavelet = Wavelet::new(p.wavelet)?;
    let mut bands = wavelet.forward(&plane.slice(s![..core.0, ..core.1]).to_owned())?;
    let region = select_region(bands.band_dims(), p.fraction, mark.dims())?;
    let scaled = mark.resample(region.rows, region.cols);
    let target = bands.band_mut(p.band);
    for r in 0..region.rows {
        for c in 0..region.cols {
            target[[r, c]] = p.brightness * f64::from(scaled.get(r, c));
        }
    }
    let mut out = plane.clone();
    out.slice_mut(s![..core.0, ..core.1])
        .assign(&wavelet.inverse(&bands)?);
    Ok(out)
}

/// Real-valued detection on one plane.
pub fn detect_plane(
    plane: &Array2<f64>,
    p: &FreqParams,
    mark_dims: (usize, usize),
) -> Result<BinaryPattern> {
    p.validate()?;
    let core = even_core(plane.dim())?;
    let bands =
        Wavelet::new(p.wavelet)?.forward(&plane.slice(s![..core.0, ..core.1]).to_owned())?;
    let region = select_region(bands.band_dims(), p.fraction, mark_dims)?;
    let source = bands.band(p.band);
    let threshold = p.brightness / 2.0;
    let found =
        BinaryPattern::from_fn(region.rows, region.cols, |r, c| source[[r, c]] >= threshold);
    Ok(found.resample(mark_dims.0, mark_dims.1))
}

/// Embeds into each selected channel, then clamps and rounds to 8 bits.
pub fn embed_frequency(
    cover: &RasterImage,
    mark: &BinaryPattern,
    p: &FreqParams,
) -> Result<RasterImage> {
    let mut out = cover.clone();
    for ch in p.channels.resolve(cover)? {
        let marked = embed_plane(&cover.channel_matrix(ch)?, mark, p)?;
        out.set_channel_matrix(ch, &marked)?;
    }
    Ok(out)
}

/// Non-blind detection; several channels are combined by majority vote.
pub fn detect_frequency(
    stego: &RasterImage,
    p: &FreqParams,
    mark_dims: (usize, usize),
) -> Result<BinaryPattern> {
    let found = p
        .channels
        .resolve(stego)?
        .into_iter()
        .map(|ch| detect_plane(&stego.channel_matrix(ch)?, p, mark_dims))
        .collect::<Result<Vec<_>>>()?;
    Ok(majority(&found))
}
