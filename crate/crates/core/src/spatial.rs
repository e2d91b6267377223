//! Bit-plane watermarking with blind detection and removable visible marks.
//!
//! Plane numbering is 1-based: plane 1 is the least significant bit, plane 8
//! the most significant. Embedding copies plane `V` into plane `U < V`, then
//! XORs the mark into plane `V`:
//!
//! ```text
//! S  = C2 - B_V * 2^(V-1) + (B_V ^ M) * 2^(V-1)
//! M' = bit(S, V) ^ bit(S, U)
//! CR = S - bit(S, V) * 2^(V-1) - bit(S, U) * 2^(U-1) + bit(S, U) * 2^(V-1)
//! ```
//!
//! Removal restores plane `V` from its copy and clears plane `U`, so the
//! retrieved cover differs from the original only in plane `U`.

use crate::error::{Error, Result};
use crate::raster::{majority, BinaryPattern, ChannelPolicy, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpatialParams {
    /// Plane carrying the mark (`V`).
    pub embed_plane: u8,
    /// Plane holding the copy of `V` (`U`).
    pub copy_plane: u8,
    pub channels: ChannelPolicy,
}

impl SpatialParams {
    pub fn new(embed_plane: u8, copy_plane: u8, channels: ChannelPolicy) -> Result<Self> {
        let p = SpatialParams {
            embed_plane,
            copy_plane,
            channels,
        };
        p.validate()?;
        Ok(p)
    }

    /// V=3, U=1: a mark that is not visible.
    pub fn invisible(channels: ChannelPolicy) -> Self {
        SpatialParams {
            embed_plane: 3,
            copy_plane: 1,
            channels,
        }
    }

    /// V=7, U=2: a visible mark that can be removed again.
    pub fn visible(channels: ChannelPolicy) -> Self {
        SpatialParams {
            embed_plane: 7,
            copy_plane: 2,
            channels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for plane in [self.embed_plane, self.copy_plane] {
            if !(1..=8).contains(&plane) {
                return Err(Error::PlaneOutOfRange(plane));
            }
        }
        if self.embed_plane <= self.copy_plane {
            return Err(Error::InvalidParams(format!(
                "embedding plane {} must be above the copy plane {}",
                self.embed_plane, self.copy_plane
            )));
        }
        Ok(())
    }
}

fn bit(value: u8, plane: u8) -> u8 {
    (value >> (plane - 1)) & 1
}

fn weight(plane: u8) -> i32 {
    1 << (plane - 1)
}

fn duplicate_pixel(value: u8, v: u8, u: u8) -> u8 {
    let mask = 1u8 << (u - 1);
    (value & !mask) | (bit(value, v) << (u - 1))
}

fn embed_pixel(c2: u8, mark: u8, v: u8) -> u8 {
    let b = bit(c2, v);
    let s = i32::from(c2) - i32::from(b) * weight(v) + i32::from(b ^ mark) * weight(v);
    s as u8
}

fn remove_pixel(s: u8, v: u8, u: u8) -> u8 {
    let (bv, bu) = (i32::from(bit(s, v)), i32::from(bit(s, u)));
    (i32::from(s) - bv * weight(v) - bu * weight(u) + bu * weight(v)) as u8
}

/// Bit `plane - 1` of every sample of one channel.
pub fn bitplane_get(img: &RasterImage, plane: u8, channel: usize) -> Result<BinaryPattern> {
    if !(1..=8).contains(&plane) {
        return Err(Error::PlaneOutOfRange(plane));
    }
    img.check_channel(channel)?;
    Ok(BinaryPattern::from_fn(img.height(), img.width(), |r, c| {
        bit(img.get(r, c, channel), plane) == 1
    }))
}

fn map_channels(
    img: &RasterImage,
    channels: ChannelPolicy,
    mut f: impl FnMut(usize, usize, u8) -> u8,
) -> Result<RasterImage> {
    let selected = channels.resolve(img)?;
    let mut out = img.clone();
    for r in 0..img.height() {
        for c in 0..img.width() {
            for &ch in &selected {
                out.set(r, c, ch, f(r, c, img.get(r, c, ch)));
            }
        }
    }
    Ok(out)
}

/// Cover `C2` whose plane `U` is a copy of plane `V`.
pub fn duplicate_plane(img: &RasterImage, p: &SpatialParams) -> Result<RasterImage> {
    p.validate()?;
    map_channels(img, p.channels, |_, _, v| {
        duplicate_pixel(v, p.embed_plane, p.copy_plane)
    })
}

/// Embeds `mark` (resampled to the cover size if needed) into plane `V`.
pub fn embed_spatial(
    img: &RasterImage,
    mark: &BinaryPattern,
    p: &SpatialParams,
) -> Result<RasterImage> {
    p.validate()?;
    let mark = mark.resample(img.height(), img.width());
    let c2 = duplicate_plane(img, p)?;
    map_channels(&c2, p.channels, |r, c, v| {
        embed_pixel(v, mark.get(r, c), p.embed_plane)
    })
}

/// Blind detection: XOR of planes `V` and `U`. With several channels the
/// per-channel results are combined by majority vote.
pub fn detect_spatial(img: &RasterImage, p: &SpatialParams) -> Result<BinaryPattern> {
    p.validate()?;
    let patterns = p
        .channels
        .resolve(img)?
        .into_iter()
        .map(|ch| {
            BinaryPattern::from_fn(img.height(), img.width(), |r, c| {
                let v = img.get(r, c, ch);
                bit(v, p.embed_plane) ^ bit(v, p.copy_plane) == 1
            })
        })
        .collect::<Vec<_>>();
    Ok(majority(&patterns))
}

/// Restores plane `V` from its copy in plane `U` and clears plane `U`.
pub fn remove_spatial(img: &RasterImage, p: &SpatialParams) -> Result<RasterImage> {
    p.validate()?;
    map_channels(img, p.channels, |_, _, v| {
        remove_pixel(v, p.embed_plane, p.copy_plane)
    })
}

/// PSNR between a cover and its retrieved version when the only loss is
/// plane `copy_plane`, whose fraction of set bits is `set_fraction`.
pub fn removal_psnr(copy_plane: u8, set_fraction: f64) -> f64 {
    let step = f64::from(weight(copy_plane));
    let mse = step * step * set_fraction;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}
