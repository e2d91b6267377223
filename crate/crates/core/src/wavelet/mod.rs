//! One-level 2D discrete wavelet transform with periodized boundaries.
//!
//! Supported families are the orthogonal Daubechies (`db1`..`db45`) and
//! Symlet (`sym2`..`sym20`) wavelets. Filter coefficients are tabulated in
//! [`filters`](self) to 20 significant digits; `tools/gen_filters.py`
//! regenerates them from a 120-digit spectral factorization.
//!
//! # Conventions
//!
//! With scaling filter `h` of length `L` and wavelet filter
//! `g[k] = (-1)^k h[L-1-k]`, one analysis step on a signal of even length
//! `n` is
//!
//! ```text
//! lo[i] = sum_k h[k] x[(2i + k) mod n]
//! hi[i] = sum_k g[k] x[(2i + k) mod n]
//! ```
//!
//! which is an orthogonal map, so synthesis is its transpose. In 2D the
//! subbands are named after the edges they respond to, as in PyWavelets:
//!
//! | band | along rows (axis 0) | along columns (axis 1) |
//! |------|---------------------|------------------------|
//! | `cA` | low                 | low                    |
//! | `cH` | high                | low                    |
//! | `cV` | low                 | high                   |
//! | `cD` | high                | high                   |
//!
//! Odd dimensions are padded by repeating the last row or column; the
//! original size is kept in [`SubbandSet::original_dims`] and the inverse
//! crops back to it.

mod filters;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Daubechies,
    Symlet,
}

/// A wavelet name such as `db1` or `sym8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WaveletSpec {
    pub family: Family,
    pub order: usize,
}

impl WaveletSpec {
    pub const HAAR: WaveletSpec = WaveletSpec::db(1);

    pub const fn db(order: usize) -> Self {
        WaveletSpec {
            family: Family::Daubechies,
            order,
        }
    }

    pub const fn sym(order: usize) -> Self {
        WaveletSpec {
            family: Family::Symlet,
            order,
        }
    }

    fn table(&self) -> Option<&'static [f64]> {
        match self.family {
            Family::Daubechies if (1..=45).contains(&self.order) => {
                Some(filters::DB[self.order - 1])
            }
            Family::Symlet if (2..=20).contains(&self.order) => Some(filters::SYM[self.order - 2]),
            _ => None,
        }
    }

    pub fn filter_len(&self) -> usize {
        2 * self.order
    }
}

impl fmt::Display for WaveletSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Daubechies => write!(f, "db{}", self.order),
            Family::Symlet => write!(f, "sym{}", self.order),
        }
    }
}

impl FromStr for WaveletSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "haar" {
            return Ok(WaveletSpec::HAAR);
        }
        let (family, digits) = if let Some(rest) = lower.strip_prefix("db") {
            (Family::Daubechies, rest)
        } else if let Some(rest) = lower.strip_prefix("sym") {
            (Family::Symlet, rest)
        } else {
            return Err(Error::UnsupportedWavelet(s.to_string()));
        };
        let order = digits
            .parse()
            .map_err(|_| Error::UnsupportedWavelet(s.to_string()))?;
        let spec = WaveletSpec { family, order };
        spec.table()
            .map(|_| spec)
            .ok_or_else(|| Error::UnsupportedWavelet(s.to_string()))
    }
}

/// Analysis and synthesis filters of an orthogonal wavelet, in the
/// convolution convention (`dec_*` are the time reverses of `rec_*`).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
    pub rec_lo: Vec<f64>,
    pub rec_hi: Vec<f64>,
}

pub fn build_filters(spec: WaveletSpec) -> Result<FilterBank> {
    let h = spec
        .table()
        .ok_or_else(|| Error::UnsupportedWavelet(spec.to_string()))?;
    let len = h.len();
    let rec_lo = h.to_vec();
    let rec_hi: Vec<f64> = (0..len)
        .map(|k| {
            if k % 2 == 0 {
                h[len - 1 - k]
            } else {
                -h[len - 1 - k]
            }
        })
        .collect();
    let dec_lo = rec_lo.iter().rev().copied().collect();
    let dec_hi = rec_hi.iter().rev().copied().collect();
    Ok(FilterBank {
        dec_lo,
        dec_hi,
        rec_lo,
        rec_hi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    A,
    H,
    V,
    D,
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ca" | "a" | "ll" => Ok(Band::A),
            "ch" | "h" | "lh" => Ok(Band::H),
            "cv" | "v" | "hl" => Ok(Band::V),
            "cd" | "d" | "hh" => Ok(Band::D),
            _ => Err(Error::InvalidParams(format!("unknown subband {s:?}"))),
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::A => "cA",
            Band::H => "cH",
            Band::V => "cV",
            Band::D => "cD",
        })
    }
}

/// The four coefficient blocks of a one-level decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub ca: Array2<f64>,
    pub ch: Array2<f64>,
    pub cv: Array2<f64>,
    pub cd: Array2<f64>,
    /// (rows, cols) of the image before padding.
    pub original_dims: (usize, usize),
}

impl SubbandSet {
    pub fn band(&self, band: Band) -> &Array2<f64> {
        match band {
            Band::A => &self.ca,
            Band::H => &self.ch,
            Band::V => &self.cv,
            Band::D => &self.cd,
        }
    }

    pub fn band_mut(&mut self, band: Band) -> &mut Array2<f64> {
        match band {
            Band::A => &mut self.ca,
            Band::H => &mut self.ch,
            Band::V => &mut self.cv,
            Band::D => &mut self.cd,
        }
    }

    pub fn band_dims(&self) -> (usize, usize) {
        self.ca.dim()
    }

    pub fn energy(&self) -> f64 {
        [&self.ca, &self.ch, &self.cv, &self.cd]
            .iter()
            .map(|b| b.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

/// A wavelet with its filters built once, for repeated transforms.
#[derive(Debug, Clone)]
pub struct Wavelet {
    spec: WaveletSpec,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Wavelet {
    pub fn new(spec: WaveletSpec) -> Result<Self> {
        let bank = build_filters(spec)?;
        Ok(Wavelet {
            spec,
            lo: bank.rec_lo,
            hi: bank.rec_hi,
        })
    }

    pub fn spec(&self) -> WaveletSpec {
        self.spec
    }

    pub fn forward(&self, image: &Array2<f64>) -> Result<SubbandSet> {
        let (rows, cols) = image.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParams(
                "cannot transform an empty image".into(),
            ));
        }
        let padded = pad_even(image);
        let (low_cols, high_cols) = self.analyze_axis(&padded, Axis(1));
        let (ca, ch) = self.analyze_axis(&low_cols, Axis(0));
        let (cv, cd) = self.analyze_axis(&high_cols, Axis(0));
        Ok(SubbandSet {
            ca,
            ch,
            cv,
            cd,
            original_dims: (rows, cols),
        })
    }

    pub fn inverse(&self, bands: &SubbandSet) -> Result<Array2<f64>> {
        let dims = bands.ca.dim();
        for (name, b) in [("cH", &bands.ch), ("cV", &bands.cv), ("cD", &bands.cd)] {
            if b.dim() != dims {
                return Err(Error::dims(
                    format!("{name} {}x{}", dims.0, dims.1),
                    format!("{name} {}x{}", b.nrows(), b.ncols()),
                ));
            }
        }
        let (rows, cols) = bands.original_dims;
        if rows.div_ceil(2) != dims.0 || cols.div_ceil(2) != dims.1 {
            return Err(Error::dims(
                format!("bands of {}x{}", rows.div_ceil(2), cols.div_ceil(2)),
                format!("bands of {}x{}", dims.0, dims.1),
            ));
        }
        let low_cols = self.synthesize_axis(&bands.ca, &bands.ch, Axis(0));
        let high_cols = self.synthesize_axis(&bands.cv, &bands.cd, Axis(0));
        let full = self.synthesize_axis(&low_cols, &high_cols, Axis(1));
        Ok(full.slice(ndarray::s![..rows, ..cols]).to_owned())
    }

    fn analyze_axis(&self, input: &Array2<f64>, axis: Axis) -> (Array2<f64>, Array2<f64>) {
        let mut out_dim = input.raw_dim();
        out_dim[axis.index()] /= 2;
        let mut lo = Array2::zeros(out_dim);
        let mut hi = Array2::zeros(out_dim);
        let mut buf_lo = vec![0.0; input.len_of(axis) / 2];
        let mut buf_hi = buf_lo.clone();
        let other = Axis(1 - axis.index());
        for (idx, lane) in input.lanes(axis).into_iter().enumerate() {
            analyze(lane, &self.lo, &self.hi, &mut buf_lo, &mut buf_hi);
            lo.index_axis_mut(other, idx)
                .assign(&ArrayView1::from(&buf_lo));
            hi.index_axis_mut(other, idx)
                .assign(&ArrayView1::from(&buf_hi));
        }
        (lo, hi)
    }

    fn synthesize_axis(&self, lo: &Array2<f64>, hi: &Array2<f64>, axis: Axis) -> Array2<f64> {
        let mut out_dim = lo.raw_dim();
        out_dim[axis.index()] *= 2;
        let mut out = Array2::zeros(out_dim);
        let mut buf = vec![0.0; out.len_of(axis)];
        let other = Axis(1 - axis.index());
        for (idx, (l, h)) in lo.lanes(axis).into_iter().zip(hi.lanes(axis)).enumerate() {
            synthesize(l, h, &self.lo, &self.hi, &mut buf);
            out.index_axis_mut(other, idx)
                .assign(&ArrayView1::from(&buf));
        }
        out
    }
}

pub fn dwt2(image: &Array2<f64>, spec: WaveletSpec) -> Result<SubbandSet> {
    Wavelet::new(spec)?.forward(image)
}

pub fn idwt2(bands: &SubbandSet, spec: WaveletSpec) -> Result<Array2<f64>> {
    Wavelet::new(spec)?.inverse(bands)
}

fn pad_even(image: &Array2<f64>) -> Array2<f64> {
    let (rows, cols) = image.dim();
    let (pr, pc) = (rows + rows % 2, cols + cols % 2);
    if (pr, pc) == (rows, cols) {
        return image.clone();
    }
    Array2::from_shape_fn((pr, pc), |(r, c)| image[[r.min(rows - 1), c.min(cols - 1)]])
}

fn analyze(x: ArrayView1<f64>, lo: &[f64], hi: &[f64], out_lo: &mut [f64], out_hi: &mut [f64]) {
    let n = x.len();
    for i in 0..n / 2 {
        let (mut a, mut d) = (0.0, 0.0);
        for (k, (&h, &g)) in lo.iter().zip(hi).enumerate() {
            let v = x[(2 * i + k) % n];
            a += h * v;
            d += g * v;
        }
        out_lo[i] = a;
        out_hi[i] = d;
    }
}

fn synthesize(a: ArrayView1<f64>, d: ArrayView1<f64>, lo: &[f64], hi: &[f64], out: &mut [f64]) {
    let n = out.len();
    out.fill(0.0);
    for i in 0..n / 2 {
        for (k, (&h, &g)) in lo.iter().zip(hi).enumerate() {
            out[(2 * i + k) % n] += h * a[i] + g * d[i];
        }
    }
}

#[cfg(test)]
mod tests;
