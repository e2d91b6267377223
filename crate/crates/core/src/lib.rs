//! Visible and invisible watermarking of raster images carried inside PDF
//! documents.
//!
//! Two embedding schemes are provided:
//!
//! - [`spatial`]: bit-plane watermarking. A significant plane `V` is copied
//!   into a low plane `U`, the binary mark is XORed into plane `V`, and the
//!   mark is recovered blindly as `plane V ^ plane U`. A visible mark in a
//!   high plane can be removed again, losing only plane `U`.
//! - [`freq`]: a one-level 2D DWT ([`wavelet`]) whose chosen subband has a
//!   fraction of its coefficients replaced by the scaled mark.
//!
//! [`pdf`] extracts images from PDF documents and writes them back losslessly
//! through an incremental update, and [`metrics`] measures the distortion
//! between marks and images.

pub mod error;
pub mod freq;
pub mod metrics;
pub mod pdf;
pub mod raster;
pub mod spatial;
pub mod synth;
pub mod wavelet;

pub use error::{Error, Result};
pub use raster::{BinaryPattern, ChannelPolicy, RasterImage};
