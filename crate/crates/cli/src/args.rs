use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pdfwm::freq::FreqParams;
use pdfwm::spatial::SpatialParams;
use pdfwm::wavelet::{Band, WaveletSpec};
use pdfwm::{ChannelPolicy, RasterImage};

use crate::UsageError;

/// Embed, detect and remove watermarks in images inside PDF documents.
///
/// Exit status: 0 on success, 1 on a usage error, 2 when processing fails.
/// Log verbosity follows RUST_LOG (default: warn).
#[derive(Debug, Parser)]
#[command(name = "pdfwm", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed a binary mark into the selected images.
    Embed {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Binary mark image, thresholded at 128.
        #[arg(long)]
        mark: PathBuf,
        #[command(flatten)]
        params: MarkArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Extract the mark from the selected images.
    Detect {
        input: PathBuf,
        /// Mark image to write; numbered per image when several are selected.
        #[arg(short, long)]
        output: PathBuf,
        /// Reference mark: sets the mark size and adds a comparison to the report.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        params: MarkArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Remove a spatial mark by restoring the embedding plane from its copy.
    Remove {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Original unmarked document or image, compared with the result.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        params: MarkArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Tabulate ham, relent and PSNR of frequency embedding over brightness and wavelets.
    Sweep {
        input: PathBuf,
        #[arg(long)]
        mark: PathBuf,
        /// Tab-separated table; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Comma-separated wavelets.
        #[arg(long, default_value = "db1")]
        wavelet: String,
        /// START:STOP:STEP, a comma-separated list, or one value.
        #[arg(long, default_value = "20:300:20")]
        brightness: String,
        #[arg(long, default_value = "cD")]
        band: String,
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
        #[arg(long, default_value = "auto")]
        channel: String,
        /// Image to use; the first supported image when omitted.
        #[arg(long)]
        image: Option<String>,
    },
    /// Check that every supported image survives extract and reinsert unchanged.
    Roundtrip { input: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Spatial,
    Freq,
}

#[derive(Debug, Args)]
pub struct MarkArgs {
    #[arg(long, value_enum, default_value_t = Mode::Spatial)]
    pub mode: Mode,
    /// Embedding plane V (1 = least significant).
    #[arg(long, default_value_t = 3)]
    pub plane_v: u8,
    /// Copy plane U, below V.
    #[arg(long, default_value_t = 1)]
    pub plane_u: u8,
    #[arg(long, default_value = "haar")]
    pub wavelet: String,
    #[arg(long, default_value = "cD")]
    pub band: String,
    /// Share of the subband rows that carry the mark.
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    /// Coefficient value written for a 1 bit.
    #[arg(long, default_value_t = 20.0)]
    pub brightness: f64,
    /// auto, all, r, g, b or a channel index.
    #[arg(long, default_value = "auto")]
    pub channel: String,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// PAGE:INDEX (both 0-based) or all.
    #[arg(long, default_value = "all")]
    pub image: String,
    /// Report file; JSON when the name ends in .json, key=value lines otherwise.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Which images of a document to process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    All,
    One { page: usize, index: usize },
}

impl FromStr for Selector {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Selector::All);
        }
        let parsed = s
            .split_once(':')
            .and_then(|(p, i)| Some((p.trim().parse().ok()?, i.trim().parse().ok()?)));
        match parsed {
            Some((page, index)) => Ok(Selector::One { page, index }),
            None => Err(UsageError(format!(
                "--image expects PAGE:INDEX or all, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::All => f.write_str("all"),
            Selector::One { page, index } => write!(f, "{page}:{index}"),
        }
    }
}

/// Channel choice, with `auto` resolved per image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelChoice {
    Auto,
    Fixed(ChannelPolicy),
}

impl FromStr for ChannelChoice {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(ChannelChoice::Auto);
        }
        s.parse()
            .map(ChannelChoice::Fixed)
            .map_err(|e: pdfwm::Error| UsageError(e.to_string()))
    }
}

/// Validated embedding parameters, channels still to be resolved per image.
#[derive(Debug, Clone, Copy)]
pub enum Scheme {
    Spatial(SpatialParams),
    Freq(FreqParams),
}

impl Scheme {
    /// Visible marks (high planes or bright coefficients) go into every
    /// channel, invisible ones into the least visible channel only.
    fn auto_channels(&self, channels: usize) -> ChannelPolicy {
        let visible = match self {
            Scheme::Spatial(p) => p.embed_plane >= 6,
            Scheme::Freq(p) => p.brightness >= 100.0,
        };
        if visible {
            ChannelPolicy::All
        } else {
            ChannelPolicy::least_visible(channels)
        }
    }

    pub fn for_image(
        &self,
        choice: ChannelChoice,
        img: &RasterImage,
    ) -> Result<Scheme, UsageError> {
        let policy = match choice {
            ChannelChoice::Auto => self.auto_channels(img.channels()),
            ChannelChoice::Fixed(policy) => policy,
        };
        policy
            .resolve(img)
            .map_err(|e| UsageError(format!("--channel {policy}: {e}")))?;
        Ok(match *self {
            Scheme::Spatial(p) => Scheme::Spatial(SpatialParams {
                channels: policy,
                ..p
            }),
            Scheme::Freq(p) => Scheme::Freq(FreqParams {
                channels: policy,
                ..p
            }),
        })
    }
}

pub fn parse_wavelet(s: &str) -> Result<WaveletSpec, UsageError> {
    s.parse()
        .map_err(|e: pdfwm::Error| UsageError(format!("--wavelet: {e}")))
}

pub fn parse_band(s: &str) -> Result<Band, UsageError> {
    s.parse()
        .map_err(|e: pdfwm::Error| UsageError(format!("--band: {e}")))
}

impl MarkArgs {
    pub fn scheme(&self) -> Result<(Scheme, ChannelChoice), UsageError> {
        let choice: ChannelChoice = self.channel.parse()?;
        let placeholder = ChannelPolicy::Single(0);
        let scheme = match self.mode {
            Mode::Spatial => {
                SpatialParams::new(self.plane_v, self.plane_u, placeholder).map(Scheme::Spatial)
            }
            Mode::Freq => FreqParams::new(
                parse_wavelet(&self.wavelet)?,
                parse_band(&self.band)?,
                self.fraction,
                self.brightness,
                placeholder,
            )
            .map(Scheme::Freq),
        }
        .map_err(|e| UsageError(e.to_string()))?;
        Ok((scheme, choice))
    }
}

/// Brightness values from `START:STOP:STEP`, `a,b,c` or a single number.
pub fn parse_brightness_range(s: &str) -> Result<Vec<f64>, UsageError> {
    let bad = || {
        UsageError(format!(
            "--brightness expects START:STOP:STEP or a list, got {s:?}"
        ))
    };
    let number = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + step * i as f64).collect()
    } else {
        s.split(',').map(number).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(bad());
    }
    Ok(values)
}
