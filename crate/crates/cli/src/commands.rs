use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{info, warn};
use pdfwm::freq::{detect_frequency, embed_frequency, mark_fits, region_for, FreqParams};
use pdfwm::metrics::{hamming, psnr, relative_entropy, DistortionReport};
use pdfwm::pdf::{roundtrip_check, RoundtripStatus};
use pdfwm::spatial::{
    bitplane_get, detect_spatial, embed_spatial, removal_psnr, remove_spatial, SpatialParams,
};
use pdfwm::{BinaryPattern, ChannelPolicy, RasterImage};

use crate::args::{
    parse_band, parse_brightness_range, parse_wavelet, ChannelChoice, Command, CommonArgs,
    MarkArgs, Scheme, Selector,
};
use crate::input::{load_mark, numbered_path, write_atomic, Input, Target};
use crate::report::{ImageReport, Report};
use crate::UsageError;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Embed {
            input,
            output,
            mark,
            params,
            common,
        } => embed(&input, &output, &mark, &params, &common),
        Command::Detect {
            input,
            output,
            reference,
            params,
            common,
        } => detect(&input, &output, reference.as_deref(), &params, &common),
        Command::Remove {
            input,
            output,
            reference,
            params,
            common,
        } => remove(&input, &output, reference.as_deref(), &params, &common),
        Command::Sweep {
            input,
            mark,
            output,
            wavelet,
            brightness,
            band,
            fraction,
            channel,
            image,
        } => sweep(SweepJob {
            input,
            mark,
            output,
            wavelets: wavelet,
            brightness,
            band,
            fraction,
            channel,
            image,
        }),
        Command::Roundtrip { input } => roundtrip(&input),
    }
}

fn channels_of(scheme: &Scheme) -> ChannelPolicy {
    match scheme {
        Scheme::Spatial(p) => p.channels,
        Scheme::Freq(p) => p.channels,
    }
}

fn warn_if_resampled(target: &Target, scheme: &Scheme, mark: &BinaryPattern) -> Result<()> {
    let img = &target.raster;
    match scheme {
        Scheme::Spatial(_) => {
            if mark.dims() != (img.height(), img.width()) {
                warn!(
                    "image {}: {}x{} mark resampled to the {}x{} cover",
                    target.label,
                    mark.rows(),
                    mark.cols(),
                    img.height(),
                    img.width()
                );
            }
        }
        Scheme::Freq(p) => {
            let region = region_for((img.height(), img.width()), p, mark.dims())?;
            if !mark_fits((img.height(), img.width()), p, mark.dims()) {
                warn!(
                    "image {}: {}x{} mark exceeds the {}x{} subband region; detection will be lossy",
                    target.label,
                    mark.rows(),
                    mark.cols(),
                    region.rows,
                    region.cols
                );
            } else if (region.rows, region.cols) != mark.dims() {
                info!(
                    "image {}: {}x{} mark resampled to the {}x{} subband region",
                    target.label,
                    mark.rows(),
                    mark.cols(),
                    region.rows,
                    region.cols
                );
            }
        }
    }
    Ok(())
}

fn embed(
    input: &Path,
    output: &Path,
    mark: &Path,
    params: &MarkArgs,
    common: &CommonArgs,
) -> Result<()> {
    let (scheme, choice) = params.scheme()?;
    let selector: Selector = common.image.parse()?;
    let mark = load_mark(mark)?;
    let doc = Input::load(input, selector)?;
    let mut report = Report::new("embed");
    let mut replacements = Vec::new();
    for target in &doc.targets {
        let scheme = scheme.for_image(choice, &target.raster)?;
        warn_if_resampled(target, &scheme, &mark)?;
        let stego = match &scheme {
            Scheme::Spatial(p) => embed_spatial(&target.raster, &mark, p),
            Scheme::Freq(p) => embed_frequency(&target.raster, &mark, p),
        }
        .with_context(|| format!("cannot embed into image {}", target.label))?;
        let mut entry = ImageReport::new(target);
        entry.text("channels", channels_of(&scheme).to_string());
        entry.number("mark_rows", mark.rows() as f64);
        entry.number("mark_cols", mark.cols() as f64);
        entry.distortion(
            "stego",
            &DistortionReport::for_images(&target.raster, &stego)?,
        );
        report.push(entry);
        replacements.push((target, stego));
    }
    write_atomic(output, &doc.render(&replacements)?)?;
    report.emit(common.report.as_deref())
}

fn detect(
    input: &Path,
    output: &Path,
    reference: Option<&Path>,
    params: &MarkArgs,
    common: &CommonArgs,
) -> Result<()> {
    let (scheme, choice) = params.scheme()?;
    let selector: Selector = common.image.parse()?;
    let reference = reference.map(load_mark).transpose()?;
    let doc = Input::load(input, selector)?;
    let several = doc.targets.len() > 1;
    let mut report = Report::new("detect");
    let mut files = Vec::new();
    for target in &doc.targets {
        let img = &target.raster;
        let scheme = scheme.for_image(choice, img)?;
        let found = match &scheme {
            Scheme::Spatial(p) => {
                let full = detect_spatial(img, p)?;
                match &reference {
                    Some(r) => full.resample(r.rows(), r.cols()),
                    None => full,
                }
            }
            Scheme::Freq(p) => {
                let dims = match &reference {
                    Some(r) => r.dims(),
                    None => {
                        let region = region_for((img.height(), img.width()), p, (1, 1))?;
                        (region.rows, region.cols)
                    }
                };
                detect_frequency(img, p, dims)?
            }
        };
        if found.count_ones() == 0 {
            warn!(
                "image {}: extracted mark is empty; the image may not be watermarked",
                target.label
            );
        }
        let mut entry = ImageReport::new(target);
        entry.text("channels", channels_of(&scheme).to_string());
        entry.number("mark_rows", found.rows() as f64);
        entry.number("mark_cols", found.cols() as f64);
        entry.number(
            "mark_ones",
            found.count_ones() as f64 / found.bits().len() as f64,
        );
        if let Some(r) = &reference {
            entry.distortion("mark", &DistortionReport::for_patterns(r, &found)?);
        }
        report.push(entry);
        files.push((
            numbered_path(output, target, several),
            found.to_image().encode_png()?,
        ));
    }
    for (path, bytes) in &files {
        write_atomic(path, bytes)?;
    }
    report.emit(common.report.as_deref())
}

/// Share of set bits in plane `plane` over all samples of `img`, counting
/// only the channels that `p` touches.
fn plane_share(img: &RasterImage, p: &SpatialParams) -> Result<f64> {
    let mut ones = 0usize;
    for ch in p.channels.resolve(img)? {
        ones += bitplane_get(img, p.copy_plane, ch)?.count_ones();
    }
    Ok(ones as f64 / (img.width() * img.height() * img.channels()) as f64)
}

fn remove(
    input: &Path,
    output: &Path,
    reference: Option<&Path>,
    params: &MarkArgs,
    common: &CommonArgs,
) -> Result<()> {
    let (scheme, choice) = params.scheme()?;
    if !matches!(scheme, Scheme::Spatial(_)) {
        return Err(UsageError("remove supports --mode spatial only".into()).into());
    }
    let selector: Selector = common.image.parse()?;
    let doc = Input::load(input, selector)?;
    let originals = reference.map(|r| Input::load(r, selector)).transpose()?;
    let mut report = Report::new("remove");
    let mut replacements = Vec::new();
    for target in &doc.targets {
        let scheme = scheme.for_image(choice, &target.raster)?;
        let Scheme::Spatial(p) = scheme else {
            unreachable!("checked above")
        };
        let restored = remove_spatial(&target.raster, &p)?;
        let mut entry = ImageReport::new(target);
        entry.text("channels", p.channels.to_string());
        if let Some(originals) = &originals {
            let original = originals
                .targets
                .iter()
                .find(|o| o.label == target.label)
                .with_context(|| format!("reference has no image {}", target.label))?;
            if !original.raster.same_shape(&restored) {
                anyhow::bail!("reference image {} differs in size", target.label);
            }
            entry.distortion(
                "restored",
                &DistortionReport::for_images(&original.raster, &restored)?,
            );
            entry.number(
                "expected_psnr",
                removal_psnr(p.copy_plane, plane_share(&original.raster, &p)?),
            );
        }
        report.push(entry);
        replacements.push((target, restored));
    }
    write_atomic(output, &doc.render(&replacements)?)?;
    report.emit(common.report.as_deref())
}

struct SweepJob {
    input: PathBuf,
    mark: PathBuf,
    output: Option<PathBuf>,
    wavelets: String,
    brightness: String,
    band: String,
    fraction: f64,
    channel: String,
    image: Option<String>,
}

fn sweep(job: SweepJob) -> Result<()> {
    let wavelets = job
        .wavelets
        .split(',')
        .map(|w| parse_wavelet(w.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    let brightness = parse_brightness_range(&job.brightness)?;
    let band = parse_band(&job.band)?;
    let choice: ChannelChoice = job.channel.parse()?;
    let selector = match &job.image {
        Some(s) => s.parse()?,
        None => Selector::All,
    };
    let mark = load_mark(&job.mark)?;
    let doc = Input::load(&job.input, selector)?;
    let target = &doc.targets[0];
    let cover = &target.raster;
    let mut table = String::from("a\twavelet\tham\trelent\tpsnr\n");
    for &wavelet in &wavelets {
        for &a in &brightness {
            let base = FreqParams::new(wavelet, band, job.fraction, a, ChannelPolicy::Single(0))
                .map_err(|e| UsageError(e.to_string()))?;
            let Scheme::Freq(p) = Scheme::Freq(base).for_image(choice, cover)? else {
                unreachable!("frequency scheme in, frequency scheme out")
            };
            if a == brightness[0] {
                warn_if_resampled(target, &Scheme::Freq(p), &mark)?;
            }
            let stego = embed_frequency(cover, &mark, &p)?;
            let found = detect_frequency(&stego, &p, mark.dims())?;
            table.push_str(&format!(
                "{a}\t{wavelet}\t{}\t{}\t{}\n",
                hamming(&mark, &found)?,
                relative_entropy(&mark, &found, 2)?,
                psnr(cover, &stego)?
            ));
        }
    }
    match &job.output {
        Some(path) => write_atomic(path, table.as_bytes()),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

fn roundtrip(input: &Path) -> Result<()> {
    let bytes = std::fs::read(input).with_context(|| format!("cannot read {}", input.display()))?;
    let entries =
        roundtrip_check(&bytes).with_context(|| format!("cannot check {}", input.display()))?;
    let mut failures = 0;
    for entry in &entries {
        let status = match &entry.status {
            RoundtripStatus::Pass => "pass".to_string(),
            RoundtripStatus::Skipped(why) => format!("skipped ({why})"),
            RoundtripStatus::Fail(why) => {
                failures += 1;
                format!("FAIL ({why})")
            }
        };
        println!("{}: {status}", entry.image);
    }
    println!("{} images, {failures} failed", entries.len());
    if failures > 0 {
        anyhow::bail!("{failures} image(s) changed across extract and reinsert");
    }
    Ok(())
}
