use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::warn;
use pdfwm::pdf::{PdfDocument, PdfImageRef};
use pdfwm::{BinaryPattern, RasterImage};

use crate::args::Selector;
use crate::UsageError;

/// One image selected for processing.
#[derive(Debug, Clone)]
pub struct Target {
    /// `page:index`, both 0-based.
    pub label: String,
    pub page: usize,
    pub index: usize,
    pub image_ref: Option<PdfImageRef>,
    pub raster: RasterImage,
}

/// A PDF document or a standalone image.
#[derive(Debug)]
pub enum Source {
    Pdf(Box<PdfDocument>),
    Image,
}

#[derive(Debug)]
pub struct Input {
    pub source: Source,
    pub targets: Vec<Target>,
}

fn is_pdf(bytes: &[u8]) -> bool {
    let head = &bytes[..bytes.len().min(1024)];
    head.windows(5).any(|w| w == b"%PDF-")
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

impl Input {
    pub fn load(path: &Path, selector: Selector) -> Result<Input> {
        let bytes = read(path)?;
        if !is_pdf(&bytes) {
            if !matches!(
                selector,
                Selector::All | Selector::One { page: 0, index: 0 }
            ) {
                return Err(UsageError(format!(
                    "{} is a single image; --image {selector} does not exist",
                    path.display()
                ))
                .into());
            }
            let raster = RasterImage::decode(&bytes)
                .with_context(|| format!("cannot decode {}", path.display()))?;
            return Ok(Input {
                source: Source::Image,
                targets: vec![Target {
                    label: "0:0".into(),
                    page: 0,
                    index: 0,
                    image_ref: None,
                    raster,
                }],
            });
        }
        let doc = PdfDocument::parse(bytes)
            .with_context(|| format!("cannot parse {}", path.display()))?;
        let mut targets = Vec::new();
        let mut counts = std::collections::BTreeMap::<usize, usize>::new();
        for r in doc.images()? {
            let slot = counts.entry(r.page_index).or_default();
            let (page, index) = (r.page_index, *slot);
            *slot += 1;
            let wanted = match selector {
                Selector::All => true,
                Selector::One { page: p, index: i } => p == page && i == index,
            };
            if !wanted {
                continue;
            }
            if !r.is_supported() {
                if selector == Selector::All {
                    warn!("skipping image {page}:{index} ({r}): unsupported encoding");
                    continue;
                }
                anyhow::bail!("image {page}:{index} ({r}) uses an unsupported encoding");
            }
            let raster = doc
                .extract(&r)
                .with_context(|| format!("cannot extract image {page}:{index}"))?;
            targets.push(Target {
                label: format!("{page}:{index}"),
                page,
                index,
                image_ref: Some(r),
                raster,
            });
        }
        if targets.is_empty() {
            match selector {
                Selector::All => anyhow::bail!("{} contains no supported images", path.display()),
                Selector::One { .. } => {
                    return Err(
                        UsageError(format!("{} has no image {selector}", path.display())).into(),
                    )
                }
            }
        }
        Ok(Input {
            source: Source::Pdf(Box::new(doc)),
            targets,
        })
    }

    /// Serialized output with the given images replaced.
    pub fn render(&self, replacements: &[(&Target, RasterImage)]) -> Result<Vec<u8>> {
        match &self.source {
            Source::Image => {
                let (_, img) = replacements.first().context("no image to write")?;
                Ok(img.encode_png()?)
            }
            Source::Pdf(doc) => {
                let pairs: Vec<(PdfImageRef, RasterImage)> = replacements
                    .iter()
                    .map(|(t, img)| {
                        (
                            t.image_ref.clone().expect("pdf targets carry a reference"),
                            img.clone(),
                        )
                    })
                    .collect();
                Ok(doc.replace_many(&pairs)?)
            }
        }
    }
}

pub fn load_mark(path: &Path) -> Result<BinaryPattern> {
    let img = RasterImage::decode(&read(path)?)
        .with_context(|| format!("cannot decode mark {}", path.display()))?;
    Ok(BinaryPattern::from_image(&img))
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot write to {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// `out.png` for a single target, `out-p{page}-i{index}.png` for several.
pub fn numbered_path(base: &Path, target: &Target, several: bool) -> PathBuf {
    if !several {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!(
            "{stem}-p{}-i{}.{}",
            target.page,
            target.index,
            ext.to_string_lossy()
        ),
        None => format!("{stem}-p{}-i{}", target.page, target.index),
    };
    base.with_file_name(name)
}
