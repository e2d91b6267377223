//! Listing, extracting and losslessly replacing raster images in PDF
//! documents.
//!
//! Images are found through page resources (inherited resources and nested
//! form XObjects included). Replacement never rewrites the file: the new
//! image streams are appended as an incremental update, always
//! Flate-compressed, so a JPEG image becomes lossless once it is replaced.

mod serialize;
mod update;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use flate2::write::ZlibEncoder;
use flate2::Compression;
use lopdf::{Dictionary, Document, Object, ObjectId, Stream};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::RasterImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Codec {
    /// Unfiltered or losslessly filtered samples (Flate, LZW, RunLength,
    /// ASCII encodings), with or without a predictor.
    FlateRaw,
    /// Baseline JPEG.
    DctJpeg,
    /// Anything this crate does not decode: JBIG2, JPX, CCITT, sub-byte
    /// depths, palettes, CMYK, masks.
    Other,
}

impl fmt::Display for Codec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Codec::FlateRaw => "flate-raw",
            Codec::DctJpeg => "dct-jpeg",
            Codec::Other => "other",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    Gray8,
    Rgb24,
    Other,
}

impl ColorSpace {
    pub fn channels(self) -> Option<usize> {
        match self {
            ColorSpace::Gray8 => Some(1),
            ColorSpace::Rgb24 => Some(3),
            ColorSpace::Other => None,
        }
    }
}

impl fmt::Display for ColorSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColorSpace::Gray8 => "gray8",
            ColorSpace::Rgb24 => "rgb24",
            ColorSpace::Other => "other",
        })
    }
}

/// Locates one image XObject.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PdfImageRef {
    /// 0-based index of the first page that uses the image.
    pub page_index: usize,
    pub object_id: (u32, u16),
    pub codec: Codec,
    pub width: usize,
    pub height: usize,
    pub colorspace: ColorSpace,
    pub bits_per_component: u8,
}

impl PdfImageRef {
    pub fn is_supported(&self) -> bool {
        self.codec != Codec::Other
    }
}

impl fmt::Display for PdfImageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "page {} obj {} {} {}x{} {} {} bpc={}",
            self.page_index,
            self.object_id.0,
            self.object_id.1,
            self.width,
            self.height,
            self.colorspace,
            self.codec,
            self.bits_per_component
        )
    }
}

const LOSSLESS_FILTERS: &[&[u8]] = &[
    b"FlateDecode",
    b"LZWDecode",
    b"RunLengthDecode",
    b"ASCII85Decode",
    b"ASCIIHexDecode",
];

/// A parsed document together with the bytes it was read from.
pub struct PdfDocument {
    bytes: Vec<u8>,
    doc: Document,
}

impl fmt::Debug for PdfDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdfDocument")
            .field("len", &self.bytes.len())
            .field("objects", &self.doc.objects.len())
            .finish()
    }
}

impl PdfDocument {
    pub fn parse(bytes: Vec<u8>) -> Result<Self> {
        if !bytes.starts_with(b"%PDF-") && !bytes.windows(5).take(1024).any(|w| w == b"%PDF-") {
            return Err(Error::MalformedPdf {
                offset: Some(0),
                reason: "missing %PDF- header".into(),
            });
        }
        let doc = match Document::load_mem(&bytes) {
            Ok(doc) => doc,
            Err(lopdf::Error::InvalidPassword | lopdf::Error::Decryption(_)) => {
                return Err(Error::EncryptedPdf)
            }
            Err(err) => return Err(err.into()),
        };
        if doc.trailer.has(b"Encrypt") || doc.was_encrypted() {
            return Err(Error::EncryptedPdf);
        }
        Ok(PdfDocument { bytes, doc })
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        PdfDocument::parse(std::fs::read(path)?)
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn page_count(&self) -> usize {
        self.doc.get_pages().len()
    }

    /// Every image XObject reachable from a page, ordered by
    /// (page, object id). Shared images are listed once, under their first
    /// page.
    pub fn images(&self) -> Result<Vec<PdfImageRef>> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (page_index, (_, page_id)) in self.doc.get_pages().into_iter().enumerate() {
            let mut ids = Vec::new();
            if let Some(resources) = self.page_resources(page_id)? {
                self.collect_images(resources, &mut ids, &mut HashSet::new())?;
            }
            ids.sort();
            for id in ids {
                if seen.insert(id) {
                    let stream = self.image_stream(id)?;
                    out.push(describe(&self.doc, page_index, id, stream));
                }
            }
        }
        Ok(out)
    }

    /// Resources of a page, looked up through `/Parent` when inherited.
    fn page_resources(&self, page_id: ObjectId) -> Result<Option<&Dictionary>> {
        let mut node = self.doc.get_dictionary(page_id)?;
        let mut visited = HashSet::from([page_id]);
        loop {
            if let Ok(res) = node.get(b"Resources") {
                return Ok(Some(self.resolve(res)?.as_dict()?));
            }
            match node.get(b"Parent").and_then(Object::as_reference) {
                Ok(parent) if visited.insert(parent) => node = self.doc.get_dictionary(parent)?,
                _ => return Ok(None),
            }
        }
    }

    fn resolve<'a>(&'a self, obj: &'a Object) -> Result<&'a Object> {
        Ok(self.doc.dereference(obj)?.1)
    }

    fn collect_images(
        &self,
        resources: &Dictionary,
        out: &mut Vec<ObjectId>,
        forms: &mut HashSet<ObjectId>,
    ) -> Result<()> {
        let Ok(xobjects) = resources.get(b"XObject") else {
            return Ok(());
        };
        let Ok(xobjects) = self.resolve(xobjects)?.as_dict() else {
            return Ok(());
        };
        for (_, entry) in xobjects.iter() {
            let Ok(id) = entry.as_reference() else {
                continue;
            };
            let Ok(stream) = self.doc.get_object(id).and_then(Object::as_stream) else {
                continue;
            };
            match stream.dict.get(b"Subtype").and_then(Object::as_name) {
                Ok(b"Image") => out.push(id),
                Ok(b"Form") if forms.insert(id) => {
                    if let Ok(res) = stream.dict.get(b"Resources") {
                        if let Ok(dict) = self.resolve(res)?.as_dict() {
                            self.collect_images(dict, out, forms)?;
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn image_stream(&self, id: ObjectId) -> Result<&Stream> {
        let not_image = || Error::MalformedPdf {
            offset: None,
            reason: format!("object {} {} is not an image XObject", id.0, id.1),
        };
        let stream = self
            .doc
            .get_object(id)
            .map_err(|_| not_image())?
            .as_stream()
            .map_err(|_| not_image())?;
        match stream.dict.get(b"Subtype").and_then(Object::as_name) {
            Ok(b"Image") => Ok(stream),
            _ => Err(not_image()),
        }
    }

    /// Re-describes `r` from the document, so a stale ref cannot be used
    /// to misread an object.
    fn current(&self, r: &PdfImageRef) -> Result<(PdfImageRef, &Stream)> {
        let id = r.object_id;
        let stream = self.image_stream(id)?;
        Ok((describe(&self.doc, r.page_index, id, stream), stream))
    }

    pub fn extract(&self, r: &PdfImageRef) -> Result<RasterImage> {
        let (info, stream) = self.current(r)?;
        let unsupported = |detail: String| Error::UnsupportedCodec {
            object: info.object_id.0,
            generation: info.object_id.1,
            detail,
        };
        let channels = match (info.codec, info.colorspace.channels()) {
            (Codec::Other, _) | (_, None) => {
                return Err(unsupported(unsupported_reason(&self.doc, stream)))
            }
            (_, Some(ch)) => ch,
        };
        let expected = info.width * info.height * channels;
        match info.codec {
            Codec::FlateRaw => {
                let data = stream
                    .decompressed_content_with_limit(
                        expected.saturating_mul(2).saturating_add(4096),
                    )
                    .map_err(|e| {
                        Error::Decode(format!(
                            "object {} {}: {e}",
                            info.object_id.0, info.object_id.1
                        ))
                    })?;
                if data.len() < expected {
                    return Err(Error::Decode(format!(
                        "object {} {} holds {} bytes, expected {expected}",
                        info.object_id.0,
                        info.object_id.1,
                        data.len()
                    )));
                }
                RasterImage::new(info.width, info.height, channels, data[..expected].to_vec())
            }
            Codec::DctJpeg => {
                let decoded =
                    image::load_from_memory_with_format(&stream.content, image::ImageFormat::Jpeg)?;
                if (decoded.width() as usize, decoded.height() as usize)
                    != (info.width, info.height)
                {
                    return Err(Error::Decode(format!(
                        "JPEG is {}x{} but the image dictionary says {}x{}",
                        decoded.width(),
                        decoded.height(),
                        info.width,
                        info.height
                    )));
                }
                let pixels = if channels == 1 {
                    decoded.into_luma8().into_raw()
                } else {
                    decoded.into_rgb8().into_raw()
                };
                RasterImage::new(info.width, info.height, channels, pixels)
            }
            Codec::Other => unreachable!("rejected above"),
        }
    }

    /// Writes `img` over the image `r` and returns the updated document.
    pub fn replace(&self, r: &PdfImageRef, img: &RasterImage) -> Result<Vec<u8>> {
        self.replace_many(&[(r.clone(), img.clone())])
    }

    /// Replaces several images in one incremental update.
    pub fn replace_many(&self, replacements: &[(PdfImageRef, RasterImage)]) -> Result<Vec<u8>> {
        let mut objects: BTreeMap<ObjectId, Object> = BTreeMap::new();
        for (r, img) in replacements {
            let (info, stream) = self.current(r)?;
            let Some(channels) = info.colorspace.channels().filter(|_| info.is_supported()) else {
                return Err(Error::UnsupportedCodec {
                    object: info.object_id.0,
                    generation: info.object_id.1,
                    detail: unsupported_reason(&self.doc, stream),
                });
            };
            if (img.width(), img.height(), img.channels()) != (info.width, info.height, channels) {
                return Err(Error::dims(
                    format!("{}x{}x{channels}", info.width, info.height),
                    format!("{}x{}x{}", img.width(), img.height(), img.channels()),
                ));
            }
            objects.insert(
                info.object_id,
                Object::Stream(flate_stream(&stream.dict, img)?),
            );
        }
        if objects.is_empty() {
            return Ok(self.bytes.clone());
        }
        let objects: Vec<(ObjectId, Object)> = objects.into_iter().collect();
        update::append_update(&self.bytes, &self.doc.trailer, &objects)
    }
}

fn flate_stream(original: &Dictionary, img: &RasterImage) -> Result<Stream> {
    let mut dict = original.clone();
    for key in [
        b"Filter".as_slice(),
        b"DecodeParms",
        b"Length",
        b"DL",
        b"F",
        b"FFilter",
        b"FDecodeParms",
    ] {
        dict.remove(key);
    }
    dict.set("BitsPerComponent", 8);
    dict.set("Filter", "FlateDecode");
    let mut encoder = ZlibEncoder::new(Vec::new(), Compression::default());
    encoder.write_all(img.pixels())?;
    let stream = Stream::new(dict, encoder.finish()?);
    Ok(stream.with_compression(false))
}

fn filters(stream: &Stream) -> Vec<Vec<u8>> {
    match stream.dict.get(b"Filter") {
        Ok(Object::Name(name)) => vec![name.clone()],
        Ok(Object::Array(items)) => items
            .iter()
            .map(|o| o.as_name().map(<[u8]>::to_vec).unwrap_or_default())
            .collect(),
        _ => Vec::new(),
    }
}

fn colorspace(doc: &Document, dict: &Dictionary) -> ColorSpace {
    let Ok(cs) = dict
        .get(b"ColorSpace")
        .and_then(|o| doc.dereference(o))
        .map(|(_, o)| o)
    else {
        return ColorSpace::Other;
    };
    match cs {
        Object::Name(name) => match name.as_slice() {
            b"DeviceGray" | b"CalGray" | b"G" => ColorSpace::Gray8,
            b"DeviceRGB" | b"CalRGB" | b"RGB" => ColorSpace::Rgb24,
            _ => ColorSpace::Other,
        },
        Object::Array(items) => match items.first().and_then(|o| o.as_name().ok()) {
            Some(b"CalGray") => ColorSpace::Gray8,
            Some(b"CalRGB") => ColorSpace::Rgb24,
            Some(b"ICCBased") => {
                let n = items
                    .get(1)
                    .and_then(|o| doc.dereference(o).ok())
                    .and_then(|(_, o)| o.as_stream().ok())
                    .and_then(|s| s.dict.get(b"N").and_then(Object::as_i64).ok());
                match n {
                    Some(1) => ColorSpace::Gray8,
                    Some(3) => ColorSpace::Rgb24,
                    _ => ColorSpace::Other,
                }
            }
            _ => ColorSpace::Other,
        },
        _ => ColorSpace::Other,
    }
}

fn dict_usize(dict: &Dictionary, key: &[u8]) -> usize {
    dict.get(key)
        .and_then(Object::as_i64)
        .ok()
        .and_then(|v| usize::try_from(v).ok())
        .unwrap_or(0)
}

fn describe(doc: &Document, page_index: usize, id: ObjectId, stream: &Stream) -> PdfImageRef {
    let dict = &stream.dict;
    let colorspace = colorspace(doc, dict);
    let bits_per_component = dict
        .get(b"BitsPerComponent")
        .and_then(Object::as_i64)
        .ok()
        .and_then(|v| u8::try_from(v).ok())
        .unwrap_or(0);
    let width = dict_usize(dict, b"Width");
    let height = dict_usize(dict, b"Height");
    let is_mask = dict
        .get(b"ImageMask")
        .and_then(Object::as_bool)
        .unwrap_or(false);
    let filters = filters(stream);
    let codec = if is_mask || colorspace == ColorSpace::Other || width == 0 || height == 0 {
        Codec::Other
    } else if filters.len() == 1 && filters[0] == b"DCTDecode" {
        Codec::DctJpeg
    } else if bits_per_component == 8
        && filters
            .iter()
            .all(|f| LOSSLESS_FILTERS.contains(&f.as_slice()))
    {
        Codec::FlateRaw
    } else {
        Codec::Other
    };
    PdfImageRef {
        page_index,
        object_id: id,
        codec,
        width,
        height,
        colorspace,
        bits_per_component,
    }
}

fn unsupported_reason(doc: &Document, stream: &Stream) -> String {
    let dict = &stream.dict;
    if dict
        .get(b"ImageMask")
        .and_then(Object::as_bool)
        .unwrap_or(false)
    {
        return "stencil mask".into();
    }
    if colorspace(doc, dict) == ColorSpace::Other {
        return "color space is not gray or RGB".into();
    }
    let filters = filters(stream);
    if let Some(f) = filters
        .iter()
        .find(|f| !LOSSLESS_FILTERS.contains(&f.as_slice()) && f.as_slice() != b"DCTDecode")
    {
        return format!("filter {}", String::from_utf8_lossy(f));
    }
    if filters.iter().any(|f| f == b"DCTDecode") {
        return "DCTDecode combined with other filters".into();
    }
    let bpc = dict
        .get(b"BitsPerComponent")
        .and_then(Object::as_i64)
        .unwrap_or(0);
    if bpc != 8 {
        return format!("{bpc} bits per component");
    }
    "image has no pixels".into()
}

pub fn list_images(pdf: &[u8]) -> Result<Vec<PdfImageRef>> {
    PdfDocument::parse(pdf.to_vec())?.images()
}

pub fn extract_image(pdf: &[u8], r: &PdfImageRef) -> Result<RasterImage> {
    PdfDocument::parse(pdf.to_vec())?.extract(r)
}

pub fn replace_image(pdf: &[u8], r: &PdfImageRef, img: &RasterImage) -> Result<Vec<u8>> {
    PdfDocument::parse(pdf.to_vec())?.replace(r, img)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "lowercase")]
pub enum RoundtripStatus {
    Pass,
    Fail(String),
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundtripEntry {
    pub image: PdfImageRef,
    #[serde(flatten)]
    pub status: RoundtripStatus,
}

/// For each image: extract `a`, write it back, extract `b`, write `b` back,
/// extract `c`; passes when `a`, `b` and `c` are byte-identical and the
/// rewritten documents still list the same images.
pub fn roundtrip_check(pdf: &[u8]) -> Result<Vec<RoundtripEntry>> {
    let doc = PdfDocument::parse(pdf.to_vec())?;
    let images = doc.images()?;
    let mut report = Vec::with_capacity(images.len());
    for image in &images {
        let status = if image.is_supported() {
            roundtrip_one(&doc, image, images.len())?
        } else {
            let stream = doc.image_stream(image.object_id)?;
            RoundtripStatus::Skipped(unsupported_reason(&doc.doc, stream))
        };
        report.push(RoundtripEntry {
            image: image.clone(),
            status,
        });
    }
    Ok(report)
}

fn roundtrip_one(doc: &PdfDocument, image: &PdfImageRef, count: usize) -> Result<RoundtripStatus> {
    let a = doc.extract(image)?;
    let first = PdfDocument::parse(doc.replace(image, &a)?)?;
    let b = first.extract(image)?;
    let second = PdfDocument::parse(first.replace(image, &b)?)?;
    let c = second.extract(image)?;
    for (name, d) in [("first", &first), ("second", &second)] {
        let n = d.images()?.len();
        if n != count {
            return Ok(RoundtripStatus::Fail(format!(
                "{name} rewrite lists {n} images instead of {count}"
            )));
        }
    }
    let differing = |x: &RasterImage, y: &RasterImage| {
        x.pixels()
            .iter()
            .zip(y.pixels())
            .filter(|(p, q)| p != q)
            .count()
    };
    if a != b {
        return Ok(RoundtripStatus::Fail(format!(
            "a != b in {} samples",
            differing(&a, &b)
        )));
    }
    if b != c {
        return Ok(RoundtripStatus::Fail(format!(
            "b != c in {} samples",
            differing(&b, &c)
        )));
    }
    Ok(RoundtripStatus::Pass)
}
