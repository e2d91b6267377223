//! Deterministic test material: document-like cover images, logo marks and
//! small PDF documents covering the layouts and image encodings the
//! converter has to handle.

use std::io::Cursor;

use flate2::write::ZlibEncoder;
use flate2::Compression;
use image::codecs::jpeg::JpegEncoder;
use image::ExtendedColorType;
use lopdf::xref::XrefType;
use lopdf::{
    dictionary, Dictionary, Document, Object, ObjectId, SaveOptions, Stream, StringFormat,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::{BinaryPattern, RasterImage};

/// A scanned-page look: white background, rows of dark glyphs, and a photo.
pub fn document_cover(
    width: usize,
    height: usize,
    channels: usize,
    seed: u64,
) -> Result<RasterImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = RasterImage::from_fn(width, height, channels, |_, _, _| 255)?;

    let photo_w = (width * rng.random_range(35..55) / 100).max(1);
    let photo_h = (height * rng.random_range(25..40) / 100).max(1);
    let photo_x = rng.random_range(0..=width - photo_w);
    let photo_y = rng.random_range(0..=height - photo_h);
    let phases: Vec<f64> = (0..channels)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    let (fx, fy) = (rng.random_range(0.02..0.08), rng.random_range(0.02..0.08));
    for r in photo_y..photo_y + photo_h {
        for c in photo_x..photo_x + photo_w {
            for (ch, phase) in phases.iter().enumerate() {
                let v = 128.0
                    + 70.0 * (c as f64 * fx + phase).sin() * (r as f64 * fy + phase / 2.0).cos()
                    + rng.random_range(-18.0..18.0);
                img.set(r, c, ch, crate::raster::quantize(v));
            }
        }
    }

    // Glyphs are two to four strokes on a 5x7 grid, drawn into an ink
    // coverage layer that is box-blurred like antialiased rendering.
    let glyphs: Vec<[u8; 7]> = (0..32)
        .map(|_| {
            let mut g = [0u8; 7];
            for _ in 0..rng.random_range(2..=4) {
                if rng.random_bool(0.5) {
                    let c = rng.random_range(0..5);
                    let (r0, r1) = (rng.random_range(0..3), rng.random_range(4..7));
                    for row in &mut g[r0..=r1] {
                        *row |= 1 << c;
                    }
                } else {
                    let r = rng.random_range(0..7);
                    let (c0, c1) = (rng.random_range(0..2), rng.random_range(3..5));
                    for c in c0..=c1 {
                        g[r] |= 1 << c;
                    }
                }
            }
            g
        })
        .collect();
    let mut coverage = vec![0.0f64; width * height];
    let in_photo = |r: usize, c: usize| {
        (photo_y.saturating_sub(2)..photo_y + photo_h + 2).contains(&r)
            && (photo_x.saturating_sub(2)..photo_x + photo_w + 2).contains(&c)
    };
    let margin = (width / 12).max(2);
    let mut y = margin;
    while y + 8 < height.saturating_sub(margin) {
        if rng.random_ratio(1, 7) {
            y += 14;
            continue;
        }
        let line_end = width.saturating_sub(margin + rng.random_range(0..width / 4 + 1));
        let mut x = margin;
        while x + 6 < line_end {
            for _ in 0..rng.random_range(2..9) {
                if x + 6 >= line_end {
                    break;
                }
                let glyph = glyphs[rng.random_range(0..glyphs.len())];
                for (gr, bits) in glyph.iter().enumerate() {
                    for gc in 0..5 {
                        let (r, c) = (y + gr, x + gc);
                        if bits >> gc & 1 == 1 && !in_photo(r, c) {
                            coverage[r * width + c] = 1.0;
                        }
                    }
                }
                x += 6;
            }
            x += 5;
        }
        y += 14;
    }
    let ink = 30.0;
    for r in 0..height {
        for c in 0..width {
            if in_photo(r, c) {
                continue;
            }
            let mut sum = 0.0;
            let mut n = 0.0;
            for rr in r.saturating_sub(1)..=(r + 1).min(height - 1) {
                for cc in c.saturating_sub(1)..=(c + 1).min(width - 1) {
                    sum += coverage[rr * width + cc];
                    n += 1.0;
                }
            }
            let t = sum / n;
            if t > 0.0 {
                let v = crate::raster::quantize(255.0 - t * (255.0 - ink) * 1.6);
                for ch in 0..channels {
                    img.set(r, c, ch, v);
                }
            }
        }
    }
    Ok(img)
}

/// Uniform random samples.
pub fn noise_cover(width: usize, height: usize, channels: usize, seed: u64) -> Result<RasterImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RasterImage::from_fn(width, height, channels, |_, _, _| rng.random())
}

/// A ring with a bar through it, plus a few seeded speckles so different
/// seeds give different marks.
pub fn logo_mark(rows: usize, cols: usize, seed: u64) -> BinaryPattern {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cy, cx) = (rows as f64 / 2.0, cols as f64 / 2.0);
    let radius = rows.min(cols) as f64 * 0.38;
    let thickness = (rows.min(cols) as f64 * 0.08).max(1.0);
    BinaryPattern::from_fn(rows, cols, |r, c| {
        let (dy, dx) = (r as f64 + 0.5 - cy, c as f64 + 0.5 - cx);
        let d = (dy * dy + dx * dx).sqrt();
        let ring = (d - radius).abs() <= thickness;
        let bar = dy.abs() <= thickness && dx.abs() <= radius;
        ring || bar || rng.random_ratio(1, 40)
    })
}

pub fn random_mark(rows: usize, cols: usize, seed: u64) -> BinaryPattern {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BinaryPattern::from_fn(rows, cols, |_, _| rng.random())
}

/// How an image's samples are stored in the fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Flate,
    /// Flate with PNG row predictors (`/Predictor 15`).
    FlatePng,
    Uncompressed,
    /// ASCIIHex over Flate.
    HexFlate,
    Dct {
        quality: u8,
    },
    /// 1-bit stencil mask; listed but not supported.
    StencilMask,
    /// DeviceCMYK samples; listed but not supported.
    Cmyk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorDecl {
    Device,
    Calibrated,
    IccBased,
}

#[derive(Debug, Clone)]
pub struct FixtureImage {
    pub image: RasterImage,
    pub encoding: Encoding,
    pub color: ColorDecl,
}

impl FixtureImage {
    pub fn new(image: RasterImage, encoding: Encoding) -> Self {
        FixtureImage {
            image,
            encoding,
            color: ColorDecl::Device,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FixturePage {
    /// Indices into [`PdfFixture::images`].
    pub images: Vec<usize>,
    /// Draw the images through a form XObject instead of directly.
    pub via_form: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    #[default]
    XrefTable,
    /// Object streams with a cross-reference stream.
    XrefStream,
}

#[derive(Debug, Clone, Default)]
pub struct PdfFixture {
    pub images: Vec<FixtureImage>,
    pub pages: Vec<FixturePage>,
    pub layout: Layout,
    /// Put the resources on the page tree root instead of the pages.
    pub inherit_resources: bool,
    pub with_id: bool,
}

fn zlib(data: &[u8]) -> Vec<u8> {
    use std::io::Write;
    let mut enc = ZlibEncoder::new(Vec::new(), Compression::best());
    enc.write_all(data).expect("writing to a Vec cannot fail");
    enc.finish().expect("writing to a Vec cannot fail")
}

/// PNG filters None, Sub and Up in rotation.
fn png_predict(img: &RasterImage) -> Vec<u8> {
    let stride = img.width() * img.channels();
    let bpp = img.channels();
    let rows: Vec<&[u8]> = img.pixels().chunks(stride).collect();
    let mut out = Vec::with_capacity(rows.len() * (stride + 1));
    for (r, row) in rows.iter().enumerate() {
        let kind = (r % 3) as u8;
        out.push(kind);
        for i in 0..stride {
            let pred = match kind {
                1 if i >= bpp => row[i - bpp],
                2 if r > 0 => rows[r - 1][i],
                _ => 0,
            };
            out.push(row[i].wrapping_sub(pred));
        }
    }
    out
}

fn hex(data: &[u8]) -> Vec<u8> {
    let mut out: Vec<u8> = data
        .chunks(32)
        .flat_map(|chunk| {
            let mut line: Vec<u8> = chunk
                .iter()
                .flat_map(|b| format!("{b:02x}").into_bytes())
                .collect();
            line.push(b'\n');
            line
        })
        .collect();
    out.push(b'>');
    out
}

fn jpeg(img: &RasterImage, quality: u8) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    let color = if img.channels() == 1 {
        ExtendedColorType::L8
    } else {
        ExtendedColorType::Rgb8
    };
    JpegEncoder::new_with_quality(&mut out, quality).encode(
        img.pixels(),
        img.width() as u32,
        img.height() as u32,
        color,
    )?;
    Ok(out.into_inner())
}

fn color_space(doc: &mut Document, channels: usize, decl: ColorDecl) -> Object {
    let device = if channels == 1 {
        "DeviceGray"
    } else {
        "DeviceRGB"
    };
    match decl {
        ColorDecl::Device => Object::Name(device.into()),
        ColorDecl::Calibrated => {
            let white = vec![Object::Real(0.9505), Object::Real(1.0), Object::Real(1.089)];
            let name = if channels == 1 { "CalGray" } else { "CalRGB" };
            Object::Array(vec![
                name.into(),
                Object::Dictionary(dictionary! { "WhitePoint" => white }),
            ])
        }
        ColorDecl::IccBased => {
            // A placeholder profile body; readers fall back to /Alternate.
            let profile = Stream::new(
                dictionary! { "N" => channels as i64, "Alternate" => device },
                b"not a real ICC profile".to_vec(),
            );
            let id = doc.add_object(profile);
            Object::Array(vec!["ICCBased".into(), Object::Reference(id)])
        }
    }
}

fn image_object(doc: &mut Document, fixture: &FixtureImage) -> Result<Stream> {
    let img = &fixture.image;
    let mut dict = dictionary! {
        "Type" => "XObject",
        "Subtype" => "Image",
        "Width" => img.width() as i64,
        "Height" => img.height() as i64,
        "BitsPerComponent" => 8,
    };
    let channels = img.channels();
    let content = match fixture.encoding {
        Encoding::Flate => {
            dict.set("Filter", "FlateDecode");
            zlib(img.pixels())
        }
        Encoding::FlatePng => {
            dict.set("Filter", "FlateDecode");
            dict.set(
                "DecodeParms",
                dictionary! {
                    "Predictor" => 15,
                    "Colors" => channels as i64,
                    "BitsPerComponent" => 8,
                    "Columns" => img.width() as i64,
                },
            );
            zlib(&png_predict(img))
        }
        Encoding::Uncompressed => img.pixels().to_vec(),
        Encoding::HexFlate => {
            dict.set(
                "Filter",
                vec![Object::from("ASCIIHexDecode"), Object::from("FlateDecode")],
            );
            hex(&zlib(img.pixels()))
        }
        Encoding::Dct { quality } => {
            dict.set("Filter", "DCTDecode");
            jpeg(img, quality)?
        }
        Encoding::StencilMask => {
            dict.remove(b"BitsPerComponent");
            dict.set("ImageMask", true);
            dict.set("BitsPerComponent", 1);
            let stride = img.width().div_ceil(8);
            let mut bits = vec![0u8; stride * img.height()];
            for r in 0..img.height() {
                for c in 0..img.width() {
                    if img.get(r, c, 0) >= 128 {
                        bits[r * stride + c / 8] |= 0x80 >> (c % 8);
                    }
                }
            }
            dict.set("Filter", "FlateDecode");
            zlib(&bits)
        }
        Encoding::Cmyk => {
            dict.set("ColorSpace", "DeviceCMYK");
            let cmyk: Vec<u8> = img
                .pixels()
                .chunks(channels)
                .flat_map(|px| {
                    let v = 255 - px[0];
                    [v, v / 2, v / 3, 0]
                })
                .collect();
            dict.set("Filter", "FlateDecode");
            zlib(&cmyk)
        }
    };
    if !dict.has(b"ColorSpace") && fixture.encoding != Encoding::StencilMask {
        dict.set("ColorSpace", color_space(doc, channels, fixture.color));
    }
    Ok(Stream::new(dict, content).with_compression(false))
}

fn draw_images(names: &[Vec<u8>], page_w: f64) -> Vec<u8> {
    let mut ops = String::from("0.2 g 36 740 200 4 re f\n");
    let size = (page_w - 72.0) / names.len().max(1) as f64;
    for (i, name) in names.iter().enumerate() {
        ops.push_str(&format!(
            "q {size:.1} 0 0 {size:.1} {:.1} 400 cm /{} Do Q\n",
            36.0 + i as f64 * size,
            String::from_utf8_lossy(name)
        ));
    }
    ops.into_bytes()
}

impl PdfFixture {
    pub fn single(image: RasterImage, encoding: Encoding) -> Self {
        PdfFixture {
            images: vec![FixtureImage::new(image, encoding)],
            pages: vec![FixturePage {
                images: vec![0],
                via_form: false,
            }],
            ..Default::default()
        }
    }

    pub fn build(&self) -> Result<Vec<u8>> {
        if self.pages.is_empty() {
            return Err(Error::InvalidParams(
                "a fixture needs at least one page".into(),
            ));
        }
        let mut doc = Document::with_version(if self.layout == Layout::XrefStream {
            "1.5"
        } else {
            "1.4"
        });
        let pages_id = doc.new_object_id();
        let mut image_ids: Vec<ObjectId> = Vec::with_capacity(self.images.len());
        for fixture in &self.images {
            let stream = image_object(&mut doc, fixture)?;
            image_ids.push(doc.add_object(stream));
        }
        let name = |i: usize| format!("Im{i}").into_bytes();
        let xobjects_for = |indices: &[usize]| {
            let mut d = Dictionary::new();
            for &i in indices {
                d.set(name(i), Object::Reference(image_ids[i]));
            }
            d
        };

        let all: Vec<usize> = (0..self.images.len()).collect();
        let mut page_ids = Vec::new();
        for (p, page) in self.pages.iter().enumerate() {
            for &i in &page.images {
                if i >= self.images.len() {
                    return Err(Error::InvalidParams(format!(
                        "page {p} refers to missing image {i}"
                    )));
                }
            }
            let names: Vec<Vec<u8>> = page.images.iter().map(|&i| name(i)).collect();
            let (content, resources) = if page.via_form {
                let form = Stream::new(
                    dictionary! {
                        "Type" => "XObject",
                        "Subtype" => "Form",
                        "BBox" => vec![0.into(), 0.into(), 612.into(), 792.into()],
                        "Resources" => dictionary! { "XObject" => xobjects_for(&page.images) },
                    },
                    draw_images(&names, 612.0),
                );
                let form_id = doc.add_object(form);
                let res = dictionary! { "XObject" => dictionary! { "Fm0" => Object::Reference(form_id) } };
                (b"q /Fm0 Do Q\n".to_vec(), res)
            } else {
                (
                    draw_images(&names, 612.0),
                    dictionary! { "XObject" => xobjects_for(&page.images) },
                )
            };
            let content_id = doc.add_object(Stream::new(Dictionary::new(), content));
            let mut page_dict = dictionary! {
                "Type" => "Page",
                "Parent" => Object::Reference(pages_id),
                "Contents" => Object::Reference(content_id),
            };
            if !self.inherit_resources {
                let res_id = doc.add_object(resources);
                page_dict.set("Resources", Object::Reference(res_id));
            }
            page_ids.push(doc.add_object(page_dict));
        }

        let mut pages = dictionary! {
            "Type" => "Pages",
            "Kids" => page_ids.iter().map(|&id| Object::Reference(id)).collect::<Vec<_>>(),
            "Count" => page_ids.len() as i64,
            "MediaBox" => vec![0.into(), 0.into(), 612.into(), 792.into()],
        };
        if self.inherit_resources {
            pages.set("Resources", dictionary! { "XObject" => xobjects_for(&all) });
        }
        doc.objects.insert(pages_id, Object::Dictionary(pages));
        let catalog_id = doc.add_object(
            dictionary! { "Type" => "Catalog", "Pages" => Object::Reference(pages_id) },
        );
        doc.trailer.set("Root", Object::Reference(catalog_id));
        let info_id = doc.add_object(dictionary! {
            "Producer" => Object::String(b"pdfwm fixtures".to_vec(), StringFormat::Literal),
        });
        doc.trailer.set("Info", Object::Reference(info_id));
        if self.with_id {
            let id = Object::String((0u8..16).collect(), StringFormat::Hexadecimal);
            doc.trailer.set("ID", vec![id.clone(), id]);
        }

        let mut out = Vec::new();
        match self.layout {
            Layout::XrefTable => {
                doc.reference_table.cross_reference_type = XrefType::CrossReferenceTable;
                doc.save_to(&mut out)?
            }
            Layout::XrefStream => doc.save_with_options(
                &mut out,
                SaveOptions::builder()
                    .use_object_streams(true)
                    .use_xref_streams(true)
                    .build(),
            )?,
        }
        Ok(out)
    }
}

fn gray(w: usize, h: usize, seed: u64) -> Result<RasterImage> {
    document_cover(w, h, 1, seed)
}

fn rgb(w: usize, h: usize, seed: u64) -> Result<RasterImage> {
    document_cover(w, h, 3, seed)
}

fn page(images: &[usize]) -> FixturePage {
    FixturePage {
        images: images.to_vec(),
        via_form: false,
    }
}

/// The fixture corpus: (file name, document bytes). Deterministic.
pub fn corpus() -> Result<Vec<(String, Vec<u8>)>> {
    use Encoding::*;
    let img = FixtureImage::new;
    let mut items: Vec<(&str, PdfFixture)> = vec![
        (
            "gray_flate_100x80",
            PdfFixture::single(gray(100, 80, 1)?, Flate),
        ),
        ("rgb_flate", PdfFixture::single(rgb(120, 90, 2)?, Flate)),
        (
            "gray_png_predictor",
            PdfFixture::single(gray(75, 50, 3)?, FlatePng),
        ),
        (
            "rgb_png_predictor",
            PdfFixture::single(rgb(64, 48, 4)?, FlatePng),
        ),
        (
            "rgb_uncompressed",
            PdfFixture::single(rgb(40, 30, 5)?, Uncompressed),
        ),
        (
            "gray_hex_flate",
            PdfFixture::single(gray(33, 21, 6)?, HexFlate),
        ),
        (
            "rgb_jpeg",
            PdfFixture::single(rgb(96, 64, 7)?, Dct { quality: 85 }),
        ),
        (
            "gray_jpeg",
            PdfFixture::single(gray(80, 80, 8)?, Dct { quality: 70 }),
        ),
        (
            "one_pixel",
            PdfFixture::single(RasterImage::new(1, 1, 1, vec![137])?, Flate),
        ),
        ("odd_size_rgb", PdfFixture::single(rgb(97, 61, 9)?, Flate)),
        ("large_rgb", PdfFixture::single(rgb(320, 240, 10)?, Flate)),
        (
            "two_pages",
            PdfFixture {
                images: vec![img(gray(50, 40, 11)?, Flate), img(rgb(40, 50, 12)?, Flate)],
                pages: vec![page(&[0]), page(&[1])],
                ..Default::default()
            },
        ),
        (
            "shared_image",
            PdfFixture {
                images: vec![img(rgb(48, 48, 13)?, Flate)],
                pages: vec![page(&[0]), page(&[0]), page(&[0])],
                ..Default::default()
            },
        ),
        (
            "form_xobject",
            PdfFixture {
                images: vec![
                    img(gray(60, 45, 14)?, Flate),
                    img(rgb(30, 30, 15)?, FlatePng),
                ],
                pages: vec![FixturePage {
                    images: vec![0, 1],
                    via_form: true,
                }],
                ..Default::default()
            },
        ),
        (
            "inherited_resources",
            PdfFixture {
                images: vec![img(gray(44, 44, 16)?, Flate), img(rgb(44, 22, 17)?, Flate)],
                pages: vec![page(&[0]), page(&[1])],
                inherit_resources: true,
                ..Default::default()
            },
        ),
        (
            "xref_stream_rgb",
            PdfFixture {
                layout: Layout::XrefStream,
                with_id: true,
                ..PdfFixture::single(rgb(72, 56, 18)?, Flate)
            },
        ),
        (
            "xref_stream_mixed",
            PdfFixture {
                images: vec![
                    img(rgb(64, 40, 19)?, Dct { quality: 90 }),
                    img(gray(40, 64, 20)?, FlatePng),
                    img(gray(25, 25, 21)?, Uncompressed),
                ],
                pages: vec![
                    page(&[0, 1]),
                    FixturePage {
                        images: vec![2],
                        via_form: true,
                    },
                ],
                layout: Layout::XrefStream,
                ..Default::default()
            },
        ),
        (
            "unsupported_mixed",
            PdfFixture {
                images: vec![
                    img(gray(32, 32, 22)?, StencilMask),
                    img(rgb(32, 24, 23)?, Cmyk),
                    img(rgb(32, 24, 24)?, Flate),
                ],
                pages: vec![page(&[0, 1, 2])],
                ..Default::default()
            },
        ),
        (
            "many_images",
            PdfFixture {
                images: (0..6)
                    .map(|i| {
                        let enc = [
                            Flate,
                            FlatePng,
                            Uncompressed,
                            Dct { quality: 80 },
                            HexFlate,
                            Flate,
                        ][i];
                        Ok(img(
                            document_cover(20 + 7 * i, 18 + 5 * i, 1 + 2 * (i % 2), 30 + i as u64)?,
                            enc,
                        ))
                    })
                    .collect::<Result<_>>()?,
                pages: vec![page(&[0, 1, 2, 3, 4, 5])],
                with_id: true,
                ..Default::default()
            },
        ),
        (
            "calibrated_colors",
            PdfFixture {
                images: vec![
                    FixtureImage {
                        color: ColorDecl::Calibrated,
                        ..img(gray(36, 28, 40)?, Flate)
                    },
                    FixtureImage {
                        color: ColorDecl::Calibrated,
                        ..img(rgb(28, 36, 41)?, Flate)
                    },
                ],
                pages: vec![page(&[0, 1])],
                ..Default::default()
            },
        ),
        (
            "icc_based",
            PdfFixture {
                images: vec![FixtureImage {
                    color: ColorDecl::IccBased,
                    ..img(rgb(50, 30, 42)?, FlatePng)
                }],
                pages: vec![page(&[0])],
                layout: Layout::XrefStream,
                ..Default::default()
            },
        ),
        (
            "no_images",
            PdfFixture {
                pages: vec![page(&[]), page(&[])],
                ..Default::default()
            },
        ),
        (
            "multipage_forms_xref_stream",
            PdfFixture {
                images: vec![
                    img(gray(52, 36, 43)?, Flate),
                    img(rgb(36, 52, 44)?, Dct { quality: 75 }),
                ],
                pages: vec![
                    FixturePage {
                        images: vec![0],
                        via_form: true,
                    },
                    page(&[1]),
                    FixturePage {
                        images: vec![0, 1],
                        via_form: true,
                    },
                ],
                layout: Layout::XrefStream,
                with_id: true,
                ..Default::default()
            },
        ),
    ];
    let mut out = Vec::with_capacity(items.len() + 1);
    for (name, fixture) in items.drain(..) {
        out.push((format!("{name}.pdf"), fixture.build()?));
    }

    // A file whose last byte is not a newline, to exercise appending.
    let mut trimmed = PdfFixture::single(gray(30, 20, 45)?, Flate).build()?;
    while matches!(trimmed.last(), Some(b'\n' | b'\r')) {
        trimmed.pop();
    }
    out.push(("no_trailing_newline.pdf".into(), trimmed));
    Ok(out)
}
