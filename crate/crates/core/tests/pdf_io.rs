use std::path::PathBuf;

use lopdf::{dictionary, Document};
use pdfwm::pdf::{
    extract_image, list_images, replace_image, roundtrip_check, Codec, ColorSpace, PdfDocument,
    RoundtripStatus,
};
use pdfwm::synth::{
    document_cover, noise_cover, Encoding, FixtureImage, FixturePage, Layout, PdfFixture,
};
use pdfwm::{Error, RasterImage};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

fn committed_corpus() -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "pdf"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn fixture(name: &str) -> Vec<u8> {
    std::fs::read(corpus_dir().join(name)).unwrap()
}

#[test]
fn committed_corpus_matches_generator() {
    let generated = pdfwm::synth::corpus().unwrap();
    let committed = committed_corpus();
    assert!(committed.len() >= 20);
    let mut generated_sorted = generated.clone();
    generated_sorted.sort_by(|a, b| a.0.cmp(&b.0));
    assert_eq!(
        committed.iter().map(|c| &c.0).collect::<Vec<_>>(),
        generated_sorted.iter().map(|g| &g.0).collect::<Vec<_>>()
    );
    for ((name, a), (_, b)) in committed.iter().zip(&generated_sorted) {
        assert!(
            a == b,
            "{name} differs from the generator; rerun the gen_corpus example"
        );
    }
}

#[test]
fn single_gray_image() {
    let pdf = fixture("gray_flate_100x80.pdf");
    let images = list_images(&pdf).unwrap();
    assert_eq!(images.len(), 1);
    let r = &images[0];
    assert_eq!((r.width, r.height), (100, 80));
    assert_eq!(r.codec, Codec::FlateRaw);
    assert_eq!(r.colorspace, ColorSpace::Gray8);
    assert_eq!(r.bits_per_component, 8);
    assert_eq!(r.page_index, 0);
    let expected = document_cover(100, 80, 1, 1).unwrap();
    assert_eq!(extract_image(&pdf, r).unwrap(), expected);
}

#[test]
fn extraction_is_exact_for_lossless_encodings() {
    for (name, w, h, ch, seed) in [
        ("rgb_flate.pdf", 120, 90, 3, 2),
        ("gray_png_predictor.pdf", 75, 50, 1, 3),
        ("rgb_png_predictor.pdf", 64, 48, 3, 4),
        ("rgb_uncompressed.pdf", 40, 30, 3, 5),
        ("gray_hex_flate.pdf", 33, 21, 1, 6),
        ("odd_size_rgb.pdf", 97, 61, 3, 9),
    ] {
        let pdf = fixture(name);
        let images = list_images(&pdf).unwrap();
        assert_eq!(images.len(), 1, "{name}");
        let expected = document_cover(w, h, ch, seed).unwrap();
        assert_eq!(extract_image(&pdf, &images[0]).unwrap(), expected, "{name}");
    }
}

#[test]
fn one_pixel_image() {
    let pdf = fixture("one_pixel.pdf");
    let images = list_images(&pdf).unwrap();
    assert_eq!(extract_image(&pdf, &images[0]).unwrap().pixels(), &[137]);
}

#[test]
fn empty_document() {
    let pdf = fixture("no_images.pdf");
    assert!(list_images(&pdf).unwrap().is_empty());
    assert!(roundtrip_check(&pdf).unwrap().is_empty());
}

#[test]
fn pages_and_sharing() {
    let images = list_images(&fixture("two_pages.pdf")).unwrap();
    assert_eq!(
        images.iter().map(|r| r.page_index).collect::<Vec<_>>(),
        vec![0, 1]
    );
    assert_eq!(images[0].colorspace, ColorSpace::Gray8);
    assert_eq!(images[1].colorspace, ColorSpace::Rgb24);

    let shared = list_images(&fixture("shared_image.pdf")).unwrap();
    assert_eq!(shared.len(), 1);
    assert_eq!(shared[0].page_index, 0);

    let inherited = list_images(&fixture("inherited_resources.pdf")).unwrap();
    assert_eq!(inherited.len(), 2);
    let form = list_images(&fixture("form_xobject.pdf")).unwrap();
    assert_eq!(form.len(), 2);
    assert!(form[0].object_id < form[1].object_id);
}

#[test]
fn listing_is_ordered_by_page_then_object() {
    for (name, pdf) in committed_corpus() {
        let images = list_images(&pdf).unwrap();
        let keys: Vec<_> = images.iter().map(|r| (r.page_index, r.object_id)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted, "{name}");
        assert_eq!(list_images(&pdf).unwrap(), images, "{name}");
    }
}

#[test]
fn jpeg_images_decode_close_to_source() {
    let pdf = fixture("rgb_jpeg.pdf");
    let images = list_images(&pdf).unwrap();
    assert_eq!(images[0].codec, Codec::DctJpeg);
    let got = extract_image(&pdf, &images[0]).unwrap();
    let source = document_cover(96, 64, 3, 7).unwrap();
    assert!(got.same_shape(&source));
    assert!(pdfwm::metrics::psnr(&got, &source).unwrap() > 25.0);
}

#[test]
fn unsupported_images_are_listed_and_skipped() {
    let pdf = fixture("unsupported_mixed.pdf");
    let images = list_images(&pdf).unwrap();
    assert_eq!(
        images.iter().map(|r| r.codec).collect::<Vec<_>>(),
        vec![Codec::Other, Codec::Other, Codec::FlateRaw]
    );
    assert!(matches!(
        extract_image(&pdf, &images[0]),
        Err(Error::UnsupportedCodec { .. })
    ));
    assert!(matches!(
        extract_image(&pdf, &images[1]),
        Err(Error::UnsupportedCodec { .. })
    ));
    let img = RasterImage::new(32, 32, 1, vec![0; 1024]).unwrap();
    assert!(matches!(
        replace_image(&pdf, &images[0], &img),
        Err(Error::UnsupportedCodec { .. })
    ));
    let report = roundtrip_check(&pdf).unwrap();
    assert!(matches!(report[0].status, RoundtripStatus::Skipped(_)));
    assert!(matches!(report[1].status, RoundtripStatus::Skipped(_)));
    assert_eq!(report[2].status, RoundtripStatus::Pass);
}

#[test]
fn replacement_is_appended_and_local() {
    for name in [
        "two_pages.pdf",
        "xref_stream_mixed.pdf",
        "no_trailing_newline.pdf",
        "many_images.pdf",
    ] {
        let pdf = fixture(name);
        let images = list_images(&pdf).unwrap();
        let target = &images[0];
        let (w, h) = (target.width, target.height);
        let ch = target.colorspace.channels().unwrap();
        let new = noise_cover(w, h, ch, 99).unwrap();
        let updated = replace_image(&pdf, target, &new).unwrap();

        let trimmed_len = pdf.len();
        assert_eq!(
            &updated[..trimmed_len],
            &pdf[..],
            "{name}: original bytes must be kept"
        );
        assert_eq!(extract_image(&updated, target).unwrap(), new, "{name}");

        let after = list_images(&updated).unwrap();
        assert_eq!(after.len(), images.len(), "{name}");
        assert_eq!(after[0].codec, Codec::FlateRaw);
        for (before, after) in images.iter().zip(&after).skip(1) {
            assert_eq!(before, after, "{name}");
            if before.is_supported() {
                assert_eq!(
                    extract_image(&pdf, before).unwrap(),
                    extract_image(&updated, after).unwrap()
                );
            }
        }
        let old = Document::load_mem(&pdf).unwrap();
        let new_doc = Document::load_mem(&updated).unwrap();
        for (id, obj) in &old.objects {
            if *id != target.object_id && !matches!(obj.type_name(), Ok(b"XRef")) {
                assert_eq!(
                    Some(obj),
                    new_doc.objects.get(id),
                    "{name}: object {id:?} changed"
                );
            }
        }
    }
}

#[test]
fn jpeg_becomes_flate_and_stays_stable() {
    let pdf = fixture("rgb_jpeg.pdf");
    let r = list_images(&pdf).unwrap().remove(0);
    let a = extract_image(&pdf, &r).unwrap();
    let mut marked = a.clone();
    marked.set(0, 0, 2, marked.get(0, 0, 2) ^ 1);
    let once = replace_image(&pdf, &r, &marked).unwrap();
    let r1 = list_images(&once).unwrap().remove(0);
    assert_eq!(r1.codec, Codec::FlateRaw);
    assert_eq!((r1.width, r1.height), (r.width, r.height));
    let b = extract_image(&once, &r1).unwrap();
    assert_eq!(b, marked);
    let mut doc = once;
    for _ in 0..3 {
        let img = extract_image(&doc, &r1).unwrap();
        doc = replace_image(&doc, &r1, &img).unwrap();
        assert_eq!(extract_image(&doc, &r1).unwrap(), marked);
    }
}

#[test]
fn replacing_several_images_at_once() {
    let pdf = fixture("many_images.pdf");
    let doc = PdfDocument::parse(pdf.clone()).unwrap();
    let images = doc.images().unwrap();
    let replacements: Vec<_> = images
        .iter()
        .map(|r| {
            let img = noise_cover(
                r.width,
                r.height,
                r.colorspace.channels().unwrap(),
                r.object_id.0 as u64,
            )
            .unwrap();
            (r.clone(), img)
        })
        .collect();
    let updated = PdfDocument::parse(doc.replace_many(&replacements).unwrap()).unwrap();
    for (r, img) in &replacements {
        assert_eq!(&updated.extract(r).unwrap(), img);
    }
}

#[test]
fn dimension_changes_are_rejected() {
    let pdf = fixture("rgb_flate.pdf");
    let r = list_images(&pdf).unwrap().remove(0);
    for img in [
        noise_cover(121, 90, 3, 1).unwrap(),
        noise_cover(120, 90, 1, 1).unwrap(),
    ] {
        assert!(matches!(
            replace_image(&pdf, &r, &img),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}

#[test]
fn malformed_input_is_reported() {
    assert!(matches!(
        list_images(b"hello world"),
        Err(Error::MalformedPdf { .. })
    ));
    let mut pdf = fixture("rgb_flate.pdf");
    pdf.truncate(pdf.len() / 3);
    match list_images(&pdf) {
        Err(Error::MalformedPdf { .. }) => {}
        Ok(images) => assert!(images.is_empty() || images.iter().all(|r| r.width > 0)),
        Err(other) => panic!("unexpected error {other}"),
    }
}

#[test]
fn encrypted_documents_are_rejected() {
    let mut doc = Document::load_mem(&fixture("rgb_flate.pdf")).unwrap();
    let enc = doc.add_object(dictionary! {
        "Filter" => "Standard",
        "V" => 1,
        "R" => 2,
        "O" => lopdf::Object::String(vec![0; 32], lopdf::StringFormat::Hexadecimal),
        "U" => lopdf::Object::String(vec![0; 32], lopdf::StringFormat::Hexadecimal),
        "P" => -4,
    });
    doc.trailer.set("Encrypt", lopdf::Object::Reference(enc));
    doc.trailer.set(
        "ID",
        vec![
            lopdf::Object::String(vec![1; 16], lopdf::StringFormat::Hexadecimal),
            lopdf::Object::String(vec![1; 16], lopdf::StringFormat::Hexadecimal),
        ],
    );
    let mut bytes = Vec::new();
    doc.save_to(&mut bytes).unwrap();
    assert!(matches!(list_images(&bytes), Err(Error::EncryptedPdf)));
}

#[test]
fn full_corpus_roundtrip() {
    for (name, pdf) in committed_corpus() {
        for entry in roundtrip_check(&pdf).unwrap() {
            assert!(
                matches!(
                    entry.status,
                    RoundtripStatus::Pass | RoundtripStatus::Skipped(_)
                ),
                "{name}: {} {:?}",
                entry.image,
                entry.status
            );
        }
    }
}

#[test]
fn xref_stream_update_chains_previous_section() {
    let pdf = fixture("xref_stream_rgb.pdf");
    let r = list_images(&pdf).unwrap().remove(0);
    let img = noise_cover(r.width, r.height, 3, 5).unwrap();
    let updated = replace_image(&pdf, &r, &img).unwrap();
    let tail = String::from_utf8_lossy(&updated[pdf.len()..]).into_owned();
    assert!(tail.contains("/Type /XRef"), "{tail}");
    assert!(tail.contains("/Prev"));
    assert!(!tail.contains("\nxref\n"));
    let doc = Document::load_mem(&updated).unwrap();
    assert!(doc.trailer.get(b"ID").is_ok());

    let pdf = fixture("two_pages.pdf");
    let r = list_images(&pdf).unwrap().remove(0);
    let img = noise_cover(r.width, r.height, 1, 5).unwrap();
    let updated = replace_image(&pdf, &r, &img).unwrap();
    let tail = String::from_utf8_lossy(&updated[pdf.len()..]).into_owned();
    assert!(tail.contains("xref\n0 1\n0000000000 65535 f\r\n"), "{tail}");
    assert!(tail.contains("trailer\n"));
}

#[test]
fn builder_rejects_bad_fixtures() {
    assert!(PdfFixture::default().build().is_err());
    let bad = PdfFixture {
        images: vec![],
        pages: vec![FixturePage {
            images: vec![3],
            via_form: false,
        }],
        layout: Layout::XrefTable,
        ..Default::default()
    };
    assert!(bad.build().is_err());
    let one = PdfFixture {
        images: vec![FixtureImage::new(
            noise_cover(3, 2, 1, 0).unwrap(),
            Encoding::Flate,
        )],
        pages: vec![FixturePage {
            images: vec![0],
            via_form: false,
        }],
        ..Default::default()
    };
    assert_eq!(one.build().unwrap(), one.build().unwrap());
}
