use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pdfwm::spatial::{duplicate_plane, SpatialParams};
use pdfwm::synth::{logo_mark, noise_cover};
use pdfwm::{BinaryPattern, ChannelPolicy, RasterImage};
use serde_json::Value;
use tempfile::TempDir;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/corpus")
        .join(name)
}

fn pdfwm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdfwm"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Self {
        Work {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }

    fn mark(&self, name: &str, mark: &BinaryPattern) -> String {
        let path = self.path(name);
        std::fs::write(&path, mark.to_image().encode_png().unwrap()).unwrap();
        path
    }

    fn image(&self, name: &str, img: &RasterImage) -> String {
        let path = self.path(name);
        std::fs::write(&path, img.encode_png().unwrap()).unwrap();
        path
    }

    fn files(&self) -> Vec<String> {
        let mut names: Vec<String> = std::fs::read_dir(self.dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    }
}

fn field(report: &str, key: &str) -> f64 {
    let line = report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {report}"));
    if line == "inf" {
        f64::INFINITY
    } else {
        line.parse().unwrap()
    }
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&pdfwm(&["--help"])), 0);
    assert_eq!(code(&pdfwm(&["embed", "--help"])), 0);
    assert_eq!(code(&pdfwm(&[])), 1);
    assert_eq!(code(&pdfwm(&["bogus"])), 1);
    assert_eq!(
        code(&pdfwm(&[
            "embed", "in.pdf", "-o", "x.pdf", "--mark", "m.png", "--mode", "dct"
        ])),
        1
    );
    assert_eq!(
        code(&pdfwm(&[
            "sweep",
            "in.pdf",
            "--mark",
            "m.png",
            "--brightness",
            "300:20:20"
        ])),
        1
    );
}

#[test]
fn invalid_parameters_write_nothing() {
    let w = Work::new();
    let mark = w.mark("mark.png", &logo_mark(16, 16, 1));
    let input = corpus("gray_flate_100x80.pdf");
    let out = w.path("out.pdf");
    let cases: &[&[&str]] = &[
        &["--plane-v", "2", "--plane-u", "3"],
        &["--plane-v", "9", "--plane-u", "1"],
        &["--mode", "freq", "--wavelet", "db99"],
        &["--mode", "freq", "--fraction", "1.5"],
        &["--mode", "freq", "--brightness", "-4"],
        &["--mode", "freq", "--band", "xx"],
        &["--channel", "b"],
        &["--image", "0"],
        &["--image", "3:0"],
    ];
    for extra in cases {
        let mut args = vec![
            "embed",
            input.to_str().unwrap(),
            "-o",
            &out,
            "--mark",
            &mark,
        ];
        args.extend_from_slice(extra);
        let result = pdfwm(&args);
        assert_eq!(code(&result), 1, "{extra:?}: {}", stderr(&result));
        assert!(!Path::new(&out).exists(), "{extra:?}");
    }
}

#[test]
fn processing_errors_leave_existing_output_untouched() {
    let w = Work::new();
    let mark = w.mark("mark.png", &logo_mark(16, 16, 1));
    let out = w.path("out.pdf");
    std::fs::write(&out, b"previous").unwrap();
    let missing = w.path("missing.pdf");
    let garbage = w.path("garbage.pdf");
    std::fs::write(&garbage, b"%PDF-1.4\nnot really\n").unwrap();
    let empty = corpus("no_images.pdf");
    for input in [missing.as_str(), garbage.as_str(), empty.to_str().unwrap()] {
        let result = pdfwm(&["embed", input, "-o", &out, "--mark", &mark]);
        assert_eq!(code(&result), 2, "{input}: {}", stderr(&result));
        assert!(stderr(&result).starts_with("pdfwm: "));
    }
    assert_eq!(std::fs::read(&out).unwrap(), b"previous");
    assert_eq!(w.files(), vec!["garbage.pdf", "mark.png", "out.pdf"]);
}

#[test]
fn spatial_embed_then_detect_recovers_the_mark() {
    let w = Work::new();
    let mark = logo_mark(40, 50, 3);
    let mark_path = w.mark("mark.png", &mark);
    let input = corpus("rgb_flate.pdf");
    let stego = w.path("stego.pdf");
    let embed = pdfwm(&[
        "embed",
        input.to_str().unwrap(),
        "-o",
        &stego,
        "--mark",
        &mark_path,
    ]);
    assert_eq!(code(&embed), 0, "{}", stderr(&embed));
    let report = stdout(&embed);
    assert!(report.contains("channels=2\n"), "{report}");
    assert!(field(&report, "stego_psnr") > 40.0);

    let found = w.path("found.png");
    let detect = pdfwm(&["detect", &stego, "-o", &found, "--reference", &mark_path]);
    assert_eq!(code(&detect), 0, "{}", stderr(&detect));
    assert_eq!(field(&stdout(&detect), "mark_ham"), 0.0);
    let written = BinaryPattern::from_image(&RasterImage::load(&found).unwrap());
    assert_eq!(written, mark);
}

#[test]
fn mismatched_mark_is_resampled_with_a_warning() {
    let w = Work::new();
    let mark = w.mark("mark.png", &logo_mark(16, 16, 3));
    let input = corpus("gray_flate_100x80.pdf");
    let result = pdfwm(&[
        "embed",
        input.to_str().unwrap(),
        "-o",
        &w.path("s.pdf"),
        "--mark",
        &mark,
    ]);
    assert_eq!(code(&result), 0);
    assert!(stderr(&result).contains("resampled"), "{}", stderr(&result));
}

#[test]
fn frequency_brightness_lowers_psnr() {
    let w = Work::new();
    let mark_bits = logo_mark(16, 16, 4);
    let mark = w.mark("mark.png", &mark_bits);
    let input = corpus("large_rgb.pdf");
    let run = |a: &str| {
        let out = w.path(&format!("a{a}.pdf"));
        let result = pdfwm(&[
            "embed",
            input.to_str().unwrap(),
            "-o",
            &out,
            "--mark",
            &mark,
            "--mode",
            "freq",
            "--wavelet",
            "db1",
            "--brightness",
            a,
        ]);
        assert_eq!(code(&result), 0, "{}", stderr(&result));
        (out, field(&stdout(&result), "stego_psnr"))
    };
    let (low_out, low) = run("50");
    let (_, high) = run("150");
    assert!(high + 5.0 < low, "a=50 {low} dB, a=150 {high} dB");

    let detect = pdfwm(&[
        "detect",
        &low_out,
        "-o",
        &w.path("m.png"),
        "--mode",
        "freq",
        "--wavelet",
        "db1",
        "--brightness",
        "50",
        "--reference",
        &mark,
    ]);
    assert_eq!(code(&detect), 0, "{}", stderr(&detect));
    assert!(field(&stdout(&detect), "mark_ham") < 0.05);
}

#[test]
fn clean_duplicated_cover_detects_an_empty_mark() {
    let w = Work::new();
    let cover = noise_cover(40, 30, 1, 2).unwrap();
    let dup = duplicate_plane(&cover, &SpatialParams::invisible(ChannelPolicy::Single(0))).unwrap();
    let input = w.image("dup.png", &dup);
    let out = w.path("m.png");
    let result = pdfwm(&["detect", &input, "-o", &out]);
    assert_eq!(code(&result), 0);
    assert!(stderr(&result).contains("may not be watermarked"));
    let found = BinaryPattern::from_image(&RasterImage::load(&out).unwrap());
    assert_eq!(found.dims(), (30, 40));
    assert_eq!(found.count_ones(), 0);
}

#[test]
fn remove_matches_the_analytic_psnr() {
    let w = Work::new();
    let mark = w.mark("mark.png", &logo_mark(80, 100, 5));
    let original = corpus("gray_flate_100x80.pdf");
    let original = original.to_str().unwrap();
    let stego = w.path("stego.pdf");
    let flags = ["--plane-v", "7", "--plane-u", "2"];
    let mut args = vec!["embed", original, "-o", &stego, "--mark", &mark];
    args.extend_from_slice(&flags);
    assert_eq!(code(&pdfwm(&args)), 0);

    let restored = w.path("restored.pdf");
    let report = w.path("remove.json");
    let mut args = vec![
        "remove",
        &stego,
        "-o",
        &restored,
        "--reference",
        original,
        "--report",
        &report,
    ];
    args.extend_from_slice(&flags);
    let result = pdfwm(&args);
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let entry = &json["images"][0];
    assert_eq!(json["command"], "remove");
    let measured = entry["restored_psnr"].as_f64().unwrap();
    let expected = entry["expected_psnr"].as_f64().unwrap();
    assert!(
        (measured - expected).abs() < 0.01,
        "{measured} vs {expected}"
    );

    let result = pdfwm(&["remove", &stego, "-o", &w.path("x.pdf"), "--mode", "freq"]);
    assert_eq!(code(&result), 1);
}

#[test]
fn outputs_are_deterministic() {
    let w = Work::new();
    let mark = w.mark("mark.png", &logo_mark(20, 20, 6));
    let input = corpus("two_pages.pdf");
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = w.path(&format!("out{run}.pdf"));
        let report = w.path(&format!("r{run}.txt"));
        let result = pdfwm(&[
            "embed",
            input.to_str().unwrap(),
            "-o",
            &out,
            "--mark",
            &mark,
            "--report",
            &report,
            "--mode",
            "freq",
        ]);
        assert_eq!(code(&result), 0, "{}", stderr(&result));
        assert!(stdout(&result).is_empty());
        outputs.push((
            std::fs::read(&out).unwrap(),
            std::fs::read(&report).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let report = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert!(report.starts_with("command=embed\n"));
    assert!(report.contains("[image 0:0]") && report.contains("[image 1:0]"));
}

#[test]
fn detect_numbers_outputs_for_several_images() {
    let w = Work::new();
    let mark = w.mark("mark.png", &logo_mark(8, 8, 7));
    let input = corpus("two_pages.pdf");
    let stego = w.path("s.pdf");
    assert_eq!(
        code(&pdfwm(&[
            "embed",
            input.to_str().unwrap(),
            "-o",
            &stego,
            "--mark",
            &mark
        ])),
        0
    );
    assert_eq!(code(&pdfwm(&["detect", &stego, "-o", &w.path("m.png")])), 0);
    assert_eq!(
        code(&pdfwm(&[
            "detect",
            &stego,
            "-o",
            &w.path("one.png"),
            "--image",
            "1:0"
        ])),
        0
    );
    assert_eq!(
        w.files(),
        vec!["m-p0-i0.png", "m-p1-i0.png", "mark.png", "one.png", "s.pdf"]
    );
}

#[test]
fn sweep_prints_one_row_per_point() {
    let w = Work::new();
    let mark = w.mark("mark.png", &logo_mark(16, 16, 8));
    let input = corpus("large_rgb.pdf");
    let single = pdfwm(&[
        "sweep",
        input.to_str().unwrap(),
        "--mark",
        &mark,
        "--brightness",
        "150",
    ]);
    assert_eq!(code(&single), 0, "{}", stderr(&single));
    let text = stdout(&single);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "a\twavelet\tham\trelent\tpsnr");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("150\tdb1\t"));

    let table = w.path("sweep.tsv");
    let full = pdfwm(&[
        "sweep",
        input.to_str().unwrap(),
        "--mark",
        &mark,
        "--wavelet",
        "db1,db2,db6",
        "--brightness",
        "20:300:20",
        "-o",
        &table,
    ]);
    assert_eq!(code(&full), 0, "{}", stderr(&full));
    let text = std::fs::read_to_string(&table).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split('\t').collect())
        .collect();
    assert_eq!(rows.len(), 45);
    assert!(rows.iter().all(|r| r.len() == 5));
    assert_eq!(rows[15][1], "db2");
}

#[test]
fn roundtrip_reports_each_image() {
    let result = pdfwm(&[
        "roundtrip",
        corpus("unsupported_mixed.pdf").to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    let text = stdout(&result);
    assert!(text.contains(": pass"), "{text}");
    assert!(text.contains(": skipped"), "{text}");
    assert!(text.ends_with("0 failed\n"));
    assert_eq!(code(&pdfwm(&["roundtrip", "/nonexistent.pdf"])), 2);
}

#[test]
fn sweep_ranks_haar_first_on_a_document_page() {
    let w = Work::new();
    let cover = w.image(
        "page.png",
        &pdfwm::synth::document_cover(256, 256, 1, 2).unwrap(),
    );
    let mark = w.mark("mark.png", &logo_mark(32, 32, 2));
    let result = pdfwm(&[
        "sweep",
        &cover,
        "--mark",
        &mark,
        "--wavelet",
        "db1,db2,db6",
        "--brightness",
        "20",
    ]);
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    let hams: Vec<f64> = stdout(&result)
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(hams.len(), 3);
    assert!(hams[0] < hams[1] && hams[0] < hams[2], "{hams:?}");
}
