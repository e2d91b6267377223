//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line, pass or fail.

use std::path::PathBuf;

use ndarray::Array2;
use pdfwm::freq::{
    detect_frequency, detect_plane, embed_frequency, embed_plane, region_for, FreqParams,
};
use pdfwm::metrics::{hamming, psnr, rmse};
use pdfwm::pdf::{roundtrip_check, RoundtripStatus};
use pdfwm::spatial::{bitplane_get, detect_spatial, embed_spatial, remove_spatial, SpatialParams};
use pdfwm::synth::{document_cover, logo_mark};
use pdfwm::wavelet::{dwt2, idwt2, Band, WaveletSpec};
use pdfwm::{BinaryPattern, ChannelPolicy, RasterImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_pattern(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> BinaryPattern {
    BinaryPattern::from_fn(rows, cols, |_, _| rng.random())
}

fn perfect_reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let specs = [
        WaveletSpec::db(1),
        WaveletSpec::db(2),
        WaveletSpec::db(6),
        WaveletSpec::sym(4),
    ];
    let mut worst = 0.0f64;
    let mut odd = 0;
    for i in 0..50 {
        let mut rows = rng.random_range(16..=128);
        let mut cols = rng.random_range(16..=128);
        if i % 5 == 0 {
            rows |= 1;
            cols |= 1;
        }
        if rows % 2 == 1 || cols % 2 == 1 {
            odd += 1;
        }
        let x = Array2::from_shape_fn((rows, cols), |_| f64::from(rng.random::<u8>()));
        for spec in specs {
            let back = idwt2(&dwt2(&x, spec).unwrap(), spec).unwrap();
            let err = x
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(err);
        }
    }
    outcome(worst < 1e-9, format!("max |x - idwt2(dwt2(x))| = {worst:.3e} over 50 images x 4 wavelets ({odd} with odd sides)"))
}

fn spatial_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let v = rng.random_range(2..=8u8);
        let u = rng.random_range(1..v);
        let channels = if rng.random_bool(0.5) { 1 } else { 3 };
        let (w, h) = (rng.random_range(4..64), rng.random_range(4..64));
        let cover = RasterImage::from_fn(w, h, channels, |_, _, _| rng.random()).unwrap();
        let policy = if channels == 3 && rng.random_bool(0.5) {
            ChannelPolicy::All
        } else {
            ChannelPolicy::least_visible(channels)
        };
        let p = SpatialParams::new(v, u, policy).unwrap();
        let mark = random_pattern(rng.random_range(1..=h), rng.random_range(1..=w), &mut rng);
        let stego = embed_spatial(&cover, &mark, &p).unwrap();
        let found = detect_spatial(&stego, &p)
            .unwrap()
            .resample(mark.rows(), mark.cols());
        worst = worst.max(hamming(&mark, &found).unwrap());
    }
    outcome(
        worst == 0.0,
        format!("max ham over 100 random (V, U, cover, mark) cases = {worst}"),
    )
}

fn removal_psnr_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut worst = 0.0f64;
    let mut u1_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut cases = 0;
    for _ in 0..40 {
        let cover = RasterImage::from_fn(64, 48, 1, |_, _, _| rng.random()).unwrap();
        for u in 1..=7u8 {
            let v = rng.random_range(u + 1..=8);
            let p = SpatialParams::new(v, u, ChannelPolicy::Single(0)).unwrap();
            let mark = random_pattern(48, 64, &mut rng);
            let restored = remove_spatial(&embed_spatial(&cover, &mark, &p).unwrap(), &p).unwrap();
            let plane = bitplane_get(&cover, u, 0).unwrap();
            let set = plane.count_ones() as f64 / plane.bits().len() as f64;
            let step = f64::from(1u32 << (u - 1));
            let law = 10.0 * (255.0f64 * 255.0 / (step * step * set)).log10();
            let measured = psnr(&cover, &restored).unwrap();
            worst = worst.max((measured - law).abs());
            if u == 1 {
                u1_range = (u1_range.0.min(measured), u1_range.1.max(measured));
            }
            cases += 1;
        }
    }
    let in_band = u1_range.0 >= 50.5 && u1_range.1 <= 51.5;
    outcome(
        worst <= 0.01 && in_band,
        format!(
            "max |PSNR - law| = {worst:.2e} dB over {cases} cases; U=1 PSNR in [{:.3}, {:.3}] dB",
            u1_range.0, u1_range.1
        ),
    )
}

fn frequency_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let specs = [
        WaveletSpec::db(1),
        WaveletSpec::db(2),
        WaveletSpec::db(6),
        WaveletSpec::db(10),
        WaveletSpec::db(45),
        WaveletSpec::sym(4),
        WaveletSpec::sym(8),
        WaveletSpec::sym(20),
    ];
    let mut combos = 0;
    let mut errors = 0.0f64;
    for spec in specs {
        for band in [Band::A, Band::H, Band::V, Band::D] {
            for fraction in [0.25, 0.5, 0.9, 1.0] {
                for brightness in [1.0, 20.0, 150.0, 300.0] {
                    let (rows, cols) = if rng.random_bool(0.5) {
                        (64, 48)
                    } else {
                        (63, 47)
                    };
                    let plane =
                        Array2::from_shape_fn((rows, cols), |_| f64::from(rng.random::<u8>()));
                    let p =
                        FreqParams::new(spec, band, fraction, brightness, ChannelPolicy::Single(0))
                            .unwrap();
                    let region = region_for((rows, cols), &p, (1, 1)).unwrap();
                    let mark = random_pattern(
                        rng.random_range(1..=region.rows),
                        rng.random_range(1..=region.cols),
                        &mut rng,
                    );
                    let stego = embed_plane(&plane, &mark, &p).unwrap();
                    let found = detect_plane(&stego, &p, mark.dims()).unwrap();
                    errors = errors.max(hamming(&mark, &found).unwrap());
                    combos += 1;
                }
            }
        }
    }
    outcome(
        errors == 0.0,
        format!("max ham = {errors} over {combos} (wavelet, band, u, a) combinations"),
    )
}

fn fixture_covers() -> Vec<RasterImage> {
    (0..10)
        .map(|seed| document_cover(256, 256, 1, seed).unwrap())
        .collect()
}

fn mean_ham(covers: &[RasterImage], spec: WaveletSpec, brightness: f64) -> f64 {
    let p = FreqParams::new(spec, Band::D, 0.5, brightness, ChannelPolicy::Single(0)).unwrap();
    let total: f64 = covers
        .iter()
        .enumerate()
        .map(|(i, cover)| {
            let mark = logo_mark(32, 32, i as u64);
            let stego = embed_frequency(cover, &mark, &p).unwrap();
            hamming(&mark, &detect_frequency(&stego, &p, mark.dims()).unwrap()).unwrap()
        })
        .sum();
    total / covers.len() as f64
}

fn quantized_ordering(covers: &[RasterImage]) -> Outcome {
    let db1 = mean_ham(covers, WaveletSpec::db(1), 20.0);
    let db2 = mean_ham(covers, WaveletSpec::db(2), 20.0);
    let db6 = mean_ham(covers, WaveletSpec::db(6), 20.0);
    outcome(
        db1 < db2 && db1 < db6 && db1 < 0.05,
        format!("mean ham at a=20, u=0.5: db1 {db1:.4}, db2 {db2:.4}, db6 {db6:.4}"),
    )
}

/// Ranks with ties sharing their average rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            out[k] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    out
}

/// Pearson correlation of the ranks; NaN when either side is constant.
fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn degradation_trend(covers: &[RasterImage]) -> Outcome {
    let grid: Vec<f64> = (1..=15).map(|i| 20.0 * f64::from(i)).collect();
    let mut details = Vec::new();
    let mut pass = true;
    for spec in [WaveletSpec::db(1), WaveletSpec::db(6)] {
        let hams: Vec<f64> = grid.iter().map(|&a| mean_ham(covers, spec, a)).collect();
        let rho = spearman(&grid, &hams);
        pass &= rho > 0.0;
        details.push(format!(
            "{spec} rho={rho:.3} (ham {:.4} at a=20, {:.4} at a=300)",
            hams[0],
            hams[hams.len() - 1]
        ));
    }
    outcome(pass, details.join("; "))
}

fn converter_reversibility() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "pdf"))
        .collect();
    paths.sort();
    let (mut passed, mut skipped, mut failed) = (0, 0, Vec::new());
    for path in &paths {
        let bytes = std::fs::read(path).unwrap();
        match roundtrip_check(&bytes) {
            Ok(report) => {
                for entry in report {
                    match entry.status {
                        RoundtripStatus::Pass => passed += 1,
                        RoundtripStatus::Skipped(_) => skipped += 1,
                        RoundtripStatus::Fail(why) => {
                            failed.push(format!("{}: {why}", path.display()))
                        }
                    }
                }
            }
            Err(err) => failed.push(format!("{}: {err}", path.display())),
        }
    }
    outcome(
        paths.len() >= 20 && failed.is_empty() && passed > 0,
        format!(
            "{} documents, {passed} images byte-identical, {skipped} unsupported skipped, {} failures{}",
            paths.len(),
            failed.len(),
            if failed.is_empty() { String::new() } else { format!(": {}", failed.join("; ")) }
        ),
    )
}

fn metric_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (rows, cols) = (rng.random_range(1..=32), rng.random_range(1..=32));
        let a = random_pattern(rows, cols, &mut rng);
        let b = random_pattern(rows, cols, &mut rng);
        let r = rmse(&a, &b).unwrap();
        worst = worst.max((r * r - hamming(&a, &b).unwrap()).abs());
    }
    let mut pairs = 0;
    for x in 0..16u8 {
        for y in 0..16u8 {
            let a = BinaryPattern::from_fn(2, 2, |r, c| x >> (2 * r + c) & 1 == 1);
            let b = BinaryPattern::from_fn(2, 2, |r, c| y >> (2 * r + c) & 1 == 1);
            let r = rmse(&a, &b).unwrap();
            worst = worst.max((r * r - hamming(&a, &b).unwrap()).abs());
            pairs += 1;
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max |rmse^2 - ham| = {worst:.1e} over 1000 random + {pairs} exhaustive 2x2 pairs"),
    )
}

fn main() {
    let covers = fixture_covers();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 perfect reconstruction", perfect_reconstruction()),
        ("2 spatial round trip", spatial_round_trip()),
        ("3 removal PSNR law", removal_psnr_law()),
        (
            "4 frequency exactness without quantization",
            frequency_exactness(),
        ),
        ("5 quantized wavelet ordering", quantized_ordering(&covers)),
        ("6 degradation trend in a", degradation_trend(&covers)),
        ("7 converter reversibility", converter_reversibility()),
        ("8 rmse^2 = ham", metric_identity()),
    ];
    let mut failures = 0;
    for (name, o) in &results {
        println!(
            "criterion {name}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failures += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failures,
        results.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
