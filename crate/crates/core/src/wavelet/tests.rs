use super::*;
use ndarray::array;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn all_specs() -> impl Iterator<Item = WaveletSpec> {
    (1..=45)
        .map(WaveletSpec::db)
        .chain((2..=20).map(WaveletSpec::sym))
}

fn random_image(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| f64::from(rng.random::<u8>()))
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn parses_names() {
    assert_eq!("db1".parse::<WaveletSpec>().unwrap(), WaveletSpec::HAAR);
    assert_eq!("haar".parse::<WaveletSpec>().unwrap(), WaveletSpec::HAAR);
    assert_eq!("SYM8".parse::<WaveletSpec>().unwrap(), WaveletSpec::sym(8));
    assert_eq!("db45".parse::<WaveletSpec>().unwrap().to_string(), "db45");
    for bad in ["db0", "db46", "sym1", "sym21", "coif2", "db", "dbx"] {
        assert!(
            matches!(
                bad.parse::<WaveletSpec>(),
                Err(Error::UnsupportedWavelet(_))
            ),
            "{bad}"
        );
    }
    assert!(matches!(
        build_filters(WaveletSpec::db(46)),
        Err(Error::UnsupportedWavelet(_))
    ));
}

#[test]
fn every_filter_bank_is_orthogonal() {
    for spec in all_specs() {
        let bank = build_filters(spec).unwrap();
        let h = &bank.rec_lo;
        let g = &bank.rec_hi;
        assert_eq!(h.len(), spec.filter_len(), "{spec}");
        let sum: f64 = h.iter().sum();
        assert!(
            (sum - std::f64::consts::SQRT_2).abs() < 1e-10,
            "{spec}: sum {sum}"
        );
        let dot: f64 = h.iter().zip(g).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-10, "{spec}: lo.hi = {dot}");
        for shift in (0..h.len()).step_by(2) {
            let acc: f64 = (0..h.len() - shift).map(|k| h[k] * h[k + shift]).sum();
            let expected = if shift == 0 { 1.0 } else { 0.0 };
            assert!(
                (acc - expected).abs() < 1e-12,
                "{spec} shift {shift}: {acc}"
            );
        }
        let rev: Vec<f64> = bank.dec_lo.iter().rev().copied().collect();
        assert_eq!(&rev, h);
    }
}

#[test]
fn haar_closed_form() {
    let bank = build_filters(WaveletSpec::HAAR).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!(max_abs_diff(&array![[bank.rec_lo[0], bank.rec_lo[1]]], &array![[r, r]]) < 1e-15);
    assert!(max_abs_diff(&array![[bank.rec_hi[0], bank.rec_hi[1]]], &array![[r, -r]]) < 1e-15);
}

#[test]
fn db2_matches_closed_form() {
    let s3 = 3f64.sqrt();
    let d = 4.0 * std::f64::consts::SQRT_2;
    let expected = [
        (1.0 + s3) / d,
        (3.0 + s3) / d,
        (3.0 - s3) / d,
        (1.0 - s3) / d,
    ];
    let bank = build_filters(WaveletSpec::db(2)).unwrap();
    for (a, b) in bank.rec_lo.iter().zip(expected) {
        assert!((a - b).abs() < 1e-15, "{a} vs {b}");
    }
    let squares: f64 = bank.rec_lo.iter().map(|v| v * v).sum();
    assert!((squares - 1.0).abs() < 1e-15);
}

/// Minimum-phase Daubechies filter from the roots of the half-band
/// polynomial, found with Durand-Kerner iteration in f64. Accurate for low
/// orders only, which is all it is used for.
fn spectral_factorization(order: usize) -> Vec<f64> {
    let binom = |n: usize, k: usize| -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    // P(y) = sum_{k<order} C(order-1+k, k) y^k, made monic for the iteration.
    let coeffs: Vec<f64> = (0..order).map(|k| binom(order - 1 + k, k)).collect();
    let degree = order - 1;
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|i| {
            Complex64::from_polar(
                1.0,
                0.4 + 2.0 * std::f64::consts::PI * i as f64 / degree as f64,
            )
        })
        .collect();
    let lead = coeffs[degree];
    let eval = |z: Complex64| {
        coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c / lead)
    };
    for _ in 0..2000 {
        let snapshot = roots.clone();
        for i in 0..degree {
            let denom = (0..degree)
                .filter(|&j| j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, j| {
                    acc * (snapshot[i] - snapshot[j])
                });
            roots[i] = snapshot[i] - eval(snapshot[i]) / denom;
        }
    }
    // y -> z with z + 1/z = 2 - 4y, keep the root inside the unit circle.
    let zs: Vec<Complex64> = roots
        .iter()
        .map(|&y| {
            let b = 2.0 - 4.0 * y;
            let disc = (b * b - 4.0).sqrt();
            let z1 = (b + disc) / 2.0;
            if z1.norm() < 1.0 {
                z1
            } else {
                (b - disc) / 2.0
            }
        })
        .collect();
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    let mul = |poly: &Vec<Complex64>, root: Complex64| {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= root * c;
        }
        next
    };
    for _ in 0..order {
        poly = mul(&poly, Complex64::new(-1.0, 0.0));
    }
    for &z in &zs {
        poly = mul(&poly, z);
    }
    let sum: f64 = poly.iter().map(|c| c.re).sum();
    poly.iter()
        .map(|c| c.re * std::f64::consts::SQRT_2 / sum)
        .collect()
}

#[test]
fn low_order_daubechies_match_spectral_factorization() {
    for order in 2..=8 {
        let oracle = spectral_factorization(order);
        let bank = build_filters(WaveletSpec::db(order)).unwrap();
        let err = bank
            .rec_lo
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "db{order}: {err}");
    }
}

#[test]
fn constant_block_haar() {
    let bands = dwt2(&array![[100.0, 100.0], [100.0, 100.0]], WaveletSpec::HAAR).unwrap();
    assert!((bands.ca[[0, 0]] - 200.0).abs() < 1e-12);
    for b in [&bands.ch, &bands.cv, &bands.cd] {
        assert!(b[[0, 0]].abs() < 1e-12);
    }
}

#[test]
fn band_naming_convention() {
    let bands = dwt2(&array![[1.0, 2.0], [3.0, 4.0]], WaveletSpec::HAAR).unwrap();
    // cH differences rows, cV differences columns.
    let got = [
        bands.ca[[0, 0]],
        bands.ch[[0, 0]],
        bands.cv[[0, 0]],
        bands.cd[[0, 0]],
    ];
    for (g, e) in got.iter().zip([5.0, -2.0, -1.0, 0.0]) {
        assert!((g - e).abs() < 1e-12, "{got:?}");
    }
}

#[test]
fn inverse_of_hand_computation() {
    let bands = SubbandSet {
        ca: array![[200.0]],
        ch: array![[0.0]],
        cv: array![[0.0]],
        cd: array![[0.0]],
        original_dims: (2, 2),
    };
    let img = idwt2(&bands, WaveletSpec::HAAR).unwrap();
    assert!(max_abs_diff(&img, &array![[100.0, 100.0], [100.0, 100.0]]) < 1e-12);
}

#[test]
fn zero_bands_give_zero_image() {
    let z = Array2::zeros((4, 3));
    let bands = SubbandSet {
        ca: z.clone(),
        ch: z.clone(),
        cv: z.clone(),
        cd: z,
        original_dims: (7, 6),
    };
    let img = idwt2(&bands, WaveletSpec::db(4)).unwrap();
    assert_eq!(img.dim(), (7, 6));
    assert!(img.iter().all(|&v| v == 0.0));
}

#[test]
fn round_trip_db6_64() {
    let x = random_image(64, 64, 7);
    let w = Wavelet::new(WaveletSpec::db(6)).unwrap();
    let back = w.inverse(&w.forward(&x).unwrap()).unwrap();
    assert!(max_abs_diff(&x, &back) < 1e-9);
}

#[test]
fn long_filters_on_tiny_images() {
    // Filters much longer than the signal wrap around several times.
    for spec in [WaveletSpec::db(45), WaveletSpec::sym(20)] {
        let x = random_image(3, 5, 11);
        let back = idwt2(&dwt2(&x, spec).unwrap(), spec).unwrap();
        assert!(max_abs_diff(&x, &back) < 1e-9, "{spec}");
    }
}

#[test]
fn odd_sizes_round_up() {
    let bands = dwt2(&random_image(5, 8, 1), WaveletSpec::db(2)).unwrap();
    assert_eq!(bands.band_dims(), (3, 4));
    assert_eq!(bands.original_dims, (5, 8));
}

#[test]
fn mismatched_bands_are_rejected() {
    let mut bands = dwt2(&random_image(8, 8, 3), WaveletSpec::HAAR).unwrap();
    bands.cd = Array2::zeros((3, 4));
    assert!(matches!(
        idwt2(&bands, WaveletSpec::HAAR),
        Err(Error::DimensionMismatch { .. })
    ));
    let mut bands = dwt2(&random_image(8, 8, 3), WaveletSpec::HAAR).unwrap();
    bands.original_dims = (12, 8);
    assert!(idwt2(&bands, WaveletSpec::HAAR).is_err());
}

#[test]
fn empty_image_is_rejected() {
    assert!(dwt2(&Array2::zeros((0, 4)), WaveletSpec::HAAR).is_err());
}

fn spec_strategy() -> impl Strategy<Value = WaveletSpec> {
    prop_oneof![
        (1usize..=45).prop_map(WaveletSpec::db),
        (2usize..=20).prop_map(WaveletSpec::sym),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn perfect_reconstruction(rows in 1usize..40, cols in 1usize..40, spec in spec_strategy(), seed: u64) {
        let x = random_image(rows, cols, seed);
        let back = idwt2(&dwt2(&x, spec).unwrap(), spec).unwrap();
        prop_assert_eq!(back.dim(), (rows, cols));
        prop_assert!(max_abs_diff(&x, &back) < 1e-9);
    }

    #[test]
    fn energy_is_conserved(half_rows in 1usize..20, half_cols in 1usize..20, spec in spec_strategy(), seed: u64) {
        let x = random_image(2 * half_rows, 2 * half_cols, seed);
        let input: f64 = x.iter().map(|v| v * v).sum();
        let bands = dwt2(&x, spec).unwrap();
        prop_assert!((bands.energy() - input).abs() <= 1e-6 * input.max(1.0));
    }

    #[test]
    fn transform_is_linear(rows in 1usize..24, cols in 1usize..24, spec in spec_strategy(),
                           alpha in -3.0f64..3.0, beta in -3.0f64..3.0, seed: u64) {
        let x = random_image(rows, cols, seed);
        let y = random_image(rows, cols, seed.wrapping_add(1));
        let w = Wavelet::new(spec).unwrap();
        let combined = w.forward(&(&x * alpha + &y * beta)).unwrap();
        let bx = w.forward(&x).unwrap();
        let by = w.forward(&y).unwrap();
        for band in [Band::A, Band::H, Band::V, Band::D] {
            let expected = bx.band(band) * alpha + by.band(band) * beta;
            prop_assert!(max_abs_diff(combined.band(band), &expected) < 1e-9);
        }
    }
}
