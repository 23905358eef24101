use std::path::Path;

use deblur_core::image_core::io::load_image;
use deblur_core::synthesis::{
    apply_variant_blur, make_level_dataset, parse_manifest, sigma_field, write_manifest, BlurSpec, DistortionLevel,
    ManifestEntry, SynthesisConfig,
};
use deblur_core::synthetic::fiber_phantom_rgb;
use deblur_core::{Image, Plane};
use proptest::prelude::*;

fn spec(x: f64, y: f64, sigma_s: f64) -> BlurSpec {
    BlurSpec { x, y, sigma_s, sigma_l: 100.0 }
}

fn camera(side: usize) -> Image {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/camera.png");
    load_image(&path).unwrap().0.crop(100, 100, side, side)
}

fn psnr(a: &Image, b: &Image) -> f64 {
    let mse = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.data().len() as f64;
    10.0 * (1.0 / mse).log10()
}

#[test]
fn field_peaks_at_the_center() {
    let f = sigma_field(&[spec(20.0, 30.0, 2.5)], 64, 64).unwrap();
    assert_eq!(f.get(30, 20), 2.5);
}

#[test]
fn field_at_distance_ten() {
    let f = sigma_field(&[spec(20.0, 30.0, 2.0)], 64, 64).unwrap();
    let expected = 2.0 * (-0.5f64).exp();
    assert!((f.get(30, 30) - expected).abs() < 1e-12);
    assert!((f.get(36, 28) - expected).abs() < 1e-12);
    assert!((expected / 2.0 - 0.6065).abs() < 1e-4);
}

#[test]
fn field_vanishes_far_away() {
    let f = sigma_field(&[spec(0.0, 0.0, 4.5)], 200, 200).unwrap();
    assert!(f.get(199, 199) < 1e-100);
}

#[test]
fn overlapping_blobs_take_the_maximum() {
    let specs = [spec(10.0, 10.0, 1.0), spec(14.0, 10.0, 3.0)];
    let f = sigma_field(&specs, 32, 32).unwrap();
    for (r, c) in [(10, 10), (10, 12), (20, 5)] {
        let want = specs.iter().map(|s| s.strength_at(r as f64, c as f64)).fold(0.0, f64::max);
        assert_eq!(f.get(r, c), want);
    }
    assert!(sigma_field(&[], 4, 4).is_err());
}

#[test]
fn negligible_field_copies_the_input() {
    let img = fiber_phantom_rgb(40, 30, 1);
    assert_eq!(apply_variant_blur(&img, &[spec(5.0, 5.0, 0.04)]).unwrap(), img);
}

#[test]
fn constant_image_stays_constant() {
    let img = Image::filled(50, 40, 3, 0.625).unwrap();
    let out = apply_variant_blur(&img, &[spec(25.0, 20.0, 4.0), spec(3.0, 3.0, 2.0)]).unwrap();
    assert!(out.data().iter().all(|v| (v - 0.625).abs() < 1e-12));
}

#[test]
fn center_pixel_matches_brute_force() {
    let img = camera(64);
    let s = spec(31.0, 29.0, 2.7);
    let out = apply_variant_blur(&img, &[s]).unwrap();
    let (row, col) = (29usize, 31usize);
    let rho = 2.7f64;
    let radius = (3.0 * rho).ceil() as isize;
    let (mut num, mut den) = (0.0, 0.0);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let (r, c) = (row as isize + dy, col as isize + dx);
            if r < 0 || c < 0 || r >= 64 || c >= 64 {
                continue;
            }
            let wgt = (-((dx * dx + dy * dy) as f64) / (2.0 * rho * rho)).exp();
            num += wgt * img.get(0, r as usize, c as usize);
            den += wgt;
        }
    }
    assert!((out.get(0, row, col) - num / den).abs() < 1e-12);
}

#[test]
fn invalid_specs_rejected() {
    let img = Image::filled(10, 10, 1, 0.5).unwrap();
    for bad in [spec(20.0, 5.0, 1.0), spec(5.0, 5.0, 0.0), BlurSpec { sigma_l: -1.0, ..spec(5.0, 5.0, 1.0) }] {
        assert!(apply_variant_blur(&img, &[bad]).is_err());
    }
}

#[test]
fn level_datasets_follow_the_table() {
    let imgs = vec![camera(48), fiber_phantom_rgb(40, 56, 2)];
    for level in DistortionLevel::ALL {
        let set = make_level_dataset(&imgs, level, 11, &SynthesisConfig::default()).unwrap();
        let (lo, hi) = level.sigma_range();
        assert_eq!(set.len(), 2);
        for (sample, img) in set.iter().zip(&imgs) {
            assert_eq!(sample.specs.len(), level.n_blurs());
            assert_eq!(&sample.sharp, img);
            for s in &sample.specs {
                assert!(s.sigma_s > lo && s.sigma_s <= hi);
                assert_eq!(s.sigma_l, 100.0);
                assert!(s.validate(img.width(), img.height()).is_ok());
            }
        }
    }
    let one = make_level_dataset(&imgs[..1], DistortionLevel::I, 3, &SynthesisConfig::default()).unwrap();
    assert_eq!(one[0].specs.len(), 5);
}

#[test]
fn same_seed_same_dataset() {
    let imgs = vec![camera(40)];
    let cfg = SynthesisConfig::default();
    let a = make_level_dataset(&imgs, DistortionLevel::III, 5, &cfg).unwrap();
    let b = make_level_dataset(&imgs, DistortionLevel::III, 5, &cfg).unwrap();
    let c = make_level_dataset(&imgs, DistortionLevel::III, 6, &cfg).unwrap();
    assert_eq!(a[0].specs, b[0].specs);
    assert_eq!(a[0].blurred, b[0].blurred);
    assert_ne!(a[0].specs, c[0].specs);
}

#[test]
fn blurred_psnr_falls_with_level() {
    let imgs = vec![camera(128)];
    let scores: Vec<f64> = DistortionLevel::ALL
        .iter()
        .map(|&l| {
            let set = make_level_dataset(&imgs, l, 21, &SynthesisConfig::default()).unwrap();
            psnr(&set[0].blurred, &imgs[0])
        })
        .collect();
    assert!(scores.windows(2).all(|w| w[1] < w[0]), "{scores:?}");
}

#[test]
fn manifest_round_trip() {
    let entries = vec![ManifestEntry {
        blurred_path: "blurred/a.png".into(),
        sharp_path: "/data/a.png".into(),
        level: DistortionLevel::IV,
        specs: vec![spec(1.0, 2.0, 3.75)],
        rng_seed: 42,
    }];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.json");
    write_manifest(&path, &entries).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(parse_manifest(&text).unwrap(), entries);
    let (b, s) = entries[0].resolve(dir.path());
    assert_eq!(b, dir.path().join("blurred/a.png"));
    assert_eq!(s, Path::new("/data/a.png"));
}

const FIXTURES: [&str; 10] = [
    "astronaut",
    "brick",
    "camera",
    "cell",
    "grass",
    "gravel",
    "hubble_deep_field",
    "immunohistochemistry",
    "moon",
    "retina",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mean_is_preserved_and_range_kept(seed in 0u64..10_000, level in 0usize..4, which in 0usize..10) {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{}.png", FIXTURES[which]));
        let img = load_image(&path).unwrap().0;
        let level = DistortionLevel::ALL[level];
        let set = make_level_dataset(std::slice::from_ref(&img), level, seed, &SynthesisConfig::default()).unwrap();
        let out = &set[0].blurred;
        let mean = |i: &Image| i.data().iter().sum::<f64>() / i.data().len() as f64;
        prop_assert!((mean(out) - mean(&img)).abs() < 1e-3, "{} vs {}", mean(out), mean(&img));
        prop_assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn mean_shift_on_small_smooth_images(seed in 0u64..10_000, level in 0usize..4) {
        let img = Image::from_gray(Plane::from_fn(72, 64, |r, c| {
            let (x, y) = (c as f64, r as f64);
            0.5 + 0.3 * ((x * 0.21 + seed as f64).sin() * (y * 0.17).cos()) + 0.15 * ((x + y) * 0.05 + seed as f64 * 0.3).sin()
        })).unwrap();
        let level = DistortionLevel::ALL[level];
        let set = make_level_dataset(std::slice::from_ref(&img), level, seed, &SynthesisConfig::default()).unwrap();
        let out = &set[0].blurred;
        let mean = |i: &Image| i.data().iter().sum::<f64>() / i.data().len() as f64;
        prop_assert!((mean(out) - mean(&img)).abs() < 1e-3, "{} vs {}", mean(out), mean(&img));
    }
}
