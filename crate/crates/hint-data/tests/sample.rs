//! Patch sampling contracts: determinism, validation, corner uniformity.

use hint_data::{degrade, sample_patches, synth_clean, DataError, Degradation, DegradationSpec, Image};

/// Image whose pixel values encode their own coordinates, so a patch's
/// top-left value identifies the sampled corner.
fn coordinate_image(w: usize, h: usize) -> Image {
    let n = (w * h) as f32;
    let data: Vec<f32> = (0..w * h).flat_map(|i| [i as f32 / n; 3]).collect();
    Image::new(w, h, data).unwrap()
}

fn corner_of(patch: &Image, w: usize, h: usize) -> (usize, usize) {
    let idx = (patch.pixel(0, 0, 0) * (w * h) as f32).round() as usize;
    (idx % w, idx / w)
}

fn pairs_of(img: Image) -> Vec<(Image, Image)> {
    let spec = DegradationSpec { kind: Degradation::LowLightGamma { gamma: 2.0, gain: 0.9 }, seed: 0 };
    let degraded = degrade(&img, &spec).unwrap();
    vec![(img, degraded)]
}

#[test]
fn zero_count_is_empty() {
    assert!(sample_patches(&[], 8, 0, 1).unwrap().is_empty());
    let pairs = pairs_of(synth_clean(16, 16, 1).unwrap());
    assert!(sample_patches(&pairs, 8, 0, 1).unwrap().is_empty());
}

#[test]
fn sampling_from_nothing_is_config_error() {
    assert!(matches!(sample_patches(&[], 8, 1, 1), Err(DataError::Config(_))));
}

#[test]
fn same_seed_reproduces_the_sequence() {
    let pairs = pairs_of(synth_clean(32, 24, 2).unwrap());
    let a = sample_patches(&pairs, 8, 20, 77).unwrap();
    let b = sample_patches(&pairs, 8, 20, 77).unwrap();
    let c = sample_patches(&pairs, 8, 20, 78).unwrap();
    assert_eq!(a.len(), 20);
    for ((ca, da), (cb, db)) in a.iter().zip(&b) {
        assert_eq!(ca.data(), cb.data());
        assert_eq!(da.data(), db.data());
    }
    assert!(a.iter().zip(&c).any(|((ca, _), (cc, _))| ca.data() != cc.data()));
}

#[test]
fn oversized_and_misaligned_patches_are_config_errors() {
    let pairs = pairs_of(synth_clean(16, 16, 3).unwrap());
    assert!(matches!(sample_patches(&pairs, 24, 1, 1), Err(DataError::Config(_))));
    assert!(matches!(sample_patches(&pairs, 12, 1, 1), Err(DataError::Config(_))));
    assert!(matches!(sample_patches(&pairs, 0, 1, 1), Err(DataError::Config(_))));
}

#[test]
fn mismatched_pair_dimensions_are_rejected() {
    let a = synth_clean(16, 16, 4).unwrap();
    let b = synth_clean(16, 24, 4).unwrap();
    let err = sample_patches(&[(a, b)], 8, 1, 1).unwrap_err();
    assert!(matches!(err, DataError::Config(_)), "{err}");
}

#[test]
fn clean_and_degraded_crops_share_the_window() {
    let (w, h) = (20, 12);
    let clean = coordinate_image(w, h);
    // Degraded twin carries the same coordinate code, offset by a constant
    // that survives cropping.
    let degraded = Image::new(
        w,
        h,
        clean.data().iter().map(|v| v * 0.5).collect(),
    )
    .unwrap();
    let out = sample_patches(&[(clean, degraded)], 8, 16, 5).unwrap();
    for (c, d) in out {
        assert_eq!((c.width(), c.height()), (8, 8));
        assert_eq!((d.width(), d.height()), (8, 8));
        for (a, b) in c.data().iter().zip(d.data()) {
            assert_eq!(*b, a * 0.5);
        }
    }
}

#[test]
fn corners_are_uniform_within_multinomial_bounds() {
    // 12x12 image, patch 8: 25 corners. 10k draws, q = 1/25: mean 400,
    // sigma = sqrt(n q (1-q)) ~= 19.6; every corner within 3 sigma.
    let (w, h) = (12, 12);
    let img = coordinate_image(w, h);
    let pairs = vec![(img.clone(), img)];
    let out = sample_patches(&pairs, 8, 10_000, 2024).unwrap();
    let mut counts = vec![0usize; 25];
    for (c, _) in out {
        let (x, y) = corner_of(&c, w, h);
        assert!(x <= 4 && y <= 4, "corner ({x}, {y}) out of range");
        counts[y * 5 + x] += 1;
    }
    let n = 10_000f64;
    let q = 1.0 / 25.0;
    let sigma = (n * q * (1.0 - q)).sqrt();
    for (i, &cnt) in counts.iter().enumerate() {
        let dev = (cnt as f64 - n * q).abs();
        assert!(dev <= 3.0 * sigma, "corner {i}: count {cnt}, dev {dev:.1} > 3 sigma ({:.1})", 3.0 * sigma);
    }
}

#[test]
fn draws_cover_multiple_source_pairs() {
    let a = synth_clean(16, 16, 10).unwrap();
    let b = synth_clean(16, 16, 11).unwrap();
    let pairs: Vec<(Image, Image)> = [a, b].into_iter().map(|img| (img.clone(), img)).collect();
    let out = sample_patches(&pairs, 16, 40, 6).unwrap();
    // Patch == image, so each draw reproduces its source exactly.
    let from_first = out.iter().filter(|(c, _)| c.data() == pairs[0].0.data()).count();
    assert!(from_first > 5 && from_first < 35, "source split {from_first}/40");
}
