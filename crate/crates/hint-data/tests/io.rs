//! File format contracts: P6 decoding is bit-exact, round-trips stay within
//! the 8-bit quantization bound, malformed input fails with a byte offset.

use hint_data::{load_image, save_image, synth_clean, DataError, Image};

fn write_temp(name: &str, bytes: &[u8]) -> std::path::PathBuf {
    let dir = tempfile::tempdir().unwrap().keep();
    let path = dir.join(name);
    std::fs::write(&path, bytes).unwrap();
    path
}

#[test]
fn p6_known_bytes_decode_exactly() {
    let mut bytes = b"P6\n2 2\n255\n".to_vec();
    let raster: [u8; 12] = [0, 51, 102, 153, 204, 255, 10, 20, 30, 40, 50, 60];
    bytes.extend_from_slice(&raster);
    let img = load_image(write_temp("a.ppm", &bytes)).unwrap();
    assert_eq!((img.width(), img.height()), (2, 2));
    for (v, k) in img.data().iter().zip(raster) {
        assert_eq!(*v, k as f32 / 255.0);
    }
    assert_eq!(img.pixel(1, 0, 2), 255.0 / 255.0);
    assert_eq!(img.pixel(0, 1, 0), 10.0 / 255.0);
}

#[test]
fn p6_header_comments_and_whitespace_are_skipped() {
    let mut bytes = b"P6 # comment\n 2\t# another\n2\n255 ".to_vec();
    bytes.extend_from_slice(&[128u8; 12]);
    let img = load_image(write_temp("c.ppm", &bytes)).unwrap();
    assert_eq!((img.width(), img.height()), (2, 2));
    assert!(img.data().iter().all(|v| *v == 128.0 / 255.0));
}

#[test]
fn p6_roundtrip_stays_within_quantization() {
    let img = synth_clean(17, 11, 5).unwrap();
    let path = write_temp("r.ppm", b"");
    save_image(&img, &path).unwrap();
    let back = load_image(&path).unwrap();
    assert_eq!((back.width(), back.height()), (17, 11));
    let worst = img
        .data()
        .iter()
        .zip(back.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f32, f32::max);
    assert!(worst <= 1.0 / 255.0, "round-trip diff {worst}");
}

#[test]
fn p6_save_load_save_is_stable() {
    // Second generation reproduces the first bytes: quantize is idempotent.
    let img = synth_clean(9, 9, 11).unwrap();
    let path = write_temp("s.ppm", b"");
    save_image(&img, &path).unwrap();
    let first = std::fs::read(&path).unwrap();
    save_image(&load_image(&path).unwrap(), &path).unwrap();
    assert_eq!(first, std::fs::read(&path).unwrap());
}

#[test]
fn p6_truncated_header_is_parse_error() {
    let err = load_image(write_temp("t.ppm", b"P6\n2 ")).unwrap_err();
    match err {
        DataError::Parse { offset, .. } => assert_eq!(offset, 5),
        other => panic!("expected parse error, got {other}"),
    }
}

#[test]
fn p6_truncated_raster_reports_offset() {
    let mut bytes = b"P6\n2 2\n255\n".to_vec();
    bytes.extend_from_slice(&[7u8; 5]);
    let err = load_image(write_temp("u.ppm", &bytes)).unwrap_err();
    match err {
        DataError::Parse { offset, what } => {
            assert_eq!(offset, 16);
            assert!(what.contains("5 of 12"), "{what}");
        }
        other => panic!("expected parse error, got {other}"),
    }
}

#[test]
fn p6_bad_magic_is_parse_error_at_zero() {
    let err = load_image(write_temp("m.ppm", b"P5\n2 2\n255\n")).unwrap_err();
    match err {
        DataError::Parse { offset, .. } => assert_eq!(offset, 0),
        other => panic!("expected parse error, got {other}"),
    }
}

#[test]
fn p6_wide_maxval_is_format_error() {
    let err = load_image(write_temp("w.ppm", b"P6\n2 2\n65535\n")).unwrap_err();
    assert!(matches!(err, DataError::Format(_)), "{err}");
}

#[test]
fn p6_zero_dimension_is_parse_error() {
    let err = load_image(write_temp("z.ppm", b"P6\n0 2\n255\n")).unwrap_err();
    assert!(matches!(err, DataError::Parse { .. }), "{err}");
}

#[test]
fn png_roundtrip_stays_within_quantization() {
    let img = synth_clean(23, 14, 9).unwrap();
    let path = write_temp("r.png", b"");
    save_image(&img, &path).unwrap();
    let back = load_image(&path).unwrap();
    assert_eq!((back.width(), back.height()), (23, 14));
    let worst = img
        .data()
        .iter()
        .zip(back.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f32, f32::max);
    assert!(worst <= 1.0 / 255.0, "round-trip diff {worst}");
}

#[test]
fn png_rejects_non_rgb8() {
    // 16-bit grayscale is a valid PNG this crate refuses to guess at.
    let mut bytes = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut bytes, 2, 2);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut w = enc.write_header().unwrap();
        w.write_image_data(&[0u8; 8]).unwrap();
    }
    let err = load_image(write_temp("g.png", &bytes)).unwrap_err();
    assert!(matches!(err, DataError::Format(_)), "{err}");
}

#[test]
fn png_garbage_is_parse_error() {
    let err = load_image(write_temp("x.png", b"not a png at all")).unwrap_err();
    assert!(matches!(err, DataError::Parse { .. }), "{err}");
}

#[test]
fn unknown_extension_is_format_error() {
    let img = Image::constant(8, 8, 0.5).unwrap();
    let path = write_temp("q.jpeg", b"");
    assert!(matches!(save_image(&img, &path), Err(DataError::Format(_))));
    assert!(matches!(load_image(&path), Err(DataError::Format(_))));
}
