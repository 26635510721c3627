use mlct_core::io::{self, DwfDomain};
use mlct_core::{detector_positions, uniform_angles, DigitalWavefrontSet, DwfMode, Field, GridImage, Sinogram};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(n1: usize, n2: usize, seed: u64) -> GridImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridImage::new(n1, n2, (0..n1 * n2).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap()
}

#[test]
fn zero_image_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.mct");
    let img = GridImage::zeros(3, 3).unwrap();
    io::write_image(&img, &path).unwrap();
    assert_eq!(io::read_image(&path).unwrap(), img);
}

#[test]
fn random_image_payload_is_bitwise_stable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.mct");
    let img = random_image(64, 64, 7);
    io::write_image(&img, &path).unwrap();
    let first = std::fs::read(&path).unwrap();
    let back = io::read_image(&path).unwrap();
    for (a, b) in img.values().iter().zip(back.values()) {
        assert_eq!((*a as f32).to_bits(), (*b as f32).to_bits());
    }
    assert_eq!(io::encode_image(&back).unwrap(), first);
}

#[test]
fn corrupted_magic_is_rejected() {
    let mut bytes = io::encode_image(&GridImage::zeros(4, 4).unwrap()).unwrap();
    bytes[0] = b'X';
    let err = io::decode_image(&bytes).unwrap_err();
    assert_eq!(err.to_string(), "bad magic");
}

#[test]
fn truncated_payload_and_kind_mismatch_are_rejected() {
    let bytes = io::encode_image(&GridImage::zeros(4, 4).unwrap()).unwrap();
    assert!(io::decode_image(&bytes[..bytes.len() - 1]).is_err());
    assert!(io::decode_sinogram(&bytes).is_err());
    assert!(io::decode_image(&bytes[..10]).is_err());
}

#[test]
fn sinogram_round_trip_keeps_geometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (m1, m2) = (11, 6);
    let field = Field::from_vec(m1, m2, (0..m1 * m2).map(|_| rng.random::<f64>()).collect()).unwrap();
    let mask = vec![true, true, false, true, false, true];
    let sino = Sinogram::new(field, detector_positions(m1), uniform_angles(m2), mask).unwrap();
    assert!(sino.row(2).iter().all(|&v| v == 0.0));
    let bytes = io::encode_sinogram(&sino).unwrap();
    let back = io::decode_sinogram(&bytes).unwrap();
    assert_eq!(back.detectors(), sino.detectors());
    assert_eq!(back.angles(), sino.angles());
    assert_eq!(back.mask(), sino.mask());
    assert_eq!(io::encode_sinogram(&back).unwrap(), bytes);
}

#[test]
fn empty_dwf_round_trip() {
    let d = DigitalWavefrontSet::empty(5, 4, 6, DwfMode::Hard);
    let (back, domain) = io::decode_dwf(&io::encode_dwf(&d, DwfDomain::Image).unwrap()).unwrap();
    assert_eq!(back, d);
    assert_eq!(domain, DwfDomain::Image);
    assert!(back.is_empty());
}

#[test]
fn single_element_dwf_round_trip() {
    let mut d = DigitalWavefrontSet::empty(5, 4, 6, DwfMode::Hard);
    d.mark(3, 2, 5);
    let (back, domain) = io::decode_dwf(&io::encode_dwf(&d, DwfDomain::Sinogram).unwrap()).unwrap();
    assert_eq!(back, d);
    assert_eq!(domain, DwfDomain::Sinogram);
    assert_eq!(back.elements().collect::<Vec<_>>(), vec![(3, 2, 5)]);
}

#[test]
fn random_soft_dwf_payload_is_bitwise_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<f64> = (0..8 * 7 * 9).map(|_| rng.random::<f64>()).collect();
    let d = DigitalWavefrontSet::from_vec(8, 7, 9, DwfMode::Soft, data).unwrap();
    let bytes = io::encode_dwf(&d, DwfDomain::Image).unwrap();
    let (back, _) = io::decode_dwf(&bytes).unwrap();
    for (a, b) in d.data().iter().zip(back.data()) {
        assert_eq!((*a as f32).to_bits(), (*b as f32).to_bits());
    }
    assert_eq!(io::encode_dwf(&back, DwfDomain::Image).unwrap(), bytes);
}

#[test]
fn weights_round_trip() {
    let meta = serde_json::json!({"plan": [7, 32, 32, 32, 5]});
    let vals = vec![0.5, -1.25, 3.0];
    let (m, back) = io::decode_weights(&io::encode_weights(meta.clone(), &vals).unwrap()).unwrap();
    assert_eq!(m, meta);
    assert_eq!(back, vals);
}

proptest! {
    #[test]
    fn decoded_images_re_encode_identically(n1 in 2usize..12, n2 in 2usize..12, seed in any::<u64>()) {
        let img = random_image(n1, n2, seed);
        let bytes = io::encode_image(&img).unwrap();
        let back = io::decode_image(&bytes).unwrap();
        prop_assert_eq!(io::encode_image(&back).unwrap(), bytes);
        for (a, b) in img.values().iter().zip(back.values()) {
            prop_assert_eq!(io::quantize(*a), *b);
        }
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        let _ = io::decode_image(&bytes);
        let _ = io::decode_dwf(&bytes);
        let _ = io::decode_sinogram(&bytes);
        let _ = io::decode_weights(&bytes);
    }
}
