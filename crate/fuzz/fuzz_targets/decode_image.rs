#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = mlct_core::io::decode_image(data) {
        // a decoded image must re-encode
        let bytes = mlct_core::io::encode_image(&img).expect("re-encode");
        let again = mlct_core::io::decode_image(&bytes).expect("re-decode");
        assert_eq!(img.n1(), again.n1());
        assert_eq!(img.n2(), again.n2());
    }
});
