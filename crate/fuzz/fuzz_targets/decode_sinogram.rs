#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = mlct_core::io::decode_sinogram(data) {
        let bytes = mlct_core::io::encode_sinogram(&s).expect("re-encode");
        mlct_core::io::decode_sinogram(&bytes).expect("re-decode");
    }
});
