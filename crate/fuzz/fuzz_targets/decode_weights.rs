#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = mlct_core::io::decode_weights(data);
    if let Ok(p) = mlct_learn::LpdParams::from_bytes(data) {
        let bytes = p.to_bytes().expect("re-encode");
        mlct_learn::LpdParams::from_bytes(&bytes).expect("re-decode");
    }
});
