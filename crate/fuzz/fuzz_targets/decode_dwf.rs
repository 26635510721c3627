#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((dwf, domain)) = mlct_core::io::decode_dwf(data) {
        let bytes = mlct_core::io::encode_dwf(&dwf, domain).expect("re-encode");
        mlct_core::io::decode_dwf(&bytes).expect("re-decode");
    }
});
