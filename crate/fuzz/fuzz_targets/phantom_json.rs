#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = mlct_phantom::CartoonPhantom::from_json(text) {
        mlct_phantom::CartoonPhantom::from_json(&p.to_json()).expect("round trip");
    }
});
