#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = mlct_cli::config::Config::from_json(text);
    let _ = serde_json::from_str::<mlct_learn::TrainConfig>(text);
});
