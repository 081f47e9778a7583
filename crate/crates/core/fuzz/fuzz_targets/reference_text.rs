#![no_main]
use libfuzzer_sys::fuzz_target;
use usermodel::pipeline::ControlReference;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ControlReference::from_text(text);
    }
});
