#![no_main]
use libfuzzer_sys::fuzz_target;
use usermodel::ivector::TotalVariabilityModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(model) = TotalVariabilityModel::from_text(text) {
            let _ = TotalVariabilityModel::from_text(&model.to_text()).expect("written model parses");
        }
    }
});
