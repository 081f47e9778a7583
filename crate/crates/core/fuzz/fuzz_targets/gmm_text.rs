#![no_main]
use libfuzzer_sys::fuzz_target;
use usermodel::gmm::DiagGmm;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = DiagGmm::from_text(text) {
        let again = DiagGmm::from_text(&model.to_text()).expect("written model parses");
        assert_eq!(again, model);
    }
});
