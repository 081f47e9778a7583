#![no_main]
use libfuzzer_sys::fuzz_target;
use usermodel::gait::{harmonic_sequence, InertialRecording};

fuzz_target!(|data: &[u8]| {
    if let Ok(rec) = InertialRecording::read_csv(data) {
        if rec.len() <= 4096 {
            let _ = harmonic_sequence(&rec);
        }
    }
});
