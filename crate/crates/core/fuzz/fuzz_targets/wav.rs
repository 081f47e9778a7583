#![no_main]
use libfuzzer_sys::fuzz_target;
use usermodel::speech::{estimate_f0, SpeechRecording};

fuzz_target!(|data: &[u8]| {
    if let Ok(rec) = SpeechRecording::from_wav_reader(std::io::Cursor::new(data)) {
        if rec.samples.len() <= 16_000 {
            let _ = estimate_f0(&rec);
        }
    }
});
