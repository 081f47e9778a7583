#![no_main]
use libfuzzer_sys::fuzz_target;
use usermodel::handwriting::{kinematic_features, read_pen_stream, segment_strokes, Origin};

fuzz_target!(|data: &[u8]| {
    if let Ok(samples) = read_pen_stream(data) {
        let strokes = segment_strokes(&samples);
        assert_eq!(strokes.iter().map(|s| s.len()).sum::<usize>(), samples.len());
        let _ = kinematic_features(&strokes, Origin::Centroid);
    }
});
