#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ivs) = usermodel::ivector::read_ivectors_csv(data) {
        let mut buf = Vec::new();
        usermodel::ivector::write_ivectors_csv(&mut buf, &ivs).unwrap();
        assert_eq!(
            usermodel::ivector::read_ivectors_csv(buf.as_slice()).unwrap(),
            ivs
        );
    }
});
