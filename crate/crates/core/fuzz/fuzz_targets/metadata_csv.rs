#![no_main]
use libfuzzer_sys::fuzz_target;
use usermodel::pipeline::{parse_metadata, write_metadata};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = parse_metadata(data) {
        let mut buf = Vec::new();
        write_metadata(&mut buf, &records).unwrap();
        assert_eq!(parse_metadata(buf.as_slice()).unwrap(), records);
    }
});
