#![no_main]
use libfuzzer_sys::fuzz_target;
use usermodel::pipeline::{fuse_loso, DistanceMatrix, Family, Gender, SubjectRecord};

fuzz_target!(|data: &[u8]| {
    let Ok(dm) = DistanceMatrix::read_csv(data, Family::Gmm) else {
        return;
    };
    let records: Vec<SubjectRecord> = dm
        .subjects
        .iter()
        .enumerate()
        .filter_map(|(i, id)| SubjectRecord::patient(id.clone(), Gender::F, 60.0, (i * 7 % 133) as u16).ok())
        .collect();
    let _ = fuse_loso(&dm, &records);
});
