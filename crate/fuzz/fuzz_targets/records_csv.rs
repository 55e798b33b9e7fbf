#![no_main]

use cvqkd::formats::{read_records_csv, write_records_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(records) = read_records_csv(data) else {
        return;
    };
    assert!(records.iter().all(|r| r.is_finite()));
    let mut out = Vec::new();
    write_records_csv(&mut out, &records).unwrap();
    assert_eq!(read_records_csv(out.as_slice()).unwrap(), records);
});
