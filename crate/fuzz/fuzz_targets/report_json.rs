#![no_main]

use cvqkd::formats::parse_report;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = parse_report(text) {
        let again = parse_report(&file.to_json().unwrap()).unwrap();
        assert_eq!(again, file);
    }
});
