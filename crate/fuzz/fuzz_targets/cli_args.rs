#![no_main]

use cvqkd::cli::parse_args;
use libfuzzer_sys::fuzz_target;

// Parsing only; dispatch could run long scans or write files.
fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let _ = parse_args(std::iter::once("cvqkd").chain(text.split_whitespace()));
});
