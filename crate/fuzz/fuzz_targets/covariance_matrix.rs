#![no_main]

use cvqkd::{symplectic_spectrum, CovarianceMatrix};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&modes, rest)) = data.split_first() else {
        return;
    };
    let n = usize::from(modes % 4) + 1;
    let values: Vec<f64> = rest
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if values.len() < 4 * n * n {
        return;
    }
    let Ok(gamma) = CovarianceMatrix::from_row_slice(n, &values[..4 * n * n]) else {
        return;
    };
    if let Ok(spec) = symplectic_spectrum(&gamma) {
        assert_eq!(spec.len(), n);
        assert!(spec.min() >= 1.0 - 1e-6, "{:?}", spec.values());
    }
});
