#![no_main]

use frenet_kit::{canonical_matrix, parse_curve, DslError};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(input) = std::str::from_utf8(data) else {
        return;
    };
    match parse_curve(input) {
        Ok(spec) => {
            if spec.dim() <= 8 {
                let _ = canonical_matrix(&spec, 0.5);
            }
        }
        Err(DslError::Parse(e)) => {
            assert!(e.position <= input.len());
            let _ = e.render(input);
        }
        Err(_) => {}
    }
});
