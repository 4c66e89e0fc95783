#![no_main]

use frenet_kit::{parse_expr, Jet};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(input) = std::str::from_utf8(data) else {
        return;
    };
    match parse_expr(input) {
        Ok(expr) => {
            let _ = expr.eval(0.25);
            let _ = expr.eval_jet(&Jet::variable(-1.5, 6));
        }
        Err(e) => {
            assert!(e.position <= input.len());
            let _ = e.render(input);
        }
    }
});
