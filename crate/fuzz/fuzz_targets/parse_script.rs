#![no_main]

use libfuzzer_sys::fuzz_target;
use logdet_ftrl::environment::{format_script, parse_script, Problem};

// First byte: problem and label count; second byte: item count.
fuzz_target!(|data: &[u8]| {
    let [mode, n, rest @ ..] = data else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let (problem, k) = if mode % 2 == 0 {
        (Problem::MaxCut, 2)
    } else {
        (Problem::Gambling, 2 + (*mode as usize / 2) % 6)
    };
    let n = 1 + *n as usize % 16;
    if let Ok(rounds) = parse_script(text, problem, n, k, 1) {
        let written = format_script(&rounds, problem).expect("parsed rounds are writable");
        assert_eq!(parse_script(&written, problem, n, k, 1).expect("written rounds parse"), rounds);
    }
});
