#![no_main]

use libfuzzer_sys::fuzz_target;
use logdet_ftrl::formats::{parse_transcript, write_transcript};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_transcript(text) {
        let written = write_transcript(&t).expect("parsed transcripts are writable");
        assert_eq!(parse_transcript(&written).expect("written transcripts parse"), t);
    }
});
