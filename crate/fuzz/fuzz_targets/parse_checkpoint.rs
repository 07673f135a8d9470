#![no_main]

use libfuzzer_sys::fuzz_target;
use logdet_ftrl::engine::EngineConfig;
use logdet_ftrl::formats::{parse_checkpoint, write_checkpoint};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ck) = parse_checkpoint(text) {
        assert_eq!(parse_checkpoint(&write_checkpoint(&ck)).expect("written checkpoints parse"), ck);
        if ck.n * ck.k <= 16 {
            let config = EngineConfig::new(ck.n, ck.k, 10);
            let _ = ck.restore(config);
        }
    }
});
