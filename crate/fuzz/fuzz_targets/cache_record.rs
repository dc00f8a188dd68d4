#![no_main]

use libfuzzer_sys::fuzz_target;
use lmg_gmc_cli::cache::{decode_record, encode_record};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(gs) = decode_record(s) {
        // Anything accepted must survive a round trip unchanged.
        let again = decode_record(&encode_record(&gs)).unwrap();
        assert_eq!(again, gs);
    }
});
