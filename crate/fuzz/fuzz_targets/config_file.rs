#![no_main]

use libfuzzer_sys::fuzz_target;
use lmg_gmc_cli::config::ConfigFile;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(file) = ConfigFile::parse(s, "fuzz.conf") {
            let _ = file.get::<usize>("n");
            let _ = file.get::<f64>("h");
            let _ = file.raw("k");
        }
    }
});
