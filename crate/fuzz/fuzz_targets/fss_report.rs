#![no_main]

use libfuzzer_sys::fuzz_target;
use lmg_gmc_cli::report::FssReport;

fuzz_target!(|data: &[u8]| {
    if let Ok(reports) = serde_json::from_slice::<Vec<FssReport>>(data) {
        let text = serde_json::to_vec(&reports).unwrap();
        let _ = serde_json::from_slice::<Vec<FssReport>>(&text);
    }
    let _ = serde_json::from_slice::<FssReport>(data);
});
