#![no_main]

use libfuzzer_sys::fuzz_target;
use lmg_gmc::criticality_scan::OrderSpec;
use lmg_gmc_cli::parse::{parse_field, parse_h_range, parse_orders};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = parse_h_range(s) {
        assert!(grid.len >= 1);
        assert!(grid.points().iter().all(|h| h.is_finite()));
    }
    if let Ok(h) = parse_field(s) {
        assert!(h.is_finite());
    }
    if let Ok(orders) = parse_orders(s) {
        let text: Vec<String> = orders.iter().map(OrderSpec::to_string).collect();
        assert_eq!(parse_orders(&text.join(",")).unwrap(), orders);
    }
});
