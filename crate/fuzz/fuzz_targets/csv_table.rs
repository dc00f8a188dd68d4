#![no_main]

use libfuzzer_sys::fuzz_target;
use lmg_gmc_cli::table::{read_table, write_table};

fn same(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

fuzz_target!(|data: &[u8]| {
    let Ok(table) = read_table(data) else {
        return;
    };
    let mut buf = Vec::new();
    write_table(&mut buf, &table).unwrap();
    let again = read_table(buf.as_slice()).unwrap();
    assert_eq!(again.headers, table.headers);
    assert_eq!(again.rows.len(), table.rows.len());
    for (x, y) in again.rows.iter().zip(&table.rows) {
        assert!(x.len() == y.len() && x.iter().zip(y).all(|(&a, &b)| same(a, b)));
    }
});
