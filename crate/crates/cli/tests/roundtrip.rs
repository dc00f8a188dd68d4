use lmg_gmc::{ground_state, ModelParams};
use lmg_gmc_cli::cache::{cache_file_name, decode_record, encode_record};
use lmg_gmc_cli::parse::parse_h_range;
use lmg_gmc_cli::table::{read_table, write_table, ColumnKind, Table};
use proptest::prelude::*;

fn table_strategy() -> impl Strategy<Value = Table> {
    (1usize..6, 0usize..20).prop_flat_map(|(cols, rows)| {
        let kinds = prop::collection::vec(prop::bool::ANY, cols);
        let cells = prop::collection::vec(
            prop::collection::vec((prop::num::f64::NORMAL | prop::num::f64::ZERO, -1_000_000i64..1_000_000), cols),
            rows,
        );
        (kinds, cells).prop_map(move |(kinds, cells)| {
            let kinds: Vec<ColumnKind> = kinds
                .into_iter()
                .map(|real| if real { ColumnKind::Real } else { ColumnKind::Integer })
                .collect();
            let headers = (0..kinds.len()).map(|j| format!("c{j}")).collect();
            let mut table = Table::new(headers, kinds.clone());
            table.rows = cells
                .into_iter()
                .map(|row| {
                    row.into_iter()
                        .zip(&kinds)
                        .map(|((real, int), kind)| match kind {
                            ColumnKind::Real => real,
                            ColumnKind::Integer => int as f64,
                        })
                        .collect()
                })
                .collect();
            table
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tables_read_back_bit_for_bit(table in table_strategy()) {
        let mut buf = Vec::new();
        write_table(&mut buf, &table).unwrap();
        let back = read_table(buf.as_slice()).unwrap();
        prop_assert_eq!(&back.headers, &table.headers);
        prop_assert_eq!(back.rows.len(), table.rows.len());
        for (a, b) in back.rows.iter().flatten().zip(table.rows.iter().flatten()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        if !table.rows.is_empty() {
            for (k, (got, want)) in back.kinds.iter().zip(&table.kinds).enumerate() {
                if *want == ColumnKind::Real {
                    prop_assert_eq!(*got, ColumnKind::Real, "column {}", k);
                }
            }
        }
    }

    #[test]
    fn records_read_back_bit_for_bit(n in 2usize..40, gamma in 0.0f64..=1.0, h in 0.0f64..2.0) {
        let gs = ground_state(&ModelParams::new(n, gamma, h).unwrap()).unwrap();
        let back = decode_record(&encode_record(&gs)).unwrap();
        prop_assert_eq!(back, gs);
    }

    #[test]
    fn cache_names_separate_distinct_fields(n in 2usize..1000, h in 0.0f64..2.0, ulps in 1u64..4) {
        let a = ModelParams::new(n, 0.5, h).unwrap();
        let b = ModelParams::new(n, 0.5, f64::from_bits(h.to_bits() + ulps)).unwrap();
        prop_assert_ne!(cache_file_name(&a), cache_file_name(&b));
    }

    #[test]
    fn range_parser_never_panics(s in "\\PC{0,24}") {
        let _ = parse_h_range(&s);
    }

    #[test]
    fn ranges_cover_their_bounds(start in 0.0f64..1.0, count in 1usize..200) {
        let step = 0.005;
        let stop = start + step * count as f64;
        let grid = parse_h_range(&format!("{start}:{stop}:{step}")).unwrap();
        let points = grid.points();
        prop_assert_eq!(points.len(), count + 1);
        prop_assert!((points[count] - stop).abs() < 1e-9);
    }
}
