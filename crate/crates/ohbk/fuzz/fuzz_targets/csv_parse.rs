//! Feeds raw bytes to the dataset parser under a few fixed option sets.
//! Accepted input must come out rectangular, non-empty, and finite.

#![no_main]

use libfuzzer_sys::fuzz_target;
use ohbk::sources::dataset::{parse_csv_matrix, ColumnSelect, CsvOptions};

fuzz_target!(|data: &[u8]| {
    let option_sets = [
        CsvOptions::default(),
        CsvOptions {
            delimiter: b';',
            skip_header: true,
            missing_token: "NA".to_string(),
            columns: ColumnSelect::All,
        },
        CsvOptions {
            delimiter: b',',
            skip_header: false,
            missing_token: "?".to_string(),
            columns: ColumnSelect::Keep(vec![0, 2, 3]),
        },
    ];
    for options in &option_sets {
        if let Ok(ds) = parse_csv_matrix(data, options) {
            assert!(ds.nrows() >= 1);
            assert!(ds.ncols() >= 1);
            for i in 0..ds.nrows() {
                let row = ds.row(i);
                assert_eq!(row.len(), ds.ncols());
                assert!(row.iter().all(|v| v.is_finite()));
            }
        }
    }
});
