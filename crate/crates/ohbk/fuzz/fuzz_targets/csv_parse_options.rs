//! Fuzzes the parser together with its whole option surface: arbitrary
//! delimiter byte, header flag, missing-value token, and column spec.

#![no_main]

use arbitrary::Arbitrary;
use libfuzzer_sys::fuzz_target;
use ohbk::sources::dataset::{parse_column_select, parse_csv_matrix, CsvOptions};

#[derive(Arbitrary, Debug)]
struct Input<'a> {
    delimiter: u8,
    skip_header: bool,
    missing_token: String,
    column_spec: String,
    data: &'a [u8],
}

fuzz_target!(|input: Input| {
    let Ok(columns) = parse_column_select(&input.column_spec) else {
        return;
    };
    let options = CsvOptions {
        delimiter: input.delimiter,
        skip_header: input.skip_header,
        missing_token: input.missing_token,
        columns,
    };
    if let Ok(ds) = parse_csv_matrix(input.data, &options) {
        assert!(ds.nrows() >= 1);
        assert!(ds.ncols() >= 1);
        for i in 0..ds.nrows() {
            assert_eq!(ds.row(i).len(), ds.ncols());
        }
        // The accessor enforces finiteness; exercise it on both ends.
        let _ = ds.row_vector(0);
        let _ = ds.row_vector(ds.nrows() - 1);
    }
});
