#![no_main]

use eh_opt::cli::args::{GridDims, MAX_GRID_SIDE};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(dims) = data.parse::<GridDims>() {
        assert!((1..=MAX_GRID_SIDE).contains(&dims.rows));
        assert!((1..=MAX_GRID_SIDE).contains(&dims.cols));
        assert_eq!(dims.to_string().parse::<GridDims>().ok(), Some(dims));
    }
});
