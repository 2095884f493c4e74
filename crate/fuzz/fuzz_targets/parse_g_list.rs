#![no_main]

use eh_opt::cli::args::parse_g_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(list) = parse_g_list(data) {
        assert!(!list.is_empty());
        assert!(list.iter().all(|g| g.is_finite() && *g >= 0.0));
    }
});
