#![no_main]

use eh_opt::cli::args::{SweepSpec, MAX_SWEEP_POINTS};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(spec) = data.parse::<SweepSpec>() {
        assert!(spec.step > 0.0 && spec.stop >= spec.start);
        let values = spec.values();
        assert!(!values.is_empty() && values.len() <= MAX_SWEEP_POINTS + 1);
    }
});
