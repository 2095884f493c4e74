#![no_main]

use eh_opt::cli::parse_args;
use libfuzzer_sys::fuzz_target;

// Argument parsing only: executing a parsed command could legitimately run
// for a long time (large grids, long sweeps).
fuzz_target!(|data: &str| {
    let argv = std::iter::once("eh-opt").chain(data.split('\n'));
    let _ = parse_args(argv);
});
