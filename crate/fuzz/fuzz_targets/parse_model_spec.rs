#![no_main]

use eh_opt::{DecoderEnergy, DecoderEnergyModel};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(model) = data.parse::<DecoderEnergyModel>() {
        // Accepted specs must describe a usable model and print back to themselves.
        assert_eq!(model.energy(1.0), 0.0);
        let again: DecoderEnergyModel = model.to_string().parse().expect("display output parses");
        assert_eq!(again, model);
    }
});
