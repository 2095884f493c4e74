//! Joint optimization of transmit power, harvest time-split and code rate for
//! a time-switching receiver that must power its own decoder from harvested
//! RF energy.
//!
//! [`single_block::algorithm1`] solves one block exactly.
//! [`multi_block::iterative_solver`] plans several blocks with energy carried
//! forward between them. [`oracle`] holds the brute-force references used to
//! check both.

pub mod channel;
pub mod cli;
pub mod decoder_energy;
pub mod error;
pub mod lp;
pub mod multi_block;
pub mod oracle;
pub mod params;
mod roots;
pub mod single_block;

pub use decoder_energy::{inverse_energy, power_law_model, theta_log_theta_model, DecoderEnergy, DecoderEnergyModel};
pub use error::{Error, Result};
pub use multi_block::{iterative_solver, MultiBlockProblem, MultiBlockSolution, TransferSchedule};
pub use params::SystemParams;
pub use single_block::{algorithm1, CandidateSolution, CaseLabel, FullSolution, SingleBlockOutcome};
