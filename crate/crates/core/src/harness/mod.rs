//! Random instances, benchmark statistics, and the brute-force equilibrium
//! enumerator used as an oracle on tiny markets.

mod bench;
mod enumerate;
mod generate;

pub use bench::{run_benchmark, run_instance, BenchStats, InstanceOutcome, InstanceRecord};
pub use enumerate::{enumerate_equilibria, EnumerateError, Enumeration, MAX_ENUMERATION_DIM};
pub use generate::{generate_random_market, GenError, GenParams};
