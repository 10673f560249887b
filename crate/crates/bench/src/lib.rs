//! Shared workloads for the criterion benches under `benches/`.

use toeplitz_core::constructions::p4;
use toeplitz_core::DirectiveSequence;

/// Depth at which the P4 level words exceed 2000 letters.
pub const DEPTH: usize = 7;

/// The systems benchmarked, by name.
pub fn systems() -> Vec<(&'static str, DirectiveSequence)> {
    vec![("p4", p4())]
}
