//! Shared fixtures for the benchmarks.

use slosh_core::geometry::{make_hemisphere, MeridianDomain};
use slosh_core::mesh::GradingSpec;

/// Cell counts exercised by the size sweeps.
pub const SIZES: [usize; 3] = [16, 32, 64];

pub fn domain() -> MeridianDomain {
    make_hemisphere()
}

pub fn spec(n: usize) -> GradingSpec {
    GradingSpec::new(n, n)
}
