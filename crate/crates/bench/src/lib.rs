//! Fixtures shared by the benchmarks.

use msfuzzy::markov::simulate_ms;
use msfuzzy::rng::rng_from_seed;
use msfuzzy::{find_dgp, MSModelSpec, StatePath, TimeSeries};

/// A simulated series from a catalog DGP with its true states.
pub fn fixture(label: &str, len: usize, seed: u64) -> (MSModelSpec, TimeSeries, StatePath) {
    let (_, entry) = find_dgp(label).expect("catalog label");
    let mut rng = rng_from_seed(seed);
    let (y, s) = simulate_ms(&entry.spec, len, &mut rng).expect("valid catalog spec");
    (entry.spec, y, s)
}
