//! Description length of a block partition, used to choose `K`.

use super::model::Partition;
use crate::graph::Snapshot;
use crate::{Error, Result};
use statrs::function::factorial::ln_factorial;

/// `ln ((n; m))`, the log of the number of multisets of size `m` drawn from
/// `n` kinds: `ln C(n + m - 1, m)`.
pub fn ln_multiset(n: u64, m: u64) -> f64 {
    match (n, m) {
        (_, 0) => 0.0,
        (0, _) => f64::INFINITY,
        _ => ln_factorial(n + m - 1) - ln_factorial(m) - ln_factorial(n - 1),
    }
}

/// Description length `Sigma` of `graph` under `partition`.
///
/// Data term: multiset coefficients over block pairs (every ordered pair of
/// blocks when `directed`). Model terms:
/// `ln ((K(K+1)/2; M)) + ln ((K; M)) + ln N! - sum_r N_r`. Link counts use
/// total multiplicity, so aggregated
/// multigraphs are handled by the same formula.
pub fn description_length(graph: &Snapshot, partition: &Partition, directed: bool) -> Result<f64> {
    if graph.directed() != directed {
        return Err(Error::InvalidInput(
            "directed flag does not match the graph".into(),
        ));
    }
    let counts = partition.counts(graph)?;
    let k = partition.k() as u64;
    let sizes: Vec<u64> = counts.sizes.iter().map(|&n| n as u64).collect();
    let mut sigma = 0.0;
    for (r, s) in counts.block_pairs() {
        let m = counts.links(r, s) as u64;
        let cells = if directed || r != s {
            sizes[r] * sizes[s]
        } else {
            sizes[r] * sizes[r].saturating_sub(1) / 2
        };
        sigma += ln_multiset(cells, m);
    }
    let m_total = counts.total_links() as u64;
    let n = partition.node_count() as u64;
    sigma += ln_multiset(k * (k + 1) / 2, m_total);
    sigma += ln_multiset(k, m_total);
    sigma += ln_factorial(n) - sizes.iter().sum::<u64>() as f64;
    Ok(sigma)
}
