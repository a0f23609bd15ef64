use super::model::{BlockModel, Family, Partition};
use crate::graph::Snapshot;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

fn draw<R: Rng + ?Sized>(family: Family, x: f64, rng: &mut R) -> u32 {
    match family {
        Family::Bernoulli => u32::from(x > 0.0 && rng.random::<f64>() < x.min(1.0)),
        Family::Poisson if x > 0.0 => Poisson::new(x).map_or(0, |d| d.sample(rng) as u32),
        Family::Poisson => 0,
    }
}

/// Draws one graph from `model` with node `u` in block `partition[u]`.
///
/// Every pair (ordered pair when directed) is independent. Rates are not
/// clamped here, so zero affinities produce no links.
pub fn sample_graph<R: Rng + ?Sized>(
    model: &BlockModel,
    partition: &Partition,
    rng: &mut R,
) -> Result<Snapshot> {
    model.validate()?;
    if partition.k() != model.k() {
        return Err(Error::InvalidInput("partition and model disagree on K".into()));
    }
    let n = partition.node_count();
    if model.degree.as_ref().is_some_and(|d| d.weights.len() != n) {
        return Err(Error::InvalidInput("degree correction size mismatch".into()));
    }
    let g = partition.labels();
    let mut edges = Vec::new();
    let mut pair = |u: usize, v: usize, rng: &mut R| {
        let x = model.pair_rate(g[u], g[v], u, v);
        let count = draw(model.family, x, rng);
        if count > 0 {
            edges.push((u, v, count));
        }
    };
    for u in 0..n {
        for v in u + 1..n {
            pair(u, v, rng);
            if model.directed {
                pair(v, u, rng);
            }
        }
    }
    Snapshot::from_edges(n, model.directed, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::sbm::model::Affinity;

    #[test]
    fn zero_rates_give_empty_graph() {
        let m = BlockModel::new(Family::Poisson, vec![0.5, 0.5], Affinity::filled(2, 0.0)).unwrap();
        let p = Partition::from_block_sizes(&[3, 3]).unwrap();
        let g = sample_graph(&m, &p, &mut stream(1, &[])).unwrap();
        assert_eq!(g.pair_count(), 0);
    }

    #[test]
    fn certain_links_give_complete_graph() {
        let m = BlockModel::new(Family::Bernoulli, vec![1.0], Affinity::filled(1, 1.0)).unwrap();
        let p = Partition::from_block_sizes(&[6]).unwrap();
        let g = sample_graph(&m, &p, &mut stream(1, &[])).unwrap();
        assert_eq!(g.pair_count(), 15);
        assert!(g.is_simple());
    }
}
