//! Complete-data log-likelihoods `ln P(A, g | n, Q)`.
//!
//! Probabilities and rates are clamped (see [`Family::clamp`]) before taking
//! logarithms, and `0 * ln 0` terms are dropped.

use super::model::{BlockModel, Family, Partition};
use crate::graph::Snapshot;
use crate::{Error, Result};
use statrs::function::factorial::ln_factorial;

/// `sum_{u<v} ln(A_uv!)` (over ordered pairs when directed).
pub fn ln_factorial_sum(graph: &Snapshot) -> f64 {
    graph
        .edges()
        .iter()
        .filter(|e| e.count > 1)
        .map(|e| ln_factorial(e.count as u64))
        .sum()
}

fn prior_term(model: &BlockModel, sizes: &[usize]) -> f64 {
    sizes
        .iter()
        .zip(&model.priors)
        .filter(|(&n, _)| n > 0)
        .map(|(&n, &p)| n as f64 * p.ln())
        .sum()
}

/// `sum_u ln n_{g_u}`: the block-prior part of the complete-data likelihood.
pub fn partition_log_prior(partition: &Partition, model: &BlockModel) -> Result<f64> {
    if partition.k() != model.k() {
        return Err(Error::InvalidInput(format!(
            "partition has K = {}, model has K = {}",
            partition.k(),
            model.k()
        )));
    }
    Ok(prior_term(model, &partition.block_sizes()))
}

fn check(graph: &Snapshot, partition: &Partition, model: &BlockModel) -> Result<()> {
    model.validate()?;
    if partition.k() != model.k() {
        return Err(Error::InvalidInput(format!(
            "partition has K = {}, model has K = {}",
            partition.k(),
            model.k()
        )));
    }
    if partition.node_count() != graph.node_count() {
        return Err(Error::InvalidInput("partition and graph sizes differ".into()));
    }
    if let Some(d) = &model.degree {
        if d.weights.len() != graph.node_count() {
            return Err(Error::InvalidInput("degree correction size mismatch".into()));
        }
    }
    if model.directed != graph.directed() {
        return Err(Error::InvalidInput("model and graph directedness differ".into()));
    }
    Ok(())
}

/// Log of the Bernoulli block-model likelihood on a simple graph.
pub fn bernoulli_log_likelihood(
    graph: &Snapshot,
    partition: &Partition,
    model: &BlockModel,
) -> Result<f64> {
    if model.family != Family::Bernoulli {
        return Err(Error::InvalidArgument("model family is not Bernoulli".into()));
    }
    check(graph, partition, model)?;
    if !graph.is_simple() {
        return Err(Error::InvalidInput(
            "Bernoulli likelihood needs a simple graph (entries 0/1)".into(),
        ));
    }
    let counts = partition.counts(graph)?;
    let mut ll = prior_term(model, &counts.sizes);
    if model.degree.is_none() {
        for (r, s) in counts.block_pairs() {
            let q = Family::Bernoulli.clamp(model.affinity.get(r, s));
            let (m, pairs) = (counts.links(r, s), counts.pairs(r, s));
            if m > 0.0 {
                ll += m * q.ln();
            }
            if pairs - m > 0.0 {
                ll += (pairs - m) * (1.0 - q).ln();
            }
        }
        return Ok(ll);
    }
    // Degree-corrected probabilities differ per pair.
    let n = graph.node_count();
    let g = partition.labels();
    for u in 0..n {
        let others: Box<dyn Iterator<Item = usize>> = if graph.directed() {
            Box::new((0..n).filter(move |&v| v != u))
        } else {
            Box::new(u + 1..n)
        };
        for v in others {
            let p = Family::Bernoulli.clamp(model.pair_rate(g[u], g[v], u, v));
            ll += if graph.multiplicity(u, v) > 0 {
                p.ln()
            } else {
                (1.0 - p).ln()
            };
        }
    }
    Ok(ll)
}

/// Log of the Poisson (multigraph) block-model likelihood.
pub fn poisson_log_likelihood(
    graph: &Snapshot,
    partition: &Partition,
    model: &BlockModel,
) -> Result<f64> {
    if model.family != Family::Poisson {
        return Err(Error::InvalidArgument("model family is not Poisson".into()));
    }
    check(graph, partition, model)?;
    let counts = partition.counts(graph)?;
    let mut ll = prior_term(model, &counts.sizes) - ln_factorial_sum(graph);
    match &model.degree {
        None => {
            for (r, s) in counts.block_pairs() {
                let q = Family::Poisson.clamp(model.affinity.get(r, s));
                let m = counts.links(r, s);
                if q <= 0.0 && m > 0.0 {
                    return Err(Error::Numerical(format!(
                        "zero rate for block pair ({r}, {s}) with {m} links"
                    )));
                }
                if m > 0.0 {
                    ll += m * q.ln();
                }
                ll -= counts.pairs(r, s) * q;
            }
        }
        Some(dc) => {
            let g = partition.labels();
            for e in graph.edges() {
                let (u, v) = (e.u as usize, e.v as usize);
                let rate = Family::Poisson.clamp(model.pair_rate(g[u], g[v], u, v));
                ll += e.count as f64 * rate.ln();
            }
            // Expected total: sum over pairs of Q_{g_u g_v} w_u w_v, in block form.
            let k = model.k();
            let mut mass = vec![0.0; k];
            let mut square = vec![0.0; k];
            for (u, &w) in dc.weights.iter().enumerate() {
                mass[g[u]] += w;
                square[g[u]] += w * w;
            }
            for (r, s) in counts.block_pairs() {
                let weight_pairs = if r != s {
                    mass[r] * mass[s]
                } else if graph.directed() {
                    mass[r] * mass[r] - square[r]
                } else {
                    (mass[r] * mass[r] - square[r]) / 2.0
                };
                ll -= model.affinity.get(r, s) * weight_pairs;
            }
        }
    }
    Ok(ll)
}

/// Dispatches on the model family.
pub fn log_likelihood(graph: &Snapshot, partition: &Partition, model: &BlockModel) -> Result<f64> {
    match model.family {
        Family::Bernoulli => bernoulli_log_likelihood(graph, partition, model),
        Family::Poisson => poisson_log_likelihood(graph, partition, model),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbm::model::Affinity;

    fn model(family: Family, priors: Vec<f64>, rows: Vec<Vec<f64>>) -> BlockModel {
        BlockModel::new(family, priors, Affinity::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn bernoulli_trivial_cases() {
        let g = Snapshot::empty(2, false);
        let p = Partition::new(1, vec![0, 0]).unwrap();
        let m = model(Family::Bernoulli, vec![1.0], vec![vec![0.0]]);
        assert!(bernoulli_log_likelihood(&g, &p, &m).unwrap().abs() < 1e-8);

        let tri = Snapshot::from_edges(3, false, [(0, 1, 1), (1, 2, 1), (0, 2, 1)]).unwrap();
        let p = Partition::new(1, vec![0; 3]).unwrap();
        let m = model(Family::Bernoulli, vec![1.0], vec![vec![0.5]]);
        let ll = bernoulli_log_likelihood(&tri, &p, &m).unwrap();
        assert!((ll - 3.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((ll + 2.07944).abs() < 1e-5);
    }

    #[test]
    fn bernoulli_rejects_multigraph() {
        let g = Snapshot::from_edges(2, false, [(0, 1, 2)]).unwrap();
        let p = Partition::new(1, vec![0, 0]).unwrap();
        let m = model(Family::Bernoulli, vec![1.0], vec![vec![0.5]]);
        assert!(bernoulli_log_likelihood(&g, &p, &m).is_err());
    }

    #[test]
    fn poisson_trivial_cases() {
        let g = Snapshot::empty(3, false);
        let p = Partition::new(1, vec![0; 3]).unwrap();
        let m = model(Family::Poisson, vec![1.0], vec![vec![0.0]]);
        assert!(poisson_log_likelihood(&g, &p, &m).unwrap().abs() < 1e-10);

        let g = Snapshot::from_edges(2, false, [(0, 1, 2)]).unwrap();
        let p = Partition::new(1, vec![0, 0]).unwrap();
        let m = model(Family::Poisson, vec![1.0], vec![vec![1.0]]);
        let ll = poisson_log_likelihood(&g, &p, &m).unwrap();
        assert!((ll - (-1.0 - 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn family_mismatch_is_error() {
        let g = Snapshot::empty(2, false);
        let p = Partition::new(1, vec![0, 0]).unwrap();
        let m = model(Family::Poisson, vec![1.0], vec![vec![1.0]]);
        assert!(bernoulli_log_likelihood(&g, &p, &m).is_err());
    }

    #[test]
    fn degree_corrected_poisson_matches_per_pair_sum() {
        use crate::sbm::degree::apply_degree_correction;
        let g = Snapshot::from_edges(
            5,
            false,
            [(0, 1, 2), (0, 2, 1), (1, 2, 1), (2, 3, 1), (3, 4, 3)],
        )
        .unwrap();
        let p = Partition::new(2, vec![0, 0, 0, 1, 1]).unwrap();
        let mut m = model(Family::Poisson, vec![0.6, 0.4], vec![vec![1.2, 0.3], vec![0.3, 2.0]]);
        m.degree = Some(apply_degree_correction(&g, &p).unwrap());
        let fast = poisson_log_likelihood(&g, &p, &m).unwrap();
        let mut slow = 3.0 * 0.6f64.ln() + 2.0 * 0.4f64.ln();
        for u in 0..5 {
            for v in u + 1..5 {
                let a = g.multiplicity(u, v);
                let rate = m.pair_rate(p.block(u), p.block(v), u, v).max(1e-12);
                slow += a as f64 * rate.ln() - rate - ln_factorial(a as u64);
            }
        }
        assert!((fast - slow).abs() < 1e-10, "{fast} vs {slow}");
    }
}
