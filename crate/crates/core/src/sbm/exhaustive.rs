//! Exact maximum-likelihood fitting by enumerating every partition.
//!
//! Only feasible for tiny graphs; used as a reference fitter.

use super::bp::{MessageState, PairGraph};
use super::fit::FitResult;
use super::likelihood::log_likelihood;
use super::mdl::description_length;
use super::model::{Affinity, BlockModel, Family, Partition};
use crate::graph::Snapshot;
use crate::{Error, Result};

/// Largest number of labelings the enumerator accepts.
pub const MAX_LABELINGS: u64 = 5_000_000;

fn closed_form(graph: &Snapshot, partition: &Partition, family: Family) -> Result<BlockModel> {
    let counts = partition.counts(graph)?;
    let n = graph.node_count() as f64;
    let k = partition.k();
    let priors = counts.sizes.iter().map(|&s| s as f64 / n).collect();
    let mut q = Affinity::filled(k, 0.0);
    for (r, s) in counts.block_pairs() {
        let pairs = counts.pairs(r, s);
        let value = if pairs > 0.0 { counts.links(r, s) / pairs } else { 0.0 };
        q.set(r, s, value);
        if !graph.directed() {
            q.set(s, r, value);
        }
    }
    if family == Family::Bernoulli {
        for r in 0..k {
            for s in 0..k {
                q.set(r, s, q.get(r, s).min(1.0));
            }
        }
    }
    BlockModel::with_direction(family, graph.directed(), priors, q)
}

/// Exhaustive fit of a `K`-block model without degree correction.
///
/// `replicates` weights the block-prior term: the aggregate of `replicates`
/// snapshots is scored as that many independent draws of the partition, so
/// the optimum is the maximum-likelihood fit of the per-snapshot model whose
/// rates are `Q / replicates`. Pass 1 for an ordinary single-graph fit and 0
/// to maximise the link likelihood alone, with the prior left out.
pub fn fit_exhaustive(
    graph: &Snapshot,
    k: usize,
    family: Family,
    replicates: usize,
) -> Result<FitResult> {
    let n = graph.node_count();
    if k == 0 || k > n.max(1) {
        return Err(Error::InvalidArgument(format!("K = {k} outside 1..={n}")));
    }
    let total = (k as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if total > MAX_LABELINGS {
        return Err(Error::InvalidArgument(format!(
            "{k}^{n} labelings exceed the enumeration limit"
        )));
    }
    let mut labels = vec![0usize; n];
    let mut best: Option<(f64, Partition, BlockModel)> = None;
    for _ in 0..total {
        let partition = Partition::new(k, labels.clone())?;
        let model = closed_form(graph, &partition, family)?;
        let ll = log_likelihood(graph, &partition, &model)?;
        let prior: f64 = partition
            .block_sizes()
            .iter()
            .zip(&model.priors)
            .filter(|(&s, _)| s > 0)
            .map(|(&s, &p)| s as f64 * p.ln())
            .sum();
        let score = ll + (replicates as f64 - 1.0) * prior;
        if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
            best = Some((score, partition, model));
        }
        // Odometer increment over labelings.
        for slot in labels.iter_mut() {
            *slot += 1;
            if *slot < k {
                break;
            }
            *slot = 0;
        }
    }
    let (_, partition, model) = best.expect("at least one labeling");
    let pairs = PairGraph::new(graph);
    let mut marginals = vec![0.0; n * k];
    for (u, &g) in partition.labels().iter().enumerate() {
        marginals[u * k + g] = 1.0;
    }
    let state = MessageState::from_marginals(&pairs, k, marginals)?;
    let ll = log_likelihood(graph, &partition, &model)?;
    let dl = description_length(graph, &partition, graph.directed())?;
    Ok(FitResult {
        model,
        state,
        partition,
        log_likelihood: ll,
        description_length: dl,
        converged: true,
        diagnostics: Vec::new(),
        seed: 0,
    })
}
