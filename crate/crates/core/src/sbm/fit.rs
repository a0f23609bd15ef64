//! Expectation-maximisation fitting with restarts and selection of `K`.

use super::bp::{BeliefPropagation, BpOptions, MessageState, PairGraph};
use super::degree::correction_from_degrees;
use super::likelihood::log_likelihood;
use super::mdl::description_length;
use super::model::{Affinity, BlockModel, Family, Partition};
use crate::graph::Snapshot;
use crate::rng::stream;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub restarts: usize,
    pub bp: BpOptions,
    pub max_outer: usize,
    /// Convergence threshold on the L-infinity change of `n`, `Q` and `theta`.
    pub param_tolerance: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 10,
            bp: BpOptions::default(),
            max_outer: 100,
            param_tolerance: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartDiagnostics {
    pub restart: usize,
    pub outer_iterations: usize,
    pub sweeps: usize,
    pub converged: bool,
    pub log_likelihood: f64,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub model: BlockModel,
    pub state: MessageState,
    /// MAP partition, ties to the lowest block.
    pub partition: Partition,
    /// Complete-data log-likelihood at `partition`.
    pub log_likelihood: f64,
    pub description_length: f64,
    pub converged: bool,
    pub diagnostics: Vec<RestartDiagnostics>,
    pub seed: u64,
}

/// Serialized form of a [`FitResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    #[serde(rename = "K")]
    pub k: usize,
    pub family: Family,
    pub degree_corrected: bool,
    pub n: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: Affinity,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta: Option<Vec<f64>>,
    pub partition: Vec<usize>,
    pub log_likelihood: f64,
    pub description_length: f64,
    pub converged: bool,
    pub restarts: usize,
    pub seed: u64,
}

impl FitResult {
    pub fn k(&self) -> usize {
        self.model.k()
    }

    pub fn summary(&self) -> FitSummary {
        FitSummary {
            k: self.model.k(),
            family: self.model.family,
            degree_corrected: self.model.degree_corrected(),
            n: self.model.priors.clone(),
            q: self.model.affinity.clone(),
            theta: self.model.degree.as_ref().map(|d| d.theta.clone()),
            partition: self.partition.labels().to_vec(),
            log_likelihood: self.log_likelihood,
            description_length: self.description_length,
            converged: self.converged,
            restarts: self.diagnostics.len(),
            seed: self.seed,
        }
    }
}

/// Parameters that make every pair factor identical; estimating against it
/// yields the plain moment estimates of the initial messages.
fn flat_model(graph: &PairGraph, k: usize, family: Family) -> Result<BlockModel> {
    let density = match family {
        Family::Bernoulli => graph.density().min(1.0),
        Family::Poisson => graph.density(),
    };
    BlockModel::with_direction(
        family,
        graph.directed(),
        vec![1.0 / k as f64; k],
        Affinity::filled(k, density),
    )
}

fn map_partition(state: &MessageState) -> Partition {
    Partition::new(state.k(), state.map_labels()).expect("labels are below K")
}

fn param_change(a: &BlockModel, b: &BlockModel) -> f64 {
    let priors = a
        .priors
        .iter()
        .zip(&b.priors)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let theta = match (&a.degree, &b.degree) {
        (Some(x), Some(y)) => x
            .theta
            .iter()
            .zip(&y.theta)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max),
        _ => 0.0,
    };
    priors.max(a.affinity.max_abs_diff(&b.affinity)).max(theta)
}

struct Run {
    model: BlockModel,
    state: MessageState,
    converged: bool,
    outer: usize,
    sweeps: usize,
}

struct Problem<'a> {
    graph: &'a Snapshot,
    pairs: PairGraph,
    degrees: Vec<f64>,
    k: usize,
    family: Family,
    degree_corrected: bool,
    opts: FitOptions,
}

impl Problem<'_> {
    fn with_estimates(&self, base: &BlockModel, state: &MessageState) -> Result<BlockModel> {
        let bp = BeliefPropagation::new(&self.pairs, base, self.opts.bp)?;
        self.model_from(bp.estimate(state)?, state)
    }

    fn model_from(&self, (priors, affinity): (Vec<f64>, Affinity), state: &MessageState) -> Result<BlockModel> {
        let mut model = BlockModel {
            family: self.family,
            directed: self.graph.directed(),
            priors,
            affinity,
            degree: None,
        };
        if self.degree_corrected {
            model.degree = Some(correction_from_degrees(&self.degrees, &map_partition(state)));
        }
        model.validate()?;
        Ok(model)
    }

    fn run(&self, mut state: MessageState) -> Result<Run> {
        let flat = flat_model(&self.pairs, self.k, self.family)?;
        let mut model = self.with_estimates(&flat, &state)?;
        let mut run = Run {
            model: model.clone(),
            state: state.clone(),
            converged: false,
            outer: 0,
            sweeps: 0,
        };
        for outer in 1..=self.opts.max_outer {
            let mut bp = BeliefPropagation::new(&self.pairs, &model, self.opts.bp)?;
            let outcome = bp.run(&mut state)?;
            let next = self.model_from(bp.estimate(&state)?, &state)?;
            let change = param_change(&model, &next);
            model = next;
            run.outer = outer;
            run.sweeps += outcome.sweeps;
            if outcome.converged && change < self.opts.param_tolerance {
                run.converged = true;
                break;
            }
        }
        run.model = model;
        run.state = state;
        Ok(run)
    }
}

/// Fits a `K`-block model by alternating belief propagation with parameter
/// re-estimation, keeping the best of `opts.restarts` random starts.
///
/// The returned result is flagged non-converged when no restart converged.
pub fn fit(
    graph: &Snapshot,
    k: usize,
    family: Family,
    degree_corrected: bool,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_with_init(graph, k, family, degree_corrected, opts, None)
}

/// As [`fit`], with the first restart seeded from the given node marginals
/// (`N * K`, row-major) instead of a random draw.
pub fn fit_with_init(
    graph: &Snapshot,
    k: usize,
    family: Family,
    degree_corrected: bool,
    opts: &FitOptions,
    init: Option<&[f64]>,
) -> Result<FitResult> {
    let n = graph.node_count();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("K = {k} outside 1..={n}")));
    }
    if opts.restarts == 0 && init.is_none() {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    let problem = Problem {
        graph,
        pairs: PairGraph::new(graph),
        degrees: graph.degrees(),
        k,
        family,
        degree_corrected,
        opts: *opts,
    };
    // One block has a single fixed point; extra restarts would repeat it.
    let restarts = if k == 1 { 1 } else { opts.restarts.max(1) };
    let runs: Vec<Result<(Run, Partition, f64)>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let state = match (r, init) {
                (0, Some(m)) => MessageState::from_marginals(&problem.pairs, k, m.to_vec())?,
                _ => MessageState::random(&problem.pairs, k, &mut stream(opts.seed, &[r as u64])),
            };
            let mut run = problem.run(state)?;
            let partition = map_partition(&run.state);
            if degree_corrected {
                run.model.degree = Some(correction_from_degrees(&problem.degrees, &partition));
            }
            let ll = log_likelihood(graph, &partition, &run.model)?;
            Ok((run, partition, ll))
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let diagnostics = runs
        .iter()
        .enumerate()
        .map(|(i, (run, _, ll))| RestartDiagnostics {
            restart: i,
            outer_iterations: run.outer,
            sweeps: run.sweeps,
            converged: run.converged,
            log_likelihood: *ll,
        })
        .collect();
    let any_converged = runs.iter().any(|(run, _, _)| run.converged);
    let mut best: Option<usize> = None;
    for (i, (run, _, ll)) in runs.iter().enumerate() {
        if any_converged && !run.converged {
            continue;
        }
        if best.is_none_or(|b| *ll > runs[b].2) {
            best = Some(i);
        }
    }
    let (run, partition, ll) = runs.into_iter().nth(best.expect("at least one restart")).unwrap();
    let dl = description_length(graph, &partition, graph.directed())?;
    Ok(FitResult {
        model: run.model,
        state: run.state,
        partition,
        log_likelihood: ll,
        description_length: dl,
        converged: run.converged,
        diagnostics,
        seed: opts.seed,
    })
}

/// Fits every `K` in `ks` (values above `N` are skipped) and returns the one
/// with the smallest description length; ties go to the smaller `K`.
pub fn fit_best_k(
    graph: &Snapshot,
    ks: impl IntoIterator<Item = usize>,
    family: Family,
    degree_corrected: bool,
    opts: &FitOptions,
) -> Result<FitResult> {
    let mut ks: Vec<usize> = ks
        .into_iter()
        .filter(|&k| k >= 1 && k <= graph.node_count())
        .collect();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(Error::InvalidArgument("no admissible K in range".into()));
    }
    let mut best: Option<FitResult> = None;
    for k in ks {
        let fit = fit(graph, k, family, degree_corrected, opts)?;
        if best
            .as_ref()
            .is_none_or(|b| fit.description_length < b.description_length)
        {
            best = Some(fit);
        }
    }
    Ok(best.expect("non-empty range"))
}
