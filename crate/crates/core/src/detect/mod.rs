//! Sliding-window change-point detection with a block-model likelihood ratio.
//!
//! For a window of `w` snapshots a single Poisson block model (the null) is
//! fitted to the aggregate, and for every split `t_n` two models are fitted
//! to the snapshots before and after it. The statistic `g` is the largest
//! log-likelihood ratio over the splits; its p-value comes from re-scanning
//! surrogate windows drawn from the null model.

mod report;

pub use report::{DetectionReport, WindowRecord};

use crate::graph::{filter_active_nodes, Snapshot, TemporalNetwork};
use crate::rng::{derive_seed, stream};
use crate::sbm::{
    description_length, fit_best_k, fit_exhaustive, fit_with_init, partition_log_prior,
    poisson_log_likelihood,
    sample_graph, BlockModel, Family, FitOptions, FitResult, Partition,
};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How the number of blocks of the null model is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KPolicy {
    /// Minimum description length over `min..=max`.
    Select { min: usize, max: usize },
    Fixed(usize),
}

impl Default for KPolicy {
    fn default() -> Self {
        KPolicy::Select { min: 1, max: 6 }
    }
}

/// Block count of the two segment models.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentK {
    /// Same `K` as the null model.
    #[default]
    Shared,
    /// Each segment selects its own `K` under the same policy.
    Independent,
}

/// How often the block-prior term `sum_u ln n_{g_u}` enters a segment's
/// likelihood.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionPrior {
    /// Left out: segments are compared by their link likelihood given the
    /// fitted memberships.
    #[default]
    Omitted,
    /// Once per segment: memberships are drawn once and shared by its snapshots.
    Segment,
    /// Once per snapshot, as if memberships were redrawn every time.
    Snapshot,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Belief propagation with EM (the normal path).
    #[default]
    BeliefPropagation,
    /// Exact maximum likelihood by enumerating partitions; tiny graphs only.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub window: usize,
    pub alpha: f64,
    pub bootstrap: usize,
    pub degree_corrected: bool,
    pub k: KPolicy,
    pub segment_k: SegmentK,
    /// Engine options for the null-model fit (restarts, tolerances, caps).
    pub fit: FitOptions,
    /// Random restarts for a segment fit in addition to the warm start from
    /// the null model's marginals.
    pub segment_restarts: usize,
    pub method: FitMethod,
    pub prior: PartitionPrior,
    /// Restrict every window to nodes with at least one link in it.
    pub active_nodes: bool,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            window: 16,
            alpha: 0.05,
            bootstrap: 200,
            degree_corrected: false,
            k: KPolicy::default(),
            segment_k: SegmentK::default(),
            fit: FitOptions::default(),
            segment_restarts: 0,
            method: FitMethod::default(),
            prior: PartitionPrior::default(),
            active_nodes: false,
            seed: 0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidArgument(format!("window {} < 2", self.window)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        if self.bootstrap == 0 {
            return Err(Error::InvalidArgument("bootstrap count must be positive".into()));
        }
        if self.fit.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be positive".into()));
        }
        match self.k {
            KPolicy::Fixed(0) => return Err(Error::InvalidArgument("K must be positive".into())),
            KPolicy::Select { min, max } if min == 0 || min > max => {
                return Err(Error::InvalidArgument(format!("bad K range {min}..={max}")))
            }
            _ => {}
        }
        if self.method == FitMethod::Exhaustive && self.degree_corrected {
            return Err(Error::InvalidArgument(
                "exhaustive fitting supports plain block models only".into(),
            ));
        }
        Ok(())
    }

    // Number of copies of the block prior an exact aggregate fit must score
    // so that it maximises the same objective as `segment_log_likelihood`.
    fn prior_replicates(&self, len: usize) -> usize {
        match self.prior {
            PartitionPrior::Omitted => 0,
            PartitionPrior::Segment => 1,
            PartitionPrior::Snapshot => len,
        }
    }

    fn k_candidates(&self, n: usize) -> Vec<usize> {
        let (lo, hi) = match self.k {
            KPolicy::Fixed(k) => (k, k),
            KPolicy::Select { min, max } => (min, max),
        };
        let ks: Vec<usize> = (lo..=hi.min(n)).collect();
        if ks.is_empty() {
            vec![n.max(1).min(lo)]
        } else {
            ks
        }
    }
}

/// A block model fitted to a run of snapshots, with rates per snapshot.
#[derive(Clone, Debug)]
pub struct SegmentFit {
    /// Affinities already divided by the segment length.
    pub model: BlockModel,
    pub partition: Partition,
    pub converged: bool,
    /// The segment had no links at all.
    pub degenerate: bool,
    /// Node marginals of the aggregate fit (`N * K`), used for warm starts.
    pub marginals: Vec<f64>,
}

impl SegmentFit {
    pub fn k(&self) -> usize {
        self.model.k()
    }

    fn from_fit(fit: FitResult, len: usize, degenerate: bool) -> SegmentFit {
        SegmentFit {
            model: fit.model.rescaled(1.0 / len as f64),
            partition: fit.partition,
            converged: fit.converged,
            degenerate,
            marginals: fit.state.marginals().to_vec(),
        }
    }
}

/// Poisson complete-data log-likelihood of a run of snapshots under `fit`:
/// the per-snapshot link terms, plus the block prior as `prior` says.
pub fn segment_log_likelihood(snapshots: &[Snapshot], fit: &SegmentFit, prior: PartitionPrior) -> Result<f64> {
    let per_snapshot: f64 = snapshots
        .iter()
        .map(|s| poisson_log_likelihood(s, &fit.partition, &fit.model))
        .sum::<Result<f64>>()?;
    let copies = match prior {
        PartitionPrior::Snapshot => return Ok(per_snapshot),
        PartitionPrior::Segment => 1,
        PartitionPrior::Omitted => 0,
    };
    let surplus = snapshots.len() as f64 - copies as f64;
    Ok(per_snapshot - surplus * partition_log_prior(&fit.partition, &fit.model)?)
}

fn aggregate(snapshots: &[Snapshot]) -> Result<Snapshot> {
    let first = snapshots
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty segment".into()))?;
    Snapshot::sum(first.node_count(), first.directed(), snapshots)
}

fn exhaustive_best(graph: &Snapshot, ks: &[usize], replicates: usize) -> Result<FitResult> {
    let mut best: Option<FitResult> = None;
    for &k in ks {
        let f = fit_exhaustive(graph, k, Family::Poisson, replicates)?;
        if best.as_ref().is_none_or(|b| f.description_length < b.description_length) {
            best = Some(f);
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("no admissible K".into()))
}

/// Fits the null model to a whole window: a Poisson block model on the
/// aggregate with `K` from the policy (or `k` when given), rates divided by `w`.
pub fn fit_null_model(
    window: &[Snapshot],
    cfg: &DetectorConfig,
    k: Option<usize>,
    seed: u64,
) -> Result<SegmentFit> {
    let w = window.len();
    if w < 2 {
        return Err(Error::InvalidArgument(format!("window width {w} < 2")));
    }
    let agg = aggregate(window)?;
    let ks = match k {
        Some(k) => vec![k.min(agg.node_count())],
        None => cfg.k_candidates(agg.node_count()),
    };
    let fit = match cfg.method {
        FitMethod::Exhaustive => exhaustive_best(&agg, &ks, cfg.prior_replicates(w))?,
        FitMethod::BeliefPropagation => {
            let opts = FitOptions { seed, ..cfg.fit };
            fit_best_k(&agg, ks, Family::Poisson, cfg.degree_corrected, &opts)?
        }
    };
    Ok(SegmentFit::from_fit(fit, w, agg.total_multiplicity() == 0))
}

fn fit_segment(
    segment: &[Snapshot],
    null: &SegmentFit,
    cfg: &DetectorConfig,
    seed: u64,
) -> Result<SegmentFit> {
    let agg = aggregate(segment)?;
    let len = segment.len();
    let degenerate = agg.total_multiplicity() == 0;
    let fit = match (cfg.method, cfg.segment_k) {
        (FitMethod::Exhaustive, SegmentK::Shared) => {
            fit_exhaustive(&agg, null.k(), Family::Poisson, cfg.prior_replicates(len))?
        }
        (FitMethod::Exhaustive, SegmentK::Independent) => {
            exhaustive_best(&agg, &cfg.k_candidates(agg.node_count()), cfg.prior_replicates(len))?
        }
        (FitMethod::BeliefPropagation, SegmentK::Shared) => {
            let opts = FitOptions {
                restarts: 1 + cfg.segment_restarts,
                seed,
                ..cfg.fit
            };
            fit_with_init(
                &agg,
                null.k(),
                Family::Poisson,
                cfg.degree_corrected,
                &opts,
                Some(&null.marginals),
            )?
        }
        (FitMethod::BeliefPropagation, SegmentK::Independent) => {
            let opts = FitOptions { seed, ..cfg.fit };
            fit_best_k(
                &agg,
                cfg.k_candidates(agg.node_count()),
                Family::Poisson,
                cfg.degree_corrected,
                &opts,
            )?
        }
    };
    Ok(SegmentFit::from_fit(fit, len, degenerate))
}

/// `Lambda` for the split at relative index `split` (`1 <= split < w`).
pub fn log_likelihood_ratio(
    window: &[Snapshot],
    split: usize,
    before: &SegmentFit,
    after: &SegmentFit,
    null: &SegmentFit,
    prior: PartitionPrior,
) -> Result<f64> {
    if split == 0 || split >= window.len() {
        return Err(Error::InvalidArgument(format!(
            "split {split} outside 1..{}",
            window.len()
        )));
    }
    let (a, b) = window.split_at(split);
    Ok(segment_log_likelihood(a, before, prior)? + segment_log_likelihood(b, after, prior)?
        - segment_log_likelihood(window, null, prior)?)
}

#[derive(Clone, Debug)]
pub struct Candidate {
    /// Relative index of the first snapshot after the split.
    pub split: usize,
    pub before: SegmentFit,
    pub after: SegmentFit,
    pub lambda: f64,
}

/// All models fitted while scanning one window.
#[derive(Clone, Debug)]
pub struct WindowModels {
    pub null: SegmentFit,
    pub candidates: Vec<Candidate>,
}

#[derive(Clone, Debug)]
pub struct WindowScan {
    /// Relative index of the best split (earliest on ties).
    pub t_star: usize,
    pub g: f64,
    pub models: WindowModels,
}

impl WindowScan {
    pub fn k(&self) -> usize {
        self.models.null.k()
    }
}

/// Evaluates every split of the window and returns the maximising one.
///
/// With `k` given, the null model uses exactly that many blocks.
pub fn scan_window(
    window: &[Snapshot],
    cfg: &DetectorConfig,
    k: Option<usize>,
    seed: u64,
) -> Result<WindowScan> {
    let null = fit_null_model(window, cfg, k, derive_seed(seed, &[0]))?;
    scan_with_null(window, cfg, null, seed)
}

fn scan_with_null(
    window: &[Snapshot],
    cfg: &DetectorConfig,
    null: SegmentFit,
    seed: u64,
) -> Result<WindowScan> {
    let w = window.len();
    let candidates = (1..w)
        .map(|split| {
            let before = fit_segment(&window[..split], &null, cfg, derive_seed(seed, &[1, split as u64]))?;
            let after = fit_segment(&window[split..], &null, cfg, derive_seed(seed, &[2, split as u64]))?;
            let lambda = log_likelihood_ratio(window, split, &before, &after, &null, cfg.prior)?;
            Ok(Candidate {
                split,
                before,
                after,
                lambda,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.lambda > candidates[best].lambda {
            best = i;
        }
    }
    let (t_star, g) = (candidates[best].split, candidates[best].lambda);
    if !g.is_finite() {
        return Err(Error::Numerical(format!("non-finite statistic {g}")));
    }
    Ok(WindowScan {
        t_star,
        g,
        models: WindowModels { null, candidates },
    })
}

/// Sorted bootstrap statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullDistribution {
    pub samples: Vec<f64>,
    pub seed: u64,
}

/// Draws `b` surrogate windows of `w` snapshots from the null model (its MAP
/// partition and per-snapshot rates) and scans each with `K` fixed to the
/// null model's.
pub fn bootstrap_null(
    null: &SegmentFit,
    w: usize,
    b: usize,
    cfg: &DetectorConfig,
    seed: u64,
) -> Result<NullDistribution> {
    if b == 0 {
        return Err(Error::InvalidArgument("bootstrap count must be positive".into()));
    }
    let k = null.k();
    let mut samples = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, &[i as u64, 0]);
            let surrogate = (0..w)
                .map(|_| sample_graph(&null.model, &null.partition, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            Ok(scan_window(&surrogate, cfg, Some(k), derive_seed(seed, &[i as u64, 1]))?.g)
        })
        .collect::<Result<Vec<f64>>>()?;
    samples.sort_by(f64::total_cmp);
    Ok(NullDistribution { samples, seed })
}

/// Fraction of bootstrap statistics strictly greater than `g`.
pub fn p_value(g: f64, null: &NullDistribution) -> f64 {
    let above = null.samples.len() - null.samples.partition_point(|&x| x <= g);
    above as f64 / null.samples.len() as f64
}

/// Result of testing one window.
#[derive(Clone, Debug)]
pub struct ChangePointResult {
    pub t0: usize,
    pub w: usize,
    /// Absolute index of the best split.
    pub t_star: usize,
    pub g: f64,
    pub null: NullDistribution,
    pub p: f64,
    pub alpha: f64,
    pub accepted: bool,
    pub k: usize,
    pub seed: u64,
}

/// Scans and tests the window starting at `t0`.
pub fn test_window(series: &TemporalNetwork, t0: usize, cfg: &DetectorConfig) -> Result<ChangePointResult> {
    cfg.validate()?;
    let w = cfg.window;
    let seed = derive_seed(cfg.seed, &[t0 as u64]);
    let restricted;
    let window: &[Snapshot] = if cfg.active_nodes {
        restricted = match filter_active_nodes(series, t0, w) {
            Ok(active) => active.network.snapshots().to_vec(),
            // No links anywhere: keep the full (empty) window.
            Err(Error::EmptyNodeSet) => series.snapshots()[t0..t0 + w].to_vec(),
            Err(e) => return Err(e),
        };
        &restricted
    } else {
        if t0 + w > series.len() {
            return Err(Error::WindowOutOfBounds { t0, width: w, len: series.len() });
        }
        &series.snapshots()[t0..t0 + w]
    };
    let scan = scan_window(window, cfg, None, derive_seed(seed, &[0]))?;
    let null = bootstrap_null(&scan.models.null, w, cfg.bootstrap, cfg, derive_seed(seed, &[1]))?;
    let p = p_value(scan.g, &null);
    Ok(ChangePointResult {
        t0,
        w,
        t_star: t0 + scan.t_star,
        g: scan.g,
        null,
        p,
        alpha: cfg.alpha,
        accepted: p < cfg.alpha,
        k: scan.k(),
        seed,
    })
}

/// Slides the window over the series one snapshot at a time.
pub fn detect(series: &TemporalNetwork, cfg: &DetectorConfig) -> Result<DetectionReport> {
    cfg.validate()?;
    if series.len() < cfg.window {
        return Err(Error::WindowOutOfBounds {
            t0: 0,
            width: cfg.window,
            len: series.len(),
        });
    }
    let results = (0..=series.len() - cfg.window)
        .into_par_iter()
        .map(|t0| test_window(series, t0, cfg))
        .collect::<Result<Vec<_>>>()?;
    let name = if cfg.degree_corrected { "dcsbm" } else { "sbm" };
    Ok(DetectionReport {
        detector: name.to_string(),
        horizon: series.len(),
        windows: results
            .iter()
            .map(|r| WindowRecord {
                detector: name.to_string(),
                ..WindowRecord::from(r)
            })
            .collect(),
        config: serde_json::to_value(cfg)?,
    })
}

/// Description length of the null model's partition on the window aggregate.
pub fn null_description_length(window: &[Snapshot], null: &SegmentFit) -> Result<f64> {
    let agg = aggregate(window)?;
    description_length(&agg, &null.partition, agg.directed())
}
