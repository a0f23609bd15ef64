use crate::graph::Snapshot;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Distribution of a pair's link count given its blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bernoulli,
    Poisson,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bernoulli" => Ok(Family::Bernoulli),
            "poisson" => Ok(Family::Poisson),
            other => Err(Error::InvalidArgument(format!("unknown family {other:?}"))),
        }
    }
}

/// Lower clamp for Bernoulli probabilities; the upper clamp is `1 - BERNOULLI_CLAMP`.
pub const BERNOULLI_CLAMP: f64 = 1e-9;
/// Lower clamp for Poisson rates.
pub const POISSON_FLOOR: f64 = 1e-12;

impl Family {
    pub fn clamp(self, x: f64) -> f64 {
        match self {
            Family::Bernoulli => x.clamp(BERNOULLI_CLAMP, 1.0 - BERNOULLI_CLAMP),
            Family::Poisson => x.max(POISSON_FLOOR),
        }
    }

    /// `ln P(a | x)` with `x` already clamped; `ln_fact` is `ln a!`.
    #[inline]
    pub fn ln_pmf(self, a: u32, x: f64, ln_fact: f64) -> f64 {
        match self {
            Family::Bernoulli => {
                if a == 0 {
                    (1.0 - x).ln()
                } else {
                    x.ln()
                }
            }
            Family::Poisson => a as f64 * x.ln() - x - ln_fact,
        }
    }
}

/// Dense `K x K` matrix of block affinities, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct Affinity {
    k: usize,
    data: Vec<f64>,
}

impl Affinity {
    pub fn filled(k: usize, value: f64) -> Self {
        Affinity {
            k,
            data: vec![value; k * k],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput("affinity matrix must be square and non-empty".into()));
        }
        Ok(Affinity {
            k,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, r: usize, s: usize) -> f64 {
        self.data[r * self.k + s]
    }

    #[inline]
    pub fn set(&mut self, r: usize, s: usize, value: f64) {
        self.data[r * self.k + s] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.k).map(<[f64]>::to_vec).collect()
    }

    pub fn scaled(&self, factor: f64) -> Affinity {
        Affinity {
            k: self.k,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.k).all(|r| (0..r).all(|s| (self.get(r, s) - self.get(s, r)).abs() <= tol))
    }

    pub fn max_abs_diff(&self, other: &Affinity) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<Affinity> for Vec<Vec<f64>> {
    fn from(a: Affinity) -> Self {
        a.rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Affinity {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Affinity::from_rows(rows)
    }
}

/// Hard block assignment `g_u`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    k: usize,
    labels: Vec<usize>,
}

impl Partition {
    pub fn new(k: usize, labels: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("partition needs K >= 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&g| g >= k) {
            return Err(Error::InvalidInput(format!("block label {bad} >= K = {k}")));
        }
        Ok(Partition { k, labels })
    }

    /// Contiguous layout: the first `sizes[0]` nodes in block 0, and so on.
    pub fn from_block_sizes(sizes: &[usize]) -> Result<Self> {
        let labels = sizes
            .iter()
            .enumerate()
            .flat_map(|(r, &n)| std::iter::repeat_n(r, n))
            .collect();
        Partition::new(sizes.len(), labels)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn block(&self, u: usize) -> usize {
        self.labels[u]
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &g in &self.labels {
            sizes[g] += 1;
        }
        sizes
    }

    /// Same partition with block ids permuted: block `r` becomes `perm[r]`.
    pub fn relabeled(&self, perm: &[usize]) -> Partition {
        Partition {
            k: self.k,
            labels: self.labels.iter().map(|&g| perm[g]).collect(),
        }
    }

    /// Block sizes, link counts `m_rs` and pair counts `N_rs` for `graph`.
    pub fn counts(&self, graph: &Snapshot) -> Result<BlockCounts> {
        if graph.node_count() != self.labels.len() {
            return Err(Error::InvalidInput(format!(
                "partition covers {} nodes, graph has {}",
                self.labels.len(),
                graph.node_count()
            )));
        }
        let k = self.k;
        let sizes = self.block_sizes();
        let directed = graph.directed();
        let mut links = vec![0.0; k * k];
        for e in graph.edges() {
            let (r, s) = (self.labels[e.u as usize], self.labels[e.v as usize]);
            let (r, s) = if directed || r <= s { (r, s) } else { (s, r) };
            links[r * k + s] += e.count as f64;
        }
        let mut pairs = vec![0.0; k * k];
        for r in 0..k {
            for s in 0..k {
                let (nr, ns) = (sizes[r] as f64, sizes[s] as f64);
                pairs[r * k + s] = match (directed, r == s) {
                    (_, true) if directed => nr * (nr - 1.0),
                    (_, true) => nr * (nr - 1.0) / 2.0,
                    (true, false) => nr * ns,
                    (false, false) if r < s => nr * ns,
                    (false, false) => 0.0,
                };
            }
        }
        Ok(BlockCounts {
            k,
            directed,
            sizes,
            links,
            pairs,
        })
    }
}

/// Sufficient statistics of a graph under a partition.
///
/// Undirected counts live in the upper triangle (`r <= s`); directed counts
/// use every ordered block pair.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCounts {
    pub k: usize,
    pub directed: bool,
    pub sizes: Vec<usize>,
    links: Vec<f64>,
    pairs: Vec<f64>,
}

impl BlockCounts {
    /// `m_rs` (total multiplicity between the blocks).
    pub fn links(&self, r: usize, s: usize) -> f64 {
        let (r, s) = self.orient(r, s);
        self.links[r * self.k + s]
    }

    /// `N_rs` (possible pairs between the blocks).
    pub fn pairs(&self, r: usize, s: usize) -> f64 {
        let (r, s) = self.orient(r, s);
        self.pairs[r * self.k + s]
    }

    fn orient(&self, r: usize, s: usize) -> (usize, usize) {
        if self.directed || r <= s {
            (r, s)
        } else {
            (s, r)
        }
    }

    /// The block pairs over which block-level sums run.
    pub fn block_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = self.k;
        let directed = self.directed;
        (0..k).flat_map(move |r| (if directed { 0 } else { r }..k).map(move |s| (r, s)))
    }

    pub fn total_links(&self) -> f64 {
        self.links.iter().sum()
    }
}

/// Per-node degree correction.
///
/// `theta` sums to one inside every block of the partition it was computed
/// from; `weights[u] = N_{g_u} * theta[u]` is the factor applied to pair
/// rates so that block affinities keep their density meaning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeCorrection {
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
    /// Blocks with zero total degree; their nodes got uniform `theta`.
    pub degenerate_blocks: Vec<usize>,
}

/// Stochastic block model parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockModel {
    pub family: Family,
    pub directed: bool,
    /// Block priors `n_r`.
    pub priors: Vec<f64>,
    /// Affinities `Q_rs`.
    pub affinity: Affinity,
    pub degree: Option<DegreeCorrection>,
}

impl BlockModel {
    /// Undirected model.
    pub fn new(family: Family, priors: Vec<f64>, affinity: Affinity) -> Result<Self> {
        Self::with_direction(family, false, priors, affinity)
    }

    pub fn with_direction(
        family: Family,
        directed: bool,
        priors: Vec<f64>,
        affinity: Affinity,
    ) -> Result<Self> {
        let model = BlockModel {
            family,
            directed,
            priors,
            affinity,
            degree: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn k(&self) -> usize {
        self.priors.len()
    }

    pub fn degree_corrected(&self) -> bool {
        self.degree.is_some()
    }

    /// Degree weight of node `u` (one without correction).
    #[inline]
    pub fn weight(&self, u: usize) -> f64 {
        self.degree.as_ref().map_or(1.0, |d| d.weights[u])
    }

    /// Unclamped pair parameter for `u` in block `r`, `v` in block `s`.
    #[inline]
    pub fn pair_rate(&self, r: usize, s: usize, u: usize, v: usize) -> f64 {
        self.affinity.get(r, s) * self.weight(u) * self.weight(v)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.priors.len();
        if k == 0 || self.affinity.k() != k {
            return Err(Error::InvalidInput("priors and affinity disagree on K".into()));
        }
        let total: f64 = self.priors.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.priors.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidInput(format!("block priors sum to {total}")));
        }
        for &q in self.affinity.as_slice() {
            let ok = match self.family {
                Family::Bernoulli => (0.0..=1.0).contains(&q),
                Family::Poisson => q >= 0.0 && q.is_finite(),
            };
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "affinity {q} invalid for {:?}",
                    self.family
                )));
            }
        }
        if !self.directed && !self.affinity.is_symmetric(1e-12) {
            return Err(Error::InvalidInput("undirected model needs symmetric Q".into()));
        }
        Ok(())
    }

    /// Same model with affinities multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> BlockModel {
        BlockModel {
            affinity: self.affinity.scaled(factor),
            ..self.clone()
        }
    }
}
