//! Snapshot graphs, temporal networks and window aggregation.

mod io;
mod metrics;

pub use io::{load_edge_list, save_edge_list, save_sidecar, Delimiter, EdgeListFormat, Sidecar};
pub use metrics::{mean_degree, mean_geodesic};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::Range;

/// A link between two nodes with its multiplicity.
///
/// Undirected edges are stored with `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    pub count: u32,
}

/// One observation of the network: a sparse integer-weighted adjacency.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    node_count: usize,
    directed: bool,
    /// Sorted by `(u, v)`, every count positive.
    edges: Vec<Edge>,
}

impl Snapshot {
    pub fn empty(node_count: usize, directed: bool) -> Self {
        Snapshot {
            node_count,
            directed,
            edges: Vec::new(),
        }
    }

    /// Builds a snapshot from `(u, v, count)` triples, accumulating repeats.
    ///
    /// Self-loops and out-of-range ids are rejected. Undirected pairs are
    /// canonicalised so `(v, u)` and `(u, v)` refer to the same entry.
    pub fn from_edges<I>(node_count: usize, directed: bool, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u32)>,
    {
        let mut acc: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for (u, v, count) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) out of range for {node_count} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop on node {u}")));
            }
            if count == 0 {
                continue;
            }
            let key = if directed || u < v {
                (u as u32, v as u32)
            } else {
                (v as u32, u as u32)
            };
            let slot = acc.entry(key).or_insert(0);
            *slot = slot
                .checked_add(count)
                .ok_or_else(|| Error::InvalidInput("multiplicity overflow".into()))?;
        }
        Ok(Snapshot {
            node_count,
            directed,
            edges: acc
                .into_iter()
                .map(|((u, v), count)| Edge { u, v, count })
                .collect(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Number of connected pairs (distinct non-zero entries).
    pub fn pair_count(&self) -> usize {
        self.edges.len()
    }

    /// Sum of all multiplicities.
    pub fn total_multiplicity(&self) -> u64 {
        self.edges.iter().map(|e| e.count as u64).sum()
    }

    /// Number of node pairs that could carry a link.
    pub fn possible_pairs(&self) -> f64 {
        let n = self.node_count as f64;
        if self.directed {
            n * (n - 1.0)
        } else {
            n * (n - 1.0) / 2.0
        }
    }

    /// `A_uv`; for undirected snapshots `A_uv == A_vu`.
    pub fn multiplicity(&self, u: usize, v: usize) -> u32 {
        let key = if self.directed || u < v { (u, v) } else { (v, u) };
        self.edges
            .binary_search_by(|e| (e.u as usize, e.v as usize).cmp(&key))
            .map(|i| self.edges[i].count)
            .unwrap_or(0)
    }

    pub fn is_simple(&self) -> bool {
        self.edges.iter().all(|e| e.count <= 1)
    }

    /// Total degree per node, counting multiplicity (in + out when directed).
    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.node_count];
        for e in &self.edges {
            deg[e.u as usize] += e.count as f64;
            deg[e.v as usize] += e.count as f64;
        }
        deg
    }

    /// Unweighted neighbour lists following edge direction.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            adj[e.u as usize].push(e.v as usize);
            if !self.directed {
                adj[e.v as usize].push(e.u as usize);
            }
        }
        adj
    }

    /// Element-wise sum of snapshots sharing node count and directedness.
    pub fn sum<'a, I>(node_count: usize, directed: bool, snapshots: I) -> Result<Snapshot>
    where
        I: IntoIterator<Item = &'a Snapshot>,
    {
        let mut acc: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for s in snapshots {
            if s.node_count != node_count || s.directed != directed {
                return Err(Error::InvalidInput(
                    "snapshots differ in node count or directedness".into(),
                ));
            }
            for e in &s.edges {
                *acc.entry((e.u, e.v)).or_insert(0) += e.count;
            }
        }
        Ok(Snapshot {
            node_count,
            directed,
            edges: acc
                .into_iter()
                .map(|((u, v), count)| Edge { u, v, count })
                .collect(),
        })
    }

    /// Restricts the snapshot to `nodes` (original ids), re-indexed by position.
    pub fn restrict(&self, nodes: &[usize]) -> Snapshot {
        let mut index = vec![usize::MAX; self.node_count];
        for (i, &u) in nodes.iter().enumerate() {
            index[u] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|e| {
                let (a, b) = (index[e.u as usize], index[e.v as usize]);
                (a != usize::MAX && b != usize::MAX).then_some((a, b, e.count))
            })
            .collect::<Vec<_>>();
        Snapshot::from_edges(nodes.len(), self.directed, edges)
            .expect("restriction of a valid snapshot is valid")
    }
}

/// An ordered series of snapshots over a fixed node universe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalNetwork {
    snapshots: Vec<Snapshot>,
    times: Vec<i64>,
    labels: Option<Vec<String>>,
    time_unit: Option<String>,
}

impl TemporalNetwork {
    /// Snapshots are assigned consecutive times starting at zero.
    pub fn new(snapshots: Vec<Snapshot>) -> Result<Self> {
        let times = (0..snapshots.len() as i64).collect();
        Self::with_times(snapshots, times)
    }

    pub fn with_times(snapshots: Vec<Snapshot>, times: Vec<i64>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::InvalidInput("temporal network has no snapshots".into()));
        }
        if times.len() != snapshots.len() {
            return Err(Error::InvalidInput("one time per snapshot required".into()));
        }
        if times.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidInput("times must be strictly increasing".into()));
        }
        let (n, directed) = (snapshots[0].node_count, snapshots[0].directed);
        if snapshots
            .iter()
            .any(|s| s.node_count != n || s.directed != directed)
        {
            return Err(Error::InvalidInput(
                "snapshots differ in node count or directedness".into(),
            ));
        }
        Ok(TemporalNetwork {
            snapshots,
            times,
            labels: None,
            time_unit: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.node_count() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.node_count()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_time_unit(mut self, unit: impl Into<String>) -> Self {
        self.time_unit = Some(unit.into());
        self
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.snapshots[0].node_count
    }

    pub fn directed(&self) -> bool {
        self.snapshots[0].directed
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn snapshot(&self, t: usize) -> &Snapshot {
        &self.snapshots[t]
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn time_unit(&self) -> Option<&str> {
        self.time_unit.as_deref()
    }

    fn check_window(&self, t0: usize, width: usize) -> Result<()> {
        if t0.checked_add(width).is_none_or(|end| end > self.len()) {
            return Err(Error::WindowOutOfBounds {
                t0,
                width,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// Element-wise sum of the snapshots in `range` (any non-empty range).
    pub fn aggregate_range(&self, range: Range<usize>) -> Result<Snapshot> {
        if range.is_empty() {
            return Err(Error::InvalidArgument("empty aggregation range".into()));
        }
        self.check_window(range.start, range.len())?;
        Snapshot::sum(
            self.node_count(),
            self.directed(),
            &self.snapshots[range],
        )
    }
}

/// The multigraph obtained by summing a window of snapshots.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregatedWindow {
    pub t0: usize,
    pub width: usize,
    pub graph: Snapshot,
}

/// Sums snapshots `t0..t0 + w` into one multigraph.
pub fn aggregate_window(net: &TemporalNetwork, t0: usize, w: usize) -> Result<AggregatedWindow> {
    if w < 2 {
        return Err(Error::InvalidArgument(format!("window width {w} < 2")));
    }
    Ok(AggregatedWindow {
        t0,
        width: w,
        graph: net.aggregate_range(t0..t0 + w)?,
    })
}

/// The nodes active inside a window and the window restricted to them.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveWindow {
    /// Original node ids, ascending; position is the new id.
    pub nodes: Vec<usize>,
    pub network: TemporalNetwork,
}

impl ActiveWindow {
    pub fn original_id(&self, local: usize) -> usize {
        self.nodes[local]
    }
}

/// Keeps nodes with at least one link in some snapshot of `t0..t0 + w`.
pub fn filter_active_nodes(net: &TemporalNetwork, t0: usize, w: usize) -> Result<ActiveWindow> {
    if w == 0 {
        return Err(Error::InvalidArgument("window width 0".into()));
    }
    net.check_window(t0, w)?;
    let mut active = vec![false; net.node_count()];
    for s in &net.snapshots[t0..t0 + w] {
        for e in &s.edges {
            active[e.u as usize] = true;
            active[e.v as usize] = true;
        }
    }
    let nodes: Vec<usize> = (0..active.len()).filter(|&u| active[u]).collect();
    if nodes.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    let snapshots = net.snapshots[t0..t0 + w]
        .iter()
        .map(|s| s.restrict(&nodes))
        .collect();
    let mut network =
        TemporalNetwork::with_times(snapshots, net.times[t0..t0 + w].to_vec())?;
    if let Some(labels) = &net.labels {
        network = network.with_labels(nodes.iter().map(|&u| labels[u].clone()).collect())?;
    }
    network.time_unit = net.time_unit.clone();
    Ok(ActiveWindow { nodes, network })
}
