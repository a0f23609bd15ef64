//! Sparse belief propagation for block models.
//!
//! Messages are stored only for connected pairs. Every other node `w`
//! influences `u` through its marginal, and those contributions are summed
//! once per sweep into a per-block field that each node corrects for itself
//! and its neighbours. A sweep therefore costs `O((N + M) K^2)` and the state
//! holds `2M + N` probability vectors.

use super::model::{Affinity, BlockModel, Family};
use crate::graph::Snapshot;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use statrs::function::factorial::ln_factorial;
use std::collections::HashMap;

/// Below this block mass a block is treated as empty during re-estimation.
pub const EMPTY_BLOCK_MASS: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
struct PairData {
    first: u32,
    second: u32,
    /// `A_{first, second}`
    forward: u32,
    /// `A_{second, first}`; equals `forward` when undirected.
    backward: u32,
}

#[derive(Clone, Copy, Debug)]
struct Slot {
    neighbor: u32,
    pair: u32,
    is_first: bool,
}

impl Slot {
    #[inline]
    fn outgoing(self) -> usize {
        2 * self.pair as usize + usize::from(!self.is_first)
    }

    #[inline]
    fn incoming(self) -> usize {
        2 * self.pair as usize + usize::from(self.is_first)
    }
}

/// Connected pairs of a graph with per-node incidence lists.
#[derive(Clone, Debug)]
pub struct PairGraph {
    node_count: usize,
    directed: bool,
    pairs: Vec<PairData>,
    offsets: Vec<usize>,
    slots: Vec<Slot>,
    total_multiplicity: f64,
}

impl PairGraph {
    pub fn new(graph: &Snapshot) -> Self {
        let n = graph.node_count();
        let directed = graph.directed();
        let mut pairs: Vec<PairData> = Vec::with_capacity(graph.pair_count());
        if directed {
            let mut index: HashMap<(u32, u32), usize> = HashMap::new();
            for e in graph.edges() {
                let key = (e.u.min(e.v), e.u.max(e.v));
                let i = *index.entry(key).or_insert_with(|| {
                    pairs.push(PairData {
                        first: key.0,
                        second: key.1,
                        forward: 0,
                        backward: 0,
                    });
                    pairs.len() - 1
                });
                if e.u < e.v {
                    pairs[i].forward += e.count;
                } else {
                    pairs[i].backward += e.count;
                }
            }
        } else {
            pairs.extend(graph.edges().iter().map(|e| PairData {
                first: e.u,
                second: e.v,
                forward: e.count,
                backward: e.count,
            }));
        }
        let mut degree = vec![0usize; n + 1];
        for p in &pairs {
            degree[p.first as usize] += 1;
            degree[p.second as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for u in 0..n {
            offsets[u + 1] = offsets[u] + degree[u];
        }
        let mut cursor = offsets.clone();
        let mut slots = vec![
            Slot {
                neighbor: 0,
                pair: 0,
                is_first: true
            };
            2 * pairs.len()
        ];
        for (i, p) in pairs.iter().enumerate() {
            let (u, v) = (p.first as usize, p.second as usize);
            slots[cursor[u]] = Slot {
                neighbor: p.second,
                pair: i as u32,
                is_first: true,
            };
            cursor[u] += 1;
            slots[cursor[v]] = Slot {
                neighbor: p.first,
                pair: i as u32,
                is_first: false,
            };
            cursor[v] += 1;
        }
        PairGraph {
            node_count: n,
            directed,
            pairs,
            offsets,
            slots,
            total_multiplicity: graph.total_multiplicity() as f64,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    /// Number of connected (unordered) pairs.
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    fn slots(&self, u: usize) -> &[Slot] {
        &self.slots[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Mean multiplicity per possible pair.
    pub fn density(&self) -> f64 {
        let n = self.node_count as f64;
        let possible = if self.directed {
            n * (n - 1.0)
        } else {
            n * (n - 1.0) / 2.0
        };
        if possible > 0.0 {
            self.total_multiplicity / possible
        } else {
            0.0
        }
    }
}

/// Messages on connected pairs plus per-node marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageState {
    k: usize,
    /// `2 * pairs * K`: message `2p` flows first -> second, `2p + 1` back.
    messages: Vec<f64>,
    /// `N * K`
    marginals: Vec<f64>,
}

impl MessageState {
    /// Every marginal and message equal to `marginals[u]` for its sender.
    pub fn from_marginals(graph: &PairGraph, k: usize, marginals: Vec<f64>) -> Result<Self> {
        if marginals.len() != graph.node_count * k || k == 0 {
            return Err(Error::InvalidInput("marginal table has wrong shape".into()));
        }
        let mut messages = vec![0.0; 2 * graph.pairs.len() * k];
        for u in 0..graph.node_count {
            for slot in graph.slots(u) {
                let h = slot.outgoing();
                messages[h * k..(h + 1) * k].copy_from_slice(&marginals[u * k..(u + 1) * k]);
            }
        }
        Ok(MessageState {
            k,
            messages,
            marginals,
        })
    }

    pub fn uniform(graph: &PairGraph, k: usize) -> Self {
        let marginals = vec![1.0 / k as f64; graph.node_count * k];
        Self::from_marginals(graph, k, marginals).expect("shape is consistent")
    }

    /// Per-node draws from a symmetric Dirichlet(1), copied to outgoing messages.
    pub fn random<R: Rng + ?Sized>(graph: &PairGraph, k: usize, rng: &mut R) -> Self {
        let mut marginals = Vec::with_capacity(graph.node_count * k);
        for _ in 0..graph.node_count {
            let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = draws.iter().sum();
            marginals.extend(draws.iter().map(|x| x / total));
        }
        Self::from_marginals(graph, k, marginals).expect("shape is consistent")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.marginals.len() / self.k
    }

    pub fn marginal(&self, u: usize) -> &[f64] {
        &self.marginals[u * self.k..(u + 1) * self.k]
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    /// Number of stored directed messages (twice the connected pairs).
    pub fn message_count(&self) -> usize {
        self.messages.len() / self.k
    }

    /// Message `u -> v`, if the pair is connected.
    pub fn message<'a>(&'a self, graph: &PairGraph, u: usize, v: usize) -> Option<&'a [f64]> {
        graph
            .slots(u)
            .iter()
            .find(|s| s.neighbor as usize == v)
            .map(|s| {
                let h = s.outgoing();
                &self.messages[h * self.k..(h + 1) * self.k]
            })
    }

    /// Every stored vector sums to one within `tol` and has no negative entry.
    pub fn is_normalized(&self, tol: f64) -> bool {
        self.messages
            .chunks(self.k)
            .chain(self.marginals.chunks(self.k))
            .all(|c| c.iter().all(|&x| x >= 0.0) && (c.iter().sum::<f64>() - 1.0).abs() <= tol)
    }

    /// `g_u = argmax_r psi^u_r`, ties to the lowest block.
    pub fn map_labels(&self) -> Vec<usize> {
        self.marginals
            .chunks(self.k)
            .map(|m| {
                let mut best = 0;
                for r in 1..m.len() {
                    if m[r] > m[best] {
                        best = r;
                    }
                }
                best
            })
            .collect()
    }
}

/// How pairs without a link enter the message updates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonEdges {
    /// Messages between unconnected nodes are replaced by marginals and
    /// summed into a shared field.
    #[default]
    MeanField,
    /// Unconnected pairs are treated as unobserved; only links pass messages.
    Ignore,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BpOptions {
    /// Weight of the freshly computed message: `new = (1 - d) old + d updated`.
    pub damping: f64,
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub non_edges: NonEdges,
}

impl Default for BpOptions {
    fn default() -> Self {
        BpOptions {
            damping: 0.7,
            tolerance: 1e-6,
            max_sweeps: 500,
            non_edges: NonEdges::MeanField,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpOutcome {
    pub sweeps: usize,
    pub converged: bool,
    pub max_change: f64,
}

enum Field {
    None,
    /// `f0[s * K + r]`: no-link factor for a neighbour in `s` and `u` in `r`.
    Exact { f0: Vec<f64> },
    /// First-order field for degree-corrected rates.
    Linear { coupling: Vec<f64>, weights: Vec<f64> },
}

/// Message-passing kernel for fixed parameters.
pub struct BeliefPropagation<'g> {
    graph: &'g PairGraph,
    k: usize,
    family: Family,
    priors: Vec<f64>,
    /// Scaled pair factor matrices, `[r_first * K + s_second]`.
    factors: Vec<f64>,
    factor_of_pair: Vec<u32>,
    field: Field,
    opts: BpOptions,
    scratch: Scratch,
}

#[derive(Default)]
struct Scratch {
    terms: Vec<f64>,
    suffix: Vec<f64>,
    prefix: Vec<f64>,
    base: Vec<f64>,
    cavity: Vec<f64>,
    node_field: Vec<f64>,
    total_field: Vec<f64>,
    field_u: Vec<f64>,
}

fn normalize(v: &mut [f64]) -> f64 {
    let total: f64 = v.iter().sum();
    if total > 0.0 && total.is_finite() {
        let inv = 1.0 / total;
        v.iter_mut().for_each(|x| *x *= inv);
    }
    total
}

#[allow(dead_code)]
fn scale_to_max(v: &mut [f64]) {
    let max = v.iter().copied().fold(0.0, f64::max);
    if max > 0.0 && max.is_finite() {
        let inv = 1.0 / max;
        v.iter_mut().for_each(|x| *x *= inv);
    }
}

/// Running products only need rescaling once they drift towards underflow.
const RESCALE_BELOW: f64 = 1e-150;

fn rescale_if_small(v: &mut [f64]) {
    let max = v.iter().copied().fold(0.0, f64::max);
    if max < RESCALE_BELOW && max > 0.0 {
        let inv = 1.0 / max;
        v.iter_mut().for_each(|x| *x *= inv);
    }
}

impl<'g> BeliefPropagation<'g> {
    pub fn new(graph: &'g PairGraph, model: &BlockModel, opts: BpOptions) -> Result<Self> {
        model.validate()?;
        let k = model.k();
        if model.directed != graph.directed {
            return Err(Error::InvalidInput("model and graph directedness differ".into()));
        }
        if let Some(d) = &model.degree {
            if d.weights.len() != graph.node_count {
                return Err(Error::InvalidInput("degree correction size mismatch".into()));
            }
        }
        let family = model.family;
        if family == Family::Bernoulli
            && graph
                .pairs
                .iter()
                .any(|p| p.forward > 1 || (graph.directed && p.backward > 1))
        {
            return Err(Error::InvalidInput(
                "Bernoulli model needs a simple graph (entries 0/1)".into(),
            ));
        }

        // ln P(a | x) for both directions of a pair, max-shifted then exponentiated.
        let pair_table = |a: u32, b: u32, u: usize, v: usize, out: &mut Vec<f64>| {
            let (lfa, lfb) = (ln_factorial(a as u64), ln_factorial(b as u64));
            let start = out.len();
            for r in 0..k {
                for s in 0..k {
                    let x = family.clamp(model.pair_rate(r, s, u, v));
                    let mut l = family.ln_pmf(a, x, lfa);
                    if graph.directed {
                        let y = family.clamp(model.pair_rate(s, r, v, u));
                        l += family.ln_pmf(b, y, lfb);
                    }
                    out.push(l);
                }
            }
            let max = out[start..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            out[start..].iter_mut().for_each(|l| *l = (*l - max).exp());
        };

        let mut factors = Vec::new();
        let mut factor_of_pair = Vec::with_capacity(graph.pairs.len());
        if model.degree.is_none() {
            let mut seen: HashMap<(u32, u32), u32> = HashMap::new();
            for p in &graph.pairs {
                let key = (p.forward, if graph.directed { p.backward } else { 0 });
                let idx = *seen.entry(key).or_insert_with(|| {
                    let idx = (factors.len() / (k * k)) as u32;
                    pair_table(p.forward, p.backward, 0, 0, &mut factors);
                    idx
                });
                factor_of_pair.push(idx);
            }
        } else {
            for (i, p) in graph.pairs.iter().enumerate() {
                pair_table(
                    p.forward,
                    p.backward,
                    p.first as usize,
                    p.second as usize,
                    &mut factors,
                );
                factor_of_pair.push(i as u32);
            }
        }

        let field = match (opts.non_edges, &model.degree) {
            (NonEdges::Ignore, _) => Field::None,
            (NonEdges::MeanField, None) => {
                let mut f0 = vec![0.0; k * k];
                for s in 0..k {
                    for r in 0..k {
                        let x = family.clamp(model.affinity.get(s, r));
                        let mut l = family.ln_pmf(0, x, 0.0);
                        if graph.directed {
                            l += family.ln_pmf(0, family.clamp(model.affinity.get(r, s)), 0.0);
                        }
                        f0[s * k + r] = l.exp();
                    }
                }
                Field::Exact { f0 }
            }
            (NonEdges::MeanField, Some(dc)) => {
                let mut coupling = vec![0.0; k * k];
                for s in 0..k {
                    for r in 0..k {
                        let mut c = model.affinity.get(s, r);
                        if graph.directed {
                            c += model.affinity.get(r, s);
                        }
                        coupling[s * k + r] = c;
                    }
                }
                Field::Linear {
                    coupling,
                    weights: dc.weights.clone(),
                }
            }
        };

        Ok(BeliefPropagation {
            graph,
            k,
            family,
            priors: model.priors.clone(),
            factors,
            factor_of_pair,
            field,
            opts,
            scratch: Scratch::default(),
        })
    }

    #[inline]
    fn factor(&self, pair: usize) -> &[f64] {
        let kk = self.k * self.k;
        let i = self.factor_of_pair[pair] as usize;
        &self.factors[i * kk..(i + 1) * kk]
    }

    /// Field contribution of node `w` given its marginal.
    fn node_field<const K: usize>(&self, w: usize, marginal: &[f64], out: &mut [f64]) {
        let k = if K == 0 { self.k } else { K };
        let (marginal, out) = (&marginal[..k], &mut out[..k]);
        match &self.field {
            Field::None => out.fill(0.0),
            Field::Exact { f0 } => {
                for r in 0..k {
                    let mut acc = 0.0;
                    for s in 0..k {
                        acc += f0[s * k + r] * marginal[s];
                    }
                    out[r] = acc.ln();
                }
            }
            Field::Linear { coupling, weights } => {
                for r in 0..k {
                    let mut acc = 0.0;
                    for s in 0..k {
                        acc += coupling[s * k + r] * marginal[s];
                    }
                    out[r] = -weights[w] * acc;
                }
            }
        }
    }

    /// One asynchronous sweep over all nodes in index order.
    ///
    /// Returns the largest absolute change of any message or marginal entry.
    pub fn sweep(&mut self, state: &mut MessageState) -> Result<f64> {
        // Small K get a kernel with stack arrays and fixed-length loops.
        let n = self.graph.node_count;
        if state.k != self.k || state.marginals.len() != n * self.k {
            return Err(Error::InvalidInput("message state does not match the model".into()));
        }
        match self.k {
            2 => self.sweep_fixed::<2>(state),
            3 => self.sweep_fixed::<3>(state),
            4 => self.sweep_fixed::<4>(state),
            _ => self.sweep_impl::<0>(state),
        }
    }

    fn sweep_fixed<const K: usize>(&mut self, state: &mut MessageState) -> Result<f64> {
        let n = self.graph.node_count;
        let kk = K * K;
        let mut sc = std::mem::take(&mut self.scratch);
        sc.node_field.resize(n * K, 0.0);
        sc.field_u.resize(K, 0.0);
        let mut total = [0.0; K];
        for (w, (m, f)) in state
            .marginals
            .chunks_exact(K)
            .zip(sc.node_field.chunks_exact_mut(K))
            .enumerate()
        {
            self.node_field::<K>(w, m, f);
            for r in 0..K {
                total[r] += f[r];
            }
        }
        let damping = self.opts.damping;
        let keep = 1.0 - damping;
        let mut max_change: f64 = 0.0;
        for u in 0..n {
            let slots = self.graph.slots(u);
            let d = slots.len();
            sc.terms.resize(d * K, 0.0);
            sc.suffix.resize((d + 1) * K, 0.0);

            for (slot, t) in slots.iter().zip(sc.terms.chunks_exact_mut(K)) {
                let inc = slot.incoming() * K;
                let incoming = &state.messages[inc..inc + K];
                let fi = self.factor_of_pair[slot.pair as usize] as usize * kk;
                let f = &self.factors[fi..fi + kk];
                let mut max: f64 = 0.0;
                for r in 0..K {
                    let mut acc = 0.0;
                    for s in 0..K {
                        let x = if slot.is_first { f[r * K + s] } else { f[s * K + r] };
                        acc += x * incoming[s];
                    }
                    t[r] = acc;
                    max = max.max(acc);
                }
                if max < RESCALE_BELOW && max > 0.0 {
                    t.iter_mut().for_each(|x| *x /= max);
                }
            }

            let scale = match &self.field {
                Field::Linear { weights, .. } => weights[u],
                _ => 1.0,
            };
            let own = &sc.node_field[u * K..u * K + K];
            let mut h = [0.0; K];
            for r in 0..K {
                h[r] = total[r] - own[r];
            }
            for slot in slots {
                let j = slot.neighbor as usize * K;
                let nf = &sc.node_field[j..j + K];
                for r in 0..K {
                    h[r] -= nf[r];
                }
            }
            let mut hmax = f64::NEG_INFINITY;
            for r in 0..K {
                h[r] *= scale;
                sc.field_u[r] = h[r];
                hmax = hmax.max(h[r]);
            }
            let mut base = [0.0; K];
            for r in 0..K {
                base[r] = self.priors[r] * (h[r] - hmax).exp();
            }

            let (suffix, terms) = (&mut sc.suffix, &sc.terms);
            suffix[d * K..].fill(1.0);
            for i in (0..d).rev() {
                let (head, tail) = suffix.split_at_mut((i + 1) * K);
                let (cur, next, t) = (&mut head[i * K..], &tail[..K], &terms[i * K..i * K + K]);
                let mut max: f64 = 0.0;
                for r in 0..K {
                    cur[r] = next[r] * t[r];
                    max = max.max(cur[r]);
                }
                if max < RESCALE_BELOW && max > 0.0 {
                    cur.iter_mut().for_each(|x| *x /= max);
                }
            }

            let mut prefix = [1.0; K];
            let mut fallback = false;
            for (i, slot) in slots.iter().enumerate() {
                let next = &suffix[(i + 1) * K..(i + 2) * K];
                let mut cavity = [0.0; K];
                let mut z = 0.0;
                for r in 0..K {
                    cavity[r] = base[r] * prefix[r] * next[r];
                    z += cavity[r];
                }
                if !(z > 0.0 && z.is_finite()) {
                    fallback = true;
                    break;
                }
                let inv = 1.0 / z;
                let out = slot.outgoing() * K;
                let msg = &mut state.messages[out..out + K];
                for r in 0..K {
                    let new = keep * msg[r] + damping * cavity[r] * inv;
                    max_change = max_change.max((new - msg[r]).abs());
                    msg[r] = new;
                }
                let t = &terms[i * K..i * K + K];
                let mut max: f64 = 0.0;
                for r in 0..K {
                    prefix[r] *= t[r];
                    max = max.max(prefix[r]);
                }
                if max < RESCALE_BELOW && max > 0.0 {
                    prefix.iter_mut().for_each(|x| *x /= max);
                }
            }
            let mut marginal = [0.0; K];
            let mut z = 0.0;
            for r in 0..K {
                marginal[r] = base[r] * prefix[r];
                z += marginal[r];
            }
            if fallback || !(z > 0.0 && z.is_finite()) {
                self.log_space_update(u, state, &mut sc, &mut max_change)?;
            } else {
                let marg = &mut state.marginals[u * K..u * K + K];
                for r in 0..K {
                    let new = keep * marg[r] + damping * marginal[r] / z;
                    max_change = max_change.max((new - marg[r]).abs());
                    marg[r] = new;
                }
            }

            let mut fresh = [0.0; K];
            self.node_field::<K>(u, &state.marginals[u * K..u * K + K], &mut fresh);
            let own = &mut sc.node_field[u * K..u * K + K];
            for r in 0..K {
                total[r] += fresh[r] - own[r];
            }
            own.copy_from_slice(&fresh);
        }
        self.scratch = sc;
        Ok(max_change)
    }

    fn sweep_impl<const K: usize>(&mut self, state: &mut MessageState) -> Result<f64> {
        let k = if K == 0 { self.k } else { K };
        let n = self.graph.node_count;
        if state.k != k || state.marginals.len() != n * k {
            return Err(Error::InvalidInput("message state does not match the model".into()));
        }
        if k == 1 {
            state.messages.fill(1.0);
            state.marginals.fill(1.0);
            return Ok(0.0);
        }
        let mut sc = std::mem::take(&mut self.scratch);
        sc.node_field.resize(n * k, 0.0);
        sc.total_field.clear();
        sc.total_field.resize(k, 0.0);
        sc.base.resize(k, 0.0);
        sc.cavity.resize(k, 0.0);
        sc.field_u.resize(k, 0.0);
        for w in 0..n {
            let (lo, hi) = (w * k, (w + 1) * k);
            self.node_field::<K>(w, &state.marginals[lo..hi], &mut sc.node_field[lo..hi]);
            for r in 0..k {
                sc.total_field[r] += sc.node_field[lo + r];
            }
        }

        let damping = self.opts.damping;
        let mut max_change: f64 = 0.0;
        for u in 0..n {
            let slots = self.graph.slots(u);
            let d = slots.len();
            sc.terms.resize(d * k, 0.0);
            sc.suffix.resize((d + 1) * k, 0.0);
            sc.prefix.resize(k, 0.0);

            for (i, slot) in slots.iter().enumerate() {
                let inc = slot.incoming();
                let incoming = &state.messages[inc * k..(inc + 1) * k];
                let f = self.factor(slot.pair as usize);
                let t = &mut sc.terms[i * k..(i + 1) * k];
                for r in 0..k {
                    let mut acc = 0.0;
                    if slot.is_first {
                        for s in 0..k {
                            acc += f[r * k + s] * incoming[s];
                        }
                    } else {
                        for s in 0..k {
                            acc += f[s * k + r] * incoming[s];
                        }
                    }
                    t[r] = acc;
                }
                rescale_if_small(t);
            }

            // Field from non-neighbours: everything minus self and neighbours.
            let scale = match &self.field {
                Field::Linear { weights, .. } => weights[u],
                _ => 1.0,
            };
            for r in 0..k {
                let mut h = sc.total_field[r] - sc.node_field[u * k + r];
                for slot in slots {
                    h -= sc.node_field[slot.neighbor as usize * k + r];
                }
                sc.field_u[r] = scale * h;
            }
            let hmax = sc.field_u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for r in 0..k {
                sc.base[r] = self.priors[r] * (sc.field_u[r] - hmax).exp();
            }

            // suffix[i] = prod_{j >= i} terms[j]
            sc.suffix[d * k..(d + 1) * k].fill(1.0);
            for i in (0..d).rev() {
                for r in 0..k {
                    sc.suffix[i * k + r] = sc.suffix[(i + 1) * k + r] * sc.terms[i * k + r];
                }
                rescale_if_small(&mut sc.suffix[i * k..(i + 1) * k]);
            }
            sc.prefix.fill(1.0);
            let mut fallback = false;
            for (i, slot) in slots.iter().enumerate() {
                for r in 0..k {
                    sc.cavity[r] = sc.base[r] * sc.prefix[r] * sc.suffix[(i + 1) * k + r];
                }
                let z = normalize(&mut sc.cavity);
                if !(z > 0.0 && z.is_finite()) {
                    fallback = true;
                    break;
                }
                let out = slot.outgoing();
                let msg = &mut state.messages[out * k..(out + 1) * k];
                for r in 0..k {
                    let new = (1.0 - damping) * msg[r] + damping * sc.cavity[r];
                    max_change = max_change.max((new - msg[r]).abs());
                    msg[r] = new;
                }
                for r in 0..k {
                    sc.prefix[r] *= sc.terms[i * k + r];
                }
                rescale_if_small(&mut sc.prefix);
            }
            if fallback {
                self.log_space_update(u, state, &mut sc, &mut max_change)?;
            } else {
                for r in 0..k {
                    sc.cavity[r] = sc.base[r] * sc.prefix[r];
                }
                let z = normalize(&mut sc.cavity);
                if !(z > 0.0 && z.is_finite()) {
                    self.log_space_update(u, state, &mut sc, &mut max_change)?;
                } else {
                    let marg = &mut state.marginals[u * k..(u + 1) * k];
                    for r in 0..k {
                        let new = (1.0 - damping) * marg[r] + damping * sc.cavity[r];
                        max_change = max_change.max((new - marg[r]).abs());
                        marg[r] = new;
                    }
                }
            }

            // Refresh this node's share of the field.
            let (lo, hi) = (u * k, (u + 1) * k);
            let mut fresh = std::mem::take(&mut sc.cavity);
            self.node_field::<K>(u, &state.marginals[lo..hi], &mut fresh);
            for r in 0..k {
                sc.total_field[r] += fresh[r] - sc.node_field[lo + r];
            }
            sc.node_field[lo..hi].copy_from_slice(&fresh[..k]);
            sc.cavity = fresh;
        }
        self.scratch = sc;
        Ok(max_change)
    }

    /// Recomputes every outgoing message and the marginal of `u` in log space.
    /// Used when the linear-space products underflow.
    fn log_space_update(
        &self,
        u: usize,
        state: &mut MessageState,
        sc: &mut Scratch,
        max_change: &mut f64,
    ) -> Result<()> {
        let k = self.k;
        let slots = self.graph.slots(u);
        let d = slots.len();
        let log_terms: Vec<f64> = sc.terms[..d * k].iter().map(|t| t.ln()).collect();
        let mut full: Vec<f64> = (0..k)
            .map(|r| self.priors[r].ln() + sc.field_u[r])
            .collect();
        for i in 0..d {
            for r in 0..k {
                full[r] += log_terms[i * k + r];
            }
        }
        let exp_normalized = |logs: &[f64]| -> Result<Vec<f64>> {
            let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !max.is_finite() {
                return Err(Error::Numerical(format!(
                    "belief propagation normalizer underflow at node {u}"
                )));
            }
            let mut v: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
            normalize(&mut v);
            Ok(v)
        };
        let damping = self.opts.damping;
        for (i, slot) in slots.iter().enumerate() {
            let logs: Vec<f64> = (0..k).map(|r| full[r] - log_terms[i * k + r]).collect();
            // -inf - -inf is NaN; treat those entries as impossible.
            let logs: Vec<f64> = logs
                .iter()
                .map(|l| if l.is_nan() { f64::NEG_INFINITY } else { *l })
                .collect();
            let fresh = exp_normalized(&logs)?;
            let out = slot.outgoing();
            let msg = &mut state.messages[out * k..(out + 1) * k];
            for r in 0..k {
                let new = (1.0 - damping) * msg[r] + damping * fresh[r];
                *max_change = max_change.max((new - msg[r]).abs());
                msg[r] = new;
            }
        }
        let fresh = exp_normalized(&full)?;
        let marg = &mut state.marginals[u * k..(u + 1) * k];
        for r in 0..k {
            let new = (1.0 - damping) * marg[r] + damping * fresh[r];
            *max_change = max_change.max((new - marg[r]).abs());
            marg[r] = new;
        }
        Ok(())
    }

    /// Sweeps until the largest change drops below the tolerance or the cap.
    pub fn run(&mut self, state: &mut MessageState) -> Result<BpOutcome> {
        let mut outcome = BpOutcome {
            sweeps: 0,
            converged: false,
            max_change: f64::INFINITY,
        };
        while outcome.sweeps < self.opts.max_sweeps {
            outcome.max_change = self.sweep(state)?;
            outcome.sweeps += 1;
            if outcome.max_change < self.opts.tolerance {
                outcome.converged = true;
                break;
            }
        }
        Ok(outcome)
    }

    /// Point estimates of priors and affinities from the current messages.
    ///
    /// `n_r = sum_u psi^u_r / N`; `Q_rs` is the expected link count between
    /// the blocks over the expected number of pairs, where the link count
    /// uses the two-node posterior of each connected pair. Unconnected pairs
    /// add nothing to the numerator, so only links are visited.
    pub fn estimate(&self, state: &MessageState) -> Result<(Vec<f64>, Affinity)> {
        let k = self.k;
        let n = self.graph.node_count;
        let mut mass = vec![0.0; k];
        for m in state.marginals.chunks(k) {
            for r in 0..k {
                mass[r] += m[r];
            }
        }
        let mut links = vec![0.0; k * k];
        let mut joint = vec![0.0; k * k];
        for (p, pair) in self.graph.pairs.iter().enumerate() {
            let f = self.factor(p);
            let fwd = &state.messages[2 * p * k..(2 * p + 1) * k];
            let bwd = &state.messages[(2 * p + 1) * k..(2 * p + 2) * k];
            let mut z = 0.0;
            for r in 0..k {
                for s in 0..k {
                    let x = f[r * k + s] * fwd[r] * bwd[s];
                    joint[r * k + s] = x;
                    z += x;
                }
            }
            if !(z > 0.0 && z.is_finite()) {
                return Err(Error::Numerical(format!(
                    "pair normalizer vanished for ({}, {})",
                    pair.first, pair.second
                )));
            }
            let (a, b) = (pair.forward as f64, pair.backward as f64);
            for r in 0..k {
                for s in 0..k {
                    let w = joint[r * k + s] / z;
                    links[r * k + s] += a * w;
                    links[s * k + r] += b * w;
                }
            }
        }

        let density = self.graph.density();
        let mut priors: Vec<f64> = mass
            .iter()
            .map(|&m| if m < EMPTY_BLOCK_MASS { EMPTY_BLOCK_MASS } else { m / n as f64 })
            .collect();
        let total: f64 = priors.iter().sum();
        priors.iter_mut().for_each(|p| *p /= total);

        let mut affinity = Affinity::filled(k, density);
        for r in 0..k {
            for s in 0..k {
                if mass[r] < EMPTY_BLOCK_MASS || mass[s] < EMPTY_BLOCK_MASS {
                    continue;
                }
                let pairs = if r == s {
                    mass[r] * (mass[r] - 1.0)
                } else {
                    mass[r] * mass[s]
                };
                // Fewer than one node's worth of mass: no pairs to estimate from.
                if pairs <= 0.0 {
                    continue;
                }
                let q = links[r * k + s] / pairs;
                affinity.set(r, s, if self.family == Family::Bernoulli { q.min(1.0) } else { q });
            }
        }
        Ok((priors, affinity))
    }

}

/// One sweep with freshly built kernel; see [`BeliefPropagation::sweep`].
pub fn bp_sweep(
    graph: &PairGraph,
    model: &BlockModel,
    state: &mut MessageState,
    opts: &BpOptions,
) -> Result<f64> {
    BeliefPropagation::new(graph, model, *opts)?.sweep(state)
}

/// See [`BeliefPropagation::estimate`].
pub fn estimate_parameters(
    graph: &PairGraph,
    model: &BlockModel,
    state: &MessageState,
) -> Result<(Vec<f64>, Affinity)> {
    BeliefPropagation::new(graph, model, BpOptions::default())?.estimate(state)
}
