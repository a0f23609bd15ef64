//! Reference implementations used as test oracles. They favour directness
//! over speed and share no code with the library beyond plain data types.
#![allow(dead_code)]

use netshift::graph::Snapshot;
use num_bigint::BigUint;
use rand::Rng;

pub fn ln_fact(a: u64) -> f64 {
    (1..=a).map(|i| (i as f64).ln()).sum()
}

/// Per-pair log-pmf with the library's clamping conventions.
pub fn pair_log_pmf(poisson: bool, a: u32, x: f64) -> f64 {
    if poisson {
        let x = x.max(1e-12);
        a as f64 * x.ln() - x - ln_fact(a as u64)
    } else {
        let x = x.clamp(1e-9, 1.0 - 1e-9);
        if a == 0 {
            (1.0 - x).ln()
        } else {
            x.ln()
        }
    }
}

/// Complete-data log-likelihood by an explicit product over every pair.
pub fn per_pair_log_likelihood(
    g: &Snapshot,
    labels: &[usize],
    priors: &[f64],
    q: &[Vec<f64>],
    poisson: bool,
    weights: Option<&[f64]>,
) -> f64 {
    let n = g.node_count();
    let w = |u: usize| weights.map_or(1.0, |w| w[u]);
    let mut ll = 0.0;
    for u in 0..n {
        ll += priors[labels[u]].ln();
    }
    for u in 0..n {
        for v in 0..n {
            if u == v || (!g.directed() && v < u) {
                continue;
            }
            let a = g.multiplicity(u, v);
            let x = q[labels[u]][labels[v]] * w(u) * w(v);
            ll += pair_log_pmf(poisson, a, x);
        }
    }
    ll
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let mut num = BigUint::from(1u32);
    let mut den = BigUint::from(1u32);
    for i in 0..k {
        num *= BigUint::from(n - i);
        den *= BigUint::from(i + 1);
    }
    num / den
}

pub fn big_ln(x: &BigUint) -> f64 {
    // ln of an arbitrary-size integer via its leading bits.
    let bits = x.bits();
    if bits <= 1000 {
        let f: f64 = x.to_string().parse().unwrap();
        return f.ln();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    let f: f64 = top.to_string().parse().unwrap();
    f.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `((n; m)) = C(n + m - 1, m)` as an exact integer.
pub fn multiset(n: u64, m: u64) -> BigUint {
    if m == 0 {
        return BigUint::from(1u32);
    }
    if n == 0 {
        return BigUint::from(0u32);
    }
    binomial(n + m - 1, m)
}

/// Description length with every combinatorial factor formed exactly.
pub fn description_length_oracle(g: &Snapshot, labels: &[usize], k: usize) -> f64 {
    let n = g.node_count();
    let mut sizes = vec![0u64; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut m = vec![vec![0u64; k]; k];
    let mut total = 0u64;
    for u in 0..n {
        for v in 0..n {
            if u == v || (!g.directed() && v < u) {
                continue;
            }
            let a = g.multiplicity(u, v) as u64;
            let (r, s) = (labels[u], labels[v]);
            let (r, s) = if g.directed() || r <= s { (r, s) } else { (s, r) };
            m[r][s] += a;
            total += a;
        }
    }
    let mut product = BigUint::from(1u32);
    for r in 0..k {
        for s in 0..k {
            if g.directed() {
                product *= multiset(sizes[r] * sizes[s], m[r][s]);
            } else if r == s {
                product *= multiset(sizes[r] * sizes[r].saturating_sub(1) / 2, m[r][r]);
            } else if r < s {
                product *= multiset(sizes[r] * sizes[s], m[r][s]);
            }
        }
    }
    let kk = k as u64;
    product *= multiset(kk * (kk + 1) / 2, total);
    product *= multiset(kk, total);
    let mut nfact = BigUint::from(1u32);
    for i in 1..=n as u64 {
        nfact *= BigUint::from(i);
    }
    product *= nfact;
    big_ln(&product) - n as f64
}

/// Marginals of the joint `prod_u n_{g_u} prod_{links} P(A_uv | Q)` by
/// summing over all `K^N` labelings.
pub fn edge_factor_marginals(
    g: &Snapshot,
    priors: &[f64],
    q: &[Vec<f64>],
    poisson: bool,
) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let k = priors.len();
    let mut marg = vec![vec![0.0; k]; n];
    let mut labels = vec![0usize; n];
    let total = k.pow(n as u32);
    let mut z = 0.0;
    for _ in 0..total {
        let mut ln = 0.0;
        for u in 0..n {
            ln += priors[labels[u]].ln();
        }
        for e in g.edges() {
            let (u, v) = (e.u as usize, e.v as usize);
            ln += pair_log_pmf(poisson, e.count, q[labels[u]][labels[v]]);
        }
        let p = ln.exp();
        z += p;
        for u in 0..n {
            marg[u][labels[u]] += p;
        }
        for l in labels.iter_mut() {
            *l += 1;
            if *l < k {
                break;
            }
            *l = 0;
        }
    }
    for m in &mut marg {
        for x in m.iter_mut() {
            *x /= z;
        }
    }
    marg
}

/// Random labelled tree on `n` nodes (attach each node to an earlier one).
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    (1..n).map(|v| (rng.random_range(0..v), v)).collect()
}

/// Belief propagation with a message for every ordered pair of distinct
/// nodes (no sparse shortcut), undirected graphs only.
pub struct DenseBp {
    pub n: usize,
    pub k: usize,
    /// `msg[u][v]` is the message u -> v.
    pub msg: Vec<Vec<Vec<f64>>>,
    pub marg: Vec<Vec<f64>>,
}

impl DenseBp {
    pub fn from_marginals(marg: Vec<Vec<f64>>) -> Self {
        let n = marg.len();
        let k = marg[0].len();
        let msg = (0..n).map(|u| vec![marg[u].clone(); n]).collect();
        DenseBp { n, k, msg, marg }
    }

    fn factor(g: &Snapshot, u: usize, v: usize, r: usize, s: usize, q: &[Vec<f64>], poisson: bool) -> f64 {
        pair_log_pmf(poisson, g.multiplicity(u, v), q[r][s]).exp()
    }

    /// One sweep in node order with damping; returns the largest change.
    pub fn sweep(&mut self, g: &Snapshot, priors: &[f64], q: &[Vec<f64>], poisson: bool, damping: f64) -> f64 {
        self.sweep_with(g, priors, q, poisson, damping, false)
    }

    /// As [`DenseBp::sweep`]; with `marginal_non_edges` a non-neighbour
    /// sends its marginal instead of its cavity message.
    pub fn sweep_with(
        &mut self,
        g: &Snapshot,
        priors: &[f64],
        q: &[Vec<f64>],
        poisson: bool,
        damping: f64,
        marginal_non_edges: bool,
    ) -> f64 {
        let (n, k) = (self.n, self.k);
        let mut change: f64 = 0.0;
        for u in 0..n {
            // log of sum_s P(A_wu | Q_{s r}) psi^{w->u}_s for every w
            let mut terms = vec![vec![0.0; k]; n];
            for w in 0..n {
                if w == u {
                    continue;
                }
                let incoming = if marginal_non_edges && g.multiplicity(w, u) == 0 {
                    &self.marg[w]
                } else {
                    &self.msg[w][u]
                };
                for r in 0..k {
                    let mut acc = 0.0;
                    for s in 0..k {
                        acc += Self::factor(g, w, u, s, r, q, poisson) * incoming[s];
                    }
                    terms[w][r] = acc.ln();
                }
            }
            let full: Vec<f64> = (0..k)
                .map(|r| priors[r].ln() + (0..n).filter(|&w| w != u).map(|w| terms[w][r]).sum::<f64>())
                .collect();
            let norm = |logs: Vec<f64>| {
                let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
                let z: f64 = e.iter().sum();
                e.into_iter().map(|x| x / z).collect::<Vec<f64>>()
            };
            for v in 0..n {
                if v == u {
                    continue;
                }
                let fresh = norm((0..k).map(|r| full[r] - terms[v][r]).collect());
                for r in 0..k {
                    let new = (1.0 - damping) * self.msg[u][v][r] + damping * fresh[r];
                    change = change.max((new - self.msg[u][v][r]).abs());
                    self.msg[u][v][r] = new;
                }
            }
            let fresh = norm(full);
            for r in 0..k {
                let new = (1.0 - damping) * self.marg[u][r] + damping * fresh[r];
                change = change.max((new - self.marg[u][r]).abs());
                self.marg[u][r] = new;
            }
        }
        change
    }

    /// Literal two-node posterior estimate of the affinities over all
    /// ordered pairs, with the same block-mass denominator as the library.
    pub fn estimate(&self, g: &Snapshot, q: &[Vec<f64>], poisson: bool) -> (Vec<f64>, Vec<Vec<f64>>) {
        let (n, k) = (self.n, self.k);
        let mass: Vec<f64> = (0..k).map(|r| (0..n).map(|u| self.marg[u][r]).sum()).collect();
        let mut num = vec![vec![0.0; k]; k];
        for u in 0..n {
            for v in 0..n {
                if u == v {
                    continue;
                }
                let a = g.multiplicity(u, v) as f64;
                let mut joint = vec![vec![0.0; k]; k];
                let mut z = 0.0;
                for r in 0..k {
                    for s in 0..k {
                        let x = Self::factor(g, u, v, r, s, q, poisson) * self.msg[u][v][r] * self.msg[v][u][s];
                        joint[r][s] = x;
                        z += x;
                    }
                }
                for r in 0..k {
                    for s in 0..k {
                        num[r][s] += a * joint[r][s] / z;
                    }
                }
            }
        }
        let priors = mass.iter().map(|m| m / n as f64).collect();
        let est = (0..k)
            .map(|r| {
                (0..k)
                    .map(|s| {
                        let d = if r == s { mass[r] * (mass[r] - 1.0) } else { mass[r] * mass[s] };
                        num[r][s] / d
                    })
                    .collect()
            })
            .collect();
        (priors, est)
    }
}

/// Best matching between two labelings up to a permutation of `k` blocks:
/// returns the number of nodes that disagree.
pub fn misassigned(a: &[usize], b: &[usize], k: usize) -> usize {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = usize::MAX;
    permute(&mut perm, 0, &mut |p| {
        let wrong = a.iter().zip(b).filter(|(&x, &y)| p[x] != y).count();
        best = best.min(wrong);
    });
    best
}

fn permute(p: &mut Vec<usize>, i: usize, f: &mut impl FnMut(&[usize])) {
    if i == p.len() {
        f(p);
        return;
    }
    for j in i..p.len() {
        p.swap(i, j);
        permute(p, i + 1, f);
        p.swap(i, j);
    }
}
