use super::Snapshot;
use crate::{Error, Result};
use std::collections::VecDeque;

/// Sum of degrees over node count; multiplicity counts.
pub fn mean_degree(s: &Snapshot) -> f64 {
    if s.node_count() == 0 {
        return 0.0;
    }
    2.0 * s.total_multiplicity() as f64 / s.node_count() as f64
}

/// Mean shortest-path length over connected ordered pairs.
///
/// Edges have unit length regardless of multiplicity; unreachable pairs are
/// left out of the average. Fails with [`Error::NoConnectedPair`] when no
/// pair is connected.
pub fn mean_geodesic(s: &Snapshot) -> Result<f64> {
    let n = s.node_count();
    if n < 2 {
        return Err(Error::InvalidInput("mean geodesic needs at least two nodes".into()));
    }
    let adj = s.neighbors();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let (mut total, mut pairs) = (0u64, 0u64);
    for src in 0..n {
        if adj[src].is_empty() {
            continue;
        }
        dist.fill(usize::MAX);
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    total += dist[v] as u64;
                    pairs += 1;
                    queue.push_back(v);
                }
            }
        }
    }
    if pairs == 0 {
        return Err(Error::NoConnectedPair);
    }
    Ok(total as f64 / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(n: usize, edges: &[(usize, usize)]) -> Snapshot {
        Snapshot::from_edges(n, false, edges.iter().map(|&(u, v)| (u, v, 1))).unwrap()
    }

    #[test]
    fn degree_closed_forms() {
        assert_eq!(mean_degree(&snap(5, &[])), 0.0);
        assert_eq!(mean_degree(&snap(3, &[(0, 1), (1, 2), (0, 2)])), 2.0);
        let multi = Snapshot::from_edges(2, false, [(0, 1, 3)]).unwrap();
        assert_eq!(mean_degree(&multi), 3.0);
    }

    #[test]
    fn geodesic_closed_forms() {
        let path = snap(3, &[(0, 1), (1, 2)]);
        assert!((mean_geodesic(&path).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        let k4 = snap(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(mean_geodesic(&k4).unwrap(), 1.0);
        let disjoint = snap(4, &[(0, 1), (2, 3)]);
        assert_eq!(mean_geodesic(&disjoint).unwrap(), 1.0);
    }

    #[test]
    fn geodesic_ignores_multiplicity() {
        let s = Snapshot::from_edges(3, false, [(0, 1, 5), (1, 2, 1)]).unwrap();
        assert!((mean_geodesic(&s).unwrap() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn geodesic_errors() {
        assert!(matches!(mean_geodesic(&snap(3, &[])), Err(Error::NoConnectedPair)));
        assert!(mean_geodesic(&snap(1, &[])).is_err());
    }

    #[test]
    fn directed_geodesic_follows_arcs() {
        // 0 -> 1 -> 2: reachable ordered pairs (0,1)=1, (0,2)=2, (1,2)=1
        let s = Snapshot::from_edges(3, true, [(0, 1, 1), (1, 2, 1)]).unwrap();
        assert!((mean_geodesic(&s).unwrap() - 4.0 / 3.0).abs() < 1e-15);
    }
}
