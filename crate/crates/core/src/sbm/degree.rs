use super::model::{DegreeCorrection, Partition};
use crate::graph::Snapshot;
use crate::{Error, Result};

/// `theta_u = d_u / sum_{v in g_u} d_v`.
///
/// Blocks whose nodes have no links get uniform `theta` and are reported in
/// [`DegreeCorrection::degenerate_blocks`].
pub fn apply_degree_correction(graph: &Snapshot, partition: &Partition) -> Result<DegreeCorrection> {
    if graph.node_count() != partition.node_count() {
        return Err(Error::InvalidInput("partition and graph sizes differ".into()));
    }
    let degrees = graph.degrees();
    Ok(correction_from_degrees(&degrees, partition))
}

pub(crate) fn correction_from_degrees(degrees: &[f64], partition: &Partition) -> DegreeCorrection {
    let k = partition.k();
    let sizes = partition.block_sizes();
    let mut block_degree = vec![0.0; k];
    for (u, &d) in degrees.iter().enumerate() {
        block_degree[partition.block(u)] += d;
    }
    let degenerate_blocks: Vec<usize> = (0..k)
        .filter(|&r| sizes[r] > 0 && block_degree[r] <= 0.0)
        .collect();
    let theta: Vec<f64> = degrees
        .iter()
        .enumerate()
        .map(|(u, &d)| {
            let r = partition.block(u);
            if block_degree[r] > 0.0 {
                d / block_degree[r]
            } else {
                1.0 / sizes[r] as f64
            }
        })
        .collect();
    let weights = theta
        .iter()
        .enumerate()
        .map(|(u, &t)| t * sizes[partition.block(u)] as f64)
        .collect();
    DegreeCorrection {
        theta,
        weights,
        degenerate_blocks,
    }
}
