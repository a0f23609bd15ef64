//! Temporal networks with planted change points.

use crate::graph::{Snapshot, TemporalNetwork};
use crate::rng::stream;
use crate::sbm::{sample_graph, Affinity, BlockModel, Family, Partition};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

fn default_family() -> Family {
    Family::Bernoulli
}

/// One stationary stretch of a planted series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    #[serde(rename = "Q")]
    pub q: Affinity,
    #[serde(default = "default_family")]
    pub family: Family,
    pub block_sizes: Vec<usize>,
    pub duration: usize,
}

impl Phase {
    fn model(&self) -> Result<(BlockModel, Partition)> {
        let n: usize = self.block_sizes.iter().sum();
        if n == 0 {
            return Err(Error::InvalidInput("phase has no nodes".into()));
        }
        if self.q.k() != self.block_sizes.len() {
            return Err(Error::InvalidInput(format!(
                "Q is {k}x{k} but {} block sizes are given",
                self.block_sizes.len(),
                k = self.q.k()
            )));
        }
        let priors = self.block_sizes.iter().map(|&s| s as f64 / n as f64).collect();
        let model = BlockModel::new(self.family, priors, self.q.clone())?;
        Ok((model, Partition::from_block_sizes(&self.block_sizes)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedSeriesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub phases: Vec<Phase>,
    #[serde(default)]
    pub seed: u64,
}

impl PlantedSeriesSpec {
    pub fn validate(&self) -> Result<()> {
        let first = self
            .phases
            .first()
            .ok_or_else(|| Error::InvalidInput("series spec has no phases".into()))?;
        let n: usize = first.block_sizes.iter().sum();
        for (i, p) in self.phases.iter().enumerate() {
            if p.duration == 0 {
                return Err(Error::InvalidInput(format!("phase {i} has zero duration")));
            }
            if p.block_sizes.iter().sum::<usize>() != n {
                return Err(Error::InvalidInput(format!(
                    "phase {i} does not have {n} nodes"
                )));
            }
            p.model()?;
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn node_count(&self) -> usize {
        self.phases.first().map_or(0, |p| p.block_sizes.iter().sum())
    }

    pub fn horizon(&self) -> usize {
        self.phases.iter().map(|p| p.duration).sum()
    }

    /// Phase boundaries: the index of the first snapshot of every phase but the first.
    pub fn change_points(&self) -> Vec<usize> {
        let mut t = 0;
        let mut out = Vec::new();
        for p in &self.phases[..self.phases.len().saturating_sub(1)] {
            t += p.duration;
            out.push(t);
        }
        out
    }
}

/// Known change points for a series, stored next to its edge list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truth {
    pub change_points: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct PlantedSeries {
    pub network: TemporalNetwork,
    pub truth: Truth,
}

/// Draws every snapshot independently from its phase's model; snapshot `t`
/// uses its own random stream, so the result depends only on the seed.
pub fn generate_series(spec: &PlantedSeriesSpec) -> Result<PlantedSeries> {
    spec.validate()?;
    let mut snapshots: Vec<Snapshot> = Vec::with_capacity(spec.horizon());
    for phase in &spec.phases {
        let (model, partition) = phase.model()?;
        for _ in 0..phase.duration {
            let t = snapshots.len() as u64;
            snapshots.push(sample_graph(&model, &partition, &mut stream(spec.seed, &[t]))?);
        }
    }
    Ok(PlantedSeries {
        network: TemporalNetwork::new(snapshots)?,
        truth: Truth {
            change_points: spec.change_points(),
        },
    })
}

fn two_phase(name: &str, sizes: [usize; 2], before: [[f64; 2]; 2], after: [[f64; 2]; 2]) -> PlantedSeriesSpec {
    let phase = |q: [[f64; 2]; 2]| Phase {
        q: Affinity::from_rows(q.iter().map(|r| r.to_vec()).collect()).expect("square"),
        family: Family::Bernoulli,
        block_sizes: sizes.to_vec(),
        duration: 16,
    };
    PlantedSeriesSpec {
        name: Some(name.to_string()),
        phases: vec![phase(before), phase(after)],
        seed: 0,
    }
}

const ER: [[f64; 2]; 2] = [[0.1, 0.1], [0.1, 0.1]];
const TWO_COMMUNITIES: [[f64; 2]; 2] = [[0.15, 0.05], [0.05, 0.15]];
const ASSORTATIVE: [[f64; 2]; 2] = [[0.2, 0.01], [0.01, 0.2]];
const CORE_PERIPHERY: [[f64; 2]; 2] = [[0.3, 0.09], [0.09, 0.01]];

/// The three built-in two-phase setups, 16 + 16 snapshots each.
pub fn builtin_specs() -> Vec<PlantedSeriesSpec> {
    vec![
        two_phase("er-2c", [22, 28], ER, TWO_COMMUNITIES),
        two_phase("2c-cp", [20, 30], ASSORTATIVE, CORE_PERIPHERY),
        two_phase("cp-2c", [20, 30], CORE_PERIPHERY, ASSORTATIVE),
    ]
}

/// Looks up a built-in setup. Accepts `er-2c`, `ER→2C`, `ER->2C` and the
/// like, case-insensitively.
pub fn builtin_spec(name: &str) -> Result<PlantedSeriesSpec> {
    let key = name
        .trim()
        .to_ascii_lowercase()
        .replace('→', "-")
        .replace("->", "-")
        .replace('_', "-");
    builtin_specs()
        .into_iter()
        .find(|s| s.name.as_deref() == Some(key.as_str()))
        .ok_or_else(|| Error::InvalidArgument(format!("unknown series spec {name:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_lookup() {
        let s = builtin_spec("ER→2C").unwrap();
        assert_eq!(s.node_count(), 50);
        assert_eq!(s.change_points(), vec![16]);
        assert_eq!(builtin_spec("CP->2c").unwrap().phases[0].block_sizes, vec![20, 30]);
        assert!(builtin_spec("er-cp").is_err());
    }

    #[test]
    fn single_phase_has_no_change_points() {
        let mut s = builtin_spec("er-2c").unwrap();
        s.phases.truncate(1);
        let series = generate_series(&s).unwrap();
        assert!(series.truth.change_points.is_empty());
        assert_eq!(series.network.len(), 16);
    }

    #[test]
    fn same_seed_same_series() {
        let s = builtin_spec("2c-cp").unwrap().with_seed(9);
        let a = generate_series(&s).unwrap();
        let b = generate_series(&s).unwrap();
        assert_eq!(a.network.snapshots(), b.network.snapshots());
        let c = generate_series(&s.with_seed(10)).unwrap();
        assert_ne!(a.network.snapshots(), c.network.snapshots());
    }

    #[test]
    fn mismatched_phase_sizes_rejected() {
        let mut s = builtin_spec("er-2c").unwrap();
        s.phases[1].block_sizes = vec![20, 20];
        assert!(generate_series(&s).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let s = builtin_spec("cp-2c").unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"Q\""));
        let back: PlantedSeriesSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
