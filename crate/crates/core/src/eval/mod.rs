//! Scoring detections against known change points and aggregating runs.

mod plot;

pub use plot::{curves_csv, curves_svg, emit_plot_data, ChartKind, Curve};

use crate::detect::DetectionReport;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degenerate {
    /// Nothing was detected; precision is reported as 0.
    NoFound,
    /// Nothing to recall; the value is meaningless and reported as 0.
    NoKnown,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub degenerate: Option<Degenerate>,
}

fn within(t: usize, others: &[usize], s: usize) -> bool {
    others.iter().any(|&o| t.abs_diff(o) <= s)
}

/// Share of found instants with a known change point at most `s` steps away.
pub fn precision(found: &[usize], known: &[usize], s: usize) -> Score {
    if found.is_empty() {
        return Score {
            value: 0.0,
            degenerate: Some(Degenerate::NoFound),
        };
    }
    let hits = found.iter().filter(|&&t| within(t, known, s)).count();
    Score {
        value: hits as f64 / found.len() as f64,
        degenerate: None,
    }
}

/// Share of known change points with a found instant at most `s` steps away.
pub fn recall(found: &[usize], known: &[usize], s: usize) -> Score {
    if known.is_empty() {
        return Score {
            value: 0.0,
            degenerate: Some(Degenerate::NoKnown),
        };
    }
    let hits = known.iter().filter(|&&t| within(t, found, s)).count();
    Score {
        value: hits as f64 / known.len() as f64,
        degenerate: None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub s: usize,
    pub precision: Score,
    pub recall: Score,
}

/// Precision and recall for every delay `0..=max_delay`.
pub fn precision_recall_table(found: &[usize], known: &[usize], max_delay: usize) -> Vec<PrecisionRecall> {
    (0..=max_delay)
        .map(|s| PrecisionRecall {
            s,
            precision: precision(found, known, s),
            recall: recall(found, known, s),
        })
        .collect()
}

fn check_runs(runs: &[DetectionReport], horizon: usize) -> Result<()> {
    if runs.is_empty() {
        return Err(Error::InvalidArgument("no runs".into()));
    }
    if let Some(r) = runs.iter().find(|r| r.horizon != horizon) {
        return Err(Error::InvalidInput(format!(
            "run horizon {} differs from {horizon}",
            r.horizon
        )));
    }
    Ok(())
}

/// For every instant, the fraction of runs that report it as a change point.
pub fn detection_rate_curve(runs: &[DetectionReport], horizon: usize) -> Result<Vec<f64>> {
    check_runs(runs, horizon)?;
    let mut counts = vec![0usize; horizon];
    for run in runs {
        for t in run.detected_instants() {
            if t < horizon {
                counts[t] += 1;
            }
        }
    }
    Ok(counts.iter().map(|&c| c as f64 / runs.len() as f64).collect())
}

/// For every instant, the mean of `1 - p` over the windows (of all runs)
/// whose best split was that instant; zero where no window chose it.
pub fn mean_one_minus_p_curve(runs: &[DetectionReport], horizon: usize) -> Result<Vec<f64>> {
    check_runs(runs, horizon)?;
    let mut sum = vec![0.0; horizon];
    let mut count = vec![0usize; horizon];
    for w in runs.iter().flat_map(|r| &r.windows) {
        if w.t_star < horizon {
            sum[w.t_star] += 1.0 - w.p;
            count[w.t_star] += 1;
        }
    }
    Ok(sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::WindowRecord;

    #[test]
    fn identity_and_direct_count() {
        let p = precision(&[4, 9], &[4, 9], 0);
        let r = recall(&[4, 9], &[4, 9], 0);
        assert_eq!((p.value, r.value), (1.0, 1.0));
        assert_eq!(precision(&[3, 10], &[4], 1).value, 0.5);
        assert_eq!(recall(&[3, 10], &[4], 1).value, 1.0);
    }

    #[test]
    fn degenerate_flags() {
        let p = precision(&[], &[4], 2);
        assert_eq!(p, Score { value: 0.0, degenerate: Some(Degenerate::NoFound) });
        assert_eq!(recall(&[], &[4], 2).value, 0.0);
        assert_eq!(recall(&[1], &[], 2).degenerate, Some(Degenerate::NoKnown));
    }

    fn run(windows: Vec<(usize, f64, bool)>) -> DetectionReport {
        DetectionReport {
            detector: "sbm".into(),
            horizon: 8,
            windows: windows
                .into_iter()
                .enumerate()
                .map(|(t0, (t_star, p, accepted))| WindowRecord {
                    detector: "sbm".into(),
                    t0,
                    w: 4,
                    t_star,
                    g: Some(0.0),
                    p,
                    alpha: 0.05,
                    accepted,
                    k: Some(1),
                    bootstrap: Some(20),
                    seed: Some(0),
                })
                .collect(),
            config: serde_json::Value::Null,
        }
    }

    #[test]
    fn curves() {
        assert!(detection_rate_curve(&[], 8).is_err());
        let runs = vec![run(vec![(3, 0.01, true)]), run(vec![(3, 0.5, false)])];
        let rate = detection_rate_curve(&runs, 8).unwrap();
        assert_eq!(rate[3], 0.5);
        assert_eq!(rate.iter().sum::<f64>(), 0.5);
        let omp = mean_one_minus_p_curve(&runs, 8).unwrap();
        assert!((omp[3] - (0.99 + 0.5) / 2.0).abs() < 1e-12);
        assert_eq!(omp[2], 0.0);
        let single = mean_one_minus_p_curve(&[run(vec![(2, 0.2, false)])], 8).unwrap();
        assert!((single[2] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn horizon_mismatch_is_error() {
        let mut r = run(vec![(3, 0.01, true)]);
        r.horizon = 9;
        assert!(detection_rate_curve(&[r], 8).is_err());
    }
}
