//! Scalar baselines: a t-test of the next snapshot's mean degree or mean
//! geodesic against the values in the preceding window.

use crate::detect::{DetectionReport, WindowRecord};
use crate::graph::{mean_degree, mean_geodesic, TemporalNetwork};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    MeanDegree,
    MeanGeodesic,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::MeanDegree => "mean_degree",
            Statistic::MeanGeodesic => "mean_geodesic",
        }
    }
}

/// One value per snapshot. Snapshots without any connected pair have no
/// mean geodesic and yield `None`.
pub fn scalar_series(net: &TemporalNetwork, statistic: Statistic) -> Result<Vec<Option<f64>>> {
    net.snapshots()
        .iter()
        .map(|s| match statistic {
            Statistic::MeanDegree => Ok(Some(mean_degree(s))),
            Statistic::MeanGeodesic => match mean_geodesic(s) {
                Ok(v) => Ok(Some(v)),
                Err(Error::NoConnectedPair) => Ok(None),
                Err(e) => Err(e),
            },
        })
        .collect()
}

/// Scale of the t statistic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestForm {
    /// `(x - mean) / (s sqrt(1 + 1/w))`: the probe is a new draw.
    #[default]
    Prediction,
    /// `(x - mean) / (s / sqrt(w))`.
    OneSample,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub dof: usize,
    pub p: f64,
    pub accepted: bool,
    /// Zero window variance with a differing probe.
    pub degenerate: bool,
}

/// Two-tailed p-value of Student's t with `dof` degrees of freedom.
pub fn two_tailed_p(t: f64, dof: usize) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let nu = dof as f64;
    beta_reg(nu / 2.0, 0.5, nu / (nu + t * t)).clamp(0.0, 1.0)
}

/// Tests whether `probe` is consistent with the window values.
pub fn t_test_detect(window: &[f64], probe: f64, alpha: f64, form: TestForm) -> Result<TTest> {
    let w = window.len();
    if w < 2 {
        return Err(Error::InvalidArgument(format!("t-test needs at least 2 values, got {w}")));
    }
    let mean = window.iter().sum::<f64>() / w as f64;
    let var = window.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (w - 1) as f64;
    let dof = w - 1;
    let diff = probe - mean;
    if var == 0.0 {
        let degenerate = diff != 0.0;
        let t = if degenerate { diff.signum() * f64::INFINITY } else { 0.0 };
        let p = if degenerate { 0.0 } else { 1.0 };
        return Ok(TTest { t, dof, p, accepted: p < alpha, degenerate });
    }
    let scale = match form {
        TestForm::Prediction => (1.0 + 1.0 / w as f64).sqrt(),
        TestForm::OneSample => 1.0 / (w as f64).sqrt(),
    };
    let t = diff / (var.sqrt() * scale);
    let p = two_tailed_p(t, dof);
    Ok(TTest {
        t,
        dof,
        p,
        accepted: p < alpha,
        degenerate: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub statistic: Statistic,
    pub window: usize,
    pub alpha: f64,
    pub form: TestForm,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            statistic: Statistic::MeanDegree,
            window: 16,
            alpha: 0.05,
            form: TestForm::Prediction,
        }
    }
}

/// Tests the snapshot right after every window of `cfg.window` snapshots.
///
/// Missing values are dropped from the window; windows whose probe is
/// missing, or that keep fewer than two values, produce no record.
pub fn detect_baseline(net: &TemporalNetwork, cfg: &BaselineConfig) -> Result<DetectionReport> {
    if cfg.window < 2 {
        return Err(Error::InvalidArgument(format!("window {} < 2", cfg.window)));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {} not in (0, 1)", cfg.alpha)));
    }
    if net.len() <= cfg.window {
        return Err(Error::WindowOutOfBounds {
            t0: 0,
            width: cfg.window + 1,
            len: net.len(),
        });
    }
    let values = scalar_series(net, cfg.statistic)?;
    let mut windows = Vec::new();
    for t0 in 0..net.len() - cfg.window {
        let probe_at = t0 + cfg.window;
        let Some(probe) = values[probe_at] else { continue };
        let sample: Vec<f64> = values[t0..probe_at].iter().flatten().copied().collect();
        if sample.len() < 2 {
            continue;
        }
        let test = t_test_detect(&sample, probe, cfg.alpha, cfg.form)?;
        windows.push(WindowRecord {
            detector: cfg.statistic.name().to_string(),
            t0,
            w: cfg.window,
            t_star: probe_at,
            g: None,
            p: test.p,
            alpha: cfg.alpha,
            accepted: test.accepted,
            k: None,
            bootstrap: None,
            seed: None,
        });
    }
    Ok(DetectionReport {
        detector: cfg.statistic.name().to_string(),
        horizon: net.len(),
        windows,
        config: serde_json::to_value(cfg)?,
    })
}
