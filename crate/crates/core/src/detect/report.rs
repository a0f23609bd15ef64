use super::ChangePointResult;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// One tested window, flattened for JSON and CSV output.
///
/// Baseline detectors leave `g`, `K` and `bootstrap` empty; for them
/// `t_star` is the probe instant right after the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub detector: String,
    pub t0: usize,
    pub w: usize,
    pub t_star: usize,
    pub g: Option<f64>,
    pub p: f64,
    pub alpha: f64,
    pub accepted: bool,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub bootstrap: Option<usize>,
    pub seed: Option<u64>,
}

impl From<&ChangePointResult> for WindowRecord {
    fn from(r: &ChangePointResult) -> Self {
        WindowRecord {
            detector: String::new(),
            t0: r.t0,
            w: r.w,
            t_star: r.t_star,
            g: Some(r.g),
            p: r.p,
            alpha: r.alpha,
            accepted: r.accepted,
            k: Some(r.k),
            bootstrap: Some(r.null.samples.len()),
            seed: Some(r.seed),
        }
    }
}

impl WindowRecord {
    /// Instants this window could have reported.
    pub fn candidates(&self) -> std::ops::Range<usize> {
        if self.g.is_some() {
            self.t0 + 1..self.t0 + self.w
        } else {
            self.t0 + self.w..self.t0 + self.w + 1
        }
    }
}

/// Window-level decisions of one detector over one series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub detector: String,
    /// Number of snapshots in the series.
    pub horizon: usize,
    pub windows: Vec<WindowRecord>,
    /// Resolved configuration the report was produced with.
    pub config: serde_json::Value,
}

impl DetectionReport {
    /// Instants accepted as the best split by at least one window, ascending.
    pub fn detected_instants(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .windows
            .iter()
            .filter(|w| w.accepted)
            .map(|w| w.t_star)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// For every instant, the share of windows that could report it and
    /// accepted it (zero where no window covers the instant).
    pub fn acceptance_fractions(&self) -> Vec<f64> {
        let mut covered = vec![0usize; self.horizon];
        let mut accepted = vec![0usize; self.horizon];
        for w in &self.windows {
            for t in w.candidates().filter(|&t| t < self.horizon) {
                covered[t] += 1;
            }
            if w.accepted && w.t_star < self.horizon {
                accepted[w.t_star] += 1;
            }
        }
        covered
            .iter()
            .zip(&accepted)
            .map(|(&c, &a)| if c > 0 { a as f64 / c as f64 } else { 0.0 })
            .collect()
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        Ok(serde_json::from_reader(input)?)
    }

    /// One row per window with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for w in &self.windows {
            writer.serialize(w).map_err(csv_error)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads rows written by [`write_csv`](Self::write_csv). The horizon is
    /// not stored in CSV; it is taken as the end of the last window's range.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let windows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<WindowRecord>, _>>()
            .map_err(csv_error)?;
        let detector = windows.first().map(|w| w.detector.clone()).unwrap_or_default();
        let horizon = windows.iter().map(|w| w.candidates().end).max().unwrap_or(0);
        Ok(DetectionReport {
            detector,
            horizon,
            windows,
            config: serde_json::Value::Null,
        })
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t0: usize, t_star: usize, accepted: bool) -> WindowRecord {
        WindowRecord {
            detector: "sbm".into(),
            t0,
            w: 4,
            t_star,
            g: Some(1.0),
            p: if accepted { 0.01 } else { 0.5 },
            alpha: 0.05,
            accepted,
            k: Some(1),
            bootstrap: Some(10),
            seed: Some(3),
        }
    }

    fn report() -> DetectionReport {
        DetectionReport {
            detector: "sbm".into(),
            horizon: 6,
            windows: vec![record(0, 2, true), record(1, 2, false), record(2, 4, true)],
            config: serde_json::Value::Null,
        }
    }

    #[test]
    fn any_window_rule() {
        assert_eq!(report().detected_instants(), vec![2, 4]);
        let f = report().acceptance_fractions();
        assert_eq!(f[2], 0.5);
        assert_eq!(f[4], 0.5);
        assert_eq!(f[0], 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let r = report();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("detector,t0,w,t_star,g,p,alpha,accepted,K,bootstrap,seed"));
        assert_eq!(text.lines().count(), 4);
        let back = DetectionReport::read_csv(&buf[..]).unwrap();
        assert_eq!(back.windows, r.windows);
    }

    #[test]
    fn baseline_rows_have_empty_fields() {
        let mut r = record(0, 4, true);
        r.g = None;
        r.k = None;
        r.bootstrap = None;
        let rep = DetectionReport { windows: vec![r], ..report() };
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(",,"));
        assert_eq!(DetectionReport::read_csv(text.as_bytes()).unwrap().windows, rep.windows);
    }
}
