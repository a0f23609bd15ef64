//! Text edge lists: one `t u v [count]` record per line.

use super::{Snapshot, TemporalNetwork};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    /// Commas if the line has any, whitespace otherwise.
    #[default]
    Auto,
    Comma,
    Whitespace,
}

/// Optional JSON metadata stored next to an edge list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    /// Full node universe; ids in the edge list must be among these.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default)]
    pub directed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_unit: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct EdgeListFormat {
    pub delimiter: Delimiter,
    /// Skip the first non-comment line.
    pub has_header: bool,
    /// Drop `u == v` records instead of failing.
    pub allow_self_loops: bool,
    pub sidecar: Sidecar,
}

impl EdgeListFormat {
    pub fn with_sidecar(sidecar: Sidecar) -> Self {
        EdgeListFormat {
            sidecar,
            ..Default::default()
        }
    }
}

struct Record {
    t: i64,
    u: String,
    v: String,
    count: u32,
}

fn parse_record(line: &str, lineno: usize, delimiter: Delimiter) -> Result<Record> {
    let err = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    let fields: Vec<&str> = match delimiter {
        Delimiter::Comma => line.split(',').map(str::trim).collect(),
        Delimiter::Whitespace => line.split_whitespace().collect(),
        Delimiter::Auto if line.contains(',') => line.split(',').map(str::trim).collect(),
        Delimiter::Auto => line.split_whitespace().collect(),
    };
    if !(3..=4).contains(&fields.len()) {
        return Err(err(format!("expected 3 or 4 fields, found {}", fields.len())));
    }
    let t: i64 = fields[0]
        .parse()
        .map_err(|_| err(format!("bad time {:?}", fields[0])))?;
    if t < 0 {
        return Err(err(format!("negative time {t}")));
    }
    let (u, v) = (fields[1], fields[2]);
    if u.is_empty() || v.is_empty() {
        return Err(err("empty node id".into()));
    }
    let count = match fields.get(3) {
        None => 1,
        Some(raw) => {
            let c: i64 = raw
                .parse()
                .map_err(|_| err(format!("bad count {raw:?}")))?;
            if c < 0 {
                return Err(err(format!("negative count {c}")));
            }
            u32::try_from(c).map_err(|_| err(format!("count {c} too large")))?
        }
    };
    Ok(Record {
        t,
        u: u.to_string(),
        v: v.to_string(),
        count,
    })
}

/// Numeric ids sort numerically, anything else lexicographically.
fn sorted_ids(ids: impl Iterator<Item = String>) -> Vec<String> {
    let mut ids: Vec<String> = ids.collect();
    ids.sort();
    ids.dedup();
    if ids.iter().all(|s| s.parse::<i64>().is_ok()) {
        ids.sort_by_key(|s| s.parse::<i64>().unwrap());
    }
    ids
}

/// Reads a temporal network from an edge list.
///
/// One snapshot is produced per time in `[min t, max t]`, so missing times
/// become empty snapshots. Repeated records accumulate multiplicity.
pub fn load_edge_list<R: BufRead>(source: R, format: &EdgeListFormat) -> Result<TemporalNetwork> {
    let mut records = Vec::new();
    let mut header_pending = format.has_header;
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let rec = parse_record(trimmed, i + 1, format.delimiter)?;
        if rec.u == rec.v {
            if format.allow_self_loops {
                continue;
            }
            return Err(Error::Parse {
                line: i + 1,
                message: format!("self-loop on node {}", rec.u),
            });
        }
        records.push((i + 1, rec));
    }
    if records.is_empty() && format.sidecar.t_min.is_none() {
        return Err(Error::NoRecords);
    }

    let labels = match &format.sidecar.labels {
        Some(labels) => labels.clone(),
        None => sorted_ids(
            records
                .iter()
                .flat_map(|(_, r)| [r.u.clone(), r.v.clone()]),
        ),
    };
    if labels.is_empty() {
        return Err(Error::NoRecords);
    }
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();

    let rec_min = records.iter().map(|(_, r)| r.t).min();
    let rec_max = records.iter().map(|(_, r)| r.t).max();
    let t_min = match (format.sidecar.t_min, rec_min) {
        (Some(a), Some(b)) => a.min(b),
        (a, b) => a.or(b).unwrap(),
    };
    let t_max = match (format.sidecar.t_max, rec_max) {
        (Some(a), Some(b)) => a.max(b),
        (a, b) => a.or(b).unwrap_or(t_min),
    };
    if t_max < t_min {
        return Err(Error::InvalidInput("empty time range".into()));
    }

    let mut by_time: BTreeMap<i64, Vec<(usize, usize, u32)>> = BTreeMap::new();
    for (lineno, r) in &records {
        let lookup = |id: &str| {
            index.get(id).copied().ok_or_else(|| Error::Parse {
                line: *lineno,
                message: format!("node {id:?} not declared in sidecar labels"),
            })
        };
        let (u, v) = (lookup(&r.u)?, lookup(&r.v)?);
        by_time.entry(r.t).or_default().push((u, v, r.count));
    }

    let n = labels.len();
    let directed = format.sidecar.directed;
    let mut snapshots = Vec::with_capacity((t_max - t_min + 1) as usize);
    for t in t_min..=t_max {
        let edges = by_time.remove(&t).unwrap_or_default();
        snapshots.push(Snapshot::from_edges(n, directed, edges)?);
    }
    let mut net =
        TemporalNetwork::with_times(snapshots, (t_min..=t_max).collect())?.with_labels(labels)?;
    if let Some(unit) = &format.sidecar.time_unit {
        net = net.with_time_unit(unit.clone());
    }
    Ok(net)
}

fn label(net: &TemporalNetwork, u: u32) -> String {
    match net.labels() {
        Some(l) => l[u as usize].clone(),
        None => u.to_string(),
    }
}

/// Writes the canonical `t,u,v,count` form, sorted by `(t, u, v)`.
pub fn save_edge_list<W: Write>(net: &TemporalNetwork, mut out: W) -> Result<()> {
    writeln!(out, "# t,u,v,count")?;
    for (s, t) in net.snapshots().iter().zip(net.times()) {
        for e in s.edges() {
            writeln!(out, "{t},{},{},{}", label(net, e.u), label(net, e.v), e.count)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Metadata needed to reload `net` exactly, including silent nodes and
/// empty trailing snapshots.
pub fn save_sidecar(net: &TemporalNetwork) -> Sidecar {
    Sidecar {
        labels: Some(
            (0..net.node_count() as u32)
                .map(|u| label(net, u))
                .collect(),
        ),
        directed: net.directed(),
        t_min: net.times().first().copied(),
        t_max: net.times().last().copied(),
        time_unit: net.time_unit().map(str::to_string),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<TemporalNetwork> {
        load_edge_list(text.as_bytes(), &EdgeListFormat::default())
    }

    #[test]
    fn repeated_records_accumulate() {
        let net = load("0,a,b\n0,a,b\n1,b,c\n").unwrap();
        assert_eq!(net.len(), 2);
        assert_eq!(net.snapshot(0).multiplicity(0, 1), 2);
        assert_eq!(net.snapshot(1).multiplicity(1, 2), 1);
        assert_eq!(net.labels().unwrap(), ["a", "b", "c"]);
    }

    #[test]
    fn empty_stream_is_an_error() {
        assert!(matches!(load(""), Err(Error::NoRecords)));
        assert!(matches!(load("# only a comment\n"), Err(Error::NoRecords)));
    }

    #[test]
    fn gaps_become_empty_snapshots() {
        let net = load("0 a b\n2 a c\n").unwrap();
        assert_eq!(net.len(), 3);
        assert_eq!(net.snapshot(1).pair_count(), 0);
        assert_eq!(net.times(), [0, 1, 2]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match load("0,1,2\n# c\n0,1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_count_rejected() {
        assert!(matches!(load("0,1,2,-1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn self_loops_rejected_or_dropped() {
        assert!(matches!(load("0,1,1\n"), Err(Error::Parse { line: 1, .. })));
        let fmt = EdgeListFormat {
            allow_self_loops: true,
            ..Default::default()
        };
        let net = load_edge_list("0,1,1\n0,1,2\n".as_bytes(), &fmt).unwrap();
        assert_eq!(net.snapshot(0).total_multiplicity(), 1);
    }

    #[test]
    fn numeric_ids_sort_numerically() {
        let net = load("0 10 2\n0 2 1\n").unwrap();
        assert_eq!(net.labels().unwrap(), ["1", "2", "10"]);
    }

    #[test]
    fn header_and_count_column() {
        let fmt = EdgeListFormat {
            has_header: true,
            ..Default::default()
        };
        let net = load_edge_list("t,u,v,count\n5,x,y,3\n".as_bytes(), &fmt).unwrap();
        assert_eq!(net.times(), [5]);
        assert_eq!(net.snapshot(0).multiplicity(0, 1), 3);
    }

    #[test]
    fn sidecar_declares_universe_and_direction() {
        let sidecar = Sidecar {
            labels: Some(vec!["a".into(), "b".into(), "c".into()]),
            directed: true,
            t_min: Some(0),
            t_max: Some(3),
            time_unit: Some("week".into()),
        };
        let net = load_edge_list("1,b,a\n".as_bytes(), &EdgeListFormat::with_sidecar(sidecar))
            .unwrap();
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.len(), 4);
        assert!(net.directed());
        assert_eq!(net.snapshot(1).multiplicity(1, 0), 1);
        assert_eq!(net.snapshot(1).multiplicity(0, 1), 0);
        assert_eq!(net.time_unit(), Some("week"));
        let bad = Sidecar {
            labels: Some(vec!["a".into()]),
            ..Default::default()
        };
        assert!(load_edge_list("0,a,z\n".as_bytes(), &EdgeListFormat::with_sidecar(bad)).is_err());
    }

    #[test]
    fn save_is_sorted_canonical_form() {
        let net = load("1,c,a\n0,b,c\n0,a,b,2\n").unwrap();
        let mut buf = Vec::new();
        save_edge_list(&net, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# t,u,v,count\n0,a,b,2\n0,b,c,1\n1,a,c,1\n");
    }
}
