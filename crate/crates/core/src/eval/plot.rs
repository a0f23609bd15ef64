//! Plot-ready CSV tables and small self-contained SVG charts.

use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// A named sequence of y-values sharing the x-axis of its table.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub name: String,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Curve {
            name: name.into(),
            values,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartKind {
    Bars,
    Lines,
}

fn check(xs: &[f64], curves: &[Curve]) -> Result<()> {
    if curves.is_empty() || xs.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    if let Some(c) = curves.iter().find(|c| c.values.len() != xs.len()) {
        return Err(Error::InvalidInput(format!(
            "curve {:?} has {} values for {} x positions",
            c.name,
            c.values.len(),
            xs.len()
        )));
    }
    Ok(())
}

/// CSV with one row per x-value and one column per curve.
pub fn curves_csv(x_name: &str, xs: &[f64], curves: &[Curve]) -> Result<String> {
    check(xs, curves)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = std::iter::once(x_name)
        .chain(curves.iter().map(|c| c.name.as_str()))
        .collect();
    let io = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(&header).map_err(io)?;
    for (i, x) in xs.iter().enumerate() {
        let row: Vec<String> = std::iter::once(x.to_string())
            .chain(curves.iter().map(|c| c.values[i].to_string()))
            .collect();
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A standalone SVG chart; bars are grouped per x position.
pub fn curves_svg(title: &str, xs: &[f64], curves: &[Curve], kind: ChartKind) -> Result<String> {
    check(xs, curves)?;
    let (width, height) = (720.0, 360.0);
    let (left, right, top, bottom) = (50.0, 20.0, 30.0, 40.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let ymax = curves
        .iter()
        .flat_map(|c| c.values.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(1e-12);
    let slot = plot_w / xs.len() as f64;
    let x_at = |i: usize| left + slot * (i as f64 + 0.5);
    let y_at = |v: f64| top + plot_h * (1.0 - (v / ymax).clamp(0.0, 1.0));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    let _ = writeln!(svg, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, top + plot_h);
    for tick in 0..=4 {
        let v = ymax * tick as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            left - 4.0,
            y_at(v) + 4.0,
            v
        );
    }
    let label_every = (xs.len() / 16).max(1);
    for (i, x) in xs.iter().enumerate().filter(|(i, _)| i % label_every == 0) {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{x}</text>"#,
            x_at(i),
            top + plot_h + 14.0
        );
    }
    match kind {
        ChartKind::Bars => {
            let bar = slot * 0.8 / curves.len() as f64;
            for (j, c) in curves.iter().enumerate() {
                let color = PALETTE[j % PALETTE.len()];
                for (i, &v) in c.values.iter().enumerate() {
                    let x = left + slot * i as f64 + slot * 0.1 + bar * j as f64;
                    let y = y_at(v);
                    let _ = writeln!(
                        svg,
                        r#"<rect class="bar" x="{x:.2}" y="{y:.2}" width="{bar:.2}" height="{:.2}" fill="{color}"/>"#,
                        top + plot_h - y
                    );
                }
            }
        }
        ChartKind::Lines => {
            for (j, c) in curves.iter().enumerate() {
                let color = PALETTE[j % PALETTE.len()];
                let points: Vec<String> = c
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| format!("{:.2},{:.2}", x_at(i), y_at(v)))
                    .collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    points.join(" ")
                );
            }
        }
    }
    for (j, c) in curves.iter().enumerate() {
        let y = top + 12.0 * j as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{y}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            left + plot_w - 140.0,
            PALETTE[j % PALETTE.len()],
            left + plot_w - 125.0,
            y + 9.0,
            escape(&c.name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes `<stem>.csv` and, when `kind` is given, `<stem>.svg`.
pub fn emit_plot_data(
    stem: &Path,
    title: &str,
    x_name: &str,
    xs: &[f64],
    curves: &[Curve],
    kind: Option<ChartKind>,
) -> Result<Vec<PathBuf>> {
    let csv_path = stem.with_extension("csv");
    std::fs::write(&csv_path, curves_csv(x_name, xs, curves)?)?;
    let mut written = vec![csv_path];
    if let Some(kind) = kind {
        let svg_path = stem.with_extension("svg");
        std::fs::write(&svg_path, curves_svg(title, xs, curves, kind)?)?;
        written.push(svg_path);
    }
    Ok(written)
}
