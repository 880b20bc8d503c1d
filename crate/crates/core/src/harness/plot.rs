//! Hand-written SVG line plots: one series per sparsity level, log-scaled
//! shots on x, mean with SEM error bars on y.
//!
//! Every series and point carries `data-*` attributes holding the plotted
//! numbers, so [`read_series`] can recover them from the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::AggregateRow;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 9] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    RelativeError,
    InvalidSteps,
}

impl Metric {
    fn label(self) -> &'static str {
        match self {
            Metric::RelativeError => "relative error",
            Metric::InvalidSteps => "invalid steps per solve",
        }
    }

    fn attr(self) -> &'static str {
        match self {
            Metric::RelativeError => "relative_error",
            Metric::InvalidSteps => "invalid_steps",
        }
    }

    fn point(self, row: &AggregateRow) -> (f64, f64) {
        match self {
            Metric::RelativeError => (row.mean_relative_error, row.sem_relative_error),
            Metric::InvalidSteps => (row.mean_invalid, row.sem_invalid),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxesSpec {
    pub title: String,
    pub metric: Metric,
    /// Shot range, plotted on a log scale.
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl AxesSpec {
    /// Smallest ranges covering every dataset, so plots of the datasets can
    /// be compared side by side.
    pub fn fit(title: impl Into<String>, metric: Metric, datasets: &[&[AggregateRow]]) -> Result<Self> {
        let mut x = (f64::INFINITY, f64::NEG_INFINITY);
        let mut y_max: f64 = 0.0;
        for row in datasets.iter().flat_map(|d| d.iter()) {
            let (mean, sem) = metric.point(row);
            if !mean.is_finite() {
                continue;
            }
            x = (x.0.min(row.shots as f64), x.1.max(row.shots as f64));
            y_max = y_max.max(mean + sem);
        }
        if !x.0.is_finite() {
            return Err(Error::EmptyGroup("nothing to plot".into()));
        }
        if x.0 == x.1 {
            x = (x.0 / 2.0, x.1 * 2.0);
        }
        let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
        Ok(Self {
            title: title.into(),
            metric,
            x_range: x,
            y_range: (0.0, y_max),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub shots: f64,
    pub mean: f64,
    pub sem: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub k: usize,
    pub sparsity: f64,
    pub points: Vec<PlotPoint>,
}

fn series_from_rows(rows: &[AggregateRow], metric: Metric) -> (Vec<PlotSeries>, Vec<String>) {
    let mut by_k: BTreeMap<usize, PlotSeries> = BTreeMap::new();
    for row in rows {
        let s = by_k.entry(row.k).or_insert_with(|| PlotSeries {
            k: row.k,
            sparsity: row.sparsity_level,
            points: Vec::new(),
        });
        let (mean, sem) = metric.point(row);
        if mean.is_finite() {
            s.points.push(PlotPoint {
                shots: row.shots as f64,
                mean,
                sem: if sem.is_finite() { sem } else { 0.0 },
            });
        }
    }
    let mut warnings = Vec::new();
    let series = by_k
        .into_values()
        .filter_map(|mut s| {
            if s.points.is_empty() {
                warnings.push(format!("series k={} (sparsity {}) has no finite points; skipped", s.k, s.sparsity));
                return None;
            }
            s.points.sort_by(|a, b| a.shots.total_cmp(&b.shots));
            Some(s)
        })
        .collect();
    (series, warnings)
}

/// Writes one SVG for `rows` (already filtered to a single size, backend
/// and mitigation mode). Returns warnings about skipped series.
pub fn emit_plot(rows: &[AggregateRow], axes: &AxesSpec, path: &Path) -> Result<Vec<String>> {
    if rows.is_empty() {
        return Err(Error::EmptyGroup("no aggregated rows to plot".into()));
    }
    let (series, warnings) = series_from_rows(rows, axes.metric);
    fs::write(path, render(&series, axes))?;
    Ok(warnings)
}

fn render(series: &[PlotSeries], axes: &AxesSpec) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let (lx0, lx1) = (axes.x_range.0.log10(), axes.x_range.1.log10());
    let (y0, y1) = axes.y_range;
    let px = |shots: f64| LEFT + (shots.log10() - lx0) / (lx1 - lx0) * plot_w;
    let py = |v: f64| TOP + plot_h - (v - y0) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-metric="{}" data-x-min="{:?}" data-x-max="{:?}" data-y-min="{:?}" data-y-max="{:?}">"#,
        axes.metric.attr(),
        axes.x_range.0,
        axes.x_range.1,
        y0,
        y1
    );
    let _ = writeln!(s, "<title>{}</title>", escape(&axes.title));
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&axes.title)
    );

    // axes
    let _ = writeln!(s, r#"<g class="axes" stroke="black" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{}" x2="{}" y2="{}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h,
        TOP + plot_h
    );
    let mut decade = 10f64.powf(lx0.floor());
    while decade <= axes.x_range.1 * 1.0001 {
        for m in 1..10 {
            let v = decade * m as f64;
            if v < axes.x_range.0 * 0.9999 || v > axes.x_range.1 * 1.0001 {
                continue;
            }
            let x = px(v);
            let len = if m == 1 { 6.0 } else { 3.0 };
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}"/>"#, TOP + plot_h, TOP + plot_h + len);
            if m == 1 {
                let _ = writeln!(
                    s,
                    r#"<text x="{x:.2}" y="{}" text-anchor="middle" stroke="none">{v}</text>"#,
                    TOP + plot_h + 20.0
                );
            }
        }
        decade *= 10.0;
    }
    for i in 0..=5 {
        let v = y0 + (y1 - y0) * i as f64 / 5.0;
        let y = py(v);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}"/>"#, LEFT - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end" stroke="none">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            format_tick(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" stroke="none">shots (log scale)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" stroke="none" transform="rotate(-90 20 {})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        axes.metric.label()
    );
    let _ = writeln!(s, "</g>");

    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<g class="series" data-k="{}" data-sparsity="{:?}" stroke="{color}" fill="{color}">"#,
            ser.k, ser.sparsity
        );
        if ser.points.len() > 1 {
            let pts: Vec<String> = ser
                .points
                .iter()
                .map(|p| format!("{:.2},{:.2}", px(p.shots), py(p.mean)))
                .collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        for p in &ser.points {
            let (x, y) = (px(p.shots), py(p.mean));
            let _ = writeln!(
                s,
                r#"<g class="point" data-shots="{:?}" data-mean="{:?}" data-sem="{:?}">"#,
                p.shots, p.mean, p.sem
            );
            if p.sem > 0.0 {
                let _ = writeln!(
                    s,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
                    py(p.mean - p.sem),
                    py(p.mean + p.sem)
                );
            }
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3"/>"#);
            let _ = writeln!(s, "</g>");
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(s, r#"<g class="legend" font-family="sans-serif" font-size="12">"#);
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = TOP + 10.0 + 20.0 * i as f64;
        let x = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">sparsity {}</text>"#,
            x + 20.0,
            x + 26.0,
            y + 4.0,
            ser.sparsity
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() < 0.01 || v.abs() >= 1e4 {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn attr<'a>(tag: &'a str, name: &str) -> Option<&'a str> {
    let needle = format!(r#"{name}=""#);
    let start = tag.find(&needle)? + needle.len();
    let len = tag[start..].find('"')?;
    Some(&tag[start..start + len])
}

fn attr_f64(tag: &str, name: &str) -> Result<f64> {
    attr(tag, name)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse {
            line: 0,
            reason: format!("missing or malformed `{name}` in `{tag}`"),
        })
}

/// Recovers the plotted series from an SVG written by [`emit_plot`].
pub fn read_series(svg: &str) -> Result<Vec<PlotSeries>> {
    let mut out: Vec<PlotSeries> = Vec::new();
    for chunk in svg.split('<').skip(1) {
        let tag = chunk.split('>').next().unwrap_or("");
        if tag.starts_with(r#"g class="series""#) {
            out.push(PlotSeries {
                k: attr_f64(tag, "data-k")? as usize,
                sparsity: attr_f64(tag, "data-sparsity")?,
                points: Vec::new(),
            });
        } else if tag.starts_with(r#"g class="point""#) {
            let series = out.last_mut().ok_or_else(|| Error::Parse {
                line: 0,
                reason: "point outside a series".into(),
            })?;
            series.points.push(PlotPoint {
                shots: attr_f64(tag, "data-shots")?,
                mean: attr_f64(tag, "data-mean")?,
                sem: attr_f64(tag, "data-sem")?,
            });
        }
    }
    Ok(out)
}

/// `(x_min, x_max, y_min, y_max)` recorded on the root element.
pub fn read_axes(svg: &str) -> Result<(f64, f64, f64, f64)> {
    let root = svg
        .split('<')
        .find(|t| t.starts_with("svg"))
        .ok_or_else(|| Error::Parse {
            line: 0,
            reason: "no <svg> element".into(),
        })?;
    Ok((
        attr_f64(root, "data-x-min")?,
        attr_f64(root, "data-x-max")?,
        attr_f64(root, "data-y-min")?,
        attr_f64(root, "data-y-max")?,
    ))
}
