use std::fmt::Write as _;
use std::path::Path;

use super::SweepRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "sweep_value,qcrb,qobb0,qobb1,qobb2,mmse";

/// Rust's `Display` for `f64` prints the shortest decimal that parses back to
/// the same value and never depends on locale.
pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let mmse = r.mmse.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.sweep_value, r.qcrb, r.qobb0, r.qobb1, r.qobb2, mmse
        );
    }
    out
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(rows))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.split('\n');
    match lines.next() {
        Some(CSV_HEADER) => {}
        other => return Err(Error::Io(format!("unexpected CSV header {other:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Io(format!(
                "line {}: expected 6 fields, got {}",
                i + 2,
                fields.len()
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Io(format!("line {}: `{s}`: {e}", i + 2)))
        };
        rows.push(SweepRow {
            sweep_value: num(fields[0])?,
            qcrb: num(fields[1])?,
            qobb0: num(fields[2])?,
            qobb1: num(fields[3])?,
            qobb2: num(fields[4])?,
            mmse: if fields[5].is_empty() {
                None
            } else {
                Some(num(fields[5])?)
            },
        });
    }
    Ok(rows)
}

/// Axis labels and scale of a plot.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: "sweep value".into(),
            y_label: "error bound".into(),
            log_y: true,
        }
    }
}

/// Rows of one probe; each group gets its own colour.
#[derive(Debug, Clone, Copy)]
pub struct RowGroup<'a> {
    pub name: &'a str,
    pub rows: &'a [SweepRow],
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const COLOURS: [&str; 4] = ["#000000", "#1f4fd0", "#c0392b", "#27864a"];

struct Column {
    name: &'static str,
    dash: Option<&'static str>,
    get: fn(&SweepRow) -> Option<f64>,
}

// MMSE dotted, QCRB dot-dashed, QOBB0 dashed, QOBB1 solid; QOBB2 long-dashed.
const COLUMNS: [Column; 5] = [
    Column {
        name: "MMSE",
        dash: Some("2,4"),
        get: |r| r.mmse,
    },
    Column {
        name: "QCRB",
        dash: Some("10,4,2,4"),
        get: |r| Some(r.qcrb),
    },
    Column {
        name: "QOBB0",
        dash: Some("8,5"),
        get: |r| Some(r.qobb0),
    },
    Column {
        name: "QOBB2",
        dash: Some("16,4"),
        get: |r| Some(r.qobb2),
    },
    Column {
        name: "QOBB1",
        dash: None,
        get: |r| Some(r.qobb1),
    },
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick positions for a linear axis over `[lo, hi]`.
fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Renders a self-contained SVG 1.1 line plot with one polyline per column
/// and group. Points that are not finite, or not positive on a log axis, are
/// left out.
pub fn render_svg(groups: &[RowGroup], style: &PlotStyle) -> Result<String> {
    if groups.iter().all(|g| g.rows.is_empty()) {
        return Err(Error::EmptyRows);
    }
    let plottable = |y: f64| y.is_finite() && (!style.log_y || y > 0.0);
    let ymap = |y: f64| if style.log_y { y.log10() } else { y };

    let mut x_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y_range = (f64::INFINITY, f64::NEG_INFINITY);
    for g in groups {
        for r in g.rows {
            x_range = (x_range.0.min(r.sweep_value), x_range.1.max(r.sweep_value));
            for c in &COLUMNS {
                if let Some(y) = (c.get)(r).filter(|&y| plottable(y)) {
                    let t = ymap(y);
                    y_range = (y_range.0.min(t), y_range.1.max(t));
                }
            }
        }
    }
    if !y_range.0.is_finite() {
        return Err(Error::EmptyRows);
    }
    if style.log_y {
        y_range = (y_range.0.floor(), y_range.1.ceil());
    }
    if y_range.1 <= y_range.0 {
        y_range = (y_range.0 - 0.5, y_range.1 + 0.5);
    }
    if x_range.1 <= x_range.0 {
        x_range = (x_range.0 - 0.5, x_range.1 + 0.5);
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_range.0) / (x_range.1 - x_range.0) * pw;
    let py = |t: f64| TOP + ph - (t - y_range.0) / (y_range.1 - y_range.0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
    );
    if !style.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&style.title)
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#000000" stroke-width="1"/>"##
    );

    s.push_str(r##"<g font-family="sans-serif" font-size="11" fill="#000000">"##);
    s.push('\n');
    for x in linear_ticks(x_range.0, x_range.1) {
        let sx = px(x);
        let _ = writeln!(
            s,
            r##"<line x1="{sx:.2}" y1="{:.2}" x2="{sx:.2}" y2="{:.2}" stroke="#000000"/>"##,
            TOP + ph,
            TOP + ph + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{sx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            tick_label(x)
        );
    }
    let y_ticks = if style.log_y {
        (y_range.0 as i64..=y_range.1 as i64).map(|k| k as f64).collect()
    } else {
        linear_ticks(y_range.0, y_range.1)
    };
    for t in y_ticks {
        let sy = py(t);
        let label = if style.log_y {
            format!("1e{}", t as i64)
        } else {
            tick_label(t)
        };
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{sy:.2}" x2="{LEFT}" y2="{sy:.2}" stroke="#000000"/>"##,
            LEFT - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            LEFT - 8.0,
            sy + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 18.0,
        escape(&style.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&style.y_label)
    );
    s.push_str("</g>\n");

    let mut legend = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        let colour = COLOURS[gi % COLOURS.len()];
        for c in &COLUMNS {
            if g.rows.iter().all(|r| (c.get)(r).is_none()) {
                continue;
            }
            let points: Vec<String> = g
                .rows
                .iter()
                .filter_map(|r| (c.get)(r).filter(|&y| plottable(y)).map(|y| (r.sweep_value, y)))
                .map(|(x, y)| format!("{:.2},{:.2}", px(x), py(ymap(y))))
                .collect();
            let dash = c
                .dash
                .map(|d| format!(r#" stroke-dasharray="{d}""#))
                .unwrap_or_default();
            let name = if g.name.is_empty() {
                c.name.to_string()
            } else {
                format!("{} {}", c.name, g.name)
            };
            let _ = writeln!(
                s,
                r#"<polyline class="series" data-name="{}" fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"/>"#,
                escape(&name),
                points.join(" ")
            );
            legend.push((name, colour, dash));
        }
    }

    let lx = WIDTH - RIGHT + 15.0;
    s.push_str(r##"<g font-family="sans-serif" font-size="11" fill="#000000">"##);
    s.push('\n');
    for (i, (name, colour, dash)) in legend.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{colour}" stroke-width="1.5"{dash}/>"#,
            lx + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 36.0,
            y + 4.0,
            escape(name)
        );
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

pub fn emit_svg(rows: &[SweepRow], path: &Path, style: &PlotStyle) -> Result<()> {
    emit_svg_groups(&[RowGroup { name: "", rows }], path, style)
}

pub fn emit_svg_groups(groups: &[RowGroup], path: &Path, style: &PlotStyle) -> Result<()> {
    std::fs::write(path, render_svg(groups, style)?)?;
    Ok(())
}
