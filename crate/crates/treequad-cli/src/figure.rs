//! Figure data: per-method error quantiles across dimensions, as CSV plus
//! a dependency-free SVG line chart of the median absolute error.

use std::fmt::Write as _;

use crate::config::MethodId;
use crate::grid::{RunRecord, RunStatus};
use crate::report::quantile;

#[derive(Debug, Clone, PartialEq)]
pub struct FigureRow {
    pub method: MethodId,
    pub dim: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub abs_median: f64,
    pub abs_q25: f64,
    pub abs_q75: f64,
}

/// Quantiles of the signed and absolute percent error per (method, dim),
/// over successful runs.
pub fn figure_rows(records: &[RunRecord]) -> Vec<FigureRow> {
    let mut keys: Vec<(MethodId, usize)> = records.iter().map(|r| (r.method, r.dim)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter_map(|(method, dim)| {
            let errors: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method && r.dim == dim && r.status == RunStatus::Ok)
                .map(|r| r.percent_error)
                .collect();
            if errors.is_empty() {
                return None;
            }
            let absolute: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
            Some(FigureRow {
                method,
                dim,
                median: quantile(&errors, 0.5),
                q25: quantile(&errors, 0.25),
                q75: quantile(&errors, 0.75),
                abs_median: quantile(&absolute, 0.5),
                abs_q25: quantile(&absolute, 0.25),
                abs_q75: quantile(&absolute, 0.75),
            })
        })
        .collect()
}

pub fn figure_to_csv(rows: &[FigureRow]) -> String {
    let mut out = String::from("method,dim,median,q25,q75,abs_median,abs_q25,abs_q75\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method, r.dim, r.median, r.q25, r.q75, r.abs_median, r.abs_q25, r.abs_q75
        );
    }
    out
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 5] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"];

/// A minimal line chart of median absolute percent error (log scale)
/// against dimension, one polyline per method.
pub fn figure_to_svg(rows: &[FigureRow]) -> String {
    let mut dims: Vec<usize> = rows.iter().map(|r| r.dim).collect();
    dims.sort_unstable();
    dims.dedup();
    let mut methods: Vec<MethodId> = rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();

    let floor = 1e-6f64;
    let values: Vec<f64> = rows.iter().map(|r| r.abs_median.max(floor)).collect();
    let log_min = values.iter().cloned().fold(f64::INFINITY, f64::min).log10().floor();
    let log_max = values.iter().cloned().fold(floor, f64::max).log10().ceil();
    let log_span = (log_max - log_min).max(1.0);
    let dim_min = *dims.first().unwrap_or(&1) as f64;
    let dim_max = *dims.last().unwrap_or(&1) as f64;
    let dim_span = (dim_max - dim_min).max(1.0);

    let x_of = |dim: f64| MARGIN + (dim - dim_min) / dim_span * (SVG_WIDTH - 2.0 * MARGIN);
    let y_of = |v: f64| {
        let l = v.max(floor).log10();
        SVG_HEIGHT - MARGIN - (l - log_min) / log_span * (SVG_HEIGHT - 2.0 * MARGIN)
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>"#
    );
    // Axes.
    let _ = writeln!(
        svg,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = SVG_HEIGHT - MARGIN,
        r = SVG_WIDTH - MARGIN,
        t = MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">dimension</text>"#,
        SVG_WIDTH / 2.0,
        SVG_HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">median |% error| (log10)</text>"#,
        SVG_HEIGHT / 2.0,
        SVG_HEIGHT / 2.0
    );
    for &dim in &dims {
        let x = x_of(dim as f64);
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{}" font-size="11" text-anchor="middle">{dim}</text>"#,
            SVG_HEIGHT - MARGIN + 16.0
        );
    }
    let mut decade = log_min;
    while decade <= log_max {
        let y = y_of(10f64.powf(decade));
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">1e{}</text>"#,
            MARGIN - 6.0,
            y + 4.0,
            decade as i64
        );
        decade += 1.0;
    }
    for (i, method) in methods.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = dims
            .iter()
            .filter_map(|&d| {
                rows.iter()
                    .find(|r| r.method == *method && r.dim == d)
                    .map(|r| format!("{:.2},{:.2}", x_of(d as f64), y_of(r.abs_median)))
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" fill="{color}">{method}</text>"#,
            SVG_WIDTH - MARGIN + 8.0,
            MARGIN + 16.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}
