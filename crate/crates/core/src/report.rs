//! CSV tables and SVG charts for a finished run.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::qa::{Gate, QaReport};
use crate::rebalance::FrequencyRow;

/// Histogram bucket for candidates whose synthesis failed before any gate ran.
pub const SYNTHESIS_BUCKET: &str = "synthesis";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionRow {
    pub gate: String,
    /// Rejections attributed to this gate as the first failure in gate order.
    pub first_failure: usize,
    /// Candidates failing this gate at all.
    pub any_failure: usize,
}

/// Per-gate rejection counts. `None` marks a candidate that never reached QA.
pub fn rejection_histogram<'a>(outcomes: impl IntoIterator<Item = Option<&'a QaReport>>) -> Vec<RejectionRow> {
    let mut rows: Vec<RejectionRow> = std::iter::once(SYNTHESIS_BUCKET)
        .chain(Gate::ORDER.iter().map(|g| g.name()))
        .map(|g| RejectionRow {
            gate: g.to_string(),
            first_failure: 0,
            any_failure: 0,
        })
        .collect();
    for outcome in outcomes {
        match outcome {
            None => {
                rows[0].first_failure += 1;
                rows[0].any_failure += 1;
            }
            Some(report) => {
                let slot = |g: Gate| 1 + Gate::ORDER.iter().position(|&o| o == g).expect("gate in order");
                if let Some(first) = report.first_failure() {
                    rows[slot(first)].first_failure += 1;
                }
                for g in report.failed() {
                    rows[slot(g)].any_failure += 1;
                }
            }
        }
    }
    rows
}

fn csv_bytes<R: Serialize>(rows: &[R], header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
}

pub fn census_csv(rows: &[FrequencyRow]) -> Result<Vec<u8>> {
    csv_bytes(
        rows,
        &["label", "before_count", "after_count", "before_pct", "after_pct", "shortfall"],
    )
}

pub fn rejections_csv(rows: &[RejectionRow]) -> Result<Vec<u8>> {
    csv_bytes(rows, &["gate", "first_failure", "any_failure"])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub traj_id: String,
    pub start_index: usize,
    pub raw_cluster: usize,
    pub label: String,
    pub pc1: f64,
    pub pc2: f64,
}

pub fn clusters_csv(rows: &[ClusterRow]) -> Result<Vec<u8>> {
    csv_bytes(rows, &["traj_id", "start_index", "raw_cluster", "label", "pc1", "pc2"])
}

pub const BAR_PLOT_HEIGHT: f64 = 300.0;
const BAR_WIDTH: f64 = 28.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Grouped before/after bars; bar height is `count / max_count * BAR_PLOT_HEIGHT`.
pub fn census_svg(rows: &[FrequencyRow]) -> String {
    let max = rows
        .iter()
        .flat_map(|r| [r.before_count, r.after_count])
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let group = 3.0 * BAR_WIDTH;
    let width = 2.0 * MARGIN + group * rows.len().max(1) as f64;
    let height = BAR_PLOT_HEIGHT + 2.0 * MARGIN + 20.0;
    let base = MARGIN + BAR_PLOT_HEIGHT;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="20" font-size="12">cluster counts: before (dark) / after (light)</text>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#,
        width - MARGIN
    );
    for (i, r) in rows.iter().enumerate() {
        let x0 = MARGIN + group * i as f64 + BAR_WIDTH / 2.0;
        for (j, (series, count, color)) in [("before", r.before_count, "#4e79a7"), ("after", r.after_count, "#a0cbe8")]
            .into_iter()
            .enumerate()
        {
            let h = count as f64 / max * BAR_PLOT_HEIGHT;
            let _ = writeln!(
                s,
                r#"<rect data-label="{}" data-series="{series}" data-count="{count}" x="{:.3}" y="{:.3}" width="{BAR_WIDTH}" height="{h:.3}" fill="{color}"/>"#,
                escape(&r.label),
                x0 + j as f64 * BAR_WIDTH,
                base - h,
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-size="10" text-anchor="middle">{}</text>"#,
            x0 + BAR_WIDTH,
            base + 14.0,
            escape(&r.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Scatter of the 2-D projection, one colour per merged label.
pub fn clusters_svg(rows: &[ClusterRow]) -> String {
    let size = 400.0;
    let labels: Vec<&str> = {
        let mut l: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
        l.sort_unstable();
        l.dedup();
        l
    };
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for r in rows {
        lo_x = lo_x.min(r.pc1);
        hi_x = hi_x.max(r.pc1);
        lo_y = lo_y.min(r.pc2);
        hi_y = hi_y.max(r.pc2);
    }
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let (sx, sy) = (span(lo_x, hi_x), span(lo_y, hi_y));
    let total = size + 2.0 * MARGIN + 120.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{}" viewBox="0 0 {total} {}">"#,
        size + 2.0 * MARGIN,
        size + 2.0 * MARGIN
    );
    for r in rows {
        let li = labels.binary_search(&r.label.as_str()).unwrap_or(0);
        let x = MARGIN + (r.pc1 - lo_x) / sx * size;
        let y = MARGIN + size - (r.pc2 - lo_y) / sy * size;
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="{}"><title>{}</title></circle>"#,
            PALETTE[li % PALETTE.len()],
            escape(&r.traj_id)
        );
    }
    for (i, l) in labels.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64;
        let x = size + 2.0 * MARGIN;
        let _ = writeln!(s, r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/>"#, y - 9.0, PALETTE[i % PALETTE.len()]);
        let _ = writeln!(s, r#"<text x="{}" y="{y}" font-size="11">{}</text>"#, x + 14.0, escape(l));
    }
    s.push_str("</svg>\n");
    s
}
