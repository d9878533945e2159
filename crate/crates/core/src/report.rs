//! Text and JSON rendering of analysis results.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::comparators::{enumerate_loops, loop_test, side_split, SideSplit, ZTestResult};
use crate::error::Error;
use crate::inconsistency::{ComparisonAnalysis, InconsistencyReport, Status};
use crate::network::{EvidenceNetwork, TreatmentId};

pub const JSON_SCHEMA: u32 = 1;

const RED: &str = "\x1b[31m";
const RESET: &str = "\x1b[0m";

/// `x` rounded to `digits` significant digits, trailing zeros dropped.
/// Magnitudes below 1e-4 switch to scientific notation.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    if x.abs() < 1e-4 {
        return format!("{:.*e}", digits - 1, x);
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    // rounding can carry into a new digit (0.09996 -> 0.1000)
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Fixed decimals with trailing zeros dropped; `-0` prints as `0`.
fn fmt_trim(x: f64, decimals: usize) -> String {
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn p_text(report: &InconsistencyReport) -> String {
    match report.p_value {
        Some(p) => fmt_sig(p, 3),
        None => "NA".into(),
    }
}

/// Four-column summary: `Comparison  Q  p_value  No. of independent paths`.
pub fn render_text(reports: &[InconsistencyReport], color: bool) -> String {
    let width = reports
        .iter()
        .map(|r| r.label().chars().count())
        .chain(std::iter::once("Comparison".len()))
        .max()
        .unwrap_or(0)
        + 2;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}{:>8}  {:<10}No. of independent paths",
        "Comparison", "Q", "p_value"
    );
    for r in reports {
        let p = format!("{:<10}", p_text(r));
        let p = match r.p_value {
            Some(v) if color && v < 0.05 => {
                format!("{RED}{}{RESET}{}", p.trim_end(), &p[p.trim_end().len()..])
            }
            _ => p,
        };
        let _ = writeln!(
            out,
            "{:<width$}{:>8}  {p}{}",
            r.label(),
            format!("{:.2}", r.q),
            r.n_independent
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopSummary {
    #[serde(rename = "loop")]
    pub treatments: Vec<TreatmentId>,
    #[serde(flatten)]
    pub test: ZTestResult,
}

/// Classical comparators for one comparison, for side-by-side reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparatorSummary {
    pub side_split: Option<SideSplit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side_split_note: Option<String>,
    pub loops: Vec<LoopSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loops_note: Option<String>,
    pub design_by_treatment: &'static str,
}

pub fn comparator_summary(
    network: &EvidenceNetwork,
    i: &str,
    j: &str,
    max_loop_len: usize,
) -> ComparatorSummary {
    let (side_split, side_split_note) = match side_split(network, i, j) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (loops, loops_note) = match enumerate_loops(network, i, j, max_loop_len) {
        Ok(cycles) => {
            let loops = cycles
                .into_iter()
                .filter_map(|c| {
                    let names: Vec<&str> = c.iter().map(|t| t.as_str()).collect();
                    loop_test(network, &names).ok().map(|test| LoopSummary {
                        treatments: c.clone(),
                        test,
                    })
                })
                .collect();
            (loops, None)
        }
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    ComparatorSummary {
        side_split,
        side_split_note,
        loops,
        loops_note,
        design_by_treatment: "unsupported",
    }
}

fn status_str(s: Status) -> &'static str {
    match s {
        Status::Ok => "ok",
        Status::SinglePath => "single_path",
        Status::NoPaths => "no_paths",
    }
}

/// One comparison as a JSON value; path and removal indices are 1-based.
pub fn analysis_json(
    analysis: &ComparisonAnalysis,
    comparators: Option<&ComparatorSummary>,
) -> Value {
    let r = &analysis.report;
    let sys = &analysis.system;
    let variances = sys.variances();
    let kept = &analysis.reduction.kept;
    let paths: Vec<Value> = sys
        .paths
        .iter()
        .enumerate()
        .map(|(k, p)| {
            json!({
                "index": k + 1,
                "nodes": p.nodes,
                "size": p.length(),
                "effect": sys.effects[k],
                "variance": variances[k],
                "kept": kept.contains(&k),
            })
        })
        .collect();
    let removed: Vec<Value> = analysis
        .reduction
        .removed
        .iter()
        .map(|rp| json!({ "path": rp.index + 1, "step": rp.step }))
        .collect();
    let mut value = json!({
        "comparison": [r.comparison.0, r.comparison.1],
        "label": r.label(),
        "q": r.q,
        "dof": r.dof,
        "p_value": r.p_value,
        "status": status_str(r.status),
        "n_paths": r.n_paths,
        "n_independent": r.n_independent,
        "nma": { "effect": r.nma_effect, "variance": r.nma_variance },
        "paths": paths,
        "kept": kept.iter().map(|k| k + 1).collect::<Vec<_>>(),
        "removed": removed,
        "netpath": analysis.netpath,
    });
    if let Some(c) = comparators {
        value["comparators"] = serde_json::to_value(c).unwrap_or(Value::Null);
    }
    value
}

/// Versioned JSON document over several comparisons.
pub fn render_json(
    analyses: &[ComparisonAnalysis],
    comparators: Option<&[ComparatorSummary]>,
) -> String {
    let reports: Vec<Value> = analyses
        .iter()
        .enumerate()
        .map(|(k, a)| analysis_json(a, comparators.and_then(|c| c.get(k))))
        .collect();
    let doc = json!({ "schema": JSON_SCHEMA, "reports": reports });
    let mut s = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// JSON error document for machine consumers.
pub fn error_json(err: &Error) -> String {
    json!({ "schema": JSON_SCHEMA, "error": err.to_string() }).to_string()
}

/// Full path listing with removed paths, in the classic verbose layout.
pub fn render_paths_verbose(analysis: &ComparisonAnalysis) -> String {
    let (a, b) = &analysis.report.comparison;
    let sys = &analysis.system;
    let variances = sys.variances();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "The total number of paths detected between treatment  {a}  and treatment  {b}  is  {} ",
        sys.n_paths()
    );
    for (k, p) in sys.paths.iter().enumerate() {
        let nodes: Vec<&str> = p.nodes.iter().map(|t| t.as_str()).collect();
        let _ = writeln!(out, "path # {}  : {{{}}}", k + 1, nodes.join(", "));
        let _ = writeln!(
            out,
            " size: {}     total effect: {}   total variance: {}  ",
            p.length(),
            fmt_trim(sys.effects[k], 6),
            fmt_trim(variances[k], 6)
        );
    }
    if !analysis.reduction.removed.is_empty() {
        out.push_str(
            "The following paths are removed from calculation due to linear dependency: \n",
        );
        for rp in &analysis.reduction.removed {
            let _ = writeln!(out, "  path #{}", rp.index + 1);
        }
    }
    out
}

fn write_matrix(out: &mut String, title: &str, labels: &[String], m: &DMatrix<f64>) {
    let _ = writeln!(out, "{title}");
    let width = labels
        .iter()
        .map(|l| l.chars().count())
        .max()
        .unwrap_or(0)
        .max(8)
        + 2;
    let _ = write!(out, "{:width$}", "");
    for l in labels {
        let _ = write!(out, "{l:>width$}");
    }
    out.push('\n');
    for (r, l) in labels.iter().enumerate() {
        let _ = write!(out, "{l:<width$}");
        for c in 0..m.ncols() {
            let _ = write!(out, "{:>width$}", fmt_trim(m[(r, c)], 4));
        }
        out.push('\n');
    }
}

/// Hat row, path adjacency `A`, covariance `Σ`, then the path listing.
pub fn render_verbose(analysis: &ComparisonAnalysis, network: &EvidenceNetwork) -> String {
    let mut out = String::new();
    let (a, b) = &analysis.report.comparison;
    let _ = writeln!(out, "Hat matrix row {a}:{b}");
    let edge_labels: Vec<String> = (0..network.n_edges())
        .map(|k| network.edge_label(k))
        .collect();
    let width = edge_labels
        .iter()
        .map(|l| l.chars().count())
        .max()
        .unwrap_or(0)
        .max(8)
        + 2;
    for l in &edge_labels {
        let _ = write!(out, "{l:>width$}");
    }
    out.push('\n');
    for c in analysis.hat_row.coefficients.iter() {
        let _ = write!(out, "{:>width$}", fmt_trim(*c, 4));
    }
    out.push_str("\n\n");

    let labels: Vec<String> = (1..=analysis.system.n_paths())
        .map(|k| format!("path{k}"))
        .collect();
    write_matrix(
        &mut out,
        "Path adjacency matrix A",
        &labels,
        &analysis.system.adjacency,
    );
    out.push('\n');
    write_matrix(
        &mut out,
        "Path covariance matrix Sigma",
        &labels,
        &analysis.system.covariance,
    );
    out.push('\n');
    out.push_str(&render_paths_verbose(analysis));
    out
}
