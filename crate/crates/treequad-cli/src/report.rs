//! Run records to files: raw CSV, summary tables, and the quantile
//! helpers shared with the figure writer.

use std::fmt::Write as _;
use std::path::Path;

use treequad::{Result, TqError};

use crate::config::MethodId;
use crate::grid::{RunRecord, RunStatus};

pub const RUNS_HEADER: &str = "problem,method,dim,replicate,seed,status,estimate,true_value,percent_error,evals_sampling,evals_active,evals_leaf,evals_total,leaves,wall_ms";

/// Sample standard deviation (n - 1 denominator); zero for fewer than two.
pub fn sample_stdev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Quantile by linear interpolation on the sorted values.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let position = q * (sorted.len() - 1) as f64;
    let lo = position.floor() as usize;
    let hi = position.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let t = position - lo as f64;
        sorted[lo] * (1.0 - t) + sorted[hi] * t
    }
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

fn sanitize(field: &str) -> String {
    field.replace([',', '\n'], ";")
}

pub fn runs_to_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for r in records {
        let status = match &r.status {
            RunStatus::Ok => "ok".to_string(),
            RunStatus::Failed(e) => format!("failed: {}", sanitize(e)),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.problem,
            r.method,
            r.dim,
            r.replicate,
            r.seed,
            status,
            r.estimate,
            r.true_value,
            r.percent_error,
            r.evals_sampling,
            r.evals_active,
            r.evals_leaf,
            r.evals_total,
            r.leaves,
            r.wall_ms
        );
    }
    out
}

pub fn parse_runs_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| TqError::InvalidInput("empty runs file".into()))?;
    if header.trim() != RUNS_HEADER {
        return Err(TqError::InvalidInput("unrecognized runs.csv header".into()));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 15 {
            return Err(TqError::InvalidInput(format!(
                "line {}: expected 15 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_err = |what: &str| {
            TqError::InvalidInput(format!("line {}: bad {what}", lineno + 2))
        };
        records.push(RunRecord {
            problem: fields[0].to_string(),
            method: fields[1].parse().map_err(|_| parse_err("method"))?,
            dim: fields[2].parse().map_err(|_| parse_err("dim"))?,
            replicate: fields[3].parse().map_err(|_| parse_err("replicate"))?,
            seed: fields[4].parse().map_err(|_| parse_err("seed"))?,
            status: if fields[5] == "ok" {
                RunStatus::Ok
            } else {
                RunStatus::Failed(fields[5].to_string())
            },
            estimate: fields[6].parse().map_err(|_| parse_err("estimate"))?,
            true_value: fields[7].parse().map_err(|_| parse_err("true_value"))?,
            percent_error: fields[8].parse().map_err(|_| parse_err("percent_error"))?,
            evals_sampling: fields[9].parse().map_err(|_| parse_err("evals_sampling"))?,
            evals_active: fields[10].parse().map_err(|_| parse_err("evals_active"))?,
            evals_leaf: fields[11].parse().map_err(|_| parse_err("evals_leaf"))?,
            evals_total: fields[12].parse().map_err(|_| parse_err("evals_total"))?,
            leaves: fields[13].parse().map_err(|_| parse_err("leaves"))?,
            wall_ms: fields[14].parse().map_err(|_| parse_err("wall_ms"))?,
        });
    }
    Ok(records)
}

/// One (problem, method, dim) cell of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryCell {
    pub problem: String,
    pub method: MethodId,
    pub dim: usize,
    pub runs: usize,
    pub failed: usize,
    /// Median of signed percent errors over successful runs.
    pub median_percent_error: Option<f64>,
    /// Sample standard deviation of signed percent errors.
    pub stdev_percent_error: Option<f64>,
}

/// Aggregate per (problem, method, dim): median and standard deviation of
/// the signed percent error, matching the benchmark table convention.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryCell> {
    let mut keys: Vec<(String, MethodId, usize)> = records
        .iter()
        .map(|r| (r.problem.clone(), r.method, r.dim))
        .collect();
    keys.sort();
    keys.dedup();
    keys.iter()
        .map(|(problem, method, dim)| {
            let cell: Vec<&RunRecord> = records
                .iter()
                .filter(|r| &r.problem == problem && r.method == *method && r.dim == *dim)
                .collect();
            let errors: Vec<f64> = cell
                .iter()
                .filter(|r| r.status == RunStatus::Ok)
                .map(|r| r.percent_error)
                .collect();
            SummaryCell {
                problem: problem.clone(),
                method: *method,
                dim: *dim,
                runs: cell.len(),
                failed: cell.len() - errors.len(),
                median_percent_error: (!errors.is_empty()).then(|| median(&errors)),
                stdev_percent_error: (!errors.is_empty()).then(|| sample_stdev(&errors)),
            }
        })
        .collect()
}

pub fn summary_to_csv(cells: &[SummaryCell]) -> String {
    let mut out = String::from(
        "problem,method,dim,runs,failed,median_percent_error,stdev_percent_error\n",
    );
    for c in cells {
        let median = c.median_percent_error.map_or(String::new(), |v| v.to_string());
        let stdev = c.stdev_percent_error.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.problem, c.method, c.dim, c.runs, c.failed, median, stdev
        );
    }
    out
}

/// Aligned text table: one row per (problem, method), one column per
/// dimension, entries `median +- stdev` of the percent error.
pub fn summary_to_text(cells: &[SummaryCell]) -> String {
    let mut dims: Vec<usize> = cells.iter().map(|c| c.dim).collect();
    dims.sort_unstable();
    dims.dedup();
    let mut rows: Vec<(String, MethodId)> =
        cells.iter().map(|c| (c.problem.clone(), c.method)).collect();
    rows.sort();
    rows.dedup();

    let entry = |problem: &str, method: MethodId, dim: usize| -> String {
        match cells
            .iter()
            .find(|c| c.problem == problem && c.method == method && c.dim == dim)
        {
            Some(c) => match (c.median_percent_error, c.stdev_percent_error) {
                (Some(m), Some(s)) => format!("{m:.5} +- {s:.5}"),
                _ => format!("(0 of {} runs succeeded)", c.runs),
            },
            None => String::new(),
        }
    };

    let mut header = vec!["problem".to_string(), "method".to_string()];
    header.extend(dims.iter().map(|d| format!("dim {d}")));
    let mut table: Vec<Vec<String>> = vec![header];
    for (problem, method) in &rows {
        let mut row = vec![problem.clone(), method.to_string()];
        row.extend(dims.iter().map(|&d| entry(problem, *method, d)));
        table.push(row);
    }
    let columns = table[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|i| table.iter().map(|row| row[i].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    out.push_str("median percentage error +- standard deviation\n");
    for (i, row) in table.iter().enumerate() {
        for (field, width) in row.iter().zip(&widths) {
            let _ = write!(out, "{field:<width$}  ");
        }
        out.push('\n');
        if i == 0 {
            let total: usize = widths.iter().sum::<usize>() + 2 * widths.len();
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| TqError::InvalidInput(format!("writing {}: {e}", path.display())))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| TqError::InvalidInput(format!("reading {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(method: MethodId, dim: usize, replicate: usize, err: f64) -> RunRecord {
        RunRecord {
            problem: "camel".into(),
            method,
            dim,
            replicate,
            seed: 1,
            status: RunStatus::Ok,
            estimate: 2.0 * (1.0 + err / 100.0),
            true_value: 2.0,
            percent_error: err,
            evals_sampling: 100,
            evals_active: 0,
            evals_leaf: 0,
            evals_total: 100,
            leaves: 1,
            wall_ms: 3,
        }
    }

    #[test]
    fn median_and_stdev_conventions() {
        // Errors -1, 0, +1: median 0, sample stdev exactly 1.
        let values = [-1.0, 0.0, 1.0];
        assert_eq!(median(&values), 0.0);
        assert_eq!(sample_stdev(&values), 1.0);
        assert_eq!(sample_stdev(&[5.0, 5.0, 5.0]), 0.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), 2.5);
        assert_eq!(quantile(&[0.0, 1.0, 2.0, 3.0], 0.25), 0.75);
    }

    #[test]
    fn summarize_groups_cells() {
        let records = vec![
            record(MethodId::Smc, 1, 0, -1.0),
            record(MethodId::Smc, 1, 1, 0.0),
            record(MethodId::Smc, 1, 2, 1.0),
            record(MethodId::TqS, 1, 0, 0.25),
        ];
        let cells = summarize(&records);
        assert_eq!(cells.len(), 2);
        let smc = cells.iter().find(|c| c.method == MethodId::Smc).unwrap();
        assert_eq!(smc.median_percent_error, Some(0.0));
        assert_eq!(smc.stdev_percent_error, Some(1.0));
        assert_eq!(smc.runs, 3);
        assert_eq!(smc.failed, 0);
    }

    #[test]
    fn summarize_flags_empty_cells() {
        let mut failed = record(MethodId::Vegas, 2, 0, f64::NAN);
        failed.status = RunStatus::Failed("boom".into());
        let cells = summarize(&[failed]);
        assert_eq!(cells[0].median_percent_error, None);
        assert_eq!(cells[0].failed, 1);
        let text = summary_to_text(&cells);
        assert!(text.contains("0 of 1 runs succeeded"));
    }

    #[test]
    fn runs_csv_round_trips() {
        let records = vec![
            record(MethodId::Smc, 1, 0, -0.5),
            record(MethodId::TqA, 5, 3, 2.25),
        ];
        let csv = runs_to_csv(&records);
        let back = parse_runs_csv(&csv).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].method, MethodId::TqA);
        assert_eq!(back[1].dim, 5);
        assert_eq!(back[1].percent_error, 2.25);
        assert_eq!(back[0].status, RunStatus::Ok);
    }

    #[test]
    fn failed_status_with_commas_survives_round_trip() {
        let mut r = record(MethodId::Smc, 1, 0, f64::NAN);
        r.status = RunStatus::Failed("bad, very bad".into());
        let csv = runs_to_csv(&[r]);
        let back = parse_runs_csv(&csv).unwrap();
        assert!(matches!(&back[0].status, RunStatus::Failed(msg) if msg.contains("bad; very bad")));
    }
}
