use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use vtf_core::manifold::StepRule;

use crate::config::{Cell, ExperimentConfig};
use crate::experiment::RunRecord;

pub const SUMMARY_COLUMNS: [&str; 14] = [
    "K",
    "n",
    "N",
    "separation",
    "algorithm",
    "iters_mean",
    "iters_std",
    "conv_time_mean",
    "conv_time_std",
    "iter_time_mean",
    "iter_time_std",
    "last_cost_mean",
    "last_cost_std",
    "failures",
];

const TIMING_COLUMNS: [&str; 4] = ["conv_time_mean", "conv_time_std", "iter_time_mean", "iter_time_std"];

/// Mean and sample standard deviation; the deviation of fewer than two
/// values is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let len = values.len() as f64;
    let mean = values.iter().sum::<f64>() / len;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1.0);
    (mean, var.sqrt())
}

/// One CSV row per (cell, algorithm), in order of first appearance.
/// Failed runs only contribute to the `failures` count.
pub fn emit_summary(records: &[RunRecord]) -> String {
    let mut groups: Vec<((Cell, &str), Vec<&RunRecord>)> = Vec::new();
    for r in records {
        let key = (r.cell(), r.algorithm());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(r),
            None => groups.push((key, vec![r])),
        }
    }

    let mut out = SUMMARY_COLUMNS.join(",");
    out.push('\n');
    for ((cell, algorithm), members) in groups {
        let ok: Vec<&&RunRecord> = members.iter().filter(|r| !r.failed()).collect();
        let column = |f: fn(&RunRecord) -> f64| mean_std(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
        let (im, is) = column(|r| r.iterations as f64);
        let (cm, cs) = column(|r| r.conv_time_s);
        let (tm, ts) = column(|r| r.iter_time_s);
        let (lm, ls) = column(|r| r.last_cost);
        let _ = writeln!(
            out,
            "{},{},{},{},{algorithm},{im},{is},{cm},{cs},{tm},{ts},{lm},{ls},{}",
            cell.k,
            cell.n,
            cell.len,
            cell.separation.label(),
            members.len() - ok.len()
        );
    }
    out
}

/// Drops the wall-clock columns so summaries of repeated runs can be
/// compared byte for byte.
pub fn strip_timing_columns(csv: &str) -> String {
    let keep: Vec<bool> = SUMMARY_COLUMNS.iter().map(|c| !TIMING_COLUMNS.contains(c)).collect();
    csv.lines()
        .map(|line| {
            line.split(',')
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(f, _)| f)
                .collect::<Vec<_>>()
                .join(",")
        })
        .fold(String::new(), |mut acc, l| {
            acc.push_str(&l);
            acc.push('\n');
            acc
        })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceFile {
    /// Relative path under the output directory.
    pub path: String,
    pub contents: String,
}

/// Per run, `iteration,cost_gap` rows with `cost_gap = cost − best`, where
/// `best` is the lowest cost reached by any run of any algorithm in the same
/// cell and step rule.
pub fn emit_traces(records: &[RunRecord]) -> Vec<TraceFile> {
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for r in records {
        let lowest = r
            .cost_trace
            .iter()
            .copied()
            .filter(|c| c.is_finite())
            .fold(f64::INFINITY, f64::min);
        let entry = best.entry(trace_dir(r)).or_insert(f64::INFINITY);
        *entry = entry.min(lowest);
    }
    records
        .iter()
        .filter(|r| !r.cost_trace.is_empty())
        .map(|r| {
            let dir = trace_dir(r);
            let floor = best[&dir];
            let mut contents = String::from("iteration,cost_gap\n");
            for (i, c) in r.cost_trace.iter().enumerate() {
                let _ = writeln!(contents, "{i},{}", c - floor);
            }
            TraceFile {
                path: format!("traces/{dir}/{}_run{:02}.csv", r.algorithm(), r.run),
                contents,
            }
        })
        .collect()
}

fn trace_dir(r: &RunRecord) -> String {
    format!("{}_{}", r.cell().slug(), step_rule_label(r.step_rule))
}

pub fn step_rule_label(rule: StepRule) -> &'static str {
    match rule {
        StepRule::ExpMap => "exp_map",
        StepRule::TaylorRetraction => "taylor_retraction",
    }
}

/// Full records with the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordsFile {
    pub config: ExperimentConfig,
    pub records: Vec<RunRecord>,
}

/// Summary files, one per step rule present in `records`.
pub fn summaries_by_rule(records: &[RunRecord]) -> Vec<(String, String)> {
    let mut rules: Vec<StepRule> = Vec::new();
    for r in records {
        if !rules.contains(&r.step_rule) {
            rules.push(r.step_rule);
        }
    }
    rules
        .into_iter()
        .map(|rule| {
            let subset: Vec<RunRecord> = records.iter().filter(|r| r.step_rule == rule).cloned().collect();
            (format!("summary_{}.csv", step_rule_label(rule)), emit_summary(&subset))
        })
        .collect()
}

/// Writes `records.json`, the summaries and the trace files under `dir`.
pub fn write_outputs(dir: &Path, config: &ExperimentConfig, records: &[RunRecord]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let file = RecordsFile {
        config: config.clone(),
        records: records.to_vec(),
    };
    std::fs::write(dir.join("records.json"), serde_json::to_string_pretty(&file)?)?;
    write_derived(dir, records)
}

/// Summaries and traces only, from existing records.
pub fn write_derived(dir: &Path, records: &[RunRecord]) -> Result<()> {
    for (name, csv) in summaries_by_rule(records) {
        std::fs::write(dir.join(name), csv)?;
    }
    for t in emit_traces(records) {
        let path = dir.join(&t.path);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, t.contents)?;
    }
    Ok(())
}

pub fn read_records(dir: &Path) -> Result<RecordsFile> {
    let path = dir.join("records.json");
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
}
