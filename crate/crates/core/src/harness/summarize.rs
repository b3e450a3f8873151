//! Aligns several traces for plotting and tabulates their terminal values.
//!
//! `curves.csv` has one row per slot and, per input trace labelled `x`, the
//! columns `x:delay_s,x:deficit_wh,x:fog_demand,x:cloud_demand`: running
//! time-average delay, running aggregate deficit, and the slot's fog/cloud
//! split. Shorter traces leave their cells empty past their end.
//! `summary.csv` has one row per trace.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{MetricsTrace, Summary, TRACE_SCHEMA};

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "label",
    "strategy",
    "seed",
    "slots",
    "time_avg_delay_s",
    "time_avg_deficit_wh",
    "mean_node_deficit_wh",
    "total_budget_wh",
    "fog_share",
];

/// Schema tag on the first line of a trace file.
pub fn trace_schema(path: &Path) -> Result<String> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut line = String::new();
    BufReader::new(file)
        .read_line(&mut line)
        .map_err(|e| Error::io(path, e))?;
    line.strip_prefix("# ")
        .and_then(|rest| rest.split_whitespace().next())
        .map(str::to_string)
        .ok_or_else(|| Error::Parse {
            path: path.into(),
            message: "missing trace header line".into(),
        })
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub labels: Vec<String>,
    pub traces: Vec<MetricsTrace>,
    pub summaries: Vec<Summary>,
}

/// Loads traces for comparison. All files must carry the same, supported
/// schema. Labels are file stems, suffixed where they collide.
pub fn load(paths: &[PathBuf]) -> Result<Comparison> {
    if paths.is_empty() {
        return Err(Error::Config(vec!["no trace files given".into()]));
    }
    let schemas: Vec<String> = paths.iter().map(|p| trace_schema(p)).collect::<Result<_>>()?;
    if schemas.iter().any(|s| s != &schemas[0]) {
        let listed: Vec<String> = paths
            .iter()
            .zip(&schemas)
            .map(|(p, s)| format!("{} ({s})", p.display()))
            .collect();
        return Err(Error::Schema(format!(
            "traces mix schema versions: {}",
            listed.join(", ")
        )));
    }
    if schemas[0] != TRACE_SCHEMA {
        return Err(Error::Schema(format!(
            "trace schema {:?} is not supported, expected {TRACE_SCHEMA:?}",
            schemas[0]
        )));
    }
    let traces: Vec<MetricsTrace> = paths.iter().map(|p| MetricsTrace::read_csv(p)).collect::<Result<_>>()?;
    let mut labels: Vec<String> = Vec::new();
    for p in paths {
        let stem = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "trace".into());
        let mut label = stem.clone();
        let mut k = 2;
        while labels.contains(&label) {
            label = format!("{stem}#{k}");
            k += 1;
        }
        labels.push(label);
    }
    let summaries = traces.iter().map(MetricsTrace::summary).collect();
    Ok(Comparison {
        labels,
        traces,
        summaries,
    })
}

impl Comparison {
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("t");
        for l in &self.labels {
            write!(out, ",{l}:delay_s,{l}:deficit_wh,{l}:fog_demand,{l}:cloud_demand").unwrap();
        }
        out.push('\n');
        let curves: Vec<(Vec<f64>, Vec<f64>)> = self
            .traces
            .iter()
            .map(|t| (t.running_delay(), t.running_deficit()))
            .collect();
        let len = self.traces.iter().map(|t| t.rows.len()).max().unwrap_or(0);
        for i in 0..len {
            write!(out, "{i}").unwrap();
            for (trace, (delay, deficit)) in self.traces.iter().zip(&curves) {
                match trace.rows.get(i) {
                    Some(r) => write!(
                        out,
                        ",{},{},{},{}",
                        delay[i], deficit[i], r.fog_demand, r.cloud_demand
                    )
                    .unwrap(),
                    None => out.push_str(",,,,"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = SUMMARY_COLUMNS.join(",") + "\n";
        for (label, s) in self.labels.iter().zip(&self.summaries) {
            writeln!(
                out,
                "{label},{},{},{},{},{},{},{},{}",
                s.strategy,
                s.seed,
                s.slots,
                s.time_avg_delay_s,
                s.time_avg_deficit_wh,
                s.mean_node_deficit_wh,
                s.total_budget_wh,
                s.fog_share
            )
            .unwrap();
        }
        out
    }

    /// Aligned plain-text table of terminal values.
    pub fn table(&self) -> String {
        let width = self.labels.iter().map(String::len).max().unwrap_or(5).max(5);
        let mut out = format!(
            "{:width$}  {:>6}  {:>12}  {:>12}  {:>9}\n",
            "label", "slots", "delay_s", "deficit_wh", "fog_share"
        );
        for (label, s) in self.labels.iter().zip(&self.summaries) {
            writeln!(
                out,
                "{label:width$}  {:>6}  {:>12.4}  {:>12.4}  {:>9.4}",
                s.slots, s.time_avg_delay_s, s.time_avg_deficit_wh, s.fog_share
            )
            .unwrap();
        }
        out
    }

    /// Writes `curves.csv` and `summary.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [("curves.csv", self.curves_csv()), ("summary.csv", self.summary_csv())] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
