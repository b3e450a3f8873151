//! Per-slot metrics, their time averages, and the CSV trace format.
//!
//! A trace file starts with one `#` header line carrying the schema tag,
//! strategy label, seed and per-node budgets, followed by a CSV table with
//! columns
//!
//! ```text
//! t,sum_delay_s,energy_wh_0..energy_wh_{N-1},queue_wh_0..queue_wh_{N-1},fog_demand,cloud_demand
//! ```
//!
//! `queue_wh_n` is the deficit queue after the slot's update. Floats are
//! written in Rust's shortest round-trip form, so a trace read back is
//! bit-identical to the one written.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_SCHEMA: &str = "fogcfg-trace/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub t: usize,
    pub sum_delay_s: f64,
    pub energy_wh: Vec<f64>,
    pub queue_wh: Vec<f64>,
    /// Tasks per slot processed on fog nodes.
    pub fog_demand: f64,
    /// Tasks per slot processed in the cloud.
    pub cloud_demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTrace {
    pub strategy: String,
    pub seed: u64,
    pub budgets_wh: Vec<f64>,
    pub rows: Vec<SlotRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub strategy: String,
    pub seed: u64,
    pub slots: usize,
    pub time_avg_delay_s: f64,
    /// `max(0, Σ_n avg_t(E_n − Q_n))`.
    pub time_avg_deficit_wh: f64,
    /// `mean_n max(0, avg_t(E_n − Q_n))`.
    pub mean_node_deficit_wh: f64,
    /// `avg_t(E_n − Q_n)` per node, unclamped.
    pub node_deficit_wh: Vec<f64>,
    pub total_budget_wh: f64,
    pub fog_demand: f64,
    pub cloud_demand: f64,
    /// Fog share of all processed demand.
    pub fog_share: f64,
}

impl MetricsTrace {
    pub fn new(strategy: impl Into<String>, seed: u64, budgets_wh: Vec<f64>) -> Self {
        MetricsTrace {
            strategy: strategy.into(),
            seed,
            budgets_wh,
            rows: Vec::new(),
        }
    }

    pub fn fog_count(&self) -> usize {
        self.budgets_wh.len()
    }

    /// Running time-average of total delay after each slot.
    pub fn running_delay(&self) -> Vec<f64> {
        running_mean(self.rows.iter().map(|r| r.sum_delay_s))
    }

    /// Running aggregate deficit `max(0, Σ_n avg(E_n − Q_n))` after each slot.
    pub fn running_deficit(&self) -> Vec<f64> {
        let total_budget: f64 = self.budgets_wh.iter().sum();
        running_mean(self.rows.iter().map(|r| r.energy_wh.iter().sum::<f64>() - total_budget))
            .into_iter()
            .map(|x| x.max(0.0))
            .collect()
    }

    /// Running fog share of processed demand.
    pub fn running_fog_share(&self) -> Vec<f64> {
        let (mut fog, mut all) = (0.0, 0.0);
        self.rows
            .iter()
            .map(|r| {
                fog += r.fog_demand;
                all += r.fog_demand + r.cloud_demand;
                if all > 0.0 {
                    fog / all
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn summary(&self) -> Summary {
        let slots = self.rows.len();
        let denom = slots.max(1) as f64;
        let node_deficit_wh: Vec<f64> = (0..self.fog_count())
            .map(|n| {
                self.rows.iter().map(|r| r.energy_wh[n]).sum::<f64>() / denom - self.budgets_wh[n]
            })
            .collect();
        let fog_demand: f64 = self.rows.iter().map(|r| r.fog_demand).sum();
        let cloud_demand: f64 = self.rows.iter().map(|r| r.cloud_demand).sum();
        let total = fog_demand + cloud_demand;
        Summary {
            strategy: self.strategy.clone(),
            seed: self.seed,
            slots,
            time_avg_delay_s: self.rows.iter().map(|r| r.sum_delay_s).sum::<f64>() / denom,
            time_avg_deficit_wh: self.running_deficit().last().copied().unwrap_or(0.0),
            mean_node_deficit_wh: node_deficit_wh.iter().map(|d| d.max(0.0)).sum::<f64>()
                / self.fog_count().max(1) as f64,
            node_deficit_wh,
            total_budget_wh: self.budgets_wh.iter().sum(),
            fog_demand,
            cloud_demand,
            fog_share: if total > 0.0 { fog_demand / total } else { 0.0 },
        }
    }

    pub fn header_line(&self) -> String {
        let budgets: Vec<String> = self.budgets_wh.iter().map(|b| b.to_string()).collect();
        format!(
            "# {TRACE_SCHEMA} strategy={} seed={} budgets_wh={}",
            self.strategy,
            self.seed,
            budgets.join(";")
        )
    }

    pub fn column_names(&self) -> Vec<String> {
        let n = self.fog_count();
        let mut cols = vec!["t".to_string(), "sum_delay_s".to_string()];
        cols.extend((0..n).map(|i| format!("energy_wh_{i}")));
        cols.extend((0..n).map(|i| format!("queue_wh_{i}")));
        cols.push("fog_demand".into());
        cols.push("cloud_demand".into());
        cols
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.header_line()).unwrap();
        writeln!(out, "{}", self.column_names().join(",")).unwrap();
        for r in &self.rows {
            write!(out, "{},{}", r.t, r.sum_delay_s).unwrap();
            for x in r.energy_wh.iter().chain(&r.queue_wh) {
                write!(out, ",{x}").unwrap();
            }
            writeln!(out, ",{},{}", r.fog_demand, r.cloud_demand).unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv_string().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<MetricsTrace> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let mut header = String::new();
        reader.read_line(&mut header).map_err(|e| Error::io(path, e))?;
        let mut trace = parse_header(header.trim_end()).map_err(|message| match message {
            HeaderError::Schema(s) => Error::Schema(format!("{}: {s}", path.display())),
            HeaderError::Malformed(m) => Error::Parse {
                path: path.into(),
                message: m,
            },
        })?;
        let n = trace.fog_count();
        let mut csv = csv::Reader::from_reader(reader);
        let expected = trace.column_names();
        let got: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
        if got != expected {
            return Err(Error::Parse {
                path: path.into(),
                message: format!("unexpected columns {got:?}"),
            });
        }
        for record in csv.records() {
            let record = record?;
            let num = |x: usize| -> Result<f64> {
                record[x].parse::<f64>().map_err(|e| Error::Parse {
                    path: path.into(),
                    message: format!("column {}: {e}", expected[x]),
                })
            };
            let t = record[0].parse::<usize>().map_err(|e| Error::Parse {
                path: path.into(),
                message: format!("column t: {e}"),
            })?;
            trace.rows.push(SlotRecord {
                t,
                sum_delay_s: num(1)?,
                energy_wh: (0..n).map(|i| num(2 + i)).collect::<Result<_>>()?,
                queue_wh: (0..n).map(|i| num(2 + n + i)).collect::<Result<_>>()?,
                fog_demand: num(2 + 2 * n)?,
                cloud_demand: num(3 + 2 * n)?,
            });
        }
        Ok(trace)
    }
}

enum HeaderError {
    Schema(String),
    Malformed(String),
}

fn parse_header(line: &str) -> std::result::Result<MetricsTrace, HeaderError> {
    let body = line
        .strip_prefix("# ")
        .ok_or_else(|| HeaderError::Malformed("missing trace header line".into()))?;
    let mut parts = body.split_whitespace();
    let schema = parts.next().unwrap_or_default();
    if schema != TRACE_SCHEMA {
        return Err(HeaderError::Schema(format!(
            "trace schema {schema:?}, expected {TRACE_SCHEMA:?}"
        )));
    }
    let (mut strategy, mut seed, mut budgets) = (None, None, None);
    for kv in parts {
        match kv.split_once('=') {
            Some(("strategy", v)) => strategy = Some(v.to_string()),
            Some(("seed", v)) => seed = v.parse::<u64>().ok(),
            Some(("budgets_wh", v)) => {
                budgets = v
                    .split(';')
                    .map(str::parse::<f64>)
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .ok()
            }
            _ => return Err(HeaderError::Malformed(format!("unknown header field {kv:?}"))),
        }
    }
    match (strategy, seed, budgets) {
        (Some(s), Some(seed), Some(b)) => Ok(MetricsTrace::new(s, seed, b)),
        _ => Err(HeaderError::Malformed("header needs strategy, seed and budgets_wh".into())),
    }
}

fn running_mean(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .enumerate()
        .map(|(i, x)| {
            sum += x;
            sum / (i + 1) as f64
        })
        .collect()
}
