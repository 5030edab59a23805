//! Parallel execution of a sweep grid and its CSV tables.
//!
//! Runs may finish in any order; results always come back in grid order, so
//! the CSV for a given grid is byte-identical across executions and job
//! counts.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::scenario::{GridPoint, Protocol};
use crate::trace::DropReason;
use crate::world::{simulate, RunOptions};

pub const CSV_HEADER: [&str; 16] = [
    "axis_value",
    "protocol",
    "seed",
    "srn",
    "td",
    "dm",
    "ecp",
    "etecn",
    "term",
    "data_sent",
    "data_received",
    "routing_packets",
    "drop_ifq",
    "drop_nrte",
    "drop_tout",
    "drop_ttl",
];

/// Written in place of a metric that is undefined for a run (no deliveries,
/// no data sent).
pub const NA: &str = "NA";
/// Written in every metric column of a run that failed.
pub const FAILED: &str = "ERROR";

#[derive(Debug, Clone)]
pub struct RunResult {
    pub axis_value: String,
    pub protocol: Protocol,
    pub seed: u64,
    pub outcome: std::result::Result<MetricsReport, String>,
    pub wall: Duration,
}

/// Runs every grid point on `jobs` worker threads (all cores when `None`).
pub fn run_grid(grid: &[GridPoint], jobs: Option<usize>) -> Result<Vec<RunResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| grid.par_iter().map(run_point).collect()))
}

pub fn run_point(p: &GridPoint) -> RunResult {
    let started = Instant::now();
    let outcome = simulate(&p.config, RunOptions::default())
        .map(|o| o.report)
        .map_err(|e| e.to_string());
    RunResult {
        axis_value: p.axis_value.clone(),
        protocol: p.config.protocol,
        seed: p.config.seed,
        outcome,
        wall: started.elapsed(),
    }
}

/// Column values 3.. of a CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub values: [Option<f64>; 13],
}

impl Metrics {
    pub fn of(r: &MetricsReport) -> Self {
        let count = |n: u64| Some(n as f64);
        Metrics {
            values: [
                r.srn,
                Some(r.td),
                r.dm,
                r.ecp,
                Some(r.etecn),
                Some(r.term),
                count(r.data_sent),
                count(r.data_received),
                count(r.routing_packets),
                count(r.drops.get(DropReason::Ifq)),
                count(r.drops.get(DropReason::Nrte)),
                count(r.drops.get(DropReason::Tout)),
                count(r.drops.get(DropReason::Ttl)),
            ],
        }
    }

    /// Column-wise mean, each column over the runs where it is defined.
    pub fn mean(rows: &[Metrics]) -> Self {
        let mut values = [None; 13];
        for (i, v) in values.iter_mut().enumerate() {
            let defined: Vec<f64> = rows.iter().filter_map(|r| r.values[i]).collect();
            if !defined.is_empty() {
                *v = Some(defined.iter().sum::<f64>() / defined.len() as f64);
            }
        }
        Metrics { values }
    }

    pub fn srn(&self) -> Option<f64> {
        self.values[0]
    }
    pub fn td(&self) -> Option<f64> {
        self.values[1]
    }
    pub fn dm(&self) -> Option<f64> {
        self.values[2]
    }
    pub fn ecp(&self) -> Option<f64> {
        self.values[3]
    }
    pub fn etecn(&self) -> Option<f64> {
        self.values[4]
    }
    pub fn term(&self) -> Option<f64> {
        self.values[5]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanRow {
    pub axis_value: String,
    pub protocol: Protocol,
    pub completed: usize,
    pub failed: usize,
    pub metrics: Metrics,
}

impl MeanRow {
    pub fn seed_label(&self) -> &'static str {
        if self.failed == 0 {
            "mean"
        } else {
            "mean(partial)"
        }
    }
}

/// One mean row per (point, protocol), in first-appearance order.
pub fn mean_rows(results: &[RunResult]) -> Vec<MeanRow> {
    let mut keys: Vec<(&str, Protocol)> = Vec::new();
    for r in results {
        let k = (r.axis_value.as_str(), r.protocol);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(axis_value, protocol)| {
            let group: Vec<&RunResult> = results
                .iter()
                .filter(|r| r.axis_value == axis_value && r.protocol == protocol)
                .collect();
            let ok: Vec<Metrics> = group
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok().map(Metrics::of))
                .collect();
            MeanRow {
                axis_value: axis_value.to_string(),
                protocol,
                completed: ok.len(),
                failed: group.len() - ok.len(),
                metrics: Metrics::mean(&ok),
            }
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn metric_cells(m: &Metrics) -> impl Iterator<Item = String> + '_ {
    m.values.iter().map(|v| cell(*v))
}

/// A single run as one CSV row, header included.
pub fn write_run_csv<W: Write>(w: W, axis_value: &str, protocol: Protocol, seed: u64, report: &MetricsReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    let mut row = vec![axis_value.to_string(), protocol.to_string(), seed.to_string()];
    row.extend(metric_cells(&Metrics::of(report)));
    out.write_record(&row)?;
    out.flush()?;
    Ok(())
}

/// Per-run rows, each (point, protocol) group followed by its mean row.
/// Failed runs keep their row with every metric column set to [`FAILED`].
pub fn write_sweep_csv<W: Write>(w: W, results: &[RunResult]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for mean in mean_rows(results) {
        for r in results
            .iter()
            .filter(|r| r.axis_value == mean.axis_value && r.protocol == mean.protocol)
        {
            let mut row = vec![r.axis_value.clone(), r.protocol.to_string(), r.seed.to_string()];
            match &r.outcome {
                Ok(rep) => row.extend(metric_cells(&Metrics::of(rep))),
                Err(_) => row.extend(std::iter::repeat_n(FAILED.to_string(), 13)),
            }
            out.write_record(&row)?;
        }
        let mut row = vec![
            mean.axis_value.clone(),
            mean.protocol.to_string(),
            mean.seed_label().to_string(),
        ];
        row.extend(metric_cells(&mean.metrics));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{DeliveryMetrics, DropCensus, EnergyMetrics};
    use crate::radio::Energy;

    fn report(srn: Option<f64>, td: f64, sent: u64) -> MetricsReport {
        MetricsReport::new(
            DeliveryMetrics {
                srn,
                td,
                dm: Some(0.01),
                data_sent: sent,
                data_received: (sent as f64 * td) as u64,
                routing_packets: 7,
            },
            EnergyMetrics {
                ecp: None,
                etecn: 1.5,
                term: 0.9,
                total_consumed: Energy::ZERO,
            },
            DropCensus::default(),
        )
    }

    fn result(point: &str, protocol: Protocol, seed: u64, outcome: std::result::Result<MetricsReport, String>) -> RunResult {
        RunResult {
            axis_value: point.into(),
            protocol,
            seed,
            outcome,
            wall: Duration::ZERO,
        }
    }

    #[test]
    fn means_skip_undefined_and_failed() {
        let rs = vec![
            result("0", Protocol::MeaDsr, 1, Ok(report(Some(2.0), 0.5, 100))),
            result("0", Protocol::MeaDsr, 2, Ok(report(None, 1.0, 200))),
            result("0", Protocol::MeaDsr, 3, Err("boom".into())),
            result("0", Protocol::Dsr, 1, Ok(report(Some(4.0), 0.25, 100))),
        ];
        let m = mean_rows(&rs);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].seed_label(), "mean(partial)");
        assert_eq!(m[0].metrics.srn(), Some(2.0));
        assert_eq!(m[0].metrics.td(), Some(0.75));
        assert_eq!(m[0].metrics.ecp(), None);
        assert_eq!(m[0].metrics.values[6], Some(150.0));
        assert_eq!(m[1].seed_label(), "mean");

        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 1 + 4 + 2);
        assert!(lines[2].starts_with("0,MEA-DSR,2,NA,1,"));
        assert!(lines[3].starts_with("0,MEA-DSR,3,ERROR,ERROR"));
        assert!(lines[4].starts_with("0,MEA-DSR,mean(partial),2,0.75,"));
        assert!(lines[6].starts_with("0,DSR,mean,4,0.25,"));
    }
}
