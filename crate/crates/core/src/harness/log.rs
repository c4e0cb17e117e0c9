use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{ensure, Result};

/// One metric as a table of numeric rows.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl MetricTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogEvent {
    pub time_ms: f64,
    pub kind: String,
    pub detail: String,
}

/// Time-stamped metric records of one experiment run.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentLog {
    pub experiment: String,
    pub seed: u64,
    pub metrics: BTreeMap<String, MetricTable>,
    pub events: Vec<LogEvent>,
    pub phase_boundaries_ms: Vec<f64>,
}

impl ExperimentLog {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self { experiment: experiment.to_string(), seed, ..Self::default() }
    }

    /// Appends a row to `metric`, creating it with `columns` on first use.
    pub fn record(&mut self, metric: &str, columns: &[&str], row: &[f64]) -> Result<()> {
        ensure!(columns.len() == row.len(), "metric {metric}: {} columns but {} values", columns.len(), row.len());
        let t = self.metrics.entry(metric.to_string()).or_insert_with(|| MetricTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        });
        ensure!(
            t.columns.len() == columns.len() && t.columns.iter().zip(columns).all(|(a, b)| a == b),
            "metric {metric}: column set changed"
        );
        t.rows.push(row.to_vec());
        Ok(())
    }

    pub fn event(&mut self, time_ms: f64, kind: &str, detail: impl Into<String>) {
        self.events.push(LogEvent { time_ms, kind: kind.to_string(), detail: detail.into() });
    }

    pub fn metric(&self, name: &str) -> Option<&MetricTable> {
        self.metrics.get(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_and_read_back() {
        let mut log = ExperimentLog::new("x", 3);
        log.record("acc", &["t", "a"], &[1.0, 0.5]).unwrap();
        log.record("acc", &["t", "a"], &[2.0, 0.75]).unwrap();
        assert_eq!(log.metric("acc").unwrap().column("a").unwrap(), vec![0.5, 0.75]);
        assert!(log.record("acc", &["t"], &[1.0]).is_err());
        assert!(log.record("acc", &["t", "b"], &[1.0, 2.0]).is_err());
        assert!(log.record("z", &["t", "b"], &[1.0]).is_err());
    }
}
