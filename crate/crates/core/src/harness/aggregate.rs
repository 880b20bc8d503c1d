use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SweepResultRow;
use crate::error::{Error, Result};

/// Mean, standard error of the mean and median of one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`; 0 for a single value.
    pub sem: f64,
    pub median: f64,
}

pub fn cell_stats(values: &[f64]) -> Result<CellStats> {
    if values.is_empty() {
        return Err(Error::EmptyGroup("no values".into()));
    }
    let count = values.len();
    let mean = values.iter().sum::<f64>() / count as f64;
    let sem = if count < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        (var / count as f64).sqrt()
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if count % 2 == 1 {
        sorted[count / 2]
    } else {
        0.5 * (sorted[count / 2 - 1] + sorted[count / 2])
    };
    Ok(CellStats {
        count,
        mean,
        sem,
        median,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub n: usize,
    pub k: usize,
    pub backend: String,
    pub mitigation: bool,
    pub shots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub n: usize,
    #[serde(rename = "N")]
    pub dim: usize,
    pub k: usize,
    pub sparsity_level: f64,
    pub backend: String,
    pub mitigation: bool,
    pub shots: usize,
    pub count: usize,
    pub error_rows: usize,
    pub mean_relative_error: f64,
    pub sem_relative_error: f64,
    pub median_relative_error: f64,
    pub mean_invalid: f64,
    pub sem_invalid: f64,
    pub mean_retries: f64,
    /// Set when the group has a single value and its SEM is a placeholder.
    pub single_sample: bool,
}

impl AggregateRow {
    pub fn key(&self) -> CellKey {
        CellKey {
            n: self.n,
            k: self.k,
            backend: self.backend.clone(),
            mitigation: self.mitigation,
            shots: self.shots,
        }
    }
}

/// Groups rows by `(n, k, backend, mitigation, shots)`. Error rows are
/// counted but excluded from the statistics; a group made only of error
/// rows is an error.
pub fn aggregate(rows: &[SweepResultRow]) -> Result<Vec<AggregateRow>> {
    if rows.is_empty() {
        return Err(Error::EmptyGroup("no rows to aggregate".into()));
    }
    let mut groups: BTreeMap<CellKey, Vec<&SweepResultRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry(CellKey {
                n: r.n,
                k: r.k,
                backend: r.backend.clone(),
                mitigation: r.mitigation,
                shots: r.shots,
            })
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|(key, members)| {
            let ok: Vec<&SweepResultRow> = members
                .iter()
                .copied()
                .filter(|r| r.relative_error.value().is_some())
                .collect();
            if ok.is_empty() {
                return Err(Error::EmptyGroup(format!(
                    "every row failed for n={} k={} backend={} mitigation={} shots={}",
                    key.n, key.k, key.backend, key.mitigation, key.shots
                )));
            }
            let errs: Vec<f64> = ok.iter().filter_map(|r| r.relative_error.value()).collect();
            let invalid: Vec<f64> = ok.iter().map(|r| r.total_invalid as f64).collect();
            let retries: Vec<f64> = ok.iter().map(|r| r.total_retries as f64).collect();
            let e = cell_stats(&errs)?;
            let inv = cell_stats(&invalid)?;
            Ok(AggregateRow {
                n: key.n,
                dim: 1 << key.n,
                k: key.k,
                sparsity_level: ok[0].sparsity_level,
                backend: key.backend,
                mitigation: key.mitigation,
                shots: key.shots,
                count: e.count,
                error_rows: members.len() - ok.len(),
                mean_relative_error: e.mean,
                sem_relative_error: e.sem,
                median_relative_error: e.median,
                mean_invalid: inv.mean,
                sem_invalid: inv.sem,
                mean_retries: cell_stats(&retries)?.mean,
                single_sample: e.count == 1,
            })
        })
        .collect()
}

pub fn write_aggregate(path: &std::path::Path, rows: &[AggregateRow]) -> Result<()> {
    write_aggregate_to(std::fs::File::create(path)?, rows)
}

pub fn write_aggregate_to<W: std::io::Write>(out: W, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
