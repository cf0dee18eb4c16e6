use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::{RunRecord, StateSpec};
use crate::error::{Error, Result};

/// Detection statistics of one criterion in one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub cell: String,
    pub structure: String,
    pub eta: Option<f64>,
    pub criterion: String,
    pub n: usize,
    pub detected: usize,
    pub rate: Option<f64>,
    /// Sample standard deviation of the batch rates.
    pub std: Option<f64>,
    pub failures: usize,
    pub degenerate: bool,
}

const SUMMARY_HEADER: [&str; 11] =
    ["experiment", "cell", "structure", "eta", "criterion", "n", "detected", "rate", "std", "failures", "degenerate"];

/// One point of the per-state scatter (state index against witness value).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub experiment: String,
    pub cell: String,
    pub index: u64,
    pub criterion: String,
    pub value: f64,
    pub detected: bool,
}

const SCATTER_HEADER: [&str; 6] = ["experiment", "cell", "index", "criterion", "value", "detected"];

/// Standard deviation (n − 1 denominator) of the detection rate over `splits`
/// contiguous batches whose sizes differ by at most one.
///
/// `None` when there are fewer flags than batches or only one batch.
pub fn split_std(flags: &[bool], splits: usize) -> Option<f64> {
    let n = flags.len();
    if splits < 2 || n < splits {
        return None;
    }
    let (base, extra) = (n / splits, n % splits);
    let mut rates = Vec::with_capacity(splits);
    let mut start = 0;
    for k in 0..splits {
        let len = base + usize::from(k < extra);
        let hits = flags[start..start + len].iter().filter(|&&f| f).count();
        rates.push(hits as f64 / len as f64);
        start += len;
    }
    let mean = rates.iter().sum::<f64>() / splits as f64;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (splits - 1) as f64;
    Some(var.sqrt())
}

fn structure_label(rec: &RunRecord) -> String {
    if let Some(c) = rec.certificates.first() {
        return c.structure.to_string();
    }
    match &rec.state {
        Some(StateSpec::Structured(s)) => s.structure.to_string(),
        Some(StateSpec::Spdc { .. }) => "[[0,1,2]]".into(),
        None => String::new(),
    }
}

/// Per-cell, per-criterion rates. Cells keep their first-appearance order and
/// records within a cell are taken in index order.
pub fn summarize(records: &[RunRecord], splits: usize) -> Vec<SummaryRow> {
    let mut cells: Vec<&str> = Vec::new();
    for r in records {
        if !cells.contains(&r.cell.as_str()) {
            cells.push(&r.cell);
        }
    }
    let mut rows = Vec::new();
    for cell in cells {
        let mut members: Vec<&RunRecord> = records.iter().filter(|r| r.cell == cell).collect();
        members.sort_by_key(|r| r.index);
        let failures = members.iter().filter(|r| !r.ok()).count();
        let ok: Vec<&RunRecord> = members.iter().copied().filter(|r| r.ok()).collect();
        let first = members[0];
        let structure = ok.first().map(|r| structure_label(r)).unwrap_or_else(|| structure_label(first));
        let mut criteria: Vec<String> = Vec::new();
        for r in &ok {
            for (name, _) in r.flags() {
                if !criteria.contains(&name) {
                    criteria.push(name);
                }
            }
        }
        let row = |criterion: String, flags: &[bool]| {
            let detected = flags.iter().filter(|&&f| f).count();
            SummaryRow {
                experiment: first.experiment.name().into(),
                cell: cell.into(),
                structure: structure.clone(),
                eta: first.eta,
                criterion,
                n: flags.len(),
                detected,
                rate: (!flags.is_empty()).then(|| detected as f64 / flags.len() as f64),
                std: split_std(flags, splits),
                failures,
                degenerate: failures > 0,
            }
        };
        if criteria.is_empty() {
            rows.push(row(String::new(), &[]));
        }
        for name in criteria {
            let flags: Vec<bool> =
                ok.iter().filter_map(|r| r.flags().into_iter().find(|(k, _)| *k == name).map(|(_, f)| f)).collect();
            rows.push(row(name, &flags));
        }
    }
    rows
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<std::fs::File>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    Ok(w)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv_writer(path, &SUMMARY_HEADER)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_scatter_csv(path: &Path, rows: &[ScatterRow]) -> Result<()> {
    let mut w = csv_writer(path, &SCATTER_HEADER)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ReportOutcome {
    pub records: usize,
    /// Lines that did not parse as a record.
    pub skipped: usize,
    pub rates: Vec<SummaryRow>,
    pub scatter: Vec<ScatterRow>,
}

/// Read a JSONL record file and write `rates.csv` and `scatter.csv` into `out`.
pub fn report(records_path: &Path, out: &Path, splits: usize) -> Result<ReportOutcome> {
    let file = std::fs::File::open(records_path)?;
    let mut records = Vec::new();
    let mut skipped = 0;
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RunRecord>(&line) {
            Ok(r) => records.push(r),
            Err(_) => skipped += 1,
        }
    }
    let rates = summarize(&records, splits);
    let scatter: Vec<ScatterRow> = records
        .iter()
        .filter(|r| r.ok())
        .flat_map(|r| {
            r.values().into_iter().map(move |(criterion, value, detected)| ScatterRow {
                experiment: r.experiment.name().into(),
                cell: r.cell.clone(),
                index: r.index,
                criterion,
                value,
                detected,
            })
        })
        .collect();
    std::fs::create_dir_all(out)?;
    write_summary_csv(&out.join("rates.csv"), &rates)?;
    write_scatter_csv(&out.join("scatter.csv"), &scatter)?;
    Ok(ReportOutcome { records: records.len(), skipped, rates, scatter })
}
