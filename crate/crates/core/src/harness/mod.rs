//! Declarative Monte Carlo runs: batch generation, witness evaluation,
//! baselines, JSONL persistence and batch-split summaries.
//!
//! A run is a list of cells (one per structure, loss efficiency or source).
//! State `i` of a cell is drawn from the stream `(seed, offset + i)`, so any
//! record can be regenerated from the configuration alone, and the stored
//! [`StateSpec`] rebuilds it without the random stream.

mod config;
mod record;
mod summary;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

pub use config::{ExperimentConfig, ExperimentKind, MAX_TOTAL_DIM};
pub use record::{RunRecord, StateSpec, RECORD_SCHEMA_VERSION};
pub use summary::{report, split_std, summarize, write_summary_csv, ReportOutcome, ScatterRow, SummaryRow};

use crate::criteria::{ppt_reports, van_loock_best_relabel, van_loock_v};
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, ModeRegister};
use crate::partitions::Partition;
use crate::stategen::{sample_structured_state, spdc_state, state_rng, LossSpec, SpdcSpec};
use crate::witness::WitnessAnalysis;

/// Tasks evaluated in parallel before their records are flushed in order.
const CHUNK: usize = 64;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub label: String,
    pub structure: Partition,
    pub eta: Option<f64>,
    /// Added to the state index to pick the random stream.
    pub stream_offset: u64,
}

/// Cells of a run, in output order.
pub fn cells(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    let structures = cfg.resolved_structures()?;
    Ok(match cfg.experiment {
        ExperimentKind::StructureScan => {
            let classes: Vec<String> = structures.iter().map(|s| s.young_class().to_string()).collect();
            structures
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let unique = classes.iter().filter(|c| **c == classes[i]).count() == 1;
                    let label = if unique { classes[i].clone() } else { s.to_string() };
                    Cell { label, structure: s.clone(), eta: None, stream_offset: (i as u64) << 32 }
                })
                .collect()
        }
        ExperimentKind::LossSweep => cfg
            .loss_grid
            .iter()
            .map(|&eta| Cell { label: format!("eta={eta}"), structure: structures[0].clone(), eta: Some(eta), stream_offset: 0 })
            .collect(),
        ExperimentKind::SpdcScan => {
            vec![Cell { label: "spdc".into(), structure: structures[0].clone(), eta: None, stream_offset: 0 }]
        }
        ExperimentKind::FullInsepScan | ExperimentKind::BaselineCompare => structures
            .iter()
            .enumerate()
            .map(|(i, s)| Cell {
                label: if structures.len() == 1 { "full".into() } else { s.to_string() },
                structure: s.clone(),
                eta: None,
                stream_offset: (i as u64) << 32,
            })
            .collect(),
    })
}

/// Draw state `index` of `cell`.
pub fn generate(cfg: &ExperimentConfig, reg: &ModeRegister, cell: &Cell, index: u64) -> Result<(StateSpec, DensityMatrix)> {
    let stream = cell.stream_offset + index;
    match cfg.experiment {
        ExperimentKind::SpdcScan => {
            let mut rng = state_rng(cfg.seed, stream);
            let couplings = SpdcSpec::sample(cfg.chi_max, &mut rng);
            let rho = spdc_state(&couplings, reg)?;
            Ok((StateSpec::Spdc { cutoff: reg.cutoff(), couplings, seed: cfg.seed, index: stream }, rho))
        }
        _ => {
            let loss = cell.eta.map(|eta| LossSpec::uniform(reg.num_modes(), eta));
            let (spec, rho) =
                sample_structured_state(reg, &cell.structure, &cfg.generation, loss.as_ref(), cfg.seed, stream)?;
            Ok((StateSpec::Structured(spec), rho))
        }
    }
}

fn analyse(cfg: &ExperimentConfig, cell: &Cell, rho: &DensityMatrix, rec: &mut RunRecord) -> Result<()> {
    let analysis = WitnessAnalysis::new(rho, cfg.max_order())?;
    rec.certificates = analysis.certify_orders(&cell.structure, &cfg.orders, &cfg.witness)?;
    if cfg.ppt {
        rec.ppt = ppt_reports(rho, &cell.structure)?;
        rec.ppt_entangled = (!rec.ppt.is_empty()).then(|| rec.ppt.iter().all(|r| r.entangled));
    }
    if cfg.van_loock {
        rec.van_loock = Some(van_loock_v(rho)?);
        if cfg.van_loock_relabel {
            rec.van_loock_best = Some(van_loock_best_relabel(rho)?);
        }
    }
    Ok(())
}

/// Generate and evaluate one state. Failures are recorded, not returned.
pub fn evaluate(cfg: &ExperimentConfig, hash: &str, reg: &ModeRegister, cell: &Cell, index: u64) -> RunRecord {
    let start = Instant::now();
    let mut rec = RunRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        config_hash: hash.to_owned(),
        experiment: cfg.experiment,
        cell: cell.label.clone(),
        index,
        eta: cell.eta,
        state: None,
        error: None,
        certificates: Vec::new(),
        ppt: Vec::new(),
        ppt_entangled: None,
        van_loock: None,
        van_loock_best: None,
        wall_time_s: 0.0,
    };
    match generate(cfg, reg, cell, index) {
        Ok((spec, rho)) => {
            rec.state = Some(spec);
            if let Err(e) = analyse(cfg, cell, &rho, &mut rec) {
                rec.error = Some(e.to_string());
            }
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec.wall_time_s = start.elapsed().as_secs_f64();
    rec
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    pub degenerate_cells: usize,
    pub output: Option<PathBuf>,
}

impl RunOutcome {
    /// Whether more cells degenerated than the configuration tolerates.
    pub fn exceeds(&self, cfg: &ExperimentConfig) -> bool {
        self.degenerate_cells > cfg.max_degenerate_cells
    }
}

/// Run every cell, writing `config.json`, `records.jsonl` and `summary.csv`
/// into `out` (or `cfg.output`) when a directory is given.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunOutcome> {
    cfg.validate()?;
    // Results must not depend on how the linear algebra splits its sums.
    faer::set_global_parallelism(faer::Par::Seq);
    let reg = cfg.register()?;
    let hash = cfg.hash();
    let cells = cells(cfg)?;
    let out = out.map(Path::to_path_buf).or_else(|| cfg.output.clone());
    let mut writer = match &out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(CONFIG_FILE), serde_json::to_string_pretty(cfg)?)?;
            Some(BufWriter::new(File::create(dir.join(RECORDS_FILE))?))
        }
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    let tasks: Vec<(&Cell, u64)> =
        cells.iter().flat_map(|c| (0..cfg.sample_count as u64).map(move |i| (c, i))).collect();
    let mut records = Vec::with_capacity(tasks.len());
    for chunk in tasks.chunks(CHUNK) {
        let done: Vec<RunRecord> =
            pool.install(|| chunk.par_iter().map(|(cell, i)| evaluate(cfg, &hash, &reg, cell, *i)).collect());
        if let Some(w) = writer.as_mut() {
            for rec in &done {
                serde_json::to_writer(&mut *w, rec)?;
                w.write_all(b"\n")?;
            }
        }
        records.extend(done);
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }

    let summary = summarize(&records, cfg.splits);
    if let Some(dir) = &out {
        write_summary_csv(&dir.join(SUMMARY_FILE), &summary)?;
    }
    let degenerate_cells = cells
        .iter()
        .filter(|c| records.iter().any(|r| r.cell == c.label && !r.ok()))
        .count();
    Ok(RunOutcome { records, summary, degenerate_cells, output: out })
}
