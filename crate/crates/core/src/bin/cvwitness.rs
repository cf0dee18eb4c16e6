use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cvwitness::fock::{read_density_matrix, write_density_matrix, DensityMatrix};
use cvwitness::harness::{self, ExperimentConfig, RECORDS_FILE};
use cvwitness::partitions::{enumerate_partitions, Partition};
use cvwitness::witness::{CertifyOptions, SearchPolicy, WitnessAnalysis};
use cvwitness::Error;

#[derive(Parser)]
#[command(name = "cvwitness", version, about = "QFI entanglement-structure witnesses for truncated CV states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Strict,
    Enlarged,
}

#[derive(Args)]
struct StateArgs {
    /// Density-matrix file written by `gen --dense`.
    #[arg(long)]
    state: PathBuf,
    #[arg(long, value_enum, default_value = "enlarged")]
    policy: Policy,
}

#[derive(Subcommand)]
enum Command {
    /// Draw the states of a configuration and store their specs.
    Gen {
        #[command(flatten)]
        run: RunArgs,
        /// Also write every density matrix as a binary state file.
        #[arg(long)]
        dense: bool,
    },
    /// Certify one structure of a stored state at the given orders.
    Witness {
        #[command(flatten)]
        state: StateArgs,
        /// Structure such as "[[0,1],[2]]"; defaults to a single block.
        #[arg(long)]
        structure: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        orders: Vec<u8>,
    },
    /// Certify every non-trivial partition of a stored state.
    Structure {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 2)]
        order: u8,
    },
    /// Run an experiment: JSONL records plus a CSV summary.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Turn a record file into plot-data CSVs.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        splits: usize,
    },
}

fn load_config(run: &RunArgs) -> cvwitness::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&run.config)?;
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    if let Some(n) = run.samples {
        cfg.sample_count = n;
    }
    if let Some(out) = &run.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_state(path: &Path) -> cvwitness::Result<DensityMatrix> {
    read_density_matrix(std::io::BufReader::new(File::open(path)?))
}

fn options(policy: Policy) -> CertifyOptions {
    let policy = match policy {
        Policy::Strict => SearchPolicy::Strict,
        Policy::Enlarged => SearchPolicy::Enlarged,
    };
    CertifyOptions { policy, ..CertifyOptions::default() }
}

fn gen(run: &RunArgs, dense: bool) -> cvwitness::Result<ExitCode> {
    let cfg = load_config(run)?;
    let dir = cfg.output.clone().ok_or_else(|| Error::Config("no output directory".into()))?;
    std::fs::create_dir_all(&dir)?;
    let reg = cfg.register()?;
    let mut out = BufWriter::new(File::create(dir.join("states.jsonl"))?);
    let mut failures = 0;
    for (ci, cell) in harness::cells(&cfg)?.iter().enumerate() {
        for i in 0..cfg.sample_count as u64 {
            let line = match harness::generate(&cfg, &reg, cell, i) {
                Ok((spec, rho)) => {
                    if dense {
                        let path = dir.join(format!("state_{ci}_{i}.cvdm"));
                        write_density_matrix(BufWriter::new(File::create(path)?), &rho)?;
                    }
                    json!({ "cell": cell.label, "index": i, "state": spec })
                }
                Err(e) => {
                    failures += 1;
                    json!({ "cell": cell.label, "index": i, "error": e.to_string() })
                }
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    eprintln!("wrote {} ({failures} generation failures)", dir.join("states.jsonl").display());
    Ok(ExitCode::SUCCESS)
}

fn witness(state: &StateArgs, structure: Option<&str>, orders: &[u8]) -> cvwitness::Result<ExitCode> {
    let rho = load_state(&state.state)?;
    let n = rho.register().num_modes();
    let structure = match structure {
        Some(s) => serde_json::from_str::<Partition>(s).map_err(|e| Error::Config(format!("structure: {e}")))?,
        None => Partition::new(n, vec![(0..n).collect()])?,
    };
    let max = orders.iter().copied().max().ok_or_else(|| Error::Config("no orders".into()))?;
    let analysis = WitnessAnalysis::new(&rho, max)?;
    let certs = analysis.certify_orders(&structure, orders, &options(state.policy))?;
    println!("{}", serde_json::to_string_pretty(&certs)?);
    Ok(ExitCode::SUCCESS)
}

fn structure(state: &StateArgs, order: u8) -> cvwitness::Result<ExitCode> {
    let rho = load_state(&state.state)?;
    let analysis = WitnessAnalysis::new(&rho, order)?;
    let opts = options(state.policy);
    let mut rows = Vec::new();
    for p in enumerate_partitions(rho.register().num_modes())? {
        if p.young_class().is_fully_separable() {
            continue;
        }
        let cert = analysis.certify(&p, order, &opts, None)?;
        rows.push(json!({
            "structure": p,
            "young_class": p.young_class().to_string(),
            "certified": cert.certified,
            "g": cert.g,
        }));
    }
    println!("{}", serde_json::to_string_pretty(&rows)?);
    Ok(ExitCode::SUCCESS)
}

fn sweep(run: &RunArgs) -> cvwitness::Result<ExitCode> {
    let cfg = load_config(run)?;
    let outcome = harness::run_experiment(&cfg, None)?;
    println!("cell,criterion,n,rate,std");
    for r in &outcome.summary {
        let fmt = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_default();
        println!("{},{},{},{},{}", r.cell, r.criterion, r.n, fmt(r.rate), fmt(r.std));
    }
    if let Some(dir) = &outcome.output {
        eprintln!("records in {}", dir.join(RECORDS_FILE).display());
    }
    if outcome.exceeds(&cfg) {
        eprintln!(
            "warning: {} degenerate cells (allowed {})",
            outcome.degenerate_cells, cfg.max_degenerate_cells
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen { run, dense } => gen(run, *dense),
        Command::Witness { state, structure: s, orders } => witness(state, s.as_deref(), orders),
        Command::Structure { state, order } => structure(state, *order),
        Command::Sweep { run } => sweep(run),
        Command::Report { records, out, splits } => harness::report(records, out, *splits).map(|o| {
            if o.skipped > 0 {
                eprintln!("skipped {} corrupt records ({} read)", o.skipped, o.records);
            }
            ExitCode::SUCCESS
        }),
    };
    match result {
        Ok(code) => code,
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
