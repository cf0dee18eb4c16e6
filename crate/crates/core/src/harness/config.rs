use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::ModeRegister;
use crate::partitions::{young_classes, Partition};
use crate::stategen::{GenerationOptions, SPDC_MAX_CHI};
use crate::witness::CertifyOptions;

/// Largest Hilbert-space dimension a run may request.
pub const MAX_TOTAL_DIM: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// One cell per entanglement structure; certifies the generating structure.
    StructureScan,
    /// Fully inseparable states, certified at every configured order.
    FullInsepScan,
    /// Fully inseparable states under uniform loss, one cell per efficiency.
    LossSweep,
    /// Three-mode cubic down-conversion states.
    SpdcScan,
    /// Fully inseparable states with the QFI ladder next to the baselines.
    BaselineCompare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::StructureScan => "structure_scan",
            Self::FullInsepScan => "full_insep_scan",
            Self::LossSweep => "loss_sweep",
            Self::SpdcScan => "spdc_scan",
            Self::BaselineCompare => "baseline_compare",
        }
    }
}

/// Declarative description of one Monte Carlo experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub num_modes: usize,
    pub cutoff: usize,
    pub orders: Vec<u8>,
    /// Structures to scan. Empty means one representative per Young class
    /// (structure scan) or the single block of all modes (other experiments).
    #[serde(default)]
    pub structures: Vec<Partition>,
    pub sample_count: usize,
    pub seed: u64,
    #[serde(default)]
    pub loss_grid: Vec<f64>,
    #[serde(default = "default_chi_max")]
    pub chi_max: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub generation: GenerationOptions,
    #[serde(default)]
    pub witness: CertifyOptions,
    #[serde(default = "yes")]
    pub ppt: bool,
    #[serde(default = "yes")]
    pub van_loock: bool,
    /// Also report the best van Loock value over choices of the lead mode.
    #[serde(default)]
    pub van_loock_relabel: bool,
    #[serde(default = "default_splits")]
    pub splits: usize,
    /// Degenerate cells tolerated before the run is flagged.
    #[serde(default)]
    pub max_degenerate_cells: usize,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_chi_max() -> f64 {
    SPDC_MAX_CHI
}

fn yes() -> bool {
    true
}

fn default_splits() -> usize {
    10
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn register(&self) -> Result<ModeRegister> {
        ModeRegister::new(self.num_modes, self.cutoff).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn max_order(&self) -> u8 {
        self.orders.iter().copied().max().unwrap_or(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let reg = self.register()?;
        if reg.total_dim() > MAX_TOTAL_DIM {
            return bad(format!("dimension {} exceeds {MAX_TOTAL_DIM}", reg.total_dim()));
        }
        if self.num_modes < 2 {
            return bad("at least two modes are required".into());
        }
        if self.orders.is_empty() || self.orders.iter().any(|o| !(1..=4).contains(o)) {
            return bad(format!("orders must be a non-empty subset of 1..=4, got {:?}", self.orders));
        }
        if self.orders.windows(2).any(|w| w[0] >= w[1]) {
            return bad("orders must be strictly increasing".into());
        }
        for s in &self.structures {
            if s.num_modes() != self.num_modes {
                return bad(format!("structure {s} does not cover {} modes", self.num_modes));
            }
        }
        if self.splits == 0 {
            return bad("splits must be positive".into());
        }
        if self.generation.stellar_ranks.is_empty() {
            return bad("generation.stellar_ranks is empty".into());
        }
        let r = &self.generation.ranges;
        if [r.max_squeeze, r.max_displacement, r.passive_scale].iter().any(|x| !x.is_finite() || *x < 0.0)
            || !(0.0..=1.0).contains(&r.passive_probability)
        {
            return bad("generation.ranges out of range".into());
        }
        if self.generation.leakage_tol.is_nan() || self.generation.leakage_tol <= 0.0 {
            return bad("generation.leakage_tol must be positive".into());
        }
        let w = &self.witness;
        if [w.tau_pos, w.tau_int, w.cert_rel].iter().any(|x| !x.is_finite() || *x < 0.0) {
            return bad("witness tolerances must be finite and non-negative".into());
        }
        match self.experiment {
            ExperimentKind::LossSweep => {
                if self.loss_grid.is_empty() {
                    return bad("loss_sweep needs a non-empty loss_grid".into());
                }
                if self.loss_grid.iter().any(|eta| !(0.0..=1.0).contains(eta)) {
                    return bad("loss efficiencies must lie in [0, 1]".into());
                }
            }
            ExperimentKind::SpdcScan => {
                if self.num_modes != 3 {
                    return bad("spdc_scan requires three modes".into());
                }
                if !(self.chi_max > 0.0 && self.chi_max <= SPDC_MAX_CHI) {
                    return bad(format!("chi_max must lie in (0, {SPDC_MAX_CHI}]"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Structures actually scanned, in cell order.
    pub fn resolved_structures(&self) -> Result<Vec<Partition>> {
        if !self.structures.is_empty() {
            return Ok(self.structures.clone());
        }
        let whole = Partition::new(self.num_modes, vec![(0..self.num_modes).collect()])?;
        Ok(match self.experiment {
            ExperimentKind::StructureScan => young_classes(self.num_modes)
                .into_iter()
                .filter(|y| !y.is_fully_separable())
                .map(|y| y.representative())
                .collect::<Result<_>>()?,
            _ => vec![whole],
        })
    }

    /// Hex SHA-256 of the configuration without the output path and thread
    /// count, which do not affect results.
    pub fn hash(&self) -> String {
        let canonical = Self { output: None, threads: None, ..self.clone() };
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
