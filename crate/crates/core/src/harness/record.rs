use serde::{Deserialize, Serialize};

use super::config::ExperimentKind;
use crate::criteria::{PptReport, VanLoockReport};
use crate::error::Result;
use crate::fock::{DensityMatrix, ModeRegister};
use crate::stategen::{spdc_state, SpdcSpec, StructuredStateSpec};
use crate::witness::StructureCertificate;

pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Enough information to rebuild a state without the random stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Structured(StructuredStateSpec),
    Spdc { cutoff: usize, couplings: SpdcSpec, seed: u64, index: u64 },
}

impl StateSpec {
    pub fn build(&self, leakage_tol: f64) -> Result<DensityMatrix> {
        match self {
            Self::Structured(s) => s.build(leakage_tol),
            Self::Spdc { cutoff, couplings, .. } => spdc_state(couplings, &ModeRegister::new(3, *cutoff)?),
        }
    }
}

/// One evaluated state. Written as a single JSON line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub config_hash: String,
    pub experiment: ExperimentKind,
    pub cell: String,
    pub index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// `None` when generation or evaluation failed; see `error`.
    pub state: Option<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub certificates: Vec<StructureCertificate>,
    #[serde(default)]
    pub ppt: Vec<PptReport>,
    #[serde(default)]
    pub ppt_entangled: Option<bool>,
    #[serde(default)]
    pub van_loock: Option<VanLoockReport>,
    #[serde(default)]
    pub van_loock_best: Option<VanLoockReport>,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    /// Named detection flags of this record, in a stable order.
    pub fn flags(&self) -> Vec<(String, bool)> {
        let mut out: Vec<(String, bool)> =
            self.certificates.iter().map(|c| (format!("qfi_order_{}", c.order), c.certified)).collect();
        if let Some(v) = &self.van_loock {
            out.push(("van_loock".into(), v.detects()));
        }
        if let Some(v) = &self.van_loock_best {
            out.push(("van_loock_best".into(), v.detects()));
        }
        if let Some(p) = self.ppt_entangled {
            out.push(("ppt".into(), p));
        }
        out
    }

    /// Scalar behind each flag: `g` for certificates, `V` for van Loock and,
    /// for PPT, the largest per-cut minimum eigenvalue (every cut must be
    /// negative for the flag to be set).
    pub fn values(&self) -> Vec<(String, f64, bool)> {
        let mut out: Vec<(String, f64, bool)> =
            self.certificates.iter().map(|c| (format!("qfi_order_{}", c.order), c.g, c.certified)).collect();
        if let Some(v) = &self.van_loock {
            out.push(("van_loock".into(), v.v, v.detects()));
        }
        if let Some(v) = &self.van_loock_best {
            out.push(("van_loock_best".into(), v.v, v.detects()));
        }
        if let Some(p) = self.ppt_entangled {
            let worst = self.ppt.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::max);
            let worst = if self.ppt.is_empty() { f64::NAN } else { worst };
            out.push(("ppt".into(), worst, p));
        }
        out
    }
}
