//! Baseline entanglement tests: partial transposition (PPT) and the van Loock
//! variance criterion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{eigvalsh, partial_trace, ComplexOperator, DensityMatrix, ModeRegister};
use crate::observables::build_observable_set;
use crate::partitions::{bipartitions, Partition};
use crate::witness::cov_matrix;

pub const TAU_PPT: f64 = 1e-10;

/// Purity above which a state is treated as pure by the PPT fast path.
const PURE_PURITY: f64 = 1.0 - 1e-12;

/// Schmidt weights below this are eigensolver noise; the square root in the
/// pure-state formula would otherwise lift them above `TAU_PPT`.
const SCHMIDT_FLOOR: f64 = 1e-14;

/// `ρ^{T_B}`: transpose of the tensor factors on `block`.
pub fn partial_transpose(rho: &DensityMatrix, block: &[usize]) -> Result<ComplexOperator> {
    let reg = rho.register();
    let block = checked_block(reg, block, true)?;
    let n = rho.dim();
    let part: Vec<usize> = (0..n).map(|i| block_part(reg, &block, i)).collect();
    let m = rho.mat();
    ComplexOperator::from_mat(faer::Mat::from_fn(n, n, |i, j| m[(i - part[i] + part[j], j - part[j] + part[i])]))
}

fn block_part(reg: &ModeRegister, block: &[usize], index: usize) -> usize {
    let occ = reg.occupation(index);
    block.iter().map(|&m| occ[m] * reg.stride(m)).sum()
}

fn checked_block(reg: &ModeRegister, block: &[usize], allow_full: bool) -> Result<Vec<usize>> {
    let mut b = block.to_vec();
    b.sort_unstable();
    b.dedup();
    if b.is_empty() || (!allow_full && b.len() == reg.num_modes()) {
        return Err(Error::InvalidPartition(format!("block {block:?} must be a nonempty proper subset")));
    }
    for &m in &b {
        reg.check_mode(m)?;
    }
    Ok(b)
}

/// Smallest eigenvalue of the partial transpose over `block`.
///
/// For pure states this is `-sqrt(μ₁ μ₂)` with `μ` the two largest
/// eigenvalues of the reduced state on `block`.
pub fn min_pt_eigenvalue(rho: &DensityMatrix, block: &[usize]) -> Result<f64> {
    let block = checked_block(rho.register(), block, false)?;
    if rho.is_pure_hint() || rho.purity() > PURE_PURITY {
        let red = partial_trace(rho, &block)?;
        let mut mu = eigvalsh(red.mat())?;
        mu.sort_unstable_by(|a, b| b.total_cmp(a));
        let top = mu.first().copied().unwrap_or(0.0).max(0.0);
        let second = mu.get(1).copied().unwrap_or(0.0);
        let second = if second > SCHMIDT_FLOOR { second } else { 0.0 };
        return Ok(-(top * second).sqrt());
    }
    dense_min_pt_eigenvalue(rho, &block)
}

pub fn dense_min_pt_eigenvalue(rho: &DensityMatrix, block: &[usize]) -> Result<f64> {
    let pt = partial_transpose(rho, block)?;
    Ok(eigvalsh(pt.mat())?.first().copied().unwrap_or(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PptReport {
    /// Global labels of the modes of the tested (reduced) state.
    pub modes: Vec<usize>,
    /// The cut, indexing positions within `modes`.
    pub bipartition: Partition,
    pub min_eigenvalue: f64,
    pub entangled: bool,
}

/// PPT test of the full state across a two-block partition.
pub fn ppt_bipartition(rho: &DensityMatrix, bip: &Partition) -> Result<PptReport> {
    if bip.num_blocks() != 2 || bip.num_modes() != rho.register().num_modes() {
        return Err(Error::InvalidPartition(format!("{bip} is not a bipartition of the register")));
    }
    let min_eigenvalue = min_pt_eigenvalue(rho, &bip.blocks()[0])?;
    Ok(PptReport {
        modes: (0..bip.num_modes()).collect(),
        bipartition: bip.clone(),
        min_eigenvalue,
        entangled: min_eigenvalue < -TAU_PPT,
    })
}

/// PPT reports for every cut inside every block of size ≥ 2, each evaluated
/// on the reduced state of that block.
pub fn ppt_reports(rho: &DensityMatrix, structure: &Partition) -> Result<Vec<PptReport>> {
    if structure.num_modes() != rho.register().num_modes() {
        return Err(Error::InvalidPartition("structure does not match the register".into()));
    }
    let mut out = Vec::new();
    for block in structure.blocks().iter().filter(|b| b.len() >= 2) {
        let reduced = partial_trace(rho, block)?;
        for cut in bipartitions(block.len()) {
            let min_eigenvalue = min_pt_eigenvalue(&reduced, &cut.blocks()[0])?;
            out.push(PptReport {
                modes: block.clone(),
                bipartition: cut,
                min_eigenvalue,
                entangled: min_eigenvalue < -TAU_PPT,
            });
        }
    }
    Ok(out)
}

/// `true` iff every cut inside every block of size ≥ 2 is PPT-violating.
/// Structures made only of singletons pass vacuously.
pub fn ppt_filter(rho: &DensityMatrix, structure: &Partition) -> Result<bool> {
    Ok(ppt_reports(rho, structure)?.iter().all(|r| r.entangled))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VanLoockReport {
    #[serde(rename = "V")]
    pub v: f64,
    pub u_variance: f64,
    pub v_variance: f64,
    /// Coefficients of `x_k` in `u`.
    pub h: Vec<f64>,
    /// Coefficients of `p_k` in `v`.
    pub g: Vec<f64>,
    /// Mode that plays the distinguished first role.
    pub lead_mode: usize,
}

impl VanLoockReport {
    pub fn detects(&self) -> bool {
        self.v > 0.0
    }
}

/// `V = 1/(N-1) - Var(u) - Var(v)` with `u = x_a + Σ_k x_k/√(N-1)`,
/// `v = p_a - Σ_k p_k/√(N-1)` over the other modes `k`, `a = lead_mode`.
pub fn van_loock_with_lead(rho: &DensityMatrix, lead_mode: usize) -> Result<VanLoockReport> {
    let reg = rho.register();
    let n = reg.num_modes();
    if n < 2 {
        return Err(Error::InvalidModeCount(n));
    }
    reg.check_mode(lead_mode)?;
    let set = build_observable_set(reg, 1)?;
    let gamma = cov_matrix(rho, &set, None)?.gamma;
    let s = 1.0 / ((n - 1) as f64).sqrt();
    let h: Vec<f64> = (0..n).map(|m| if m == lead_mode { 1.0 } else { s }).collect();
    let g: Vec<f64> = (0..n).map(|m| if m == lead_mode { 1.0 } else { -s }).collect();
    let quad = |coef: &[f64], offset: usize| {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc += coef[a] * coef[b] * gamma[(2 * a + offset, 2 * b + offset)];
            }
        }
        acc
    };
    let (u_variance, v_variance) = (quad(&h, 0), quad(&g, 1));
    Ok(VanLoockReport { v: 1.0 / (n - 1) as f64 - u_variance - v_variance, u_variance, v_variance, h, g, lead_mode })
}

pub fn van_loock_v(rho: &DensityMatrix) -> Result<VanLoockReport> {
    van_loock_with_lead(rho, 0)
}

/// Largest `V` over every choice of the distinguished mode.
pub fn van_loock_best_relabel(rho: &DensityMatrix) -> Result<VanLoockReport> {
    let n = rho.register().num_modes();
    let mut best = van_loock_with_lead(rho, 0)?;
    for lead in 1..n {
        let r = van_loock_with_lead(rho, lead)?;
        if r.v > best.v {
            best = r;
        }
    }
    Ok(best)
}
