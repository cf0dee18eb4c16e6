use faer::{Mat, MatRef};

use super::{c, column, eigh, eigvalsh, hermiticity_error, norm_sqr, ModeRegister, C64, ONE, ZERO};
use crate::error::{Error, Result};

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Trace deviation above which a channel output is rejected instead of renormalized.
pub const LEAKAGE_TOL: f64 = 1e-6;
/// Eigenvalues at or below this are treated as zero weight.
pub const EIGEN_CLIP: f64 = 1e-12;

/// Hermitian, unit-trace, positive semidefinite operator on a [`ModeRegister`].
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    reg: ModeRegister,
    mat: Mat<C64>,
    pure: bool,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(reg: ModeRegister, mat: Mat<C64>) -> Result<Self> {
        let rho = Self::from_parts(reg, mat, false)?;
        let min_eig = eigvalsh(rho.mat.as_ref())?.first().copied().unwrap_or(0.0);
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(rho)
    }

    /// `|psi><psi|` after normalizing `psi`.
    pub fn from_pure(reg: ModeRegister, psi: &[C64]) -> Result<Self> {
        let dim = reg.total_dim();
        if psi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: psi.len() });
        }
        let norm = norm_sqr(psi).sqrt();
        if norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("state vector has zero or non-finite norm".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| *z / norm).collect();
        let mat = Mat::from_fn(dim, dim, |i, j| v[i] * v[j].conj());
        Ok(Self { reg, mat, pure: true })
    }

    /// Checks Hermiticity and trace only; positivity is the caller's structural guarantee.
    pub(crate) fn from_parts(reg: ModeRegister, mat: Mat<C64>, pure: bool) -> Result<Self> {
        let dim = reg.total_dim();
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: mat.nrows() });
        }
        let herm = hermiticity_error(mat.as_ref());
        if herm > HERMITICITY_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let rho = Self { reg, mat, pure };
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        Ok(rho)
    }

    /// Renormalize a channel output, rejecting it if the trace lost exceeds [`LEAKAGE_TOL`].
    pub(crate) fn renormalized(reg: ModeRegister, mut mat: Mat<C64>, pure: bool) -> Result<Self> {
        let tr: f64 = (0..mat.nrows()).map(|i| mat[(i, i)].re).sum();
        let leakage = (1.0 - tr).abs();
        if leakage > LEAKAGE_TOL {
            return Err(Error::Leakage { leakage, tolerance: LEAKAGE_TOL });
        }
        let s = 1.0 / tr;
        let n = mat.nrows();
        for j in 0..n {
            for i in 0..n {
                mat[(i, j)] *= s;
            }
        }
        // Restore exact Hermiticity lost to rounding in channel sums.
        for j in 0..n {
            mat[(j, j)].im = 0.0;
            for i in 0..j {
                let avg = (mat[(i, j)] + mat[(j, i)].conj()) * 0.5;
                mat[(i, j)] = avg;
                mat[(j, i)] = avg.conj();
            }
        }
        Self::from_parts(reg, mat, pure)
    }

    pub fn register(&self) -> &ModeRegister {
        &self.reg
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn is_pure_hint(&self) -> bool {
        self.pure
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    pub fn purity(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += self.mat[(i, j)].norm_sqr();
            }
        }
        acc
    }

    /// `Tr(rho A)` for a global operator.
    pub fn expectation(&self, a: MatRef<'_, C64>) -> C64 {
        let n = self.dim();
        let mut acc = ZERO;
        for j in 0..n {
            for i in 0..n {
                acc += self.mat[(i, j)] * a[(j, i)];
            }
        }
        acc
    }

    /// `Tr(rho A^2) - Tr(rho A)^2` for a Hermitian global operator.
    pub fn variance(&self, a: MatRef<'_, C64>) -> f64 {
        let a2 = a * a;
        self.expectation(a2.as_ref()).re - self.expectation(a).re.powi(2)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigvalsh(self.mat.as_ref())?.first().copied().unwrap_or(0.0))
    }

    /// Full validation including the eigenvalue positivity check.
    pub fn validate(&self) -> Result<()> {
        let herm = hermiticity_error(self.mat.as_ref());
        if herm > HERMITICITY_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = self.min_eigenvalue()?;
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(())
    }

    /// State vector of a pure-hinted state, fixed up to a global phase.
    pub fn pure_vector(&self) -> Option<Vec<C64>> {
        if !self.pure {
            return None;
        }
        let n = self.dim();
        let (k, best) = (0..n).map(|i| (i, self.mat[(i, i)].re)).fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= 0.0 {
            return None;
        }
        let s = 1.0 / best.sqrt();
        Some(column(self.mat.as_ref(), k).into_iter().map(|z| z * s).collect())
    }
}

/// Eigenpairs spanning the support of a density matrix, eigenvalues descending.
///
/// Omitted eigenpairs carry zero weight. A decomposition of a pure-hinted
/// state holds a single pair.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    dim: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<C64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> MatRef<'_, C64> {
        self.eigenvectors.as_ref()
    }

    /// Number of eigenpairs above the clipping threshold.
    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().take_while(|&&p| p > EIGEN_CLIP).count()
    }

    /// `sum_k p_k |psi_k><psi_k|`.
    pub fn reconstruct(&self) -> Mat<C64> {
        let n = self.dim;
        let r = self.eigenvalues.len();
        let weighted = Mat::from_fn(n, r, |i, k| self.eigenvectors[(i, k)] * self.eigenvalues[k]);
        &weighted * self.eigenvectors.adjoint()
    }

    /// Support eigenvalues and eigenvectors (weights above [`EIGEN_CLIP`]).
    pub(crate) fn support(&self) -> (&[f64], MatRef<'_, C64>) {
        let r = self.rank();
        (&self.eigenvalues[..r], self.eigenvectors.as_ref().subcols(0, r))
    }
}

pub fn spectral_decompose(rho: &DensityMatrix) -> Result<SpectralDecomposition> {
    let herm = hermiticity_error(rho.mat());
    if herm > HERMITICITY_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let n = rho.dim();
    if rho.is_pure_hint() && (rho.purity() - 1.0).abs() < 1e-10 {
        if let Some(psi) = rho.pure_vector() {
            let norm = norm_sqr(&psi).sqrt();
            let vecs = Mat::from_fn(n, 1, |i, _| psi[i] / norm);
            return Ok(SpectralDecomposition { dim: n, eigenvalues: vec![1.0], eigenvectors: vecs });
        }
    }
    let (vals, vecs) = eigh(rho.mat())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.reverse();
    let mut eigenvalues: Vec<f64> = order.iter().map(|&k| if vals[k] > EIGEN_CLIP { vals[k] } else { 0.0 }).collect();
    let total: f64 = eigenvalues.iter().sum();
    if (total - 1.0).abs() > LEAKAGE_TOL {
        return Err(Error::Leakage { leakage: (total - 1.0).abs(), tolerance: LEAKAGE_TOL });
    }
    eigenvalues.iter_mut().for_each(|p| *p /= total);
    let eigenvectors = Mat::from_fn(n, n, |i, k| vecs[(i, order[k])]);
    Ok(SpectralDecomposition { dim: n, eigenvalues, eigenvectors })
}

/// Flat-index offsets of all multi-indices over `modes` (in the given order)
/// inside the full register.
pub(crate) fn mode_offsets(reg: &ModeRegister, modes: &[usize]) -> Vec<usize> {
    let d = reg.cutoff();
    let mut offsets = vec![0usize];
    for &m in modes {
        let stride = reg.stride(m);
        offsets = offsets.iter().flat_map(|&o| (0..d).map(move |n| o + n * stride)).collect();
    }
    offsets
}

pub(crate) fn complement(reg: &ModeRegister, modes: &[usize]) -> Vec<usize> {
    (0..reg.num_modes()).filter(|m| !modes.contains(m)).collect()
}

fn normalize_mode_set(reg: &ModeRegister, modes: &[usize]) -> Result<Vec<usize>> {
    if modes.is_empty() {
        return Err(Error::InvalidParameter("mode subset must be nonempty".into()));
    }
    let mut keep = modes.to_vec();
    keep.sort_unstable();
    keep.dedup();
    for &m in &keep {
        reg.check_mode(m)?;
    }
    Ok(keep)
}

/// Reduced state on `keep` (sorted ascending in the output register).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let reg = rho.register();
    let keep = normalize_mode_set(reg, keep)?;
    if keep.len() == reg.num_modes() {
        return Ok(rho.clone());
    }
    let env = complement(reg, &keep);
    let kept = mode_offsets(reg, &keep);
    let traced = mode_offsets(reg, &env);
    let m = rho.mat();
    let out = Mat::from_fn(kept.len(), kept.len(), |a, b| {
        let (ga, gb) = (kept[a], kept[b]);
        traced.iter().map(|&e| m[(ga + e, gb + e)]).sum::<C64>()
    });
    let sub = reg.subregister(keep.len())?;
    DensityMatrix::from_parts(sub, out, false)
}

/// Tensor product of block states placed on their modes, i.e. `⊗_i rho_{H_i}`
/// reordered into the canonical mode order.
pub fn tensor_blocks(reg: &ModeRegister, parts: &[(&[usize], &DensityMatrix)]) -> Result<DensityMatrix> {
    let mut covered = vec![false; reg.num_modes()];
    let mut blocks = Vec::with_capacity(parts.len());
    for (modes, state) in parts {
        let sorted = normalize_mode_set(reg, modes)?;
        if sorted.len() != modes.len() || state.register().num_modes() != modes.len() || state.register().cutoff() != reg.cutoff() {
            return Err(Error::DimensionMismatch { expected: modes.len(), found: state.register().num_modes() });
        }
        for &m in &sorted {
            if covered[m] {
                return Err(Error::InvalidPartition(format!("mode {m} appears in two blocks")));
            }
            covered[m] = true;
        }
        blocks.push(sorted);
    }
    if covered.iter().any(|c| !c) {
        return Err(Error::InvalidPartition("blocks do not cover every mode".into()));
    }
    let dim = reg.total_dim();
    let d = reg.cutoff();
    // Local index of each block for every global index.
    let local: Vec<Vec<usize>> = blocks
        .iter()
        .map(|modes| {
            (0..dim)
                .map(|i| {
                    let occ = reg.occupation(i);
                    modes.iter().fold(0, |acc, &m| acc * d + occ[m])
                })
                .collect()
        })
        .collect();
    let mats: Vec<MatRef<'_, C64>> = parts.iter().map(|(_, s)| s.mat()).collect();
    let out = Mat::from_fn(dim, dim, |i, j| {
        let mut acc = ONE;
        for (b, m) in mats.iter().enumerate() {
            acc *= m[(local[b][i], local[b][j])];
            if acc == ZERO {
                break;
            }
        }
        acc
    });
    let pure = parts.iter().all(|(_, s)| s.is_pure_hint());
    DensityMatrix::from_parts(*reg, out, pure)
}

/// Tensor product of block state vectors placed on their modes.
pub(crate) fn tensor_vectors(reg: &ModeRegister, parts: &[(&[usize], &[C64])]) -> Vec<C64> {
    let mut psi = vec![ONE];
    let mut offsets = vec![0usize];
    for (modes, v) in parts {
        let offs = mode_offsets(reg, modes);
        let mut next_psi = Vec::with_capacity(psi.len() * v.len());
        let mut next_off = Vec::with_capacity(psi.len() * v.len());
        for (a, &o) in psi.iter().zip(&offsets) {
            for (b, &ob) in v.iter().zip(&offs) {
                next_psi.push(*a * *b);
                next_off.push(o + ob);
            }
        }
        psi = next_psi;
        offsets = next_off;
    }
    let mut out = vec![c(0.0, 0.0); reg.total_dim()];
    for (a, o) in psi.into_iter().zip(offsets) {
        out[o] = a;
    }
    out
}
