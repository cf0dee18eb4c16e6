//! Dense linear algebra on a truncated multimode Fock space.
//!
//! Basis states `|n_0, n_1, ..., n_{N-1}>` are laid out in row-major order:
//! mode 0 is the slowest-varying digit of the flat index, so the flat index
//! of an occupation vector is `sum_j n_j * d^(N-1-j)`.

mod io;
mod state;

pub use io::{read_density_matrix, write_density_matrix, StateFileHeader};
pub use state::{partial_trace, spectral_decompose, tensor_blocks, DensityMatrix, SpectralDecomposition};
pub(crate) use state::tensor_vectors;

use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = faer::c64;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64 { re, im }
}

/// Number of modes and the uniform per-mode Fock cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeRegister {
    num_modes: usize,
    cutoff: usize,
}

impl ModeRegister {
    pub fn new(num_modes: usize, cutoff: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::InvalidModeCount(num_modes));
        }
        if cutoff < 2 {
            return Err(Error::InvalidCutoff(cutoff));
        }
        cutoff
            .checked_pow(num_modes as u32)
            .filter(|&dim| dim <= 1 << 20)
            .ok_or_else(|| Error::InvalidParameter(format!("{cutoff}^{num_modes} is too large for dense storage")))?;
        Ok(Self { num_modes, cutoff })
    }

    /// Register with the default cutoff for `num_modes` modes.
    pub fn with_default_cutoff(num_modes: usize) -> Result<Self> {
        let cutoff = default_cutoff(num_modes).ok_or(Error::InvalidModeCount(num_modes))?;
        Self::new(num_modes, cutoff)
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn total_dim(&self) -> usize {
        self.cutoff.pow(self.num_modes as u32)
    }

    /// Distance in the flat index between consecutive levels of `mode`.
    pub fn stride(&self, mode: usize) -> usize {
        self.cutoff.pow((self.num_modes - 1 - mode) as u32)
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes {
            return Err(Error::ModeOutOfRange { mode, num_modes: self.num_modes });
        }
        Ok(())
    }

    pub fn occupation(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.num_modes];
        for slot in occ.iter_mut().rev() {
            *slot = index % self.cutoff;
            index /= self.cutoff;
        }
        occ
    }

    /// Flat index of an occupation vector, or `None` if any level is at or above the cutoff.
    pub fn index_of(&self, occupation: &[usize]) -> Option<usize> {
        if occupation.len() != self.num_modes {
            return None;
        }
        occupation.iter().try_fold(0usize, |acc, &n| (n < self.cutoff).then_some(acc * self.cutoff + n))
    }

    /// Register describing a subset of these modes.
    pub fn subregister(&self, num_modes: usize) -> Result<Self> {
        Self::new(num_modes, self.cutoff)
    }
}

/// Default cutoffs keep `d^N` at or below roughly 3200.
pub fn default_cutoff(num_modes: usize) -> Option<usize> {
    match num_modes {
        1 | 2 => Some(10),
        3 => Some(8),
        4 => Some(6),
        5 => Some(5),
        _ => None,
    }
}

/// Dense complex square matrix acting on a Fock space (single-mode or global).
#[derive(Clone, Debug)]
pub struct ComplexOperator {
    mat: Mat<C64>,
}

impl ComplexOperator {
    pub fn from_mat(mat: Mat<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), found: mat.ncols() });
        }
        Ok(Self { mat })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { mat: Mat::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: Mat::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<C64> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn dagger(&self) -> Self {
        Self { mat: self.mat.adjoint().to_owned() }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        Self { mat: &self.mat * &rhs.mat }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self { mat: &self.mat + &rhs.mat }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self { mat: &self.mat - &rhs.mat }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { mat: Mat::from_fn(self.dim(), self.dim(), |i, j| self.mat[(i, j)] * factor) }
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        self.matmul(rhs).sub(&rhs.matmul(self))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        max_abs(self.mat.as_ref())
    }

    /// Largest entrywise `|A_ij - conj(A_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(self.mat.as_ref())
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let err = self.hermiticity_error();
        if err > tol {
            return Err(Error::NotHermitian(err));
        }
        Ok(())
    }

    /// `M |psi>` for a column vector.
    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut out = vec![ZERO; n];
        for (j, &x) in psi.iter().enumerate().take(n) {
            if x == ZERO {
                continue;
            }
            let col = self.mat.col(j);
            for (i, o) in out.iter_mut().enumerate() {
                *o += col[i] * x;
            }
        }
        out
    }
}

pub(crate) fn max_abs(m: MatRef<'_, C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

pub(crate) fn hermiticity_error(m: MatRef<'_, C64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..=j.min(m.nrows().saturating_sub(1)) {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Annihilation operator truncated to `d` levels.
pub fn build_ladder(d: usize) -> Result<ComplexOperator> {
    if d < 2 {
        return Err(Error::InvalidCutoff(d));
    }
    Ok(ComplexOperator { mat: ladder_mat(d) })
}

pub(crate) fn ladder_mat(d: usize) -> Mat<C64> {
    Mat::from_fn(d, d, |i, j| if j == i + 1 { c((j as f64).sqrt(), 0.0) } else { ZERO })
}

/// Position and momentum quadratures `x = (a + a†)/√2`, `p = (a - a†)/(i√2)`.
///
/// With this normalization the vacuum variance of each quadrature is 1/2.
pub fn quadratures(d: usize) -> Result<(ComplexOperator, ComplexOperator)> {
    if d < 2 {
        return Err(Error::InvalidCutoff(d));
    }
    let (x, p) = quadrature_mats(d);
    Ok((ComplexOperator { mat: x }, ComplexOperator { mat: p }))
}

pub(crate) fn quadrature_mats(d: usize) -> (Mat<C64>, Mat<C64>) {
    let a = ladder_mat(d);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = Mat::from_fn(d, d, |i, j| (a[(i, j)] + a[(j, i)].conj()) * s);
    // (a - a†)/(i√2) = -i (a - a†)/√2
    let p = Mat::from_fn(d, d, |i, j| (a[(i, j)] - a[(j, i)].conj()) * c(0.0, -s));
    (x, p)
}

/// `I ⊗ ... ⊗ op ⊗ ... ⊗ I` with `op` acting on `mode`.
pub fn embed_local(op: &ComplexOperator, mode: usize, reg: &ModeRegister) -> Result<ComplexOperator> {
    reg.check_mode(mode)?;
    let d = reg.cutoff();
    if op.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: op.dim() });
    }
    Ok(ComplexOperator { mat: embed_local_mat(op.mat(), mode, reg) })
}

pub(crate) fn embed_local_mat(op: MatRef<'_, C64>, mode: usize, reg: &ModeRegister) -> Mat<C64> {
    let d = reg.cutoff();
    let dim = reg.total_dim();
    let stride = reg.stride(mode);
    let outer = dim / (stride * d);
    let mut out = Mat::<C64>::zeros(dim, dim);
    for o in 0..outer {
        for inner in 0..stride {
            let base = o * d * stride + inner;
            for n in 0..d {
                for m in 0..d {
                    let v = op[(m, n)];
                    if v != ZERO {
                        out[(base + m * stride, base + n * stride)] = v;
                    }
                }
            }
        }
    }
    out
}

/// Apply a single-mode `d×d` operator to `mode` of a state vector without
/// forming the global matrix.
pub(crate) fn apply_local(op: MatRef<'_, C64>, mode: usize, reg: &ModeRegister, psi: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; psi.len()];
    apply_local_into(op, mode, reg, psi, &mut out);
    out
}

pub(crate) fn apply_local_into(op: MatRef<'_, C64>, mode: usize, reg: &ModeRegister, psi: &[C64], out: &mut [C64]) {
    let d = reg.cutoff();
    let stride = reg.stride(mode);
    let outer = psi.len() / (stride * d);
    out.iter_mut().for_each(|v| *v = ZERO);
    for o in 0..outer {
        let base = o * d * stride;
        for n in 0..d {
            for m in 0..d {
                let v = op[(m, n)];
                if v == ZERO {
                    continue;
                }
                let src = &psi[base + n * stride..base + (n + 1) * stride];
                let dst = &mut out[base + m * stride..base + (m + 1) * stride];
                for (t, s) in dst.iter_mut().zip(src) {
                    *t += v * *s;
                }
            }
        }
    }
}

/// Column `j` of a matrix as an owned vector.
pub(crate) fn column(m: MatRef<'_, C64>, j: usize) -> Vec<C64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

pub(crate) fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub(crate) fn eigh(m: MatRef<'_, C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let vals = column_values(evd.S().column_vector().iter().map(|z| z.re));
    Ok((vals, evd.U().to_owned()))
}

pub(crate) fn eigvalsh(m: MatRef<'_, C64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))
}

/// Eigenvalues (ascending) and eigenvectors of a real symmetric matrix.
pub(crate) fn eigh_real(m: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    if m.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let vals = column_values(evd.S().column_vector().iter().copied());
    Ok((vals, evd.U().to_owned()))
}

fn column_values(it: impl Iterator<Item = f64>) -> Vec<f64> {
    it.collect()
}

/// `exp(-i H)` for Hermitian `H` via its eigendecomposition.
pub(crate) fn expm_hermitian(h: MatRef<'_, C64>) -> Result<Mat<C64>> {
    let (vals, vecs) = eigh(h)?;
    let n = h.nrows();
    let scaled = Mat::from_fn(n, n, |i, k| vecs[(i, k)] * C64::from_polar(1.0, -vals[k]));
    Ok(&scaled * vecs.adjoint())
}
