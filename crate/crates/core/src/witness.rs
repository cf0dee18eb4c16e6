//! QFI-versus-variance witness matrices and the single-operator search over
//! several target partitions.
//!
//! All index-space matrices are real symmetric: coefficients are real, so only
//! the real part of the Hermitian QFI matrix enters `cᵀ M c`.

use faer::{Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    apply_local, eigh_real, partial_trace, spectral_decompose, tensor_blocks, ComplexOperator, DensityMatrix,
    SpectralDecomposition, C64,
};
use crate::observables::{build_observable_set, ladder_len, ObservableSet};
use crate::partitions::{target_partitions, Partition, TargetMode};

const OP_HERMITICITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct QfiMatrix {
    pub q: Mat<f64>,
}

#[derive(Clone, Debug)]
pub struct CovMatrix {
    pub gamma: Mat<f64>,
    pub masked: Option<Partition>,
}

#[derive(Clone, Debug)]
pub struct WitnessMatrix {
    pub m: Mat<f64>,
    pub partition: Partition,
    pub order: u8,
}

impl WitnessMatrix {
    /// `cᵀ M c / cᵀ c`.
    pub fn rayleigh(&self, c: &[f64]) -> f64 {
        rayleigh(self.m.as_ref(), c)
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(eigh_real(self.m.as_ref())?.0.last().copied().unwrap_or(0.0))
    }
}

/// Single-mode means and second moments `Re⟨A_i A_j⟩` over an observable set.
#[derive(Clone, Debug)]
struct Moments {
    mean: Vec<f64>,
    second: Mat<f64>,
}

fn re_trace_product(rho: MatRef<'_, C64>, a: MatRef<'_, C64>) -> f64 {
    let n = rho.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += (rho[(i, j)] * a[(j, i)]).re;
        }
    }
    acc
}

fn moments(rho: &DensityMatrix, set: &ObservableSet) -> Result<Moments> {
    let reg = set.register();
    let (nm, d, k) = (reg.num_modes(), reg.cutoff(), set.per_mode_len());
    let n = set.len();
    let mut mean = vec![0.0; n];
    let mut second = Mat::<f64>::zeros(n, n);
    for m in 0..nm {
        let rm = partial_trace(rho, &[m])?;
        let ops = set.per_mode(m);
        for (a, oa) in ops.iter().enumerate() {
            mean[m * k + a] = re_trace_product(rm.mat(), oa.matrix.as_ref());
            for (b, ob) in ops.iter().enumerate().skip(a) {
                let prod = &oa.matrix * &ob.matrix;
                let v = re_trace_product(rm.mat(), prod.as_ref());
                second[(m * k + a, m * k + b)] = v;
                second[(m * k + b, m * k + a)] = v;
            }
        }
    }
    for m in 0..nm {
        for l in m + 1..nm {
            // Reduced state on (m, l) with m as the slower index.
            let r = partial_trace(rho, &[m, l])?;
            let rm = r.mat();
            for (a, oa) in set.per_mode(m).iter().enumerate() {
                // t[b, b'] = sum_{x,x'} rho[(x,b),(x',b')] A[x',x]
                let t = Mat::<C64>::from_fn(d, d, |b, bp| {
                    let mut acc = C64::new(0.0, 0.0);
                    for x in 0..d {
                        for xp in 0..d {
                            acc += rm[(x * d + b, xp * d + bp)] * oa.matrix[(xp, x)];
                        }
                    }
                    acc
                });
                for (b, ob) in set.per_mode(l).iter().enumerate() {
                    let v = re_trace_product(t.as_ref(), ob.matrix.as_ref());
                    second[(m * k + a, l * k + b)] = v;
                    second[(l * k + b, m * k + a)] = v;
                }
            }
        }
    }
    Ok(Moments { mean, second })
}

fn covariance_from(mo: &Moments, set: &ObservableSet, mask: Option<&Partition>) -> Mat<f64> {
    let n = set.len();
    let modes: Vec<usize> = set.items().iter().map(|o| o.mode).collect();
    Mat::from_fn(n, n, |i, j| {
        if let Some(p) = mask {
            if !p.same_block(modes[i], modes[j]) {
                return 0.0;
            }
        }
        mo.second[(i, j)] - mo.mean[i] * mo.mean[j]
    })
}

/// Pair weights for the support-restricted QFI sum:
/// `2 (p_k - p_l)^2 / (p_k + p_l) - 4 p_k`.
fn pair_weights(p: &[f64]) -> Mat<f64> {
    let s = p.len();
    Mat::from_fn(s, s, |k, l| {
        let (a, b) = (p[k], p[l]);
        let w = if a + b > 0.0 { 2.0 * (a - b).powi(2) / (a + b) } else { 0.0 };
        w - 4.0 * a
    })
}

fn local_matrix_elements(decomp: &SpectralDecomposition, set: &ObservableSet) -> Vec<Mat<C64>> {
    let (_, psi) = decomp.support();
    let reg = set.register();
    let (dim, s) = (psi.nrows(), psi.ncols());
    set.items()
        .iter()
        .map(|o| {
            let mut v = Mat::<C64>::zeros(dim, s);
            for k in 0..s {
                let col: Vec<C64> = (0..dim).map(|i| psi[(i, k)]).collect();
                let out = apply_local(o.matrix.as_ref(), o.mode, reg, &col);
                for (i, z) in out.into_iter().enumerate() {
                    v[(i, k)] = z;
                }
            }
            psi.adjoint() * &v
        })
        .collect()
}

fn qfi_from(decomp: &SpectralDecomposition, set: &ObservableSet, mo: &Moments) -> Mat<f64> {
    let (p, _) = decomp.support();
    let w = pair_weights(p);
    let b = local_matrix_elements(decomp, set);
    let n = set.len();
    let s = p.len();
    let mut q = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for l in 0..s {
                for k in 0..s {
                    acc += w[(k, l)] * (b[i][(k, l)] * b[j][(k, l)].conj()).re;
                }
            }
            let v = acc + 4.0 * mo.second[(i, j)];
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    q
}

fn state_from_decomp(decomp: &SpectralDecomposition, set: &ObservableSet) -> Result<DensityMatrix> {
    if decomp.dim() != set.register().total_dim() {
        return Err(Error::DimensionMismatch { expected: set.register().total_dim(), found: decomp.dim() });
    }
    DensityMatrix::from_parts(*set.register(), decomp.reconstruct(), decomp.rank() == 1)
}

/// `F_Q[rho, A]` from the spectral decomposition.
pub fn qfi_scalar(decomp: &SpectralDecomposition, a: &ComplexOperator) -> Result<f64> {
    a.ensure_hermitian(OP_HERMITICITY_TOL)?;
    if a.dim() != decomp.dim() {
        return Err(Error::DimensionMismatch { expected: decomp.dim(), found: a.dim() });
    }
    let (p, psi) = decomp.support();
    let v = a.mat() * psi;
    let b = psi.adjoint() * &v;
    let w = pair_weights(p);
    let s = p.len();
    let mut acc = 0.0;
    for l in 0..s {
        for k in 0..s {
            acc += w[(k, l)] * b[(k, l)].norm_sqr();
        }
    }
    for (k, pk) in p.iter().enumerate() {
        let norm: f64 = (0..v.nrows()).map(|i| v[(i, k)].norm_sqr()).sum();
        acc += 4.0 * pk * norm;
    }
    Ok(acc)
}

pub fn qfi_matrix(decomp: &SpectralDecomposition, set: &ObservableSet) -> Result<QfiMatrix> {
    let rho = state_from_decomp(decomp, set)?;
    let mo = moments(&rho, set)?;
    Ok(QfiMatrix { q: qfi_from(decomp, set, &mo) })
}

pub fn cov_matrix(rho: &DensityMatrix, set: &ObservableSet, mask: Option<&Partition>) -> Result<CovMatrix> {
    check_register(rho, set)?;
    if let Some(p) = mask {
        check_partition(p, set)?;
    }
    let mo = moments(rho, set)?;
    Ok(CovMatrix { gamma: covariance_from(&mo, set, mask), masked: mask.cloned() })
}

pub fn witness_matrix(rho: &DensityMatrix, set: &ObservableSet, k: &Partition) -> Result<WitnessMatrix> {
    let analysis = WitnessAnalysis::with_set(rho, set.clone())?;
    analysis.witness(set.order(), k)
}

fn check_register(rho: &DensityMatrix, set: &ObservableSet) -> Result<()> {
    if rho.register() != set.register() {
        return Err(Error::DimensionMismatch { expected: set.register().total_dim(), found: rho.dim() });
    }
    Ok(())
}

fn check_partition(p: &Partition, set: &ObservableSet) -> Result<()> {
    if p.num_modes() != set.register().num_modes() {
        return Err(Error::InvalidPartition(format!(
            "partition over {} modes used with {} modes",
            p.num_modes(),
            set.register().num_modes()
        )));
    }
    Ok(())
}

/// `W = F_Q[rho, A] - 4 Var(Π_K(rho), A)` evaluated directly on the global operator.
pub fn evaluate_witness(rho: &DensityMatrix, a: &ComplexOperator, k: &Partition) -> Result<f64> {
    a.ensure_hermitian(OP_HERMITICITY_TOL)?;
    let reg = rho.register();
    if k.num_modes() != reg.num_modes() {
        return Err(Error::InvalidPartition("partition does not match the register".into()));
    }
    let decomp = spectral_decompose(rho)?;
    let f = qfi_scalar(&decomp, a)?;
    let reduced: Vec<DensityMatrix> = k.blocks().iter().map(|b| partial_trace(rho, b)).collect::<Result<_>>()?;
    let parts: Vec<(&[usize], &DensityMatrix)> = k.blocks().iter().map(Vec::as_slice).zip(reduced.iter()).collect();
    let product = tensor_blocks(reg, &parts)?;
    Ok(f - 4.0 * product.variance(a.mat()))
}

fn rayleigh(m: MatRef<'_, f64>, c: &[f64]) -> f64 {
    let n = c.len();
    let mut num = 0.0;
    for j in 0..n {
        let mut col = 0.0;
        for i in 0..n {
            col += m[(i, j)] * c[i];
        }
        num += col * c[j];
    }
    let den: f64 = c.iter().map(|x| x * x).sum();
    num / den
}

fn spectral_norm(m: MatRef<'_, f64>) -> Result<f64> {
    let (vals, _) = eigh_real(m)?;
    Ok(vals.iter().fold(0.0f64, |a, v| a.max(v.abs())))
}

fn columns_of(basis: MatRef<'_, f64>, keep: impl Iterator<Item = usize>) -> Mat<f64> {
    let cols: Vec<usize> = keep.collect();
    Mat::from_fn(basis.nrows(), cols.len(), |i, j| basis[(i, cols[j])])
}

/// Eigenvectors of `m` whose eigenvalue exceeds `tau_rel · ‖m‖₂`.
pub fn positive_subspace(m: MatRef<'_, f64>, tau_rel: f64) -> Result<Mat<f64>> {
    let (vals, vecs) = eigh_real(m)?;
    let norm = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if norm == 0.0 {
        return Ok(Mat::zeros(m.nrows(), 0));
    }
    let cut = tau_rel * norm;
    Ok(columns_of(vecs.as_ref(), (0..vals.len()).filter(|&k| vals[k] > cut)))
}

fn sum_of_projectors(bases: &[Mat<f64>]) -> Result<Option<Mat<f64>>> {
    let Some(first) = bases.first() else { return Ok(None) };
    let n = first.nrows();
    let mut acc = Mat::<f64>::zeros(n, n);
    for b in bases {
        if b.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.nrows() });
        }
        acc = &acc + b * b.transpose();
    }
    Ok(Some(acc))
}

/// Orthonormal basis of the common part of several subspaces, read off the
/// averaged projector's eigenvalues within `tau_int` of 1.
pub fn intersect_subspaces(bases: &[Mat<f64>], tau_int: f64) -> Result<Mat<f64>> {
    let Some(acc) = sum_of_projectors(bases)? else { return Ok(Mat::zeros(0, 0)) };
    let n = acc.nrows();
    if bases.iter().any(|b| b.ncols() == 0) {
        return Ok(Mat::zeros(n, 0));
    }
    let avg = &acc * faer::Scale(1.0 / bases.len() as f64);
    let (vals, vecs) = eigh_real(avg.as_ref())?;
    Ok(columns_of(vecs.as_ref(), (0..vals.len()).filter(|&k| vals[k] >= 1.0 - tau_int)))
}

/// Orthonormal basis of the span of all the given subspaces.
pub fn union_span(bases: &[Mat<f64>]) -> Result<Mat<f64>> {
    let Some(acc) = sum_of_projectors(bases)? else { return Ok(Mat::zeros(0, 0)) };
    let (vals, vecs) = eigh_real(acc.as_ref())?;
    Ok(columns_of(vecs.as_ref(), (0..vals.len()).filter(|&k| vals[k] > 1e-8)))
}

/// Best candidate of the eigenvector search within one subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub c: Vec<f64>,
    pub g: f64,
    pub per_target: Vec<f64>,
    pub candidates: usize,
}

fn score(ms: &[WitnessMatrix], c: &[f64]) -> (f64, Vec<f64>) {
    let per: Vec<f64> = ms.iter().map(|m| m.rayleigh(c)).collect();
    let g = per.iter().copied().fold(f64::INFINITY, f64::min);
    (g, per)
}

fn unit(mut c: Vec<f64>) -> Vec<f64> {
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        c.iter_mut().for_each(|x| *x /= n);
    }
    c
}

fn better(a: &Optimum, b: &Optimum) -> bool {
    a.g > b.g
}

/// Search the subspace spanned by `p` for an operator that is positive on all
/// witness matrices at once.
///
/// Candidates are the eigenvectors of `Pᵀ (Σ_l M_l) P` with positive eigenvalue
/// (all eigenvectors when none is positive), scored by `g = min_l W(M_l, c)`.
/// Returns `None` when `p` has no columns or `ms` is empty.
pub fn optimize_common_operator(ms: &[WitnessMatrix], p: MatRef<'_, f64>) -> Result<Option<Optimum>> {
    if ms.is_empty() || p.ncols() == 0 {
        return Ok(None);
    }
    let n = ms[0].m.nrows();
    if p.nrows() != n || ms.iter().any(|m| m.m.nrows() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: p.nrows() });
    }
    let mut msum = Mat::<f64>::zeros(n, n);
    for m in ms {
        msum = &msum + &m.m;
    }
    let reduced = p.transpose() * &msum * p;
    let reduced = Mat::from_fn(reduced.nrows(), reduced.ncols(), |i, j| 0.5 * (reduced[(i, j)] + reduced[(j, i)]));
    let (vals, vecs) = eigh_real(reduced.as_ref())?;
    let positive: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 0.0).collect();
    let picks = if positive.is_empty() { (0..vals.len()).collect() } else { positive };
    let mut best: Option<Optimum> = None;
    for &k in picks.iter().rev() {
        let c = unit((0..n).map(|i| (0..p.ncols()).map(|a| p[(i, a)] * vecs[(a, k)]).sum()).collect());
        let (g, per_target) = score(ms, &c);
        let cand = Optimum { c, g, per_target, candidates: picks.len() };
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    Ok(best)
}

/// Pairwise rotation ascent of `g` on the unit sphere.
///
/// Each step mixes the current best `c` with one direction `v` (made
/// orthogonal to `c`) and maximizes `min_l W(M_l, cos θ c + sin θ v)` over `θ`.
/// Every direction is tried and the largest gain is taken, for at most
/// `sweeps × directions.len()` steps. This reaches operators that combine
/// several eigenvector candidates, which a single eigenvector of `Σ_l M_l`
/// cannot do when the targets act on disjoint groups of modes.
pub fn refine_by_rotation(ms: &[WitnessMatrix], start: &Optimum, directions: &[Vec<f64>], sweeps: usize) -> Optimum {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let apply = |m: &Mat<f64>, v: &[f64]| -> Vec<f64> {
        (0..v.len()).map(|i| (0..v.len()).map(|j| m[(i, j)] * v[j]).sum()).collect()
    };
    let mut best = start.clone();
    if ms.is_empty() || directions.is_empty() || sweeps == 0 {
        return best;
    }
    // vᵀ M_l v does not depend on the current point.
    let vmv: Vec<Vec<f64>> = directions.iter().map(|v| ms.iter().map(|m| m.rayleigh(v)).collect()).collect();
    const GRID: usize = 128;
    let step = std::f64::consts::PI / GRID as f64;
    for _ in 0..sweeps * directions.len() {
        let c = best.c.clone();
        let mc: Vec<Vec<f64>> = ms.iter().map(|m| apply(&m.m, &c)).collect();
        let cmc: Vec<f64> = mc.iter().map(|x| dot(&c, x)).collect();
        let mut step_best: Option<(f64, f64, Vec<f64>)> = None;
        for (dir, dmd) in directions.iter().zip(&vmv) {
            let along = dot(dir, &c);
            let norm2 = 1.0 - along * along;
            if norm2 < 1e-12 {
                continue;
            }
            let norm = norm2.sqrt();
            // (a, b, x) = (cᵀMc, v⊥ᵀMv⊥, cᵀMv⊥) with v⊥ = (v − αc)/‖·‖.
            let coeffs: Vec<(f64, f64, f64)> = (0..ms.len())
                .map(|l| {
                    let vmc = dot(dir, &mc[l]);
                    let b = (dmd[l] - 2.0 * along * vmc + along * along * cmc[l]) / norm2;
                    (cmc[l], b, (vmc - along * cmc[l]) / norm)
                })
                .collect();
            let f = |t: f64| {
                let (co, si) = (t.cos(), t.sin());
                coeffs.iter().map(|(a, b, x)| co * co * a + si * si * b + 2.0 * si * co * x).fold(f64::INFINITY, f64::min)
            };
            let (mut t_best, mut f_best) = (0.0, f(0.0));
            for k in 1..GRID {
                let t = k as f64 * step;
                let val = f(t);
                if val > f_best {
                    (t_best, f_best) = (t, val);
                }
            }
            if t_best == 0.0 {
                continue;
            }
            let (mut lo, mut hi) = (t_best - step, t_best + step);
            for _ in 0..40 {
                let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
                if f(m1) < f(m2) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            let mid = 0.5 * (lo + hi);
            let (t, val) = if f(mid) > f_best { (mid, f(mid)) } else { (t_best, f_best) };
            if step_best.as_ref().is_none_or(|(_, g, _)| val > *g) {
                let v: Vec<f64> = dir.iter().zip(&c).map(|(d, x)| (d - along * x) / norm).collect();
                step_best = Some((t, val, v));
            }
        }
        let Some((t, _, v)) = step_best else { break };
        let cand = unit(c.iter().zip(&v).map(|(x, y)| t.cos() * x + t.sin() * y).collect());
        let (g, per_target) = score(ms, &cand);
        if g <= best.g + 1e-12 * best.g.abs().max(1e-300) {
            break;
        }
        best = Optimum { c: cand, g, per_target, candidates: best.candidates + 1 };
    }
    best
}

/// Which subspaces feed the Step-3 candidate search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchPolicy {
    /// Only the intersection of the positive subspaces.
    Strict,
    /// Intersection, then the span of all positive subspaces, then the whole
    /// index space, plus any warm start; the best `g` is then refined by
    /// pairwise rotations.
    #[default]
    Enlarged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchSpace {
    Intersection,
    UnionSpan,
    Full,
    WarmStart,
    /// Rotation refinement improved on the best tier.
    Refined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Certified,
    /// Candidates exist but none reaches the certification threshold.
    NotCertified,
    /// The strict intersection is empty (strict policy only).
    EmptyIntersection,
    /// The structure has no target partition (fully separable structure).
    NoTargets,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyOptions {
    pub target_mode: TargetMode,
    pub policy: SearchPolicy,
    /// Relative eigenvalue cut for positive subspaces.
    pub tau_pos: f64,
    /// Intersection tolerance on the averaged projector spectrum.
    pub tau_int: f64,
    /// Certification requires `g > cert_rel · ‖Q‖₂`.
    pub cert_rel: f64,
    /// Rotation sweeps after the eigenvector search (enlarged policy only).
    pub refine_sweeps: usize,
    /// Extra random unit vectors scored inside the winning subspace (0 = off).
    pub diagnostic_samples: usize,
    pub diagnostic_seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            target_mode: TargetMode::default(),
            policy: SearchPolicy::default(),
            tau_pos: 1e-9,
            tau_int: 1e-7,
            cert_rel: 1e-7,
            refine_sweeps: 4,
            diagnostic_samples: 0,
            diagnostic_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tau_pos: f64,
    pub tau_int: f64,
    pub cert_threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingDiagnostic {
    pub samples: usize,
    pub best_g: f64,
    /// `g` of the eigenvector candidate minus the best sampled `g`.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureCertificate {
    pub structure: Partition,
    pub order: u8,
    pub targets: Vec<Partition>,
    pub status: CertificateStatus,
    pub certified: bool,
    pub g: f64,
    pub per_target_w: Vec<f64>,
    pub c_opt: Vec<f64>,
    pub labels: Vec<String>,
    pub search_space: Option<SearchSpace>,
    pub intersection_dim: usize,
    pub intersection_basis: Vec<Vec<f64>>,
    pub positive_dims: Vec<usize>,
    pub qfi_norm: f64,
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<SamplingDiagnostic>,
}

/// Moments and QFI of one state at a maximum observable order; lower orders
/// use principal sub-blocks (the ladders are nested).
#[derive(Clone, Debug)]
pub struct WitnessAnalysis {
    set: ObservableSet,
    moments: Moments,
    q: Mat<f64>,
}

impl WitnessAnalysis {
    pub fn new(rho: &DensityMatrix, max_order: u8) -> Result<Self> {
        let set = build_observable_set(rho.register(), max_order)?;
        Self::with_set(rho, set)
    }

    pub fn with_set(rho: &DensityMatrix, set: ObservableSet) -> Result<Self> {
        check_register(rho, &set)?;
        let decomp = spectral_decompose(rho)?;
        let moments = moments(rho, &set)?;
        let q = qfi_from(&decomp, &set, &moments);
        Ok(Self { set, moments, q })
    }

    pub fn max_order(&self) -> u8 {
        self.set.order()
    }

    pub fn observable_set(&self) -> &ObservableSet {
        &self.set
    }

    fn indices(&self, order: u8) -> Result<Vec<usize>> {
        if order == 0 || order > self.set.order() {
            return Err(Error::UnsupportedOrder(order));
        }
        let k = ladder_len(order)?;
        let kmax = self.set.per_mode_len();
        Ok((0..self.set.register().num_modes()).flat_map(|m| (0..k).map(move |j| m * kmax + j)).collect())
    }

    fn restrict(&self, m: MatRef<'_, f64>, order: u8) -> Result<Mat<f64>> {
        let idx = self.indices(order)?;
        Ok(Mat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]))
    }

    pub fn labels(&self, order: u8) -> Result<Vec<String>> {
        let all = self.set.labels();
        Ok(self.indices(order)?.into_iter().map(|i| all[i].clone()).collect())
    }

    pub fn qfi(&self, order: u8) -> Result<QfiMatrix> {
        Ok(QfiMatrix { q: self.restrict(self.q.as_ref(), order)? })
    }

    pub fn covariance(&self, order: u8, mask: Option<&Partition>) -> Result<CovMatrix> {
        if let Some(p) = mask {
            check_partition(p, &self.set)?;
        }
        let g = covariance_from(&self.moments, &self.set, mask);
        Ok(CovMatrix { gamma: self.restrict(g.as_ref(), order)?, masked: mask.cloned() })
    }

    pub fn witness(&self, order: u8, k: &Partition) -> Result<WitnessMatrix> {
        let gamma = self.covariance(order, Some(k))?.gamma;
        let q = self.qfi(order)?.q;
        let m = Mat::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] - 4.0 * gamma[(i, j)]);
        Ok(WitnessMatrix { m, partition: k.clone(), order })
    }

    /// Lift coefficients found at `from` order into the index space of `to`.
    pub fn lift(&self, from: u8, to: u8, c: &[f64]) -> Result<Vec<f64>> {
        let (kf, kt) = (ladder_len(from)?, ladder_len(to)?);
        if kf > kt || c.len() != kf * self.set.register().num_modes() {
            return Err(Error::InvalidParameter("cannot lift coefficients to a lower order".into()));
        }
        let mut out = vec![0.0; kt * self.set.register().num_modes()];
        for (i, v) in c.iter().enumerate() {
            out[(i / kf) * kt + i % kf] = *v;
        }
        Ok(out)
    }

    pub fn certify(
        &self,
        structure: &Partition,
        order: u8,
        opts: &CertifyOptions,
        warm_start: Option<&[f64]>,
    ) -> Result<StructureCertificate> {
        check_partition(structure, &self.set)?;
        let targets = target_partitions(structure, opts.target_mode)?;
        let labels = self.labels(order)?;
        let q = self.qfi(order)?.q;
        let qfi_norm = spectral_norm(q.as_ref())?;
        let tolerances = Tolerances { tau_pos: opts.tau_pos, tau_int: opts.tau_int, cert_threshold: opts.cert_rel * qfi_norm };
        let mut cert = StructureCertificate {
            structure: structure.clone(),
            order,
            targets: targets.clone(),
            status: CertificateStatus::NoTargets,
            certified: false,
            g: 0.0,
            per_target_w: Vec::new(),
            c_opt: vec![0.0; labels.len()],
            labels,
            search_space: None,
            intersection_dim: 0,
            intersection_basis: Vec::new(),
            positive_dims: Vec::new(),
            qfi_norm,
            tolerances,
            diagnostic: None,
        };
        if targets.is_empty() {
            return Ok(cert);
        }
        let ms: Vec<WitnessMatrix> = targets.iter().map(|k| self.witness(order, k)).collect::<Result<_>>()?;
        let positives: Vec<Mat<f64>> =
            ms.iter().map(|m| positive_subspace(m.m.as_ref(), opts.tau_pos)).collect::<Result<_>>()?;
        cert.positive_dims = positives.iter().map(|b| b.ncols()).collect();
        let p = intersect_subspaces(&positives, opts.tau_int)?;
        cert.intersection_dim = p.ncols();
        cert.intersection_basis = (0..p.ncols()).map(|j| (0..p.nrows()).map(|i| p[(i, j)]).collect()).collect();

        let n = q.nrows();
        let mut spaces: Vec<(SearchSpace, Mat<f64>)> = vec![(SearchSpace::Intersection, p)];
        if opts.policy == SearchPolicy::Enlarged {
            spaces.push((SearchSpace::UnionSpan, union_span(&positives)?));
            spaces.push((SearchSpace::Full, Mat::identity(n, n)));
        }
        let mut best: Option<(SearchSpace, Optimum, usize)> = None;
        for (idx, (tag, basis)) in spaces.iter().enumerate() {
            if let Some(opt) = optimize_common_operator(&ms, basis.as_ref())? {
                if best.as_ref().is_none_or(|(_, b, _)| better(&opt, b)) {
                    best = Some((*tag, opt, idx));
                }
            }
        }
        if opts.policy == SearchPolicy::Enlarged {
            if let Some(w) = warm_start {
                if w.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: w.len() });
                }
                if w.iter().any(|x| *x != 0.0) {
                    let c = unit(w.to_vec());
                    let (g, per_target) = score(&ms, &c);
                    let opt = Optimum { c, g, per_target, candidates: 1 };
                    if best.as_ref().is_none_or(|(_, b, _)| better(&opt, b)) {
                        best = Some((SearchSpace::WarmStart, opt, usize::MAX));
                    }
                }
            }
        }
        let Some((mut tag, mut opt, space_idx)) = best else {
            cert.status = CertificateStatus::EmptyIntersection;
            return Ok(cert);
        };
        if opts.policy == SearchPolicy::Enlarged && opts.refine_sweeps > 0 {
            let mut msum = Mat::<f64>::zeros(n, n);
            for m in &ms {
                msum = &msum + &m.m;
            }
            let (_, vecs) = eigh_real(msum.as_ref())?;
            let dirs: Vec<Vec<f64>> = (0..n).rev().map(|k| (0..n).map(|i| vecs[(i, k)]).collect()).collect();
            let refined = refine_by_rotation(&ms, &opt, &dirs, opts.refine_sweeps);
            if refined.g > opt.g {
                (tag, opt) = (SearchSpace::Refined, refined);
            }
        }
        if opts.diagnostic_samples > 0 {
            let basis = spaces.get(space_idx).map(|(_, b)| b.clone()).unwrap_or_else(|| Mat::identity(n, n));
            cert.diagnostic = Some(sample_diagnostic(&ms, basis.as_ref(), opt.g, opts));
        }
        cert.certified = opt.g > tolerances.cert_threshold;
        cert.status = if cert.certified { CertificateStatus::Certified } else { CertificateStatus::NotCertified };
        cert.g = opt.g;
        cert.per_target_w = opt.per_target;
        cert.c_opt = opt.c;
        cert.search_space = Some(tag);
        Ok(cert)
    }

    /// Certify at each order in ascending order, seeding each search with the
    /// previous optimum so `g` never drops as the ladder grows.
    pub fn certify_orders(
        &self,
        structure: &Partition,
        orders: &[u8],
        opts: &CertifyOptions,
    ) -> Result<Vec<StructureCertificate>> {
        let mut sorted = orders.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut out: Vec<StructureCertificate> = Vec::with_capacity(sorted.len());
        for &order in &sorted {
            let warm = match out.last() {
                Some(prev) if prev.search_space.is_some() => Some(self.lift(prev.order, order, &prev.c_opt)?),
                _ => None,
            };
            out.push(self.certify(structure, order, opts, warm.as_deref())?);
        }
        Ok(out)
    }
}

fn sample_diagnostic(ms: &[WitnessMatrix], basis: MatRef<'_, f64>, g_eig: f64, opts: &CertifyOptions) -> SamplingDiagnostic {
    let mut rng = ChaCha20Rng::seed_from_u64(opts.diagnostic_seed);
    let (n, k) = (basis.nrows(), basis.ncols());
    let mut best = f64::NEG_INFINITY;
    for _ in 0..opts.diagnostic_samples {
        let z: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let c: Vec<f64> = (0..n).map(|i| (0..k).map(|a| basis[(i, a)] * z[a]).sum()).collect();
        best = best.max(score(ms, &c).0);
    }
    SamplingDiagnostic { samples: opts.diagnostic_samples, best_g: best, slack: g_eig - best }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{c, ModeRegister};
    use crate::observables::CoefficientVector;
    use rand::Rng;

    fn random_pure(reg: ModeRegister, seed: u64) -> DensityMatrix {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let psi: Vec<C64> =
            (0..reg.total_dim()).map(|_| c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))).collect();
        DensityMatrix::from_pure(reg, &psi).unwrap()
    }

    fn random_mixed(reg: ModeRegister, rank: usize, seed: u64) -> DensityMatrix {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let n = reg.total_dim();
        let g = Mat::<C64>::from_fn(n, rank, |_, _| c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)));
        let m = &g * g.adjoint();
        let tr: f64 = (0..n).map(|i| m[(i, i)].re).sum();
        DensityMatrix::new(reg, Mat::from_fn(n, n, |i, j| m[(i, j)] / tr)).unwrap()
    }

    fn random_coeffs(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
    }

    /// Textbook double sum over all eigenpairs, kernel included.
    fn qfi_double_loop(rho: &DensityMatrix, a: &ComplexOperator) -> f64 {
        let (vals, vecs) = crate::fock::eigh(rho.mat()).unwrap();
        let b = vecs.adjoint() * a.mat() * &vecs;
        let n = vals.len();
        let mut acc = 0.0;
        for k in 0..n {
            for l in 0..n {
                let (pk, pl) = (vals[k].max(0.0), vals[l].max(0.0));
                if pk + pl > 1e-12 {
                    acc += 2.0 * (pk - pl).powi(2) / (pk + pl) * b[(k, l)].norm_sqr();
                }
            }
        }
        acc
    }

    #[test]
    fn vacuum_qfi_of_x() {
        let reg = ModeRegister::new(1, 6).unwrap();
        let mut psi = vec![c(0.0, 0.0); 6];
        psi[0] = c(1.0, 0.0);
        let rho = DensityMatrix::from_pure(reg, &psi).unwrap();
        let decomp = spectral_decompose(&rho).unwrap();
        let (x, _) = crate::fock::quadratures(6).unwrap();
        assert!((qfi_scalar(&decomp, &x).unwrap() - 2.0).abs() < 1e-12);
        let set = build_observable_set(&reg, 1).unwrap();
        let q = qfi_matrix(&decomp, &set).unwrap().q;
        for (i, j, v) in [(0, 0, 2.0), (1, 1, 2.0), (0, 1, 0.0), (1, 0, 0.0)] {
            assert!((q[(i, j)] - v).abs() < 1e-12, "{i}{j}");
        }
    }

    #[test]
    fn maximally_mixed_has_zero_qfi() {
        let reg = ModeRegister::new(2, 3).unwrap();
        let n = reg.total_dim();
        let rho = DensityMatrix::new(reg, Mat::from_fn(n, n, |i, j| if i == j { c(1.0 / n as f64, 0.0) } else { c(0.0, 0.0) })).unwrap();
        let decomp = spectral_decompose(&rho).unwrap();
        let set = build_observable_set(&reg, 2).unwrap();
        assert!(qfi_matrix(&decomp, &set).unwrap().q.norm_max() < 1e-12);
        assert!(qfi_scalar(&decomp, &set.global(3)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mixed_qfi_matches_double_loop() {
        let reg = ModeRegister::new(2, 3).unwrap();
        for seed in 0..5 {
            let rho = random_mixed(reg, 4, seed);
            let decomp = spectral_decompose(&rho).unwrap();
            let set = build_observable_set(&reg, 2).unwrap();
            let cv = random_coeffs(set.len(), 100 + seed);
            let a = set.assemble_generator(&CoefficientVector::new(&set, cv.clone()).unwrap()).unwrap();
            let direct = qfi_scalar(&decomp, &a).unwrap();
            let oracle = qfi_double_loop(&rho, &a);
            assert!((direct - oracle).abs() < 1e-9, "{direct} vs {oracle}");
            let q = qfi_matrix(&decomp, &set).unwrap().q;
            assert!((rayleigh(q.as_ref(), &cv) * cv.iter().map(|x| x * x).sum::<f64>() - oracle).abs() < 1e-8);
        }
    }

    #[test]
    fn pure_state_qfi_is_four_covariances() {
        let reg = ModeRegister::new(2, 4).unwrap();
        let rho = random_pure(reg, 3);
        let set = build_observable_set(&reg, 3).unwrap();
        let q = qfi_matrix(&spectral_decompose(&rho).unwrap(), &set).unwrap().q;
        let g = cov_matrix(&rho, &set, None).unwrap().gamma;
        let diff = Mat::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] - 4.0 * g[(i, j)]);
        assert!(diff.norm_max() < 1e-9);
    }

    #[test]
    fn masked_covariance_matches_reduced_variances() {
        let reg = ModeRegister::new(2, 4).unwrap();
        let rho = random_pure(reg, 11);
        let set = build_observable_set(&reg, 2).unwrap();
        let k = Partition::new(2, vec![vec![0], vec![1]]).unwrap();
        let g = cov_matrix(&rho, &set, Some(&k)).unwrap().gamma;
        let cv = random_coeffs(set.len(), 12);
        let quad = rayleigh(g.as_ref(), &cv) * cv.iter().map(|x| x * x).sum::<f64>();
        let mut oracle = 0.0;
        for m in 0..2 {
            let red = partial_trace(&rho, &[m]).unwrap();
            let local = set.local_generator(&cv, m);
            oracle += red.variance(local.as_ref());
        }
        assert!((quad - oracle).abs() < 1e-9);
        let whole = Partition::new(2, vec![vec![0, 1]]).unwrap();
        let a = cov_matrix(&rho, &set, Some(&whole)).unwrap().gamma;
        let b = cov_matrix(&rho, &set, None).unwrap().gamma;
        assert_eq!(a, b);
    }

    #[test]
    fn witness_forms_agree() {
        let reg = ModeRegister::new(3, 3).unwrap();
        let parts = crate::partitions::enumerate_partitions(3).unwrap();
        for seed in 0..6u64 {
            let rho = if seed % 2 == 0 { random_pure(reg, seed) } else { random_mixed(reg, 3, seed) };
            let set = build_observable_set(&reg, 2).unwrap();
            let k = &parts[seed as usize % parts.len()];
            let m = witness_matrix(&rho, &set, k).unwrap();
            let cv = random_coeffs(set.len(), 50 + seed);
            let a = set.assemble_generator(&CoefficientVector::new(&set, cv.clone()).unwrap()).unwrap();
            let matrix_form = m.rayleigh(&cv) * cv.iter().map(|x| x * x).sum::<f64>();
            let direct = evaluate_witness(&rho, &a, k).unwrap();
            assert!((matrix_form - direct).abs() < 1e-8, "{matrix_form} vs {direct}");
        }
    }

    #[test]
    fn pure_state_single_block_witness_vanishes() {
        let reg = ModeRegister::new(2, 4).unwrap();
        let rho = random_pure(reg, 21);
        let set = build_observable_set(&reg, 2).unwrap();
        let whole = Partition::new(2, vec![vec![0, 1]]).unwrap();
        assert!(witness_matrix(&rho, &set, &whole).unwrap().m.norm_max() < 1e-9);
    }

    #[test]
    fn positive_subspace_cases() {
        let m = Mat::from_fn(2, 2, |i, j| if i != j { 0.0 } else if i == 0 { 1.0 } else { -1.0 });
        let p = positive_subspace(m.as_ref(), 1e-9).unwrap();
        assert_eq!(p.ncols(), 1);
        assert!((p[(0, 0)].abs() - 1.0).abs() < 1e-12);
        let neg = Mat::from_fn(3, 3, |i, j| if i == j { -1.0 - i as f64 } else { 0.0 });
        assert_eq!(positive_subspace(neg.as_ref(), 1e-9).unwrap().ncols(), 0);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let g = Mat::<f64>::from_fn(8, 8, |_, _| StandardNormal.sample(&mut rng));
        let sym = Mat::from_fn(8, 8, |i, j| g[(i, j)] + g[(j, i)]);
        let p = positive_subspace(sym.as_ref(), 1e-9).unwrap();
        for j in 0..p.ncols() {
            let v: Vec<f64> = (0..8).map(|i| p[(i, j)]).collect();
            assert!(rayleigh(sym.as_ref(), &v) > 0.0);
        }
    }

    fn e(n: usize, k: usize) -> Vec<f64> {
        (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect()
    }

    fn from_cols(cols: &[Vec<f64>]) -> Mat<f64> {
        Mat::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i])
    }

    #[test]
    fn intersections() {
        let a = from_cols(&[e(3, 0), e(3, 1)]);
        let b = from_cols(&[e(3, 1), e(3, 2)]);
        let p = intersect_subspaces(&[a.clone(), b], 1e-7).unwrap();
        assert_eq!(p.ncols(), 1);
        assert!((p[(1, 0)].abs() - 1.0).abs() < 1e-12);
        let same = intersect_subspaces(std::slice::from_ref(&a), 1e-7).unwrap();
        let (pa, ps) = (&a * a.transpose(), &same * same.transpose());
        assert!((&pa - &ps).norm_max() < 1e-10);
        assert_eq!(union_span(&[a, from_cols(&[e(3, 2)])]).unwrap().ncols(), 3);
    }

    #[test]
    fn planted_common_vector_is_recovered() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let n = 10;
        let v = unit((0..n).map(|_| StandardNormal.sample(&mut rng)).collect());
        let basis_with_v = |rng: &mut ChaCha20Rng| {
            let mut cols = vec![v.clone()];
            for _ in 0..3 {
                cols.push((0..n).map(|_| StandardNormal.sample(rng)).collect());
            }
            let raw = from_cols(&cols);
            raw.qr().compute_thin_Q()
        };
        let (a, b) = (basis_with_v(&mut rng), basis_with_v(&mut rng));
        let p = intersect_subspaces(&[a, b], 1e-7).unwrap();
        assert_eq!(p.ncols(), 1);
        let proj: f64 = (0..n).map(|i| p[(i, 0)] * v[i]).sum();
        assert!((proj.abs() - 1.0).abs() < 1e-6);
    }

    fn wm(m: Mat<f64>) -> WitnessMatrix {
        WitnessMatrix { m, partition: Partition::singletons(1).unwrap(), order: 1 }
    }

    #[test]
    fn single_target_reduces_to_rayleigh_maximum() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let g = Mat::<f64>::from_fn(6, 6, |_, _| StandardNormal.sample(&mut rng));
        let sym = Mat::from_fn(6, 6, |i, j| g[(i, j)] + g[(j, i)]);
        let top = *eigh_real(sym.as_ref()).unwrap().0.last().unwrap();
        let id = Mat::<f64>::identity(6, 6);
        let one = optimize_common_operator(&[wm(sym.clone())], id.as_ref()).unwrap().unwrap();
        assert!((one.g - top).abs() < 1e-10);
        let two = optimize_common_operator(&[wm(sym.clone()), wm(sym)], id.as_ref()).unwrap().unwrap();
        assert!((two.g - one.g).abs() < 1e-12);
        let dot: f64 = one.c.iter().zip(&two.c).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-10);
        assert!(optimize_common_operator(&[], id.as_ref()).unwrap().is_none());
    }

    #[test]
    fn certificate_g_is_min_of_targets() {
        let reg = ModeRegister::new(3, 3).unwrap();
        let rho = random_pure(reg, 77);
        let analysis = WitnessAnalysis::new(&rho, 2).unwrap();
        let whole = Partition::new(3, vec![vec![0, 1, 2]]).unwrap();
        let cert = analysis.certify(&whole, 2, &CertifyOptions::default(), None).unwrap();
        assert_eq!(cert.targets.len(), 3);
        let min = cert.per_target_w.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(cert.g, min);
        for (k, w) in cert.targets.iter().zip(&cert.per_target_w) {
            assert!((analysis.witness(2, k).unwrap().rayleigh(&cert.c_opt) - w).abs() < 1e-12);
        }
        let json = serde_json::to_string(&cert).unwrap();
        let back: StructureCertificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back.structure, cert.structure);
        assert_eq!(back.g, cert.g);
    }

    #[test]
    fn orders_are_monotone_with_warm_start() {
        let reg = ModeRegister::new(3, 3).unwrap();
        let rho = random_pure(reg, 5);
        let analysis = WitnessAnalysis::new(&rho, 4).unwrap();
        let whole = Partition::new(3, vec![vec![0, 1, 2]]).unwrap();
        let certs = analysis.certify_orders(&whole, &[1, 2, 3, 4], &CertifyOptions::default()).unwrap();
        for w in certs.windows(2) {
            assert!(w[1].g >= w[0].g - 1e-12);
        }
        let k = Partition::new(3, vec![vec![0], vec![1, 2]]).unwrap();
        for order in 1..4u8 {
            let lo = analysis.witness(order, &k).unwrap().max_eigenvalue().unwrap();
            let hi = analysis.witness(order + 1, &k).unwrap().max_eigenvalue().unwrap();
            assert!(hi >= lo - 1e-9);
        }
    }

    #[test]
    fn restricted_blocks_match_direct_construction() {
        let reg = ModeRegister::new(2, 4).unwrap();
        let rho = random_mixed(reg, 2, 31);
        let analysis = WitnessAnalysis::new(&rho, 4).unwrap();
        let set2 = build_observable_set(&reg, 2).unwrap();
        let direct = qfi_matrix(&spectral_decompose(&rho).unwrap(), &set2).unwrap().q;
        assert!((&analysis.qfi(2).unwrap().q - &direct).norm_max() < 1e-12);
        assert_eq!(analysis.labels(1).unwrap(), vec!["0:x", "0:p", "1:x", "1:p"]);
    }

    #[test]
    fn rotation_finds_common_direction_between_eigenvectors() {
        let diag = |v: [f64; 3]| Mat::<f64>::from_fn(3, 3, |i, j| if i == j { v[i] } else { 0.0 });
        let ms = [wm(diag([2.0, 0.0, -1.0])), wm(diag([-1.0, 0.0, 2.0]))];
        let (g, per_target) = score(&ms, &e(3, 0));
        let start = Optimum { c: e(3, 0), g, per_target, candidates: 1 };
        let dirs = [e(3, 0), e(3, 1), e(3, 2)];
        let best = refine_by_rotation(&ms, &start, &dirs, 3);
        assert!((best.g - 0.5).abs() < 1e-10, "{}", best.g);
        assert!((best.c[0].abs() - best.c[2].abs()).abs() < 1e-6);
        let stuck = refine_by_rotation(&ms, &start, &dirs, 0);
        assert_eq!(stuck.g, -1.0);
    }

    #[test]
    fn two_independent_pairs_certify_their_structure() {
        let pair_reg = ModeRegister::new(2, 4).unwrap();
        let reg = ModeRegister::new(4, 4).unwrap();
        let a = crate::stategen::two_mode_squeezed_vacuum(&pair_reg, 0.2).unwrap();
        let b = crate::stategen::two_mode_squeezed_vacuum(&pair_reg, 0.3).unwrap();
        let rho = tensor_blocks(&reg, &[(&[0, 1], &a), (&[2, 3], &b)]).unwrap();
        let analysis = WitnessAnalysis::new(&rho, 1).unwrap();
        let pairs = Partition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let cert = analysis.certify(&pairs, 1, &CertifyOptions::default(), None).unwrap();
        assert!(cert.certified, "g = {}", cert.g);
        let plain = CertifyOptions { refine_sweeps: 0, ..CertifyOptions::default() };
        let before = analysis.certify(&pairs, 1, &plain, None).unwrap();
        assert!(cert.g >= before.g);
        let whole = Partition::new(4, vec![vec![0, 1, 2, 3]]).unwrap();
        assert!(!analysis.certify(&whole, 1, &CertifyOptions::default(), None).unwrap().certified);
    }

    #[test]
    fn product_state_is_never_flagged() {
        let reg1 = ModeRegister::new(1, 4).unwrap();
        let reg = ModeRegister::new(2, 4).unwrap();
        let (a, b) = (random_pure(reg1, 1), random_pure(reg1, 2));
        let rho = tensor_blocks(&reg, &[(&[0], &a), (&[1], &b)]).unwrap();
        let analysis = WitnessAnalysis::new(&rho, 2).unwrap();
        let k = Partition::singletons(2).unwrap();
        assert!(analysis.witness(2, &k).unwrap().max_eigenvalue().unwrap() < 1e-9);
        let whole = Partition::new(2, vec![vec![0, 1]]).unwrap();
        assert!(!analysis.certify(&whole, 2, &CertifyOptions::default(), None).unwrap().certified);
    }

    #[test]
    fn rejects_non_hermitian_operator() {
        let reg = ModeRegister::new(1, 3).unwrap();
        let rho = random_pure(reg, 0);
        let a = crate::fock::build_ladder(3).unwrap();
        assert!(matches!(qfi_scalar(&spectral_decompose(&rho).unwrap(), &a), Err(Error::NotHermitian(_))));
        assert!(evaluate_witness(&rho, &a, &Partition::singletons(1).unwrap()).is_err());
    }
}
