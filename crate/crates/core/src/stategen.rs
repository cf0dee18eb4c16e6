//! Seeded random state families: stellar-rank core states dressed by random
//! Gaussian circuits, block-structured products, photon loss and a cubic
//! three-mode down-conversion process.
//!
//! Every random draw goes through a [`ChaCha20Rng`] seeded with the run seed
//! and switched to the stream of the state index, so a state depends only on
//! `(seed, index)`. The drawn parameters are recorded in explicit spec types
//! that rebuild the state without any randomness.

use std::f64::consts::PI;

use faer::Mat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::criteria::ppt_filter;
use crate::error::{Error, Result};
use crate::fock::{
    apply_local, c, eigh, expm_hermitian, ladder_mat, norm_sqr, tensor_vectors, DensityMatrix, ModeRegister,
    ComplexOperator, C64,
};
use crate::partitions::Partition;

pub const DEFAULT_MAX_RESAMPLES: usize = 200;
pub const DEFAULT_LEAKAGE_TOL: f64 = 1e-6;

/// Extra Fock levels used when exponentiating single-mode generators.
const EXP_PAD: usize = 10;
/// Smallest magnitude of a total-photon-number-r core amplitude.
const CORE_RANK_FLOOR: f64 = 1e-3;

/// RNG for state `index` of a run seeded with `seed`.
pub fn state_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn cx(z: [f64; 2]) -> C64 {
    c(z[0], z[1])
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

fn uniform_disc_radius<R: Rng + ?Sized>(rng: &mut R, max: f64) -> C64 {
    C64::from_polar(rng.random::<f64>() * max, rng.random::<f64>() * 2.0 * PI)
}

/// One occupation-number basis state and its amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreTerm {
    pub occupation: Vec<usize>,
    pub amplitude: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreState {
    pub stellar_rank: u8,
    pub terms: Vec<CoreTerm>,
}

impl CoreState {
    pub fn sample<R: Rng + ?Sized>(reg: &ModeRegister, rank: u8, rng: &mut R) -> Result<Self> {
        let r = rank as usize;
        if r >= reg.cutoff() {
            return Err(Error::InvalidParameter(format!("stellar rank {rank} needs cutoff above {rank}")));
        }
        let support: Vec<Vec<usize>> = (0..reg.total_dim())
            .map(|i| reg.occupation(i))
            .filter(|o| o.iter().sum::<usize>() <= r)
            .collect();
        loop {
            let amps: Vec<C64> = support.iter().map(|_| complex_normal(rng)).collect();
            let norm = norm_sqr(&amps).sqrt();
            let amps: Vec<C64> = amps.iter().map(|a| a / norm).collect();
            let top_ok =
                support.iter().zip(&amps).any(|(o, a)| o.iter().sum::<usize>() == r && a.norm() >= CORE_RANK_FLOOR);
            if top_ok {
                let terms = support
                    .iter()
                    .zip(&amps)
                    .map(|(o, a)| CoreTerm { occupation: o.clone(), amplitude: pair(*a) })
                    .collect();
                return Ok(Self { stellar_rank: rank, terms });
            }
        }
    }

    pub fn vector(&self, reg: &ModeRegister) -> Result<Vec<C64>> {
        let mut psi = vec![c(0.0, 0.0); reg.total_dim()];
        for t in &self.terms {
            let idx = reg
                .index_of(&t.occupation)
                .ok_or_else(|| Error::InvalidParameter(format!("core occupation {:?} outside register", t.occupation)))?;
            psi[idx] = cx(t.amplitude);
        }
        let n = norm_sqr(&psi).sqrt();
        if n == 0.0 {
            return Err(Error::InvalidParameter("core state has zero norm".into()));
        }
        Ok(psi.into_iter().map(|z| z / n).collect())
    }
}

/// `random_core_state` as a pure density matrix.
pub fn random_core_state(reg: &ModeRegister, rank: u8, seed: u64) -> Result<DensityMatrix> {
    let core = CoreState::sample(reg, rank, &mut ChaCha20Rng::seed_from_u64(seed))?;
    DensityMatrix::from_pure(*reg, &core.vector(reg)?)
}

/// Mode-mixing layer `exp(i Σ h_jk a_j† a_k)`, stored by its Hermitian `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassiveLayer {
    /// Row-major `n×n` entries of `h` as `[re, im]`.
    pub h: Vec<[f64; 2]>,
}

impl PassiveLayer {
    pub fn sample<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> Self {
        let g: Vec<C64> = (0..n * n).map(|_| complex_normal(rng)).collect();
        let h = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                pair((g[i * n + j] + g[j * n + i].conj()) * (0.5 * scale))
            })
            .collect();
        Self { h }
    }

    pub fn size(&self) -> usize {
        (self.h.len() as f64).sqrt().round() as usize
    }

    pub fn generator(&self) -> Mat<C64> {
        let n = self.size();
        Mat::from_fn(n, n, |i, j| cx(self.h[i * n + j]))
    }

    /// The single-particle unitary `U = exp(i h)`.
    pub fn mode_unitary(&self) -> Result<Mat<C64>> {
        let h = self.generator();
        let neg = Mat::from_fn(h.nrows(), h.ncols(), |i, j| -h[(i, j)]);
        expm_hermitian(neg.as_ref())
    }
}

/// Fock-space action of a passive transformation with single-particle
/// unitary `u`, i.e. `a_m† ↦ Σ_j u_jm a_j†`, restricted to the register.
///
/// Columns are built from the vacuum by applying transformed creation
/// operators. Occupations only grow along the way, so dropping amplitude that
/// leaves the register is exact (it is the leakage of that column).
pub fn passive_fock_matrix(u: &Mat<C64>, reg: &ModeRegister) -> Result<Mat<C64>> {
    let n = reg.num_modes();
    if u.nrows() != n || u.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: u.nrows() });
    }
    let dim = reg.total_dim();
    let d = reg.cutoff();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by_key(|&i| reg.occupation(i).iter().sum::<usize>());
    let mut out = Mat::<C64>::zeros(dim, dim);
    out[(0, 0)] = c(1.0, 0.0);
    for &col in order.iter().skip(1) {
        let occ = reg.occupation(col);
        let m = occ.iter().position(|&k| k > 0).expect("non-vacuum column");
        let prev = col - reg.stride(m);
        let scale = 1.0 / (occ[m] as f64).sqrt();
        for j in 0..n {
            let w = u[(j, m)] * scale;
            if w == c(0.0, 0.0) {
                continue;
            }
            let stride = reg.stride(j);
            for src in 0..dim {
                let v = out[(src, prev)];
                if v == c(0.0, 0.0) {
                    continue;
                }
                let k = (src / stride) % d;
                if k + 1 < d {
                    out[(src + stride, col)] += w * v * ((k + 1) as f64).sqrt();
                }
            }
        }
    }
    Ok(out)
}

/// Parameter ranges used when sampling Gaussian circuits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianRanges {
    pub max_squeeze: f64,
    pub max_displacement: f64,
    pub passive_scale: f64,
    pub passive_probability: f64,
}

impl Default for GaussianRanges {
    fn default() -> Self {
        Self { max_squeeze: 0.05, max_displacement: 0.05, passive_scale: 0.1, passive_probability: 0.5 }
    }
}

/// `U · Π_i S_i(ξ_i) D_i(α_i) · V` on the modes of one block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianCircuitSpec {
    pub squeeze: Vec<[f64; 2]>,
    pub displacement: Vec<[f64; 2]>,
    pub passive_in: Option<PassiveLayer>,
    pub passive_out: Option<PassiveLayer>,
}

impl GaussianCircuitSpec {
    pub fn identity(n: usize) -> Self {
        Self { squeeze: vec![[0.0; 2]; n], displacement: vec![[0.0; 2]; n], passive_in: None, passive_out: None }
    }

    pub fn sample<R: Rng + ?Sized>(n: usize, ranges: &GaussianRanges, rng: &mut R) -> Self {
        let squeeze = (0..n).map(|_| pair(uniform_disc_radius(rng, ranges.max_squeeze))).collect();
        let displacement = (0..n).map(|_| pair(uniform_disc_radius(rng, ranges.max_displacement))).collect();
        let layer = |rng: &mut R| {
            (rng.random::<f64>() < ranges.passive_probability).then(|| PassiveLayer::sample(n, ranges.passive_scale, rng))
        };
        let passive_in = layer(rng);
        let passive_out = layer(rng);
        Self { squeeze, displacement, passive_in, passive_out }
    }

    pub fn num_modes(&self) -> usize {
        self.squeeze.len()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.squeeze.len() != n || self.displacement.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.squeeze.len() });
        }
        for layer in [&self.passive_in, &self.passive_out].into_iter().flatten() {
            if layer.h.len() != n * n {
                return Err(Error::DimensionMismatch { expected: n * n, found: layer.h.len() });
            }
            let h = layer.generator();
            let herm = crate::fock::hermiticity_error(h.as_ref());
            if herm > 1e-12 {
                return Err(Error::NotHermitian(herm));
            }
        }
        if self.squeeze.iter().chain(&self.displacement).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite circuit parameter".into()));
        }
        Ok(())
    }

    /// Apply the circuit to a vector on `reg` without renormalizing; the
    /// norm deficit is the truncation leakage.
    pub fn apply_raw(&self, reg: &ModeRegister, psi: &[C64]) -> Result<Vec<C64>> {
        self.validate(reg.num_modes())?;
        let mut v = psi.to_vec();
        if let Some(layer) = &self.passive_in {
            v = mat_vec(&passive_fock_matrix(&layer.mode_unitary()?, reg)?, &v);
        }
        for m in 0..reg.num_modes() {
            let op = squeeze_displace(reg.cutoff(), cx(self.squeeze[m]), cx(self.displacement[m]))?;
            v = apply_local(op.as_ref(), m, reg, &v);
        }
        if let Some(layer) = &self.passive_out {
            v = mat_vec(&passive_fock_matrix(&layer.mode_unitary()?, reg)?, &v);
        }
        Ok(v)
    }

    /// Apply the circuit and renormalize, rejecting leakage above `tol`.
    pub fn apply(&self, reg: &ModeRegister, psi: &[C64], tol: f64) -> Result<Vec<C64>> {
        let v = self.apply_raw(reg, psi)?;
        let norm = norm_sqr(&v);
        let leakage = (norm_sqr(psi) - norm).abs();
        if leakage > tol {
            return Err(Error::Leakage { leakage, tolerance: tol });
        }
        let s = 1.0 / norm.sqrt();
        Ok(v.into_iter().map(|z| z * s).collect())
    }
}

fn mat_vec(m: &Mat<C64>, v: &[C64]) -> Vec<C64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

fn padded_exp(d: usize, generator: impl Fn(&Mat<C64>) -> Mat<C64>) -> Result<Mat<C64>> {
    let a = ladder_mat(d + EXP_PAD);
    expm_hermitian(generator(&a).as_ref())
}

fn top_block(m: &Mat<C64>, d: usize) -> Mat<C64> {
    Mat::from_fn(d, d, |i, j| m[(i, j)])
}

/// `S(ξ) D(α)` on one mode, computed on a padded space and truncated.
pub fn squeeze_displace(d: usize, xi: C64, alpha: C64) -> Result<Mat<C64>> {
    let s = squeeze_padded(d, xi)?;
    let dd = displace_padded(d, alpha)?;
    Ok(top_block(&(&s * &dd), d))
}

fn squeeze_padded(d: usize, xi: C64) -> Result<Mat<C64>> {
    // exp((ξ* a² - ξ a†²)/2) = exp(-i H) with H = i (ξ* a² - ξ a†²)/2.
    padded_exp(d, |a| {
        let a2 = a * a;
        let n = a.nrows();
        Mat::from_fn(n, n, |i, j| c(0.0, 0.5) * (xi.conj() * a2[(i, j)] - xi * a2[(j, i)].conj()))
    })
}

fn displace_padded(d: usize, alpha: C64) -> Result<Mat<C64>> {
    // exp(α a† - α* a) = exp(-i H) with H = i (α a† - α* a).
    padded_exp(d, |a| {
        let n = a.nrows();
        Mat::from_fn(n, n, |i, j| c(0.0, 1.0) * (alpha * a[(j, i)].conj() - alpha.conj() * a[(i, j)]))
    })
}

pub fn squeeze_op(d: usize, xi: C64) -> Result<ComplexOperator> {
    ComplexOperator::from_mat(top_block(&squeeze_padded(d, xi)?, d))
}

pub fn displace_op(d: usize, alpha: C64) -> Result<ComplexOperator> {
    ComplexOperator::from_mat(top_block(&displace_padded(d, alpha)?, d))
}

/// Matrix of the circuit on `reg`, one basis column at a time.
pub fn gaussian_unitary(spec: &GaussianCircuitSpec, reg: &ModeRegister) -> Result<ComplexOperator> {
    let dim = reg.total_dim();
    let mut out = Mat::<C64>::zeros(dim, dim);
    let mut e = vec![c(0.0, 0.0); dim];
    for j in 0..dim {
        e[j] = c(1.0, 0.0);
        let col = spec.apply_raw(reg, &e)?;
        e[j] = c(0.0, 0.0);
        for (i, z) in col.into_iter().enumerate() {
            out[(i, j)] = z;
        }
    }
    ComplexOperator::from_mat(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub eta: Vec<f64>,
}

impl LossSpec {
    pub fn uniform(n: usize, eta: f64) -> Self {
        Self { eta: vec![eta; n] }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.eta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.eta.len() });
        }
        if let Some(e) = self.eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::InvalidParameter(format!("efficiency {e} outside [0, 1]")));
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Kraus operators `A_k |n⟩ = sqrt(C(n,k) η^(n-k) (1-η)^k) |n-k⟩`, `k = 0..d-1`.
pub fn loss_kraus(d: usize, eta: f64) -> Vec<Mat<C64>> {
    (0..d)
        .map(|k| {
            Mat::from_fn(d, d, |i, j| {
                if j >= k && i == j - k {
                    c((binomial(j, k) * eta.powi((j - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt(), 0.0)
                } else {
                    c(0.0, 0.0)
                }
            })
        })
        .collect()
}

pub fn apply_loss(rho: &DensityMatrix, spec: &LossSpec) -> Result<DensityMatrix> {
    let reg = *rho.register();
    spec.validate(reg.num_modes())?;
    let dim = reg.total_dim();
    let mut cur = rho.mat().to_owned();
    let mut pure = rho.is_pure_hint();
    for (m, &eta) in spec.eta.iter().enumerate() {
        if eta == 1.0 {
            continue;
        }
        pure = false;
        let (d, stride) = (reg.cutoff(), reg.stride(m));
        // amp[k][n] = <n| K_k |n + k>
        let amp: Vec<Vec<f64>> = (0..d)
            .map(|k| {
                (0..d - k)
                    .map(|n| (binomial(n + k, k) * eta.powi(n as i32) * (1.0 - eta).powi(k as i32)).sqrt())
                    .collect()
            })
            .collect();
        let occ: Vec<usize> = (0..dim).map(|i| (i / stride) % d).collect();
        let next = Mat::<C64>::from_fn(dim, dim, |i, j| {
            let (ni, nj) = (occ[i], occ[j]);
            (0..d - ni.max(nj)).map(|k| cur[(i + k * stride, j + k * stride)] * (amp[k][ni] * amp[k][nj])).sum()
        });
        cur = next;
    }
    DensityMatrix::renormalized(reg, cur, pure)
}

/// Sampling and filtering knobs for structured states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationOptions {
    pub ranges: GaussianRanges,
    /// Stellar ranks to draw from uniformly, once per state.
    pub stellar_ranks: Vec<u8>,
    pub ppt_filter: bool,
    pub max_resamples: usize,
    pub leakage_tol: f64,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        Self {
            ranges: GaussianRanges::default(),
            stellar_ranks: vec![2],
            ppt_filter: true,
            max_resamples: DEFAULT_MAX_RESAMPLES,
            leakage_tol: DEFAULT_LEAKAGE_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub modes: Vec<usize>,
    pub core: CoreState,
    pub circuit: GaussianCircuitSpec,
}

/// Explicit description of a structured state; [`StructuredStateSpec::build`]
/// recreates it without drawing random numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredStateSpec {
    pub num_modes: usize,
    pub cutoff: usize,
    pub structure: Partition,
    pub blocks: Vec<BlockSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossSpec>,
    pub seed: u64,
    pub index: u64,
    /// Draws rejected before this one (leakage, PPT filter).
    pub rejected_leakage: usize,
    pub rejected_ppt: usize,
}

impl StructuredStateSpec {
    pub fn register(&self) -> Result<ModeRegister> {
        ModeRegister::new(self.num_modes, self.cutoff)
    }

    /// The pure state before any loss.
    pub fn build_pure(&self, leakage_tol: f64) -> Result<DensityMatrix> {
        let reg = self.register()?;
        let vecs: Vec<Vec<C64>> = self.blocks.iter().map(|b| block_vector(b, reg.cutoff(), leakage_tol)).collect::<Result<_>>()?;
        let parts: Vec<(&[usize], &[C64])> =
            self.blocks.iter().zip(&vecs).map(|(b, v)| (b.modes.as_slice(), v.as_slice())).collect();
        DensityMatrix::from_pure(reg, &tensor_vectors(&reg, &parts))
    }

    pub fn build(&self, leakage_tol: f64) -> Result<DensityMatrix> {
        let pure = self.build_pure(leakage_tol)?;
        match &self.loss {
            Some(l) => apply_loss(&pure, l),
            None => Ok(pure),
        }
    }

    pub fn with_loss(&self, loss: Option<LossSpec>) -> Self {
        Self { loss, ..self.clone() }
    }
}

fn block_vector(b: &BlockSpec, d: usize, tol: f64) -> Result<Vec<C64>> {
    let reg = ModeRegister::new(b.modes.len(), d)?;
    let core = b.core.vector(&reg)?;
    b.circuit.apply(&reg, &core, tol)
}

/// Draw a structured pure state (plus the recorded spec) for `(seed, index)`.
///
/// Each block gets its own core state and circuit. Draws with leakage above
/// the tolerance, or whose blocks fail the PPT filter, are redrawn from the
/// same stream. Loss, if any, is applied after filtering.
pub fn sample_structured_state(
    reg: &ModeRegister,
    structure: &Partition,
    opts: &GenerationOptions,
    loss: Option<&LossSpec>,
    seed: u64,
    index: u64,
) -> Result<(StructuredStateSpec, DensityMatrix)> {
    if structure.num_modes() != reg.num_modes() {
        return Err(Error::InvalidPartition(format!("{structure} does not cover {} modes", reg.num_modes())));
    }
    if opts.stellar_ranks.is_empty() {
        return Err(Error::InvalidParameter("no stellar ranks to draw from".into()));
    }
    if let Some(l) = loss {
        l.validate(reg.num_modes())?;
    }
    let mut rng = state_rng(seed, index);
    let (mut rejected_leakage, mut rejected_ppt) = (0, 0);
    for _ in 0..opts.max_resamples.max(1) {
        let rank = opts.stellar_ranks[rng.random_range(0..opts.stellar_ranks.len())];
        let mut blocks = Vec::with_capacity(structure.num_blocks());
        let mut vecs = Vec::with_capacity(structure.num_blocks());
        let mut failure = None;
        for modes in structure.blocks() {
            let breg = ModeRegister::new(modes.len(), reg.cutoff())?;
            let core = CoreState::sample(&breg, rank, &mut rng)?;
            let circuit = GaussianCircuitSpec::sample(modes.len(), &opts.ranges, &mut rng);
            let block = BlockSpec { modes: modes.clone(), core, circuit };
            match block_vector(&block, reg.cutoff(), opts.leakage_tol) {
                Ok(v) => {
                    if opts.ppt_filter && modes.len() >= 2 {
                        let state = DensityMatrix::from_pure(breg, &v)?;
                        let whole = Partition::new(modes.len(), vec![(0..modes.len()).collect()])?;
                        if !ppt_filter(&state, &whole)? {
                            failure = Some(false);
                        }
                    }
                    vecs.push(v);
                    blocks.push(block);
                }
                Err(Error::Leakage { .. }) => failure = Some(true),
                Err(e) => return Err(e),
            }
            if failure.is_some() {
                break;
            }
        }
        match failure {
            Some(true) => rejected_leakage += 1,
            Some(false) => rejected_ppt += 1,
            None => {
                let spec = StructuredStateSpec {
                    num_modes: reg.num_modes(),
                    cutoff: reg.cutoff(),
                    structure: structure.clone(),
                    blocks,
                    loss: loss.cloned(),
                    seed,
                    index,
                    rejected_leakage,
                    rejected_ppt,
                };
                let parts: Vec<(&[usize], &[C64])> =
                    spec.blocks.iter().zip(&vecs).map(|(b, v)| (b.modes.as_slice(), v.as_slice())).collect();
                let pure = DensityMatrix::from_pure(*reg, &tensor_vectors(reg, &parts))?;
                let state = match loss {
                    Some(l) => apply_loss(&pure, l)?,
                    None => pure,
                };
                return Ok((spec, state));
            }
        }
    }
    Err(Error::GenerationFailed {
        attempts: opts.max_resamples,
        reason: format!("{rejected_leakage} leakage and {rejected_ppt} PPT rejections"),
    })
}

/// Structured state for `seed` (stream 0) with a fixed stellar rank.
pub fn random_structured_state(
    reg: &ModeRegister,
    structure: &Partition,
    rank: u8,
    loss: Option<&LossSpec>,
    seed: u64,
) -> Result<DensityMatrix> {
    let opts = GenerationOptions { stellar_ranks: vec![rank], ..GenerationOptions::default() };
    Ok(sample_structured_state(reg, structure, &opts, loss, seed, 0)?.1)
}

pub const SPDC_MAX_CHI: f64 = 0.04;
/// Population allowed on the top retained level of any mode.
const SPDC_EDGE_TOL: f64 = 1e-6;

/// Couplings of `H = χ₁ a b² + χ₂ b c² + χ₃ c a² + h.c.` (modes 0, 1, 2), with
/// the interaction time absorbed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpdcSpec {
    pub chi: [f64; 3],
}

impl SpdcSpec {
    pub fn sample<R: Rng + ?Sized>(max_chi: f64, rng: &mut R) -> Self {
        Self { chi: [0, 1, 2].map(|_| rng.random::<f64>() * max_chi) }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(x) = self.chi.iter().find(|x| !(0.0..=SPDC_MAX_CHI).contains(*x)) {
            return Err(Error::InvalidParameter(format!("coupling {x} outside [0, {SPDC_MAX_CHI}]")));
        }
        Ok(())
    }
}

pub fn spdc_hamiltonian(spec: &SpdcSpec, reg: &ModeRegister) -> Result<ComplexOperator> {
    if reg.num_modes() != 3 {
        return Err(Error::InvalidModeCount(reg.num_modes()));
    }
    let d = reg.cutoff();
    let a = ladder_mat(d);
    let emb = |m: usize| crate::fock::embed_local_mat(a.as_ref(), m, reg);
    let (a0, a1, a2) = (emb(0), emb(1), emb(2));
    let terms = [(spec.chi[0], &a0 * &a1 * &a1), (spec.chi[1], &a1 * &a2 * &a2), (spec.chi[2], &a2 * &a0 * &a0)];
    let n = reg.total_dim();
    let t = Mat::from_fn(n, n, |i, j| terms.iter().map(|(k, m)| m[(i, j)] * *k).sum::<C64>());
    let h = &t + t.adjoint();
    let op = ComplexOperator::from_mat(h)?;
    op.ensure_hermitian(1e-12)?;
    Ok(op)
}

/// `exp(-i H)|000⟩`.
pub fn spdc_state(spec: &SpdcSpec, reg: &ModeRegister) -> Result<DensityMatrix> {
    spec.validate()?;
    let h = spdc_hamiltonian(spec, reg)?;
    let (vals, vecs) = eigh(h.mat())?;
    let n = reg.total_dim();
    // ψ = V e^{-iΛ} V† e_0
    let psi: Vec<C64> = (0..n)
        .map(|i| (0..n).map(|k| vecs[(i, k)] * C64::from_polar(1.0, -vals[k]) * vecs[(0, k)].conj()).sum())
        .collect();
    let d = reg.cutoff();
    let edge: f64 = (0..n).filter(|&i| reg.occupation(i).contains(&(d - 1))).map(|i| psi[i].norm_sqr()).sum();
    if edge > SPDC_EDGE_TOL {
        return Err(Error::Leakage { leakage: edge, tolerance: SPDC_EDGE_TOL });
    }
    DensityMatrix::from_pure(*reg, &psi)
}

/// Two-mode squeezed vacuum with squeezing `r` (used as an entangled probe).
pub fn two_mode_squeezed_vacuum(reg: &ModeRegister, r: f64) -> Result<DensityMatrix> {
    if reg.num_modes() != 2 {
        return Err(Error::InvalidModeCount(reg.num_modes()));
    }
    let t = r.tanh();
    let mut psi = vec![c(0.0, 0.0); reg.total_dim()];
    for n in 0..reg.cutoff() {
        psi[reg.index_of(&[n, n]).unwrap()] = c(t.powi(n as i32), 0.0);
    }
    DensityMatrix::from_pure(*reg, &psi)
}
