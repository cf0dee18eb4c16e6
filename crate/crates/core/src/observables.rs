//! Local quadrature-moment ladders and the encoding operators built from them.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{embed_local_mat, quadrature_mats, ComplexOperator, ModeRegister, C64};

/// Labels of the cumulative per-mode ladder; the order-k set is the prefix
/// of length `ladder_len(k)`.
pub const LADDER_LABELS: [&str; 14] =
    ["x", "p", "x2", "p2", "sym_xp", "x3", "p3", "sym_xpp", "sym_pxx", "x4", "p4", "sym_x3p", "sym_xp3", "sym_x2p2"];

/// Extra Fock levels used when forming monomials, so that each truncated
/// monomial is the exact restriction of the untruncated one.
const MONOMIAL_PAD: usize = 4;

pub fn ladder_len(order: u8) -> Result<usize> {
    match order {
        1 => Ok(2),
        2 => Ok(5),
        3 => Ok(9),
        4 => Ok(14),
        _ => Err(Error::UnsupportedOrder(order)),
    }
}

/// One Hermitian single-mode observable placed on a mode.
#[derive(Clone, Debug)]
pub struct LocalObservable {
    pub label: &'static str,
    pub mode: usize,
    pub matrix: Mat<C64>,
}

/// The sets `S_j` for every mode, flattened mode-major.
///
/// Operators are stored as `d×d` single-mode matrices; [`ObservableSet::global`]
/// embeds one on demand.
#[derive(Clone, Debug)]
pub struct ObservableSet {
    reg: ModeRegister,
    order: u8,
    items: Vec<LocalObservable>,
}

/// Real coefficients over the flattened observable index space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub order: u8,
    pub num_modes: usize,
    pub values: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(set: &ObservableSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != set.len() {
            return Err(Error::DimensionMismatch { expected: set.len(), found: values.len() });
        }
        Ok(Self { order: set.order(), num_modes: set.register().num_modes(), values })
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        let values = if n > 0.0 { self.values.iter().map(|v| v / n).collect() } else { self.values.clone() };
        Self { values, ..self.clone() }
    }
}

fn single_mode_ladder(d: usize, order: u8) -> Result<Vec<Mat<C64>>> {
    let len = ladder_len(order)?;
    let dp = d + MONOMIAL_PAD;
    let (x, p) = quadrature_mats(dp);
    let mul = |a: &Mat<C64>, b: &Mat<C64>| a * b;
    let sym = |a: &Mat<C64>, b: &Mat<C64>| {
        let ab = a * b;
        let ba = b * a;
        Mat::from_fn(dp, dp, |i, j| (ab[(i, j)] + ba[(i, j)]) * 0.5)
    };
    let x2 = mul(&x, &x);
    let p2 = mul(&p, &p);
    let mut full: Vec<Mat<C64>> = vec![x.clone(), p.clone(), x2.clone(), p2.clone(), sym(&x, &p)];
    if len > 5 {
        full.push(mul(&x2, &x));
        full.push(mul(&p2, &p));
        full.push(sym(&x, &p2));
        full.push(sym(&p, &x2));
    }
    if len > 9 {
        let x3 = mul(&x2, &x);
        let p3 = mul(&p2, &p);
        full.push(mul(&x2, &x2));
        full.push(mul(&p2, &p2));
        full.push(sym(&x3, &p));
        full.push(sym(&x, &p3));
        full.push(sym(&x2, &p2));
    }
    Ok(full.into_iter().take(len).map(|m| Mat::from_fn(d, d, |i, j| m[(i, j)])).collect())
}

fn axpy(acc: &mut Mat<C64>, w: f64, m: &Mat<C64>) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc[(i, j)] += m[(i, j)] * w;
        }
    }
}

pub fn build_observable_set(reg: &ModeRegister, order: u8) -> Result<ObservableSet> {
    let ladder = single_mode_ladder(reg.cutoff(), order)?;
    let items = (0..reg.num_modes())
        .flat_map(|mode| {
            ladder.iter().zip(LADDER_LABELS).map(move |(m, label)| LocalObservable { label, mode, matrix: m.clone() })
        })
        .collect();
    Ok(ObservableSet { reg: *reg, order, items })
}

impl ObservableSet {
    pub fn register(&self) -> &ModeRegister {
        &self.reg
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn per_mode_len(&self) -> usize {
        self.items.len() / self.reg.num_modes()
    }

    pub fn items(&self) -> &[LocalObservable] {
        &self.items
    }

    pub fn per_mode(&self, mode: usize) -> &[LocalObservable] {
        let k = self.per_mode_len();
        &self.items[mode * k..(mode + 1) * k]
    }

    pub fn labels(&self) -> Vec<String> {
        self.items.iter().map(|o| format!("{}:{}", o.mode, o.label)).collect()
    }

    pub fn index_of(&self, mode: usize, label: &str) -> Option<usize> {
        self.items.iter().position(|o| o.mode == mode && o.label == label)
    }

    /// Global `d^N × d^N` form of observable `idx`.
    pub fn global(&self, idx: usize) -> ComplexOperator {
        let o = &self.items[idx];
        ComplexOperator::from_mat(embed_local_mat(o.matrix.as_ref(), o.mode, &self.reg)).expect("square by construction")
    }

    /// Map coefficients of a lower-order set on the same register into this
    /// set's index space (new observables get zero weight).
    pub fn lift_coefficients(&self, from: &ObservableSet, values: &[f64]) -> Result<Vec<f64>> {
        if from.reg != self.reg || from.order > self.order {
            return Err(Error::InvalidParameter("can only lift into a higher-order set on the same register".into()));
        }
        if values.len() != from.len() {
            return Err(Error::DimensionMismatch { expected: from.len(), found: values.len() });
        }
        let (k_from, k_to) = (from.per_mode_len(), self.per_mode_len());
        let mut out = vec![0.0; self.len()];
        for (i, v) in values.iter().enumerate() {
            out[(i / k_from) * k_to + i % k_from] = *v;
        }
        Ok(out)
    }

    /// `A(c) = sum_j sum_m c_j^(m) S_j^(m)` as a global operator.
    pub fn assemble_generator(&self, c: &CoefficientVector) -> Result<ComplexOperator> {
        if c.values.len() != self.len() || c.num_modes != self.reg.num_modes() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: c.values.len() });
        }
        let mut total = Mat::<C64>::zeros(self.reg.total_dim(), self.reg.total_dim());
        for mode in 0..self.reg.num_modes() {
            let local = self.local_generator(&c.values, mode);
            total = &total + &embed_local_mat(local.as_ref(), mode, &self.reg);
        }
        ComplexOperator::from_mat(total)
    }

    /// The local part `A_j = c_j · S_j` on mode `mode`, as a `d×d` matrix.
    pub(crate) fn local_generator(&self, values: &[f64], mode: usize) -> Mat<C64> {
        let d = self.reg.cutoff();
        let k = self.per_mode_len();
        let mut local = Mat::<C64>::zeros(d, d);
        for (o, w) in self.per_mode(mode).iter().zip(&values[mode * k..(mode + 1) * k]) {
            if *w != 0.0 {
                axpy(&mut local, *w, &o.matrix);
            }
        }
        local
    }
}
