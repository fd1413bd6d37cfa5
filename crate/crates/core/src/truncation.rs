//! Finite-section matrix oracle.
//!
//! Dense matrices of `T_1..T_m` on `span{e_n : |n| <= N}` with hard truncation
//! (images above degree `N` are dropped). Commutators and `Q_T^k` are formed by
//! plain matrix arithmetic and compared column by column with the closed forms
//! of [`crate::shift`] on interior columns only.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::multiindex::{enumerate_level, MultiIndex};
use crate::numeric::binomial_f64;
use crate::scalarseq::{registry, ScalarSequence};
use crate::shift::SphericalShift;

/// Off-diagonal tolerance for the `C^*C` diagonality assertion.
pub const GRAM_TOLERANCE: f64 = 1e-10;

/// Orthonormal basis `{e_n : |n| <= N}`, levels concatenated.
#[derive(Clone, Debug)]
pub struct Basis {
    m: usize,
    n_max: usize,
    indices: Vec<MultiIndex>,
    offsets: Vec<usize>,
}

impl Basis {
    pub fn new(m: usize, n_max: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyArity);
        }
        let mut indices = Vec::new();
        let mut offsets = Vec::with_capacity(n_max + 2);
        for k in 0..=n_max {
            offsets.push(indices.len());
            indices.extend(enumerate_level(m, k)?.iter().cloned());
        }
        offsets.push(indices.len());
        Ok(Self {
            m,
            n_max,
            indices,
            offsets,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn at(&self, row: usize) -> &MultiIndex {
        &self.indices[row]
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// Row of `e_n`, or `None` when `|n| > N`.
    pub fn position(&self, n: &MultiIndex) -> Option<usize> {
        let k = n.degree();
        if k > self.n_max || n.arity() != self.m {
            return None;
        }
        Some(self.offsets[k] + n.rank())
    }

    /// Rows of the levels `0..=k`.
    pub fn up_to_level(&self, k: usize) -> std::ops::Range<usize> {
        0..self.offsets[(k + 1).min(self.n_max + 1)]
    }
}

/// A square real matrix over a [`Basis`], row-major.
#[derive(Clone, PartialEq)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<f64>,
    provenance: String,
}

impl fmt::Debug for DenseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseOperator({}x{}, {})", self.dim, self.dim, self.provenance)
    }
}

impl DenseOperator {
    pub fn zeros(dim: usize, provenance: impl Into<String>) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
            provenance: provenance.into(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim, "I");
        for i in 0..dim {
            out.set(i, i, 1.0);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, p: impl Into<String>) -> Self {
        self.provenance = p.into();
        self
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.dim + col] = v;
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim, format!("({})*", self.provenance));
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[j * self.dim + i] = self.data[i * self.dim + j];
            }
        }
        out
    }

    /// `self * rhs`; rows of `self` are sparse for every operator built here.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.check(rhs)?;
        let n = self.dim;
        let mut out = Self::zeros(n, format!("{}{}", self.provenance, rhs.provenance));
        for i in 0..n {
            let row = &mut out.data[i * n..(i + 1) * n];
            for p in 0..n {
                let a = self.data[i * n + p];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in row.iter_mut().zip(&rhs.data[p * n..(p + 1) * n]) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self + factor * rhs`.
    pub fn add_scaled(&self, rhs: &Self, factor: f64) -> Result<Self> {
        self.check(rhs)?;
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(&rhs.data) {
            *o += factor * b;
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// The column `col` as a vector.
    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.dim).map(|r| self.get(r, col)).collect()
    }
}

/// `AB - BA`.
pub fn commutator(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    let ab = a.matmul(b)?;
    let ba = b.matmul(a)?;
    Ok(ab
        .add_scaled(&ba, -1.0)?
        .with_provenance(format!("[{}, {}]", a.provenance, b.provenance)))
}

/// Matrix of `T_axis` on the basis, with level-`N` columns mapped to zero.
pub fn build_shift_matrix(shift: &SphericalShift, axis: usize, basis: &Basis) -> Result<DenseOperator> {
    if shift.m() != basis.m() {
        return Err(Error::DimensionMismatch {
            left: shift.m(),
            right: basis.m(),
        });
    }
    if axis >= shift.m() {
        return Err(Error::AxisOutOfRange { axis, m: shift.m() });
    }
    let mut out = DenseOperator::zeros(basis.dim(), format!("T{}", axis + 1));
    for (col, n) in basis.indices().iter().enumerate() {
        if let Some(row) = basis.position(&n.add_unit(axis)?) {
            out.set(row, col, shift.weight(axis, n)?);
        }
    }
    Ok(out)
}

/// The truncated tuple together with the adjoints.
#[derive(Clone, Debug)]
pub struct TruncatedTuple {
    pub basis: Basis,
    pub ops: Vec<DenseOperator>,
    pub adjoints: Vec<DenseOperator>,
}

impl TruncatedTuple {
    pub fn new(shift: &SphericalShift, n_max: usize) -> Result<Self> {
        let basis = Basis::new(shift.m(), n_max)?;
        let ops = (0..shift.m())
            .map(|j| build_shift_matrix(shift, j, &basis))
            .collect::<Result<Vec<_>>>()?;
        let adjoints = ops.iter().map(DenseOperator::adjoint).collect();
        Ok(Self { basis, ops, adjoints })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `[T_j^*, T_l]`.
    pub fn star_commutator(&self, j: usize, l: usize) -> Result<DenseOperator> {
        commutator(&self.adjoints[j], &self.ops[l])
    }

    /// `T^alpha = T_1^{alpha_1} ... T_m^{alpha_m}`.
    pub fn power(&self, alpha: &MultiIndex) -> Result<DenseOperator> {
        let mut out = DenseOperator::identity(self.dim());
        for (j, &a) in alpha.components().iter().enumerate() {
            for _ in 0..a {
                out = self.ops[j].matmul(&out)?;
            }
        }
        Ok(out)
    }

    /// `Q_T^k(I) = sum_{|alpha| = k} (k!/alpha!) (T^alpha)^* T^alpha`.
    pub fn q_power_bruteforce(&self, k: usize) -> Result<DenseOperator> {
        let mut out = DenseOperator::zeros(self.dim(), format!("Q^{k}"));
        if k == 0 {
            return Ok(DenseOperator::identity(self.dim()).with_provenance("Q^0"));
        }
        for alpha in enumerate_level(self.basis.m(), k)?.iter() {
            let p = self.power(alpha)?;
            let term = p.adjoint().matmul(&p)?;
            let weight = crate::numeric::to_f64(&num::BigRational::from_integer(alpha.multinomial()));
            out = out.add_scaled(&term, weight)?;
        }
        Ok(out.with_provenance(format!("Q^{k}")))
    }

    /// `Q_T^k(I)` by the recursion `Q^k = sum_j T_j^* Q^{k-1} T_j`.
    pub fn q_power_inductive(&self, k: usize) -> Result<DenseOperator> {
        let mut q = DenseOperator::identity(self.dim());
        for _ in 0..k {
            let mut next = DenseOperator::zeros(self.dim(), "");
            for j in 0..self.basis.m() {
                let term = self.adjoints[j].matmul(&q.matmul(&self.ops[j])?)?;
                next = next.add_scaled(&term, 1.0)?;
            }
            q = next;
        }
        Ok(q.with_provenance(format!("Q^{k} (recursive)")))
    }

    /// `B_q(Q_T) = sum_s (-1)^s binom(q,s) Q_T^s(I)`.
    pub fn bq_bruteforce(&self, q: usize) -> Result<DenseOperator> {
        let mut out = DenseOperator::zeros(self.dim(), "");
        for s in 0..=q {
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            out = out.add_scaled(&self.q_power_bruteforce(s)?, sign * binomial_f64(q as u64, s as u64))?;
        }
        Ok(out.with_provenance(format!("B_{q}")))
    }
}

/// Which closed form a truncated matrix is compared against. Axes are 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleKind {
    SelfComm { j: usize },
    CrossComm { j: usize, l: usize },
    /// `[T_j, T_l] = 0`.
    Commute { j: usize, l: usize },
    QPower { k: usize },
    QPowerRecursive { k: usize },
    Bq { q: usize },
}

impl OracleKind {
    /// Smallest interior margin at which truncation cannot reach a compared column.
    pub fn required_margin(self) -> usize {
        match self {
            OracleKind::SelfComm { .. } | OracleKind::CrossComm { .. } => 1,
            OracleKind::Commute { .. } => 2,
            OracleKind::QPower { k } | OracleKind::QPowerRecursive { k } => k,
            OracleKind::Bq { q } => q,
        }
    }

    pub fn label(self) -> String {
        match self {
            OracleKind::SelfComm { j } => format!("self_comm(j={})", j + 1),
            OracleKind::CrossComm { j, l } => format!("cross_comm(j={},l={})", j + 1, l + 1),
            OracleKind::Commute { j, l } => format!("commute(j={},l={})", j + 1, l + 1),
            OracleKind::QPower { k } => format!("q_power(k={k})"),
            OracleKind::QPowerRecursive { k } => format!("q_power_recursive(k={k})"),
            OracleKind::Bq { q } => format!("bq(q={q})"),
        }
    }

    fn matrix(self, t: &TruncatedTuple) -> Result<DenseOperator> {
        match self {
            OracleKind::SelfComm { j } => t.star_commutator(j, j),
            OracleKind::CrossComm { j, l } => t.star_commutator(j, l),
            OracleKind::Commute { j, l } => commutator(&t.ops[j], &t.ops[l]),
            OracleKind::QPower { k } => t.q_power_bruteforce(k),
            OracleKind::QPowerRecursive { k } => t.q_power_inductive(k),
            OracleKind::Bq { q } => t.bq_bruteforce(q),
        }
    }

    /// Closed-form image of `e_n` as `(row, value)` pairs.
    fn expected_column(self, shift: &SphericalShift, basis: &Basis, n: &MultiIndex) -> Result<Vec<(usize, f64)>> {
        let own = basis.position(n).expect("column inside the basis");
        let k = n.degree();
        Ok(match self {
            OracleKind::SelfComm { j } => vec![(own, shift.self_comm_coeff(j, n)?)],
            OracleKind::CrossComm { j, l } => match shift.cross_comm_coeff(j, l, n)? {
                Some(e) => vec![(basis.position(&e.target).expect("target below the column"), e.coefficient)],
                None => vec![],
            },
            OracleKind::Commute { .. } => vec![],
            OracleKind::QPower { k: s } | OracleKind::QPowerRecursive { k: s } => vec![(own, shift.q_diag(k, s)?)],
            OracleKind::Bq { q } => vec![(own, shift.bq_diag(k, q)?)],
        })
    }
}

/// Outcome of one oracle comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub kind: OracleKind,
    pub label: String,
    pub margin: usize,
    pub columns: usize,
    pub max_deviation: f64,
}

/// Max over interior columns `|n| <= N - margin` of the entrywise deviation
/// between the truncated matrix and its closed form.
pub fn compare_with_closed_form(
    shift: &SphericalShift,
    tuple: &TruncatedTuple,
    kind: OracleKind,
    margin: usize,
) -> Result<Comparison> {
    let required = kind.required_margin();
    if margin < required {
        return Err(Error::MarginTooSmall {
            kind: kind.label(),
            given: margin,
            required,
        });
    }
    let check_axis = |a: usize| {
        if a >= shift.m() {
            Err(Error::AxisOutOfRange { axis: a, m: shift.m() })
        } else {
            Ok(())
        }
    };
    match kind {
        OracleKind::SelfComm { j } => check_axis(j)?,
        OracleKind::CrossComm { j, l } | OracleKind::Commute { j, l } => {
            check_axis(j)?;
            check_axis(l)?;
            if j == l {
                return Err(Error::InvalidParameter("distinct axes required".into()));
            }
        }
        _ => {}
    }
    let basis = &tuple.basis;
    let matrix = kind.matrix(tuple)?;
    let mut worst = 0.0f64;
    let mut columns = 0;
    if basis.n_max() >= margin {
        for col in basis.up_to_level(basis.n_max() - margin) {
            let mut column = matrix.column(col);
            for (row, v) in kind.expected_column(shift, basis, basis.at(col))? {
                column[row] -= v;
            }
            worst = column.iter().fold(worst, |acc, v| acc.max(v.abs()));
            columns += 1;
        }
    }
    Ok(Comparison {
        kind,
        label: kind.label(),
        margin,
        columns,
        max_deviation: worst,
    })
}

/// `sqrt` of the diagonal of `C^*C`, one entry per column, after asserting the
/// off-diagonal part vanishes (each basis vector maps to a multiple of its own
/// basis vector, and distinct columns hit distinct rows).
pub fn gram_diagonal(c: &DenseOperator) -> Result<Vec<f64>> {
    let gram = c.adjoint().matmul(c)?;
    let n = c.dim();
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..n {
            let v = gram.get(i, j);
            if i != j && v.abs() > GRAM_TOLERANCE {
                return Err(Error::NotShiftStructured { row: i, col: j, value: v });
            }
        }
        diag.push(gram.get(i, i).max(0.0).sqrt());
    }
    Ok(diag)
}

/// Singular values of `C` (largest first), read off the diagonal of `C^*C`.
pub fn gram_diagonal_singular_values(c: &DenseOperator) -> Result<Vec<f64>> {
    let mut sv = gram_diagonal(c)?;
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// One line of the oracle suite report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRecord {
    pub family: String,
    pub m: usize,
    #[serde(rename = "N")]
    pub n_max: usize,
    pub kind: String,
    pub margin: usize,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Settings for [`verify_suite`].
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub arities: Vec<usize>,
    pub n_max: usize,
    pub max_power: usize,
    pub max_order: usize,
    pub tolerance: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            arities: vec![2, 3],
            n_max: 10,
            max_power: 3,
            max_order: 3,
            tolerance: 1e-10,
        }
    }
}

/// Every oracle kind for an m-tuple up to the given power/order.
pub fn oracle_kinds(m: usize, max_power: usize, max_order: usize) -> Vec<OracleKind> {
    let mut kinds = Vec::new();
    for j in 0..m {
        kinds.push(OracleKind::SelfComm { j });
    }
    for j in 0..m {
        for l in 0..m {
            if j != l {
                kinds.push(OracleKind::CrossComm { j, l });
                if j < l {
                    kinds.push(OracleKind::Commute { j, l });
                }
            }
        }
    }
    for k in 0..=max_power {
        kinds.push(OracleKind::QPower { k });
        kinds.push(OracleKind::QPowerRecursive { k });
    }
    for q in 1..=max_order {
        kinds.push(OracleKind::Bq { q });
    }
    kinds
}

/// Runs every registered family through every oracle kind.
pub fn verify_suite(config: &SuiteConfig, exec: Exec) -> Result<Vec<OracleRecord>> {
    let mut jobs = Vec::new();
    for &m in &config.arities {
        for (name, spec) in registry(m as u32) {
            jobs.push((m, name, spec));
        }
    }
    let per_job = exec.map_slice(&jobs, |(m, name, spec)| -> Result<Vec<OracleRecord>> {
        let shift = SphericalShift::new(*m, ScalarSequence::new(spec.clone())?)?;
        verify_shift(&shift, name, config)
    });
    let mut out = Vec::new();
    for r in per_job {
        out.extend(r?);
    }
    Ok(out)
}

/// Oracle records for a single shift.
pub fn verify_shift(shift: &SphericalShift, name: &str, config: &SuiteConfig) -> Result<Vec<OracleRecord>> {
    let tuple = TruncatedTuple::new(shift, config.n_max)?;
    let mut out = Vec::new();
    for kind in oracle_kinds(shift.m(), config.max_power, config.max_order) {
        let margin = kind.required_margin();
        let c = compare_with_closed_form(shift, &tuple, kind, margin)?;
        out.push(OracleRecord {
            family: name.to_string(),
            m: shift.m(),
            n_max: config.n_max,
            kind: c.label,
            margin,
            max_deviation: c.max_deviation,
            pass: c.max_deviation <= config.tolerance,
        });
    }
    Ok(out)
}
