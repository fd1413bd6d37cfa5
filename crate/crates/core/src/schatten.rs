//! Schatten-class membership of the commutators `[T_j^*, T_l]`.
//!
//! The cross-commutators lie in `S_p` exactly when both
//! `sum_k (delta^2_k)^p k^{m-p-1}` and `sum_k |delta^2_k - delta^2_{k-1}|^p k^{m-1}`
//! converge. Families with declared asymptotics are decided from the exponents;
//! everything else gets a log-log tail fit with an indeterminacy band.

use serde::Serialize;

use crate::classify::{is_compact, is_essentially_normal};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::multiindex::enumerate_level;
use crate::numeric::{
    compensated_sum, compositions_f64, decade_checkpoints, loglog_slope, serialize_opt_real, serialize_real,
    CompensatedSum,
};
use crate::scalarseq::{registry, Asymptotics, ScalarSequence};
use crate::shift::SphericalShift;
use crate::truncation::{gram_diagonal, TruncatedTuple};
use crate::verdict::Basis;

/// Half-width of the band around exponent `-1` inside which a fit decides nothing.
pub const EXPONENT_MARGIN: f64 = 0.1;

/// Smallest horizon `decide` accepts.
pub const MIN_HORIZON: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Converges,
    Diverges,
    Inconclusive,
}

impl Convergence {
    /// Convergence of a sum of two non-negative series.
    pub fn both(a: Self, b: Self) -> Self {
        use Convergence::*;
        match (a, b) {
            (Diverges, _) | (_, Diverges) => Diverges,
            (Converges, Converges) => Converges,
            _ => Inconclusive,
        }
    }

    /// Verdict for a power-law tail `k^exponent`.
    pub fn from_exponent(exponent: f64) -> Self {
        if exponent < -1.0 {
            Convergence::Converges
        } else {
            Convergence::Diverges
        }
    }

    /// Verdict for a fitted exponent, with the indeterminacy band.
    pub fn from_fit(exponent: f64) -> Self {
        if exponent < -1.0 - EXPONENT_MARGIN {
            Convergence::Converges
        } else if exponent > -1.0 + EXPONENT_MARGIN {
            Convergence::Diverges
        } else {
            Convergence::Inconclusive
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartialSum {
    pub k: usize,
    #[serde(serialize_with = "serialize_real")]
    pub sum: f64,
}

/// One of the two criterion series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesReport {
    pub verdict: Convergence,
    /// Decay exponent of the terms; `None` for eventually-zero or sparse terms.
    #[serde(serialize_with = "serialize_opt_real")]
    pub tail_exponent: Option<f64>,
    pub partial_sums: Vec<PartialSum>,
}

/// `S_p` membership of the cross-commutators.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchattenVerdict {
    pub family: String,
    pub m: usize,
    #[serde(serialize_with = "serialize_real")]
    pub p: f64,
    pub horizon: usize,
    pub verdict: Convergence,
    pub basis: Basis,
    pub compact: Option<bool>,
    pub first_series: SeriesReport,
    pub second_series: SeriesReport,
    /// False only if a non-compact shift is reported in `S_p` with `p <= m`.
    pub cutoff_consistent: bool,
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("Schatten exponent must be >= 1, got {p}")));
    }
    Ok(())
}

/// `t1 = (delta^2_k)^p k^{m-p-1}` and `t2 = |delta^2_k - delta^2_{k-1}|^p k^{m-1}`.
pub fn criterion_terms(seq: &ScalarSequence, m: usize, p: f64, k: usize) -> Result<(f64, f64)> {
    check_p(p)?;
    if k == 0 {
        return Err(Error::InvalidParameter("criterion terms start at k = 1".into()));
    }
    if m == 0 {
        return Err(Error::EmptyArity);
    }
    Ok(terms_from(seq.delta2(k)?, seq.delta2_gap(k)?, m, p, k))
}

fn terms_from(d2: f64, gap: f64, m: usize, p: f64, k: usize) -> (f64, f64) {
    let kf = k as f64;
    let t1 = d2.powf(p) * kf.powf(m as f64 - p - 1.0);
    let t2 = if gap == 0.0 { 0.0 } else { gap.powf(p) * kf.powf(m as f64 - 1.0) };
    (t1, t2)
}

/// `delta^2_k` and `|delta^2_k - delta^2_{k-1}|` for `k = 0..=horizon`, shared by every exponent.
#[derive(Clone, Debug)]
pub struct CriterionTables {
    horizon: usize,
    delta2: Vec<f64>,
    gaps: Vec<f64>,
}

impl CriterionTables {
    /// Tables up to `horizon`, cut down to the evaluable range of the sequence.
    pub fn new(seq: &ScalarSequence, horizon: usize, exec: Exec) -> Result<Self> {
        let h = seq.clamp_horizon(horizon + 1) - 1;
        Ok(Self {
            horizon: h,
            delta2: seq.delta2_table(h + 1)?,
            gaps: seq.delta2_gap_table(h + 1, exec)?,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Both criterion series for `k = 1..=horizon`.
    pub fn series(&self, m: usize, p: f64, exec: Exec) -> (Vec<f64>, Vec<f64>) {
        exec.map_range(1..self.horizon + 1, |k| terms_from(self.delta2[k], self.gaps[k], m, p, k))
            .into_iter()
            .unzip()
    }
}

fn partial_sums(terms: &[f64], checkpoints: &[usize]) -> Vec<PartialSum> {
    let mut acc = CompensatedSum::new();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    for (i, t) in terms.iter().enumerate() {
        acc.add(*t);
        let k = i + 1;
        while next.peek() == Some(&&k) {
            out.push(PartialSum { k, sum: acc.value() });
            next.next();
        }
    }
    out
}

/// Log-log fit of the terms over `k in [K/2, K]`.
fn fitted(terms: &[f64]) -> (Convergence, Option<f64>) {
    let horizon = terms.len();
    let start = horizon / 2;
    let window: Vec<(f64, f64)> = (start.max(1)..=horizon).map(|k| (k as f64, terms[k - 1])).collect();
    let nonzero = window.iter().filter(|(_, t)| *t > 0.0).count();
    if nonzero == 0 {
        return (Convergence::Converges, None);
    }
    if 2 * nonzero < window.len() {
        return (Convergence::Inconclusive, None);
    }
    match loglog_slope(&window) {
        Some(e) => (Convergence::from_fit(e), Some(e)),
        None => (Convergence::Inconclusive, None),
    }
}

/// Exponent-based verdicts `(first, second)` from declared asymptotics.
fn analytic_series(asym: &Asymptotics, m: usize, p: f64) -> ((Convergence, Option<f64>), (Convergence, Option<f64>)) {
    let mf = m as f64;
    let decided = |e: f64| (Convergence::from_exponent(e), Some(e));
    match asym {
        Asymptotics::PowerLaw {
            limit, coeff, order, ..
        } => {
            let first = if *limit > 0.0 {
                mf - p - 1.0
            } else {
                mf - p - 1.0 - order * p
            };
            let second = if *coeff == 0.0 {
                (Convergence::Converges, None)
            } else {
                decided(mf - 1.0 - p * (order + 1.0))
            };
            (decided(first), second)
        }
        Asymptotics::DoubleExponentialJumps { .. } => {
            // the jump of size 2^-l at k ~ 2^(2^l) contributes 2^(-lp) k^(m-1)
            let second = if m >= 2 {
                (Convergence::Diverges, None)
            } else {
                (Convergence::Converges, None)
            };
            (decided(mf - p - 1.0), second)
        }
        Asymptotics::Periodic { .. } => (decided(mf - p - 1.0), decided(mf - 1.0)),
        Asymptotics::Unbounded => ((Convergence::Diverges, None), (Convergence::Diverges, None)),
    }
}

/// Decides whether the cross-commutators lie in `S_p`.
///
/// `p = infinity` is routed to the essential-normality test.
pub fn decide(seq: &ScalarSequence, m: usize, p: f64, horizon: usize, exec: Exec) -> Result<SchattenVerdict> {
    check_p(p)?;
    if m == 0 {
        return Err(Error::EmptyArity);
    }
    if horizon < MIN_HORIZON {
        return Err(Error::InvalidParameter(format!("horizon must be at least {MIN_HORIZON}")));
    }
    let compact = is_compact(seq, horizon)?.holds;
    if p.is_infinite() {
        let en = is_essentially_normal(seq, horizon, exec)?;
        let verdict = match en.holds {
            Some(true) => Convergence::Converges,
            Some(false) => Convergence::Diverges,
            None => Convergence::Inconclusive,
        };
        let empty = SeriesReport {
            verdict,
            tail_exponent: None,
            partial_sums: vec![],
        };
        return Ok(SchattenVerdict {
            family: seq.label(),
            m,
            p,
            horizon,
            verdict,
            basis: en.basis,
            compact,
            first_series: empty.clone(),
            second_series: empty,
            cutoff_consistent: true,
        });
    }
    let tables = CriterionTables::new(seq, horizon, exec)?;
    Ok(decide_with(seq, &tables, compact, m, p, exec))
}

/// [`decide`] for a finite exponent over precomputed tables.
fn decide_with(seq: &ScalarSequence, tables: &CriterionTables, compact: Option<bool>, m: usize, p: f64, exec: Exec) -> SchattenVerdict {
    let h = tables.horizon();
    let (first, second) = tables.series(m, p, exec);
    let checkpoints = decade_checkpoints(h);
    let (((v1, e1), (v2, e2)), basis) = match seq.asymptotics() {
        Some(a) => (analytic_series(&a, m, p), Basis::Analytic),
        None => ((fitted(&first), fitted(&second)), Basis::Sampled),
    };
    let verdict = Convergence::both(v1, v2);
    SchattenVerdict {
        family: seq.label(),
        m,
        p,
        horizon: h,
        verdict,
        basis,
        compact,
        first_series: SeriesReport {
            verdict: v1,
            tail_exponent: e1,
            partial_sums: partial_sums(&first, &checkpoints),
        },
        second_series: SeriesReport {
            verdict: v2,
            tail_exponent: e2,
            partial_sums: partial_sums(&second, &checkpoints),
        },
        cutoff_consistent: !(compact == Some(false) && verdict == Convergence::Converges && p <= m as f64),
    }
}

/// The fit-only verdict, ignoring declared asymptotics.
pub fn decide_sampled(seq: &ScalarSequence, m: usize, p: f64, horizon: usize, exec: Exec) -> Result<(Convergence, Convergence)> {
    check_p(p)?;
    let (first, second) = CriterionTables::new(seq, horizon, exec)?.series(m, p, exec);
    Ok((fitted(&first).0, fitted(&second).0))
}

/// Partial sum of the second series at `K = 2^(2^l) + 1`, against `2^(2^l) / 2^(lp)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpWitness {
    pub l: u32,
    pub k: usize,
    pub partial_sum: f64,
    pub bound: f64,
}

/// Growth of the second series across the jumps of a double-exponential family.
pub fn jump_witness(seq: &ScalarSequence, m: usize, p: f64, levels: std::ops::RangeInclusive<u32>, exec: Exec) -> Result<Vec<JumpWitness>> {
    check_p(p)?;
    if !matches!(seq.asymptotics(), Some(Asymptotics::DoubleExponentialJumps { .. })) {
        return Err(Error::InvalidParameter("jump witness needs a double-exponential family".into()));
    }
    if *levels.end() > 5 {
        return Err(Error::InvalidParameter("jump levels above 5 are out of reach".into()));
    }
    let top = (1usize << (1u32 << levels.end())) + 1;
    let (_, second) = CriterionTables::new(seq, top, exec)?.series(m, p, exec);
    let ks: Vec<usize> = levels.clone().map(|l| (1usize << (1u32 << l)) + 1).collect();
    let sums = partial_sums(&second, &ks);
    Ok(levels
        .zip(sums)
        .map(|(l, s)| JumpWitness {
            l,
            k: s.k,
            partial_sum: s.sum,
            bound: (1u64 << (1u32 << l)) as f64 / 2f64.powf(l as f64 * p),
        })
        .collect())
}

/// `sum_{|n| = k} |<[T_j^*, T_l] e_n>|^p` for `k = 0..=horizon`, through composition counts.
pub fn closed_form_level_sums(shift: &SphericalShift, j: usize, l: usize, p: f64, horizon: usize, exec: Exec) -> Result<Vec<f64>> {
    check_p(p)?;
    let m = shift.m();
    for a in [j, l] {
        if a >= m {
            return Err(Error::AxisOutOfRange { axis: a, m });
        }
    }
    shift.seq().ensure_horizon(horizon + 1)?;
    if j == l {
        let sums = exec.map_range(0..horizon + 1, |k| -> Result<f64> {
            let mut acc = CompensatedSum::new();
            for t in 0..=k {
                let count = compositions_f64(m as u64 - 1, (k - t) as u64);
                if count > 0.0 {
                    acc.add(count * shift.self_comm_at(k, t)?.abs().powf(p));
                }
            }
            Ok(acc.value())
        });
        return sums.into_iter().collect();
    }
    // n_j = t >= 1, n_l = u, the remaining m-2 coordinates share k-t-u
    let half = p / 2.0;
    let lower: Vec<f64> = (0..=horizon).map(|t| (t as f64).powf(half)).collect();
    let mut upper: Vec<f64> = (0..=horizon).map(|u| (u as f64 + 1.0).powf(half)).collect();
    for _ in 0..m - 2 {
        prefix_sum(&mut upper);
    }
    let sums = exec.map_range(0..horizon + 1, |k| -> Result<f64> {
        if k == 0 {
            return Ok(0.0);
        }
        let inner = compensated_sum((1..=k).map(|t| lower[t] * upper[k - t]));
        Ok(shift.level_gap(k)?.abs().powf(p) * inner)
    });
    sums.into_iter().collect()
}

fn prefix_sum(v: &mut [f64]) {
    let mut acc = CompensatedSum::new();
    for x in v.iter_mut() {
        acc.add(*x);
        *x = acc.value();
    }
}

/// `sum_{k <= horizon}` of [`closed_form_level_sums`]: the p-th power of the truncated `S_p` norm.
pub fn closed_form_norm(shift: &SphericalShift, j: usize, l: usize, p: f64, horizon: usize, exec: Exec) -> Result<f64> {
    Ok(compensated_sum(closed_form_level_sums(shift, j, l, p, horizon, exec)?))
}

/// The same level sum as [`closed_form_level_sums`], by enumerating the level.
pub fn level_sum_enumerated(shift: &SphericalShift, j: usize, l: usize, p: f64, k: usize) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for n in enumerate_level(shift.m(), k)?.iter() {
        let c = if j == l {
            Some(shift.self_comm_coeff(j, n)?)
        } else {
            shift.cross_comm_coeff(j, l, n)?.map(|e| e.coefficient)
        };
        if let Some(c) = c {
            acc.add(c.abs().powf(p));
        }
    }
    Ok(acc.value())
}

/// Closed-form Schatten sum against the singular values of the truncated matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchattenOracle {
    pub family: String,
    pub m: usize,
    #[serde(rename = "N")]
    pub n_max: usize,
    pub j: usize,
    pub l: usize,
    pub p: f64,
    pub closed_form: f64,
    pub matrix: f64,
    pub relative_deviation: f64,
}

/// Compares over interior columns `|n| <= N - 1`, where truncation cannot reach.
pub fn schatten_oracle(shift: &SphericalShift, tuple: &TruncatedTuple, j: usize, l: usize, p: f64) -> Result<SchattenOracle> {
    let n_max = tuple.basis.n_max();
    if n_max == 0 {
        return Err(Error::MarginTooSmall {
            kind: "schatten".into(),
            given: 0,
            required: 1,
        });
    }
    let sv = gram_diagonal(&tuple.star_commutator(j, l)?)?;
    let matrix = compensated_sum(tuple.basis.up_to_level(n_max - 1).map(|c| sv[c].powf(p)));
    let closed_form = closed_form_norm(shift, j, l, p, n_max - 1, Exec::Sequential)?;
    let scale = matrix.abs().max(closed_form.abs());
    let relative_deviation = if scale == 0.0 {
        0.0
    } else {
        (matrix - closed_form).abs() / scale
    };
    Ok(SchattenOracle {
        family: shift.seq().label(),
        m: shift.m(),
        n_max,
        j,
        l,
        p,
        closed_form,
        matrix,
        relative_deviation,
    })
}

/// Schatten oracle over every registered family, every axis pair and every exponent.
pub fn schatten_oracle_suite(arities: &[usize], n_max: usize, exponents: &[f64], exec: Exec) -> Result<Vec<SchattenOracle>> {
    let mut jobs = Vec::new();
    for &m in arities {
        for (name, spec) in registry(m as u32) {
            jobs.push((m, name, spec));
        }
    }
    let per_job = exec.map_slice(&jobs, |(m, name, spec)| -> Result<Vec<SchattenOracle>> {
        let shift = SphericalShift::new(*m, ScalarSequence::new(spec.clone())?)?;
        let tuple = TruncatedTuple::new(&shift, n_max)?;
        let mut out = Vec::new();
        for j in 0..*m {
            for l in 0..*m {
                for &p in exponents {
                    let mut r = schatten_oracle(&shift, &tuple, j, l, p)?;
                    r.family = name.clone();
                    out.push(r);
                }
            }
        }
        Ok(out)
    });
    let mut out = Vec::new();
    for r in per_job {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutoffEntry {
    pub p: f64,
    pub verdict: Convergence,
    pub basis: Basis,
}

/// Consistency of the `p > m` cut-off over a grid of exponents.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutoffReport {
    pub family: String,
    pub m: usize,
    pub compact: Option<bool>,
    /// True when the shift is compact, where the cut-off says nothing.
    pub skipped: bool,
    pub entries: Vec<CutoffEntry>,
    /// No grid point `p <= m` converges (vacuous when skipped).
    pub consistent: bool,
    /// Smallest grid exponent at which the series converge.
    pub transition: Option<f64>,
    /// Largest divergent grid exponent below `transition`.
    pub divergent_up_to: Option<f64>,
}

pub fn cutoff_check(seq: &ScalarSequence, m: usize, grid: &[f64], horizon: usize, exec: Exec) -> Result<CutoffReport> {
    let verdicts = decide_grid(seq, m, grid, horizon, exec)?;
    Ok(cutoff_from(seq, m, &verdicts))
}

/// Summarises verdicts from [`decide_grid`] as a cut-off report.
pub fn cutoff_from(seq: &ScalarSequence, m: usize, verdicts: &[SchattenVerdict]) -> CutoffReport {
    let compact = verdicts.first().and_then(|v| v.compact);
    let entries: Vec<CutoffEntry> = verdicts
        .iter()
        .map(|v| CutoffEntry {
            p: v.p,
            verdict: v.verdict,
            basis: v.basis,
        })
        .collect();
    let skipped = compact == Some(true);
    let consistent = skipped
        || entries
            .iter()
            .all(|e| e.p > m as f64 || e.verdict != Convergence::Converges);
    let transition = entries
        .iter()
        .filter(|e| e.verdict == Convergence::Converges)
        .map(|e| e.p)
        .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.min(p))));
    let divergent_up_to = entries
        .iter()
        .filter(|e| e.verdict == Convergence::Diverges && transition.is_none_or(|t| e.p < t))
        .map(|e| e.p)
        .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))));
    CutoffReport {
        family: seq.label(),
        m,
        compact,
        skipped,
        entries,
        consistent,
        transition,
        divergent_up_to,
    }
}

/// [`decide`] over a grid of exponents, building the criterion tables once.
pub fn decide_grid(seq: &ScalarSequence, m: usize, grid: &[f64], horizon: usize, exec: Exec) -> Result<Vec<SchattenVerdict>> {
    if m == 0 {
        return Err(Error::EmptyArity);
    }
    for &p in grid {
        check_p(p)?;
    }
    if horizon < MIN_HORIZON {
        return Err(Error::InvalidParameter(format!("horizon must be at least {MIN_HORIZON}")));
    }
    let compact = is_compact(seq, horizon)?.holds;
    let tables = CriterionTables::new(seq, horizon, exec)?;
    grid.iter()
        .map(|&p| {
            if p.is_finite() {
                Ok(decide_with(seq, &tables, compact, m, p, exec))
            } else {
                decide(seq, m, p, horizon, exec)
            }
        })
        .collect()
}

/// Value of `s` in the shifted-moment sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ShiftParam {
    Fixed(f64),
    /// `s = c / k` at level `k`.
    PerLevel(f64),
}

impl ShiftParam {
    fn at(self, k: usize) -> f64 {
        match self {
            ShiftParam::Fixed(s) => s,
            ShiftParam::PerLevel(c) => c / k as f64,
        }
    }

    fn label(self) -> String {
        match self {
            ShiftParam::Fixed(s) => format!("s={s}"),
            ShiftParam::PerLevel(c) => format!("s={c}/k"),
        }
    }
}

/// Range of a normalised lattice sum over the checked levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaWindow {
    pub lemma: String,
    pub s: Option<String>,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    pub min_at: usize,
    pub max_at: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub m: usize,
    pub p: f64,
    pub k_range: (usize, usize),
    pub windows: Vec<LemmaWindow>,
}

impl LemmaReport {
    /// Every window is positive with `max / min <= bound`.
    pub fn within(&self, bound: f64) -> bool {
        self.windows.iter().all(|w| w.min > 0.0 && w.spread <= bound)
    }
}

fn window(lemma: &str, s: Option<String>, lo: usize, values: &[f64]) -> LemmaWindow {
    let (mut min, mut max, mut min_at, mut max_at) = (f64::INFINITY, f64::NEG_INFINITY, lo, lo);
    for (i, &v) in values.iter().enumerate() {
        if v < min {
            min = v;
            min_at = lo + i;
        }
        if v > max {
            max = v;
            max_at = lo + i;
        }
    }
    LemmaWindow {
        lemma: lemma.into(),
        s,
        min,
        max,
        spread: max / min,
        min_at,
        max_at,
    }
}

/// Normalised lattice sums at every level `k` in `[lo, hi]`:
///
/// * mixed moment `sum_{|n|=k, n_j>0} n_j^{p/2} n_l^{p/2} / k^{p+m-1}`,
/// * shifted moment `sum_{|n|=k} |s n_j - 1|^p / (k^{p+m-1} |s|^p + k^{m-1})`.
pub fn asymptotic_lemma_check(m: usize, p: f64, k_range: (usize, usize), shifts: &[ShiftParam], exec: Exec) -> Result<LemmaReport> {
    check_p(p)?;
    let (lo, hi) = k_range;
    if m < 2 || lo == 0 || lo > hi {
        return Err(Error::InvalidParameter("need m >= 2 and 1 <= lo <= hi".into()));
    }
    let half = p / 2.0;
    let powers: Vec<f64> = (0..=hi).map(|t| (t as f64).powf(half)).collect();
    // powers convolved with the (m-2)-part composition counts
    let mut spread_powers = powers.clone();
    for _ in 0..m - 2 {
        prefix_sum(&mut spread_powers);
    }
    let rest: Vec<f64> = (0..=hi).map(|r| compositions_f64(m as u64 - 1, r as u64)).collect();
    let mf = m as f64;
    let mut windows = Vec::new();
    let mixed = exec.map_range(lo..hi + 1, |k| {
        let sum = compensated_sum((1..=k).map(|t| powers[t] * spread_powers[k - t]));
        sum / (k as f64).powf(p + mf - 1.0)
    });
    windows.push(window("mixed_moment", None, lo, &mixed));
    let integral = p.fract() == 0.0 && p <= i32::MAX as f64;
    let pow_abs = |x: f64| if integral { x.abs().powi(p as i32) } else { x.abs().powf(p) };
    for &s in shifts {
        let ratios = exec.map_range(lo..hi + 1, |k| {
            let sv = s.at(k);
            let sum = compensated_sum((0..=k).map(|t| rest[k - t] * pow_abs(sv * t as f64 - 1.0)));
            let kf = k as f64;
            sum / (kf.powf(p + mf - 1.0) * sv.abs().powf(p) + kf.powf(mf - 1.0))
        });
        windows.push(window("shifted_moment", Some(s.label()), lo, &ratios));
    }
    Ok(LemmaReport {
        m,
        p,
        k_range,
        windows,
    })
}

/// Shift values used by default: `0`, `1` and `1/k`.
pub fn default_shifts() -> Vec<ShiftParam> {
    vec![ShiftParam::Fixed(0.0), ShiftParam::Fixed(1.0), ShiftParam::PerLevel(1.0)]
}

/// The mixed-moment lattice sum by enumeration (test oracle).
pub fn mixed_moment_enumerated(m: usize, p: f64, k: usize) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for n in enumerate_level(m, k)?.iter() {
        let (a, b) = (n.get(0) as f64, n.get(1) as f64);
        if a > 0.0 {
            acc.add(a.powf(p / 2.0) * b.powf(p / 2.0));
        }
    }
    Ok(acc.value())
}

/// The shifted-moment lattice sum by enumeration (test oracle).
pub fn shifted_moment_enumerated(m: usize, p: f64, s: f64, k: usize) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for n in enumerate_level(m, k)?.iter() {
        acc.add((s * n.get(0) as f64 - 1.0).abs().powf(p));
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalarseq::{FamilySpec, TailRule};
    use num::{BigInt, BigRational};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn fam(spec: FamilySpec) -> ScalarSequence {
        ScalarSequence::new(spec).unwrap()
    }

    fn hp(m: u32, p: i64) -> ScalarSequence {
        fam(FamilySpec::HpSpace { m, p: rat(p, 1) })
    }

    fn compact_table() -> ScalarSequence {
        fam(FamilySpec::Tabulated {
            values: vec![],
            tail: TailRule::Rational {
                num: vec![rat(1, 1)],
                den: vec![rat(1, 1), rat(2, 1), rat(1, 1)],
            },
        })
    }

    #[test]
    fn terms() {
        let sz = hp(3, 3);
        for k in 1..20 {
            let (t1, t2) = criterion_terms(&sz, 3, 1.5, k).unwrap();
            assert!((t1 - (k as f64).powf(0.5)).abs() < 1e-12);
            assert_eq!(t2, 0.0);
        }
        let alt = fam(FamilySpec::AlternatingTwelve);
        for k in 1..20 {
            let (_, t2) = criterion_terms(&alt, 2, 2.0, k).unwrap();
            assert!((t2 - k as f64 / 144.0).abs() < 1e-14);
        }
        let rho = fam(FamilySpec::RhoEta);
        assert_eq!(criterion_terms(&rho, 2, 1.0, 4).unwrap().1, 0.0);
        assert_eq!(criterion_terms(&rho, 2, 1.0, 5).unwrap().1, 2.5);
        assert!(criterion_terms(&rho, 2, 0.5, 5).is_err());
    }

    #[test]
    fn analytic_decisions() {
        let e = Exec::default();
        let berg = hp(2, 3);
        assert_eq!(decide(&berg, 2, 2.0, 1000, e).unwrap().verdict, Convergence::Diverges);
        let v = decide(&berg, 2, 2.5, 1000, e).unwrap();
        assert_eq!((v.verdict, v.basis), (Convergence::Converges, Basis::Analytic));
        assert!(v.cutoff_consistent);
        let rho = fam(FamilySpec::RhoEta);
        for p in [1.0, 2.0, 4.0, 8.0] {
            assert_eq!(decide(&rho, 2, p, 1000, e).unwrap().verdict, Convergence::Diverges);
        }
        let c = decide(&compact_table(), 2, 1.0, 1000, e).unwrap();
        assert_eq!((c.verdict, c.compact), (Convergence::Converges, Some(true)));
        assert!(decide(&berg, 2, 2.0, 999, e).is_err());
        assert!(decide(&berg, 2, 0.9, 1000, e).is_err());
    }

    #[test]
    fn infinite_exponent_is_essential_normality() {
        let e = Exec::default();
        assert_eq!(decide(&hp(2, 3), 2, f64::INFINITY, 1000, e).unwrap().verdict, Convergence::Converges);
        let alt = fam(FamilySpec::AlternatingTwelve);
        assert_eq!(decide(&alt, 2, f64::INFINITY, 1000, e).unwrap().verdict, Convergence::Diverges);
    }

    #[test]
    fn sampled_fit_agrees_away_from_the_edge() {
        let e = Exec::default();
        for m in [2usize, 3] {
            let s = hp(m as u32, m as i64 + 1);
            let (a, b) = decide_sampled(&s, m, m as f64 + 1.0, 20_000, e).unwrap();
            assert_eq!(Convergence::both(a, b), Convergence::Converges);
            let (a, _) = decide_sampled(&s, m, m as f64 - 0.5, 20_000, e).unwrap();
            assert_eq!(a, Convergence::Diverges);
            // p = m sits on the boundary and must not be decided by a fit
            let (a, _) = decide_sampled(&s, m, m as f64, 20_000, e).unwrap();
            assert_eq!(a, Convergence::Inconclusive);
        }
        // compact table: 1/(k+1)^2 gives t1 ~ k^-4 and t2 ~ k^-2
        let (a, b) = decide_sampled(&compact_table(), 2, 1.0, 20_000, e).unwrap();
        assert_eq!((a, b), (Convergence::Converges, Convergence::Converges));
        let t = fam(FamilySpec::Tabulated {
            values: (0..5000).map(|k| rat(k + 3, k + 2)).collect(),
            tail: TailRule::Error,
        });
        let v = decide(&t, 2, 3.0, 10_000, e).unwrap();
        assert_eq!((v.basis, v.horizon, v.verdict), (Basis::Sampled, 4999, Convergence::Converges));
    }

    #[test]
    fn compact_partial_sums_settle() {
        let v = decide(&compact_table(), 2, 1.0, 100_000, Exec::default()).unwrap();
        let sums = &v.second_series.partial_sums;
        let last = sums[sums.len() - 1].sum;
        let prev = sums[sums.len() - 2].sum;
        assert!((last - prev) / last < 1e-3);
    }

    #[test]
    fn rho_eta_witness_grows() {
        let rho = fam(FamilySpec::RhoEta);
        for p in [1.0, 2.0] {
            let w = jump_witness(&rho, 2, p, 1..=4, Exec::default()).unwrap();
            for pair in w.windows(2) {
                assert!(pair[1].partial_sum > pair[0].partial_sum);
            }
            for x in &w {
                assert!(x.partial_sum >= x.bound, "{x:?}");
            }
        }
        assert!(jump_witness(&hp(2, 2), 2, 1.0, 1..=2, Exec::default()).is_err());
    }

    #[test]
    fn level_sums_match_enumeration() {
        let e = Exec::default();
        for m in [2usize, 3, 4] {
            for (_, spec) in registry(m as u32) {
                let shift = SphericalShift::new(m, fam(spec)).unwrap();
                for (j, l) in [(0, 0), (1, 1), (0, 1), (1, 0)] {
                    for p in [1.0, 2.0, 3.5] {
                        let sums = closed_form_level_sums(&shift, j, l, p, 25, e).unwrap();
                        for (k, s) in sums.iter().enumerate() {
                            let direct = level_sum_enumerated(&shift, j, l, p, k).unwrap();
                            assert!((s - direct).abs() <= 1e-10 * direct.abs().max(1e-300), "{m} {j}{l} {p} {k}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn szego_small_levels() {
        let shift = SphericalShift::new(2, hp(2, 2)).unwrap();
        let sums = closed_form_level_sums(&shift, 0, 0, 1.0, 1, Exec::Sequential).unwrap();
        // level 0: 1/2; level 1: n=(1,0) gives 1/6, n=(0,1) gives 1/3
        assert!((sums[0] - 0.5).abs() < 1e-15);
        assert!((sums[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn oracle_agreement_small() {
        let records = schatten_oracle_suite(&[2], 6, &[1.0, 2.0], Exec::default()).unwrap();
        for r in records {
            assert!(r.relative_deviation <= 1e-8, "{r:?}");
        }
    }

    #[test]
    fn cutoff_grid() {
        let e = Exec::default();
        let r = cutoff_check(&hp(2, 4), 2, &[1.0, 1.5, 2.0, 2.25, 3.0], 1000, e).unwrap();
        let got: Vec<_> = r.entries.iter().map(|x| x.verdict).collect();
        use Convergence::*;
        assert_eq!(got, vec![Diverges, Diverges, Diverges, Converges, Converges]);
        assert!(r.consistent);
        assert_eq!(r.transition, Some(2.25));
        let r = cutoff_check(&hp(3, 3), 3, &[2.0, 3.0, 3.5], 1000, e).unwrap();
        let got: Vec<_> = r.entries.iter().map(|x| x.verdict).collect();
        assert_eq!(got, vec![Diverges, Diverges, Converges]);
        assert!(cutoff_check(&compact_table(), 2, &[1.0], 1000, e).unwrap().skipped);
    }

    #[test]
    fn lemma_sums_match_enumeration() {
        for m in [2usize, 3] {
            for p in [1.0, 2.0] {
                let r = asymptotic_lemma_check(m, p, (20, 40), &default_shifts(), Exec::Sequential).unwrap();
                let k = 30;
                let kf = k as f64;
                let norm = kf.powf(p + m as f64 - 1.0);
                let mixed = mixed_moment_enumerated(m, p, k).unwrap() / norm;
                let full = asymptotic_lemma_check(m, p, (k, k), &default_shifts(), Exec::Sequential).unwrap();
                assert!((full.windows[0].min - mixed).abs() < 1e-12 * mixed);
                for (w, s) in full.windows[1..].iter().zip([0.0, 1.0, 1.0 / kf]) {
                    let direct = shifted_moment_enumerated(m, p, s, k).unwrap();
                    let want = direct / (norm * s.abs().powf(p) + kf.powf(m as f64 - 1.0));
                    assert!((w.min - want).abs() < 1e-12 * want, "{m} {p} {s}");
                }
                assert!(r.within(5.0));
            }
        }
    }

    #[test]
    fn lemma_limits() {
        // s = 0 counts the level: binom(k+m-1, m-1) / k^(m-1) -> 1/(m-1)!
        let r = asymptotic_lemma_check(3, 1.0, (1000, 1000), &[ShiftParam::Fixed(0.0)], Exec::Sequential).unwrap();
        assert!((r.windows[1].min - 0.5).abs() < 2e-3);
        // m = 2, p = 2: sum t(k-t) / k^3 -> 1/6
        let r = asymptotic_lemma_check(2, 2.0, (100, 1000), &[], Exec::Sequential).unwrap();
        assert!(r.windows[0].spread <= 3.0);
        assert!((r.windows[0].max - 1.0 / 6.0).abs() < 1e-3);
    }
}
