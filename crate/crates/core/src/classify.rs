//! Structural classification of a spherical shift from its scalar sequence.

use std::collections::BTreeMap;

use num::{BigRational, One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numeric::{loglog_slope, rational_from_f64, rational_string, to_f64};
use crate::scalarseq::{Asymptotics, BoundedReport, PolynomialDecl, ScalarSequence};
use crate::verdict::{Basis, Verdict, Witness};

/// Largest `|delta^2_k - delta^2_{k-1}|` over the sampled tail that still counts as "tending to 0".
pub const GAP_GATE: f64 = 1e-3;

/// Compactness: `delta_k -> 0`.
pub fn is_compact(seq: &ScalarSequence, horizon: usize) -> Result<Verdict> {
    match seq.asymptotics() {
        Some(Asymptotics::PowerLaw { limit, .. }) => Ok(Verdict::analytic(limit == 0.0)),
        Some(_) => Ok(Verdict::analytic(false)),
        None => {
            let h = seq.clamp_horizon(horizon);
            let table = seq.delta2_table(h)?;
            let start = h / 2;
            let pts: Vec<(f64, f64)> = (start.max(1)..h).map(|k| (k as f64, table[k])).collect();
            let slope = loglog_slope(&pts);
            let floor = table[start..].iter().copied().fold(f64::INFINITY, f64::min);
            let holds = match slope {
                Some(s) if s < -0.1 => Some(true),
                Some(s) if s.abs() <= 0.1 && floor > 1e-3 => Some(false),
                _ => None,
            };
            Ok(Verdict::checked(holds, Basis::Sampled, h))
        }
    }
}

/// Exact differences `delta^2_{k+1} - delta^2_k` for `k < horizon`.
pub fn exact_gaps(seq: &ScalarSequence, horizon: usize) -> Result<Vec<BigRational>> {
    (0..horizon)
        .map(|k| Ok(seq.delta2_exact(k + 1)? - seq.delta2_exact(k)?))
        .collect()
}

/// Essential normality: `delta^2_k - delta^2_{k-1} -> 0`.
///
/// A periodic sequence is refuted with the smallest `|delta^2_{k+1} - delta^2_k|`
/// over one period as witness, computed exactly.
pub fn is_essentially_normal(seq: &ScalarSequence, horizon: usize, exec: Exec) -> Result<Verdict> {
    match seq.asymptotics() {
        Some(Asymptotics::PowerLaw { .. }) | Some(Asymptotics::DoubleExponentialJumps { .. }) => {
            Ok(Verdict::analytic(true))
        }
        Some(Asymptotics::Periodic { values }) => {
            let gaps = exact_gaps(seq, values.len())?;
            let (k, g) = gaps
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.abs().cmp(&b.1.abs()))
                .expect("non-empty period");
            let holds = g.is_zero();
            let witness = (!holds).then(|| Witness {
                k,
                order: None,
                value: rational_string(&g.abs()),
            });
            Ok(Verdict::analytic(holds).with_witness(witness))
        }
        Some(Asymptotics::Unbounded) => Ok(Verdict::analytic(false)),
        None => {
            let h = seq.clamp_horizon(horizon);
            let gaps = seq.delta2_gap_table(h, exec)?;
            let window = (h / 10).max(1);
            let worst = gaps[h.saturating_sub(window).max(1)..]
                .iter()
                .copied()
                .fold(0.0, f64::max);
            let holds = (worst <= GAP_GATE).then_some(true);
            Ok(Verdict::checked(holds, Basis::Sampled, h))
        }
    }
}

/// Hyponormality: `delta_k` nondecreasing. Declared monotonicity answers analytically,
/// otherwise the exact check runs to the horizon.
pub fn is_hyponormal(seq: &ScalarSequence, horizon: usize) -> Result<Verdict> {
    match seq.declared_nondecreasing() {
        Some(true) => Ok(Verdict::analytic(true)),
        Some(false) => {
            let exact = is_hyponormal_exact(seq, horizon)?;
            Ok(Verdict::analytic(false).with_witness(exact.witness))
        }
        None => is_hyponormal_exact(seq, horizon),
    }
}

/// `delta^2_k <= delta^2_{k+1}` for all `k < horizon`, in exact arithmetic.
pub fn is_hyponormal_exact(seq: &ScalarSequence, horizon: usize) -> Result<Verdict> {
    let h = seq.clamp_horizon(horizon + 1).saturating_sub(1);
    let mut prev = seq.delta2_exact(0)?;
    for k in 0..h {
        let next = seq.delta2_exact(k + 1)?;
        if next < prev {
            let w = Witness {
                k,
                order: None,
                value: rational_string(&(next - prev)),
            };
            return Ok(Verdict::checked(Some(false), Basis::Exact, h).with_witness(Some(w)));
        }
        prev = next;
    }
    Ok(Verdict::checked(Some(true), Basis::Exact, h))
}

/// Order and provenance of the q-isometry check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsometryOrder {
    pub order: Option<usize>,
    pub basis: Basis,
    pub horizon: usize,
    /// What the family declares about `gamma` (degree `d` means order `d + 1`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub declared_order: Option<usize>,
}

/// Smallest `q <= qmax` with `nabla^q gamma_k = 0` for every `k <= horizon`.
pub fn q_isometry_order(seq: &ScalarSequence, qmax: usize, horizon: usize) -> Result<IsometryOrder> {
    let h = seq.clamp_horizon(horizon + qmax + 1).saturating_sub(qmax + 1);
    let declared_order = match seq.gamma_polynomial() {
        PolynomialDecl::Degree(d) => Some(d + 1),
        _ => None,
    };
    let mut order = None;
    'orders: for q in 1..=qmax {
        for k in 0..=h {
            if !seq.nabla_ratio_exact(k, q)?.is_zero() {
                continue 'orders;
            }
        }
        order = Some(q);
        break;
    }
    Ok(IsometryOrder {
        order,
        basis: Basis::Exact,
        horizon: h,
        declared_order,
    })
}

/// Joint q-expansion: `(-1)^q nabla^q gamma_k <= 0` for every `k <= horizon`, exactly.
pub fn is_q_expansion(seq: &ScalarSequence, q: usize, horizon: usize) -> Result<Verdict> {
    alternating_sign_check(seq, q, horizon, false)
}

/// Joint q-contraction: `(-1)^q nabla^q gamma_k >= 0` for every `k <= horizon`, exactly.
pub fn is_q_contraction(seq: &ScalarSequence, q: usize, horizon: usize) -> Result<Verdict> {
    alternating_sign_check(seq, q, horizon, true)
}

fn alternating_sign_check(seq: &ScalarSequence, q: usize, horizon: usize, nonnegative: bool) -> Result<Verdict> {
    if q == 0 {
        return Err(Error::InvalidParameter("order q must be at least 1".into()));
    }
    let h = seq.clamp_horizon(horizon + q + 1).saturating_sub(q + 1);
    for k in 0..=h {
        let mut v = seq.nabla_ratio_exact(k, q)?;
        if q % 2 == 1 {
            v = -v;
        }
        let bad = if nonnegative { v.is_negative() } else { v.is_positive() };
        if bad {
            let w = Witness {
                k,
                order: Some(q),
                value: rational_string(&v),
            };
            return Ok(Verdict::checked(Some(false), Basis::Exact, h).with_witness(Some(w)));
        }
    }
    Ok(Verdict::checked(Some(true), Basis::Exact, h))
}

/// Largest `q0 <= qmax` such that the tuple is a q-expansion for every `q <= q0`.
pub fn complete_hyperexpansion_up_to(seq: &ScalarSequence, qmax: usize, horizon: usize) -> Result<usize> {
    for q in 1..=qmax {
        if !is_q_expansion(seq, q, horizon)?.is_true() {
            return Ok(q - 1);
        }
    }
    Ok(qmax)
}

/// Result of the finite Hausdorff-moment check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubnormalReport {
    pub consistent: bool,
    pub order: usize,
    pub horizon: usize,
    /// `sup delta^2` used for the rescaling, as an exact rational.
    pub sup_delta2: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Rescales `delta` by `1/sup delta`, then checks `(-1)^p nabla^p gamma_k >= 0`
/// for `p <= order` and `k <= horizon`. Passing is necessary, not sufficient.
pub fn subnormal_consistency(seq: &ScalarSequence, order: usize, horizon: usize) -> Result<SubnormalReport> {
    if order == 0 {
        return Err(Error::InvalidParameter("order must be at least 1".into()));
    }
    let sup = sup_delta2_exact(seq, horizon + order + 1)?;
    let scaled = seq.scaled_delta2(&(BigRational::one() / &sup))?;
    let h = scaled.clamp_horizon(horizon + order + 1).saturating_sub(order + 1);
    for p in 1..=order {
        for k in 0..=h {
            let mut v = scaled.nabla_ratio_exact(k, p)?;
            if p % 2 == 1 {
                v = -v;
            }
            if v.is_negative() {
                return Ok(SubnormalReport {
                    consistent: false,
                    order,
                    horizon: h,
                    sup_delta2: rational_string(&sup),
                    witness: Some(Witness {
                        k,
                        order: Some(p),
                        value: rational_string(&v),
                    }),
                });
            }
        }
    }
    Ok(SubnormalReport {
        consistent: true,
        order,
        horizon: h,
        sup_delta2: rational_string(&sup),
        witness: None,
    })
}

/// `sup_k delta^2_k`: declared when known, else the exact maximum over the
/// sampled range combined with the declared limit.
pub fn sup_delta2_exact(seq: &ScalarSequence, horizon: usize) -> Result<BigRational> {
    if let Some(s) = seq.declared_sup_delta2() {
        return Ok(s);
    }
    let limit = match seq.asymptotics() {
        Some(Asymptotics::Unbounded) => return Err(Error::Unbounded("cannot normalise to a contraction".into())),
        Some(Asymptotics::PowerLaw { limit, .. }) => limit,
        Some(Asymptotics::DoubleExponentialJumps { limit, .. }) => limit,
        Some(Asymptotics::Periodic { values }) => values.into_iter().fold(0.0, f64::max),
        None => 0.0,
    };
    let sampled = seq.sampled_sup_delta2_exact(seq.clamp_horizon(horizon))?;
    let limit = rational_from_f64(limit)?;
    Ok(if limit > sampled { limit } else { sampled })
}

/// `delta^2_k = 1` for every `k <= horizon`, exactly.
pub fn is_szego(seq: &ScalarSequence, horizon: usize) -> Result<bool> {
    let h = seq.clamp_horizon(horizon + 1);
    for k in 0..h {
        if !seq.delta2_exact(k)?.is_one() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Concave `gamma` (`nabla^2 gamma <= 0`) with `delta` bounded away from 0
/// forces `|delta^2_{k+1} - delta^2_k| <= C/k`; this measures both sides.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcavityReport {
    pub concave: Verdict,
    /// `max_{1 <= k < horizon} k |delta^2_{k+1} - delta^2_k|`.
    pub gap_constant: f64,
    /// Whether `k |gap|` stays below its value at `horizon / 2` times 2 over the second half.
    pub gap_is_order_one_over_k: bool,
    pub horizon: usize,
}

pub fn concavity_check(seq: &ScalarSequence, horizon: usize) -> Result<ConcavityReport> {
    let concave = concave_exact(seq, horizon)?;
    let h = seq.clamp_horizon(horizon + 1).saturating_sub(1);
    let gaps = exact_gaps(seq, h)?;
    let scaled: Vec<f64> = gaps
        .iter()
        .enumerate()
        .map(|(k, g)| k as f64 * to_f64(&g.abs()))
        .collect();
    let gap_constant = scaled.iter().copied().fold(0.0, f64::max);
    let half = h / 2;
    let early = scaled[..half.max(1)].iter().copied().fold(0.0, f64::max);
    let late = scaled[half..].iter().copied().fold(0.0, f64::max);
    Ok(ConcavityReport {
        concave,
        gap_constant,
        gap_is_order_one_over_k: late <= 2.0 * early.max(f64::MIN_POSITIVE),
        horizon: h,
    })
}

/// `nabla^2 gamma_k <= 0` for every `k <= horizon`, exactly.
fn concave_exact(seq: &ScalarSequence, horizon: usize) -> Result<Verdict> {
    let h = seq.clamp_horizon(horizon + 3).saturating_sub(3);
    for k in 0..=h {
        let v = seq.nabla_ratio_exact(k, 2)?;
        if v.is_positive() {
            let w = Witness {
                k,
                order: Some(2),
                value: rational_string(&v),
            };
            return Ok(Verdict::checked(Some(false), Basis::Exact, h).with_witness(Some(w)));
        }
    }
    Ok(Verdict::checked(Some(true), Basis::Exact, h))
}

/// Horizons and orders for [`classify`].
#[derive(Clone, Debug)]
pub struct ClassifyConfig {
    /// Horizon of the exact checks.
    pub horizon: usize,
    /// Horizon of the sampled (floating-point) checks.
    pub sample_horizon: usize,
    /// Highest order of the subnormality check.
    pub subnormal_order: usize,
    /// Highest order of the q-isometry and q-expansion checks.
    pub max_order: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            horizon: 200,
            sample_horizon: 100_000,
            subnormal_order: 8,
            max_order: 6,
        }
    }
}

/// Everything [`classify`] decides about a sequence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub family: String,
    pub bounded: BoundedReport,
    pub compact: Verdict,
    pub essentially_normal: Verdict,
    pub szego: bool,
    pub hyponormal: Verdict,
    pub q_isometry: IsometryOrder,
    pub q_expansion: BTreeMap<usize, Verdict>,
    pub complete_hyperexpansion_up_to: usize,
    pub subnormal: Option<SubnormalReport>,
}

pub fn classify(seq: &ScalarSequence, config: &ClassifyConfig, exec: Exec) -> Result<Classification> {
    let bounded = seq.is_bounded(seq.clamp_horizon(config.sample_horizon))?;
    let mut q_expansion = BTreeMap::new();
    for q in 1..=config.max_order {
        q_expansion.insert(q, is_q_expansion(seq, q, config.horizon)?);
    }
    let complete = (1..=config.max_order)
        .take_while(|q| q_expansion[q].is_true())
        .count();
    let subnormal = match bounded.bounded {
        Some(false) => None,
        _ => Some(subnormal_consistency(seq, config.subnormal_order, config.horizon)?),
    };
    Ok(Classification {
        family: seq.label(),
        compact: is_compact(seq, config.sample_horizon)?,
        essentially_normal: is_essentially_normal(seq, config.sample_horizon, exec)?,
        szego: is_szego(seq, config.horizon)?,
        hyponormal: is_hyponormal(seq, config.horizon)?,
        q_isometry: q_isometry_order(seq, config.max_order, config.horizon)?,
        q_expansion,
        complete_hyperexpansion_up_to: complete,
        subnormal,
        bounded,
    })
}
