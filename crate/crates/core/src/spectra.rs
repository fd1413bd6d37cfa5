//! Spectral geometry of a spherical shift: the outer radius `R` (Taylor
//! spectrum), the convergence radius `r`, the inner radius `i` of the
//! approximate point spectrum, the essential-spectrum shell and the
//! point-spectrum dichotomy.
//!
//! Every limit over `j` is sampled on a geometric grid `1 <= j <= K` with the
//! sup/inf over `0 <= k <= K`, all in log space. Families that declare their
//! asymptotics also get the exact limit.

use serde::Serialize;

use crate::classify::is_essentially_normal;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numeric::{ln_binomial, loglog_slope, serialize_real, CompensatedSum};
use crate::scalarseq::{Asymptotics, ScalarSequence};
use crate::verdict::{Basis, Verdict};

/// Horizons and tolerances of [`spectral_report`].
#[derive(Clone, Debug)]
pub struct SpectraConfig {
    pub horizon: usize,
    pub j_points: usize,
    /// Tail window of the essential shell; `None` means `horizon / 10`.
    pub window: Option<usize>,
    /// Maximal spread of the last [`STABLE_TAIL`] sampled values.
    pub stabilization: f64,
    /// Agreement required between the two evaluations of each `inf_k`.
    pub m_infinity_tolerance: f64,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        Self {
            horizon: 100_000,
            j_points: 60,
            window: None,
            stabilization: 1e-4,
            m_infinity_tolerance: 1e-9,
        }
    }
}

/// Number of trailing grid values used for the estimate and the stabilization test.
pub const STABLE_TAIL: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusSample {
    pub j: usize,
    #[serde(serialize_with = "serialize_real")]
    pub value: f64,
}

/// The sampled side of a radius estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledRadius {
    #[serde(serialize_with = "serialize_real")]
    pub estimate: f64,
    /// The last [`STABLE_TAIL`] raw or extrapolated values lie within the stabilization tolerance.
    pub stabilized: bool,
    #[serde(serialize_with = "serialize_real")]
    pub spread: f64,
    /// Extrapolation of the last two grid values assuming an `O(1/j)` error.
    #[serde(serialize_with = "serialize_real")]
    pub richardson: f64,
    /// Spread of the last [`STABLE_TAIL`] extrapolated values.
    #[serde(serialize_with = "serialize_real")]
    pub richardson_spread: f64,
    pub samples: Vec<RadiusSample>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    /// Exact limit from the declared asymptotics.
    Analytic,
    /// Sampled sequence that stabilized.
    Extrapolated,
    /// Sampled sequence that did not stabilize; the data is attached.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusEstimate {
    #[serde(serialize_with = "serialize_real")]
    pub value: f64,
    pub tier: Tier,
    pub sampled: SampledRadius,
}

impl RadiusEstimate {
    fn new(analytic: Option<f64>, sampled: SampledRadius) -> Self {
        let (value, tier) = match analytic {
            Some(v) => (v, Tier::Analytic),
            None if sampled.stabilized => (sampled.estimate, Tier::Extrapolated),
            None => (sampled.estimate, Tier::Inconclusive),
        };
        Self { value, tier, sampled }
    }
}

/// `ln bbeta_k` for `k <= 2K` plus the j-grid; shared by all three radii.
pub struct RadiusTables {
    horizon: usize,
    log_bbeta: Vec<f64>,
    grid: Vec<usize>,
}

impl RadiusTables {
    pub fn new(seq: &ScalarSequence, horizon: usize, j_points: usize) -> Result<Self> {
        if horizon == 0 || j_points == 0 {
            return Err(Error::InvalidParameter("horizon and J must be positive".into()));
        }
        let horizon = match seq.horizon() {
            Some(len) => (len / 2).min(horizon),
            None => horizon,
        };
        if horizon == 0 {
            return Err(Error::InvalidParameter("table too short for a radius estimate".into()));
        }
        Ok(Self {
            horizon,
            log_bbeta: seq.log_bbeta_prefix(2 * horizon)?,
            grid: geometric_grid(horizon, j_points),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn grid(&self) -> &[usize] {
        &self.grid
    }

    /// `(inf_k, sup_k)` of `(ln bbeta_{k+j} - ln bbeta_k)/j` over `0 <= k <= K`.
    pub fn window_extremes(&self, j: usize) -> (f64, f64) {
        let l = &self.log_bbeta;
        let jf = j as f64;
        (0..=self.horizon).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| {
            let v = (l[k + j] - l[k]) / jf;
            (lo.min(v), hi.max(v))
        })
    }
}

/// Up to `points` distinct integers spread geometrically over `[1, top]`, ending at `top`.
pub fn geometric_grid(top: usize, points: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (0..points)
        .map(|i| {
            if points == 1 {
                top
            } else {
                (top as f64).powf(i as f64 / (points - 1) as f64).round() as usize
            }
        })
        .map(|j| j.clamp(1, top))
        .collect();
    grid.dedup();
    grid
}

fn tail_spread(values: &[f64]) -> Option<f64> {
    if values.len() < STABLE_TAIL {
        return None;
    }
    let tail = &values[values.len() - STABLE_TAIL..];
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(hi - lo)
}

fn summarize(grid: &[usize], logs: &[f64], take_max: bool, tolerance: f64) -> SampledRadius {
    let values: Vec<f64> = logs.iter().map(|v| v.exp()).collect();
    let tail = &values[values.len().saturating_sub(STABLE_TAIL)..];
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let estimate = if take_max { hi } else { lo };
    // consecutive pairs extrapolated under an O(1/j) error model
    let accelerated: Vec<f64> = grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(j, v)| {
            let (j1, j2) = (j[0] as f64, j[1] as f64);
            (j2 * v[1] - j1 * v[0]) / (j2 - j1)
        })
        .collect();
    let spread = tail_spread(&values).unwrap_or(f64::INFINITY);
    let richardson_spread = tail_spread(&accelerated).unwrap_or(f64::INFINITY);
    SampledRadius {
        estimate,
        stabilized: spread <= tolerance || richardson_spread <= tolerance,
        spread,
        richardson: accelerated.last().copied().unwrap_or(estimate),
        richardson_spread,
        samples: grid
            .iter()
            .zip(&values)
            .map(|(&j, &value)| RadiusSample { j, value })
            .collect(),
    }
}

/// Declared `(inner, convergence, outer)` radii.
fn analytic_radii(seq: &ScalarSequence) -> Option<(Option<f64>, f64, f64)> {
    match seq.asymptotics()? {
        Asymptotics::PowerLaw { limit_delta, .. } | Asymptotics::DoubleExponentialJumps { limit_delta, .. } => {
            Some((Some(limit_delta), limit_delta, limit_delta))
        }
        Asymptotics::Periodic { values } => {
            let mean = values.iter().map(|v| v.ln()).sum::<f64>() / (2 * values.len()) as f64;
            let g = mean.exp();
            Some((Some(g), g, g))
        }
        Asymptotics::Unbounded => Some((None, f64::INFINITY, f64::INFINITY)),
    }
}

/// Agreement of `inf_k q_diag(k, j)^{1/2j}` computed with a sliding window
/// against the prefix-difference path, at every grid `j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MInfinityCheck {
    #[serde(serialize_with = "serialize_real")]
    pub m_infinity: f64,
    #[serde(serialize_with = "serialize_real")]
    pub max_deviation: f64,
    pub agrees: bool,
}

/// `inf_k sum_{i<j} ln delta^2_{k+i} / 2j` by a sliding compensated window.
fn sliding_inf(log_delta2: &[f64], horizon: usize, j: usize) -> f64 {
    let mut window = CompensatedSum::new();
    for v in &log_delta2[..j] {
        window.add(*v);
    }
    let mut best = window.value();
    for k in 1..=horizon {
        window.add(log_delta2[k + j - 1]);
        window.add(-log_delta2[k - 1]);
        best = best.min(window.value());
    }
    best / (2 * j) as f64
}

/// Three radii with their sampled sequences.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Radii {
    pub horizon: usize,
    pub outer: RadiusEstimate,
    pub convergence: RadiusEstimate,
    pub inner: RadiusEstimate,
    pub m_infinity: MInfinityCheck,
}

/// `R`, `r` and `i` with their diagnostics.
pub fn radii(seq: &ScalarSequence, config: &SpectraConfig, exec: Exec) -> Result<Radii> {
    let tables = RadiusTables::new(seq, config.horizon, config.j_points)?;
    let grid = tables.grid().to_vec();
    let extremes = exec.map_slice(&grid, |&j| tables.window_extremes(j));
    let (infs, sups): (Vec<f64>, Vec<f64>) = extremes.into_iter().unzip();
    let l = &tables.log_bbeta;
    let conv: Vec<f64> = grid.iter().map(|&j| l[j] / j as f64).collect();

    let log_delta2: Vec<f64> = l.windows(2).map(|w| 2.0 * (w[1] - w[0])).collect();
    let sliding = exec.map_slice(&grid, |&j| sliding_inf(&log_delta2, tables.horizon(), j));
    let max_deviation = sliding
        .iter()
        .zip(&infs)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    let m_infinity = sliding.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp();

    let declared = analytic_radii(seq);
    let tol = config.stabilization;
    Ok(Radii {
        horizon: tables.horizon(),
        outer: RadiusEstimate::new(declared.map(|d| d.2), summarize(&grid, &sups, true, tol)),
        convergence: RadiusEstimate::new(declared.map(|d| d.1), summarize(&grid, &conv, false, tol)),
        inner: RadiusEstimate::new(declared.and_then(|d| d.0), summarize(&grid, &infs, false, tol)),
        m_infinity: MInfinityCheck {
            m_infinity,
            max_deviation,
            agrees: max_deviation <= config.m_infinity_tolerance,
        },
    })
}

/// `R`: the Taylor spectrum is the closed ball of this radius.
pub fn outer_radius(seq: &ScalarSequence, config: &SpectraConfig, exec: Exec) -> Result<RadiusEstimate> {
    Ok(radii(seq, config, exec)?.outer)
}

/// `r`: the largest open ball on which the kernel series converges.
pub fn convergence_radius(seq: &ScalarSequence, config: &SpectraConfig, exec: Exec) -> Result<RadiusEstimate> {
    Ok(radii(seq, config, exec)?.convergence)
}

/// `i`: the approximate point spectrum is the shell between `i` and `R`.
pub fn inner_radius(seq: &ScalarSequence, config: &SpectraConfig, exec: Exec) -> Result<RadiusEstimate> {
    Ok(radii(seq, config, exec)?.inner)
}

/// Inner and outer radius of the essential-spectrum shell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Shell {
    #[serde(serialize_with = "serialize_real")]
    pub inner: f64,
    #[serde(serialize_with = "serialize_real")]
    pub outer: f64,
    pub basis: Basis,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<(usize, usize)>,
}

/// `(liminf delta_k, limsup delta_k)`, available only once essential normality is affirmed.
pub fn essential_shell(seq: &ScalarSequence, horizon: usize, window: usize, exec: Exec) -> Result<Shell> {
    let gate = is_essentially_normal(seq, horizon, exec)?;
    if !gate.is_true() {
        let why = match (&gate.holds, &gate.witness) {
            (Some(false), Some(w)) => format!(
                "not essentially normal: |delta^2_(k+1) - delta^2_k| >= {} (k = {})",
                w.value, w.k
            ),
            (Some(false), None) => "not essentially normal".to_string(),
            _ => format!("essential normality not affirmed up to k = {}", gate.horizon.unwrap_or(horizon)),
        };
        return Err(Error::NotEssentiallyNormal(why));
    }
    match seq.asymptotics() {
        Some(Asymptotics::PowerLaw { limit_delta, .. }) | Some(Asymptotics::DoubleExponentialJumps { limit_delta, .. }) => {
            Ok(Shell {
                inner: limit_delta,
                outer: limit_delta,
                basis: Basis::Analytic,
                window: None,
            })
        }
        _ => {
            let h = seq.clamp_horizon(horizon + 1) - 1;
            let start = h.saturating_sub(window.max(1));
            let table = seq.delta2_table(h + 1)?;
            let tail = &table[start..=h];
            let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(Shell {
                inner: lo.sqrt(),
                outer: hi.sqrt(),
                basis: Basis::Sampled,
                window: Some((start, h)),
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallBoundary {
    OpenBall,
    ClosedBall,
    Inconclusive,
}

/// Heuristic verdict on whether `sigma_p(T^*)` contains its boundary sphere.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSpectrum {
    pub boundary: BallBoundary,
    /// Fitted exponent of `binom(m-1+k, k) r^{2k} / gamma_k` over `[K/2, K]`.
    #[serde(serialize_with = "crate::numeric::serialize_opt_real")]
    pub exponent: Option<f64>,
    pub basis: Basis,
    pub note: String,
}

/// Tests the kernel series at `|z| = r`: convergence puts the sphere in the
/// point spectrum of `T^*` (closed ball), divergence keeps it out (open ball).
pub fn point_spectrum_boundary(seq: &ScalarSequence, m: usize, horizon: usize, r: &RadiusEstimate) -> Result<PointSpectrum> {
    if m == 0 {
        return Err(Error::EmptyArity);
    }
    if r.tier != Tier::Analytic {
        return Ok(PointSpectrum {
            boundary: BallBoundary::Inconclusive,
            exponent: None,
            basis: Basis::Sampled,
            note: "r is only sampled; r^(2k) cannot be evaluated reliably".into(),
        });
    }
    if r.value == 0.0 {
        return Ok(PointSpectrum {
            boundary: BallBoundary::ClosedBall,
            exponent: None,
            basis: Basis::Analytic,
            note: "r = 0: the point spectrum of T* is {0}".into(),
        });
    }
    if !r.value.is_finite() {
        return Ok(PointSpectrum {
            boundary: BallBoundary::Inconclusive,
            exponent: None,
            basis: Basis::Analytic,
            note: "r is infinite".into(),
        });
    }
    let h = seq.clamp_horizon(horizon + 1) - 1;
    let l = seq.log_bbeta_prefix(h)?;
    let ln_r = r.value.ln();
    let start = (h / 2).max(1);
    let pts: Vec<(f64, f64)> = (start..=h)
        .map(|k| {
            let log_term = ln_binomial((m - 1 + k) as u64, k as u64) + 2.0 * k as f64 * ln_r - 2.0 * l[k];
            ((k as f64).ln(), log_term)
        })
        .collect();
    let exponent = crate::numeric::slope_of(&pts);
    let boundary = match exponent {
        Some(e) if e < -1.0 - crate::schatten::EXPONENT_MARGIN => BallBoundary::ClosedBall,
        Some(e) if e > -1.0 + crate::schatten::EXPONENT_MARGIN => BallBoundary::OpenBall,
        _ => BallBoundary::Inconclusive,
    };
    Ok(PointSpectrum {
        boundary,
        exponent,
        basis: Basis::Sampled,
        note: "tail-exponent heuristic".into(),
    })
}

/// Bounds on the factor `rho_kj = prod_{i=1..j} (k+1+i)/(k+m+i)` relating
/// multi-index norm ratios to scalar ones.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorReport {
    pub m: usize,
    pub j_max: usize,
    pub k_max: usize,
    /// Every `rho_kj^{1/2j}` lies in `[rho_0j^{1/2j}, 1]`.
    pub within_bounds: bool,
    /// `rho_0j^{1/2j}` is nondecreasing in `j`.
    pub monotone: bool,
    pub lower_at_j_max: f64,
}

pub fn combinatorial_factor_check(m: usize, j_max: usize, k_max: usize) -> Result<FactorReport> {
    if m == 0 || j_max == 0 {
        return Err(Error::InvalidParameter("need m >= 1 and j_max >= 1".into()));
    }
    let ln_rho = |k: usize, j: usize| -> f64 {
        let mut acc = CompensatedSum::new();
        for i in 1..=j {
            acc.add(((k + 1 + i) as f64).ln() - ((k + m + i) as f64).ln());
        }
        acc.value()
    };
    let mut within = true;
    let mut monotone = true;
    let mut prev_lower = 0.0;
    let mut lower = 0.0;
    for j in 1..=j_max {
        lower = (ln_rho(0, j) / (2 * j) as f64).exp();
        if lower + 1e-15 < prev_lower {
            monotone = false;
        }
        prev_lower = lower;
        for k in 0..=k_max {
            let v = (ln_rho(k, j) / (2 * j) as f64).exp();
            if v < lower * (1.0 - 1e-14) || v > 1.0 + 1e-14 {
                within = false;
            }
        }
    }
    Ok(FactorReport {
        m,
        j_max,
        k_max,
        within_bounds: within,
        monotone,
        lower_at_j_max: lower,
    })
}

/// Everything the spectral analysis reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralReport {
    pub family: String,
    pub m: usize,
    pub j_points: usize,
    #[serde(flatten)]
    pub radii: Radii,
    /// `i <= r <= R` on both the reported and the sampled values.
    pub ordered: bool,
    pub essentially_normal: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub essential_shell: Option<Shell>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub essential_refusal: Option<String>,
    pub point_spectrum: PointSpectrum,
}

pub fn spectral_report(seq: &ScalarSequence, m: usize, config: &SpectraConfig, exec: Exec) -> Result<SpectralReport> {
    let radii = radii(seq, config, exec)?;
    let h = radii.horizon;
    let window = config.window.unwrap_or(h / 10);
    let (essential_shell, essential_refusal) = match essential_shell(seq, config.horizon, window, exec) {
        Ok(s) => (Some(s), None),
        Err(Error::NotEssentiallyNormal(why)) => (None, Some(why)),
        Err(e) => return Err(e),
    };
    let point_spectrum = point_spectrum_boundary(seq, m, h, &radii.convergence)?;
    let ordered = ordered(&radii);
    Ok(SpectralReport {
        family: seq.label(),
        m,
        j_points: config.j_points,
        essentially_normal: is_essentially_normal(seq, config.horizon, exec)?,
        ordered,
        radii,
        essential_shell,
        essential_refusal,
        point_spectrum,
    })
}

fn ordered(r: &Radii) -> bool {
    let le = |a: f64, b: f64| a <= b * (1.0 + 1e-12) || a <= b + 1e-12;
    le(r.inner.value, r.convergence.value)
        && le(r.convergence.value, r.outer.value)
        && le(r.inner.sampled.estimate, r.convergence.sampled.estimate)
        && le(r.convergence.sampled.estimate, r.outer.sampled.estimate)
}

/// The j-sequences of a report as CSV rows `j,outer,convergence,inner`.
pub fn plot_rows(r: &Radii) -> Vec<(usize, f64, f64, f64)> {
    r.outer
        .sampled
        .samples
        .iter()
        .zip(&r.convergence.sampled.samples)
        .zip(&r.inner.sampled.samples)
        .map(|((o, c), i)| (o.j, o.value, c.value, i.value))
        .collect()
}

/// Tail power-law exponent of `values[k]` over `[K/2, K]` (used in tests and reports).
pub fn tail_exponent(values: &[f64]) -> Option<f64> {
    let h = values.len();
    let pts: Vec<(f64, f64)> = ((h / 2).max(1)..h).map(|k| (k as f64, values[k])).collect();
    loglog_slope(&pts)
}
