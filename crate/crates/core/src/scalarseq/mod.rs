//! One-variable data of a spherical shift: `delta^2_k`, the scalar weights
//! `bbeta_k` (kept in log space), `gamma_k = bbeta_k^2`, forward differences of
//! `gamma`, and the kernel coefficients.
//!
//! The normalisation `bbeta_0 = 1` is used throughout.

mod family;

use std::sync::RwLock;

use num::{BigRational, One, Signed, Zero};
use serde::Serialize;

pub use family::{
    parse_family_document, parse_tail, read_table, registry, Asymptotics, FamilyArgs, FamilySpec,
    PolynomialDecl, TailRule,
};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numeric::{binomial_exact, binomial_f64, ln_binomial, to_f64, CompensatedSum};
use crate::verdict::Basis;
use family::{poly_eval_f64, poly_mul, poly_shift, poly_sub, rho_eta_f64};

/// Precomputed floating-point parameters so `delta2` avoids bignum work.
#[derive(Clone, Debug)]
enum FloatForm {
    Hp { m: f64, p: f64 },
    Constant(f64),
    Polynomial(Vec<f64>),
    RhoEta,
    Alternating,
    Tabulated { values: Vec<f64>, tail: FloatTail },
}

/// `delta^2_k - delta^2_{k-1} = num(k) / den(k)` for `k >= from`, with the
/// numerator formed exactly so the float evaluation has no cancellation.
#[derive(Clone, Debug)]
struct GapForm {
    num: Vec<f64>,
    den: Vec<f64>,
    from: usize,
}

impl GapForm {
    fn new(spec: &FamilySpec) -> Option<Self> {
        let (n, d, from) = spec.rational_form()?;
        let (n_prev, d_prev) = (poly_shift(&n, -1), poly_shift(&d, -1));
        let num = poly_sub(&poly_mul(&n, &d_prev), &poly_mul(&n_prev, &d));
        let den = poly_mul(&d, &d_prev);
        Some(Self {
            num: floats(&num),
            den: floats(&den),
            from: from + 1,
        })
    }
}

#[derive(Clone, Debug)]
enum FloatTail {
    Error,
    Constant(f64),
    Rational { num: Vec<f64>, den: Vec<f64> },
}

/// Running compensated sum of `0.5 ln delta^2_k`; `values[k] = ln bbeta_k`.
#[derive(Clone, Debug)]
struct LogPrefix {
    values: Vec<f64>,
    acc: CompensatedSum,
}

impl Default for LogPrefix {
    fn default() -> Self {
        Self {
            values: vec![0.0],
            acc: CompensatedSum::new(),
        }
    }
}

/// Report of the boundedness check (`sup_k delta_k < infinity`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundedReport {
    /// `None` when the sampled sup is still growing at the horizon.
    pub bounded: Option<bool>,
    pub basis: Basis,
    #[serde(serialize_with = "crate::numeric::serialize_real")]
    pub sup_delta2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

/// The scalar weight data of a spherical shift, optionally rescaled
/// (`delta -> c * delta`).
#[derive(Debug)]
pub struct ScalarSequence {
    spec: FamilySpec,
    factor2: BigRational,
    factor2_f64: f64,
    delta_factor: f64,
    form: FloatForm,
    gap: Option<GapForm>,
    // ln bbeta_k for k = 0..len; extended on demand, values never change once written
    log_prefix: RwLock<LogPrefix>,
}

impl Clone for ScalarSequence {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            factor2: self.factor2.clone(),
            factor2_f64: self.factor2_f64,
            delta_factor: self.delta_factor,
            form: self.form.clone(),
            gap: self.gap.clone(),
            log_prefix: RwLock::new(self.log_prefix.read().expect("cache lock").clone()),
        }
    }
}

fn floats(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

impl ScalarSequence {
    pub fn new(spec: FamilySpec) -> Result<Self> {
        spec.validate()?;
        let form = match &spec {
            FamilySpec::HpSpace { m, p } => FloatForm::Hp {
                m: *m as f64,
                p: to_f64(p),
            },
            FamilySpec::ConstantDelta { c } => FloatForm::Constant(to_f64(&(c * c))),
            FamilySpec::PolynomialGamma { coefficients } => FloatForm::Polynomial(floats(coefficients)),
            FamilySpec::RhoEta => FloatForm::RhoEta,
            FamilySpec::AlternatingTwelve => FloatForm::Alternating,
            FamilySpec::Tabulated { values, tail } => {
                let tail = match tail {
                    TailRule::Error => FloatTail::Error,
                    TailRule::Constant(c) => FloatTail::Constant(to_f64(c)),
                    TailRule::LastValue => FloatTail::Constant(to_f64(&values[values.len() - 1])),
                    TailRule::Rational { num, den } => FloatTail::Rational {
                        num: floats(num),
                        den: floats(den),
                    },
                };
                FloatForm::Tabulated {
                    values: floats(values),
                    tail,
                }
            }
        };
        Ok(Self {
            gap: GapForm::new(&spec),
            spec,
            factor2: BigRational::one(),
            factor2_f64: 1.0,
            delta_factor: 1.0,
            form,
            log_prefix: RwLock::new(LogPrefix::default()),
        })
    }

    /// The same family with `delta` multiplied by `c`.
    pub fn scaled(&self, c: &BigRational) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::InvalidParameter("scale factor must be positive".into()));
        }
        let mut out = self.scaled_delta2(&(c * c))?;
        out.delta_factor = self.delta_factor * to_f64(c);
        Ok(out)
    }

    /// The same family with `delta^2` multiplied by `s2`.
    pub fn scaled_delta2(&self, s2: &BigRational) -> Result<Self> {
        if !s2.is_positive() {
            return Err(Error::InvalidParameter("scale factor must be positive".into()));
        }
        let factor2 = &self.factor2 * s2;
        let factor2_f64 = to_f64(&factor2);
        Ok(Self {
            spec: self.spec.clone(),
            delta_factor: self.delta_factor * to_f64(s2).sqrt(),
            factor2,
            factor2_f64,
            form: self.form.clone(),
            gap: self.gap.clone(),
            log_prefix: RwLock::new(LogPrefix::default()),
        })
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn is_rescaled(&self) -> bool {
        !self.factor2.is_one()
    }

    pub fn label(&self) -> String {
        if self.is_rescaled() {
            format!("{}*{}", crate::numeric::rational_string(&self.factor2), self.spec)
        } else {
            self.spec.to_string()
        }
    }

    pub fn horizon(&self) -> Option<usize> {
        self.spec.horizon()
    }

    /// Fails when indices `0..n` are not all evaluable.
    pub fn ensure_horizon(&self, n: usize) -> Result<()> {
        match self.horizon() {
            Some(len) if n > len => Err(Error::TableOutOfRange { k: n - 1, len }),
            _ => Ok(()),
        }
    }

    /// `want` cut down to the evaluable range.
    pub fn clamp_horizon(&self, want: usize) -> usize {
        self.horizon().map_or(want, |len| len.min(want))
    }

    fn base_delta2(&self, k: usize) -> Result<f64> {
        Ok(match &self.form {
            FloatForm::Hp { m, p } => (k as f64 + m) / (k as f64 + p),
            FloatForm::Constant(v) => *v,
            FloatForm::Polynomial(c) => poly_eval_f64(c, k as f64 + 1.0) / poly_eval_f64(c, k as f64),
            FloatForm::RhoEta => rho_eta_f64(k),
            FloatForm::Alternating => {
                if k.is_multiple_of(2) {
                    1.0 / 3.0
                } else {
                    0.25
                }
            }
            FloatForm::Tabulated { values, tail } => match values.get(k) {
                Some(v) => *v,
                None => match tail {
                    FloatTail::Error => return Err(Error::TableOutOfRange { k, len: values.len() }),
                    FloatTail::Constant(c) => *c,
                    FloatTail::Rational { num, den } => poly_eval_f64(num, k as f64) / poly_eval_f64(den, k as f64),
                },
            },
        })
    }

    /// `delta^2_k`.
    pub fn delta2(&self, k: usize) -> Result<f64> {
        let v = self.base_delta2(k)?;
        Ok(if self.factor2_f64 == 1.0 { v } else { v * self.factor2_f64 })
    }

    pub fn delta2_exact(&self, k: usize) -> Result<BigRational> {
        let v = self.spec.delta2_exact(k)?;
        Ok(if self.factor2.is_one() { v } else { v * &self.factor2 })
    }

    /// `delta^2_k` for `k = 0..n`.
    pub fn delta2_table(&self, n: usize) -> Result<Vec<f64>> {
        self.ensure_horizon(n)?;
        (0..n).map(|k| self.delta2(k)).collect()
    }

    /// `|delta^2_k - delta^2_{k-1}|` for `k >= 1`, free of cancellation.
    pub fn delta2_gap(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidParameter("the first difference starts at k = 1".into()));
        }
        let base = match (&self.gap, &self.form) {
            (Some(g), _) if k >= g.from => {
                let x = k as f64;
                (poly_eval_f64(&g.num, x) / poly_eval_f64(&g.den, x)).abs()
            }
            // dyadic values, so the float difference is exact
            (_, FloatForm::RhoEta) => rho_eta_f64(k) - rho_eta_f64(k - 1),
            (_, FloatForm::Alternating) => 1.0 / 12.0,
            _ => to_f64(&(self.spec.delta2_exact(k)? - self.spec.delta2_exact(k - 1)?).abs()),
        };
        Ok(base * self.factor2_f64)
    }

    /// [`Self::delta2_gap`] for `k = 0..n`, with entry 0 set to 0.
    pub fn delta2_gap_table(&self, n: usize, exec: Exec) -> Result<Vec<f64>> {
        self.ensure_horizon(n)?;
        let gaps = exec.map_range(0..n, |k| if k == 0 { Ok(0.0) } else { self.delta2_gap(k) });
        gaps.into_iter().collect()
    }

    /// `ln bbeta_k` for `k = 0..=upto`, accumulated as `sum 0.5 ln delta^2` in index order.
    pub fn log_bbeta_prefix(&self, upto: usize) -> Result<Vec<f64>> {
        {
            let cache = self.log_prefix.read().expect("cache lock");
            if cache.values.len() > upto {
                return Ok(cache.values[..=upto].to_vec());
            }
        }
        self.ensure_horizon(upto)?;
        let mut cache = self.log_prefix.write().expect("cache lock");
        while cache.values.len() <= upto {
            let k = cache.values.len() - 1;
            cache.acc.add(0.5 * self.delta2(k)?.ln());
            let next = cache.acc.value();
            cache.values.push(next);
        }
        Ok(cache.values[..=upto].to_vec())
    }

    pub fn log_bbeta(&self, k: usize) -> Result<f64> {
        {
            let cache = self.log_prefix.read().expect("cache lock");
            if let Some(v) = cache.values.get(k) {
                return Ok(*v);
            }
        }
        Ok(self.log_bbeta_prefix(k)?[k])
    }

    /// `gamma_k = bbeta_k^2`; may underflow or overflow for long horizons, see [`Self::log_gamma`].
    pub fn gamma(&self, k: usize) -> Result<f64> {
        Ok(self.log_gamma(k)?.exp())
    }

    pub fn log_gamma(&self, k: usize) -> Result<f64> {
        Ok(2.0 * self.log_bbeta(k)?)
    }

    pub fn gamma_exact(&self, k: usize) -> Result<BigRational> {
        Ok(self.gamma_exact_window(k, 1)?.remove(0))
    }

    /// Exact `gamma_k, ..., gamma_{k+len-1}`.
    pub fn gamma_exact_window(&self, k: usize, len: usize) -> Result<Vec<BigRational>> {
        self.ensure_horizon(k + len.saturating_sub(1))?;
        let mut first = match self.spec.gamma_exact_closed(k) {
            Some(g) => g,
            None => {
                let mut acc = BigRational::one();
                for i in 0..k {
                    acc *= self.spec.delta2_exact(i)?;
                }
                acc
            }
        };
        if !self.factor2.is_one() {
            first *= num::pow(self.factor2.clone(), k);
        }
        let mut out = Vec::with_capacity(len);
        out.push(first);
        for s in 1..len {
            let next = &out[s - 1] * self.delta2_exact(k + s - 1)?;
            out.push(next);
        }
        Ok(out)
    }

    /// `nabla^q gamma_k = sum_s (-1)^{q-s} binom(q,s) gamma_{k+s}`, exactly.
    pub fn nabla_gamma_exact(&self, k: usize, q: usize) -> Result<BigRational> {
        let g = self.gamma_exact_window(k, q + 1)?;
        Ok(alternating_combination(&g, q))
    }

    /// `nabla^q gamma_k / gamma_k`, exactly, from the `q` ratios `delta^2_k .. delta^2_{k+q-1}`.
    ///
    /// Cheap for any `k`: it never forms `gamma_k` itself.
    pub fn nabla_ratio_exact(&self, k: usize, q: usize) -> Result<BigRational> {
        let mut window = Vec::with_capacity(q + 1);
        window.push(BigRational::one());
        for s in 1..=q {
            let next = &window[s - 1] * self.delta2_exact(k + s - 1)?;
            window.push(next);
        }
        Ok(alternating_combination(&window, q))
    }

    /// `nabla^q gamma_k` in floating point.
    pub fn nabla_gamma(&self, k: usize, q: usize) -> Result<f64> {
        let pre = self.log_bbeta_prefix(k + q)?;
        let ratio: f64 = (0..=q)
            .map(|s| {
                let sign = if (q - s).is_multiple_of(2) { 1.0 } else { -1.0 };
                sign * binomial_f64(q as u64, s as u64) * (2.0 * (pre[k + s] - pre[k])).exp()
            })
            .sum();
        Ok(ratio * (2.0 * pre[k]).exp())
    }

    /// Kernel coefficient `a_k = binom(m-1+k, k) / gamma_k`.
    pub fn kernel_coefficient(&self, k: usize, m: usize) -> Result<f64> {
        if m == 0 {
            return Err(Error::EmptyArity);
        }
        Ok((ln_binomial((m - 1 + k) as u64, k as u64) - self.log_gamma(k)?).exp())
    }

    pub fn kernel_coefficient_exact(&self, k: usize, m: usize) -> Result<BigRational> {
        if m == 0 {
            return Err(Error::EmptyArity);
        }
        let b = BigRational::from_integer(binomial_exact((m - 1 + k) as u64, k as u64));
        Ok(b / self.gamma_exact(k)?)
    }

    /// Declared asymptotics, rescaled to this sequence.
    pub fn asymptotics(&self) -> Option<Asymptotics> {
        let s = self.factor2_f64;
        let d = self.delta_factor;
        self.spec.asymptotics().map(|a| match a {
            Asymptotics::PowerLaw {
                limit,
                limit_delta,
                coeff,
                order,
            } => Asymptotics::PowerLaw {
                limit: limit * s,
                limit_delta: limit_delta * d,
                coeff: coeff * s,
                order,
            },
            Asymptotics::DoubleExponentialJumps { limit, limit_delta } => Asymptotics::DoubleExponentialJumps {
                limit: limit * s,
                limit_delta: limit_delta * d,
            },
            Asymptotics::Periodic { values } => Asymptotics::Periodic {
                values: values.into_iter().map(|v| v * s).collect(),
            },
            Asymptotics::Unbounded => Asymptotics::Unbounded,
        })
    }

    pub fn declared_sup_delta2(&self) -> Option<BigRational> {
        self.spec.declared_sup_delta2().map(|v| v * &self.factor2)
    }

    pub fn declared_nondecreasing(&self) -> Option<bool> {
        self.spec.declared_nondecreasing()
    }

    pub fn gamma_polynomial(&self) -> PolynomialDecl {
        match self.spec.gamma_polynomial() {
            PolynomialDecl::Degree(_) if self.is_rescaled() => PolynomialDecl::NotPolynomial,
            other => other,
        }
    }

    /// Largest `delta^2_k` over `k < horizon`, in floating point.
    pub fn sampled_sup_delta2(&self, horizon: usize) -> Result<f64> {
        Ok(self.delta2_table(horizon)?.into_iter().fold(0.0, f64::max))
    }

    /// Exact `max_{k < horizon} delta^2_k`.
    pub fn sampled_sup_delta2_exact(&self, horizon: usize) -> Result<BigRational> {
        self.ensure_horizon(horizon)?;
        let mut best = BigRational::zero();
        for k in 0..horizon {
            let v = self.delta2_exact(k)?;
            if v > best {
                best = v;
            }
        }
        Ok(best)
    }

    /// Whether `sup_k delta_k` is finite.
    pub fn is_bounded(&self, horizon: usize) -> Result<BoundedReport> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        match self.asymptotics() {
            Some(Asymptotics::Unbounded) => Ok(BoundedReport {
                bounded: Some(false),
                basis: Basis::Analytic,
                sup_delta2: f64::INFINITY,
                horizon: None,
            }),
            Some(_) => {
                let sup = match self.declared_sup_delta2() {
                    Some(s) => to_f64(&s),
                    None => {
                        let limit = match self.asymptotics() {
                            Some(Asymptotics::PowerLaw { limit, .. }) => limit,
                            _ => 0.0,
                        };
                        let h = self.horizon().map_or(horizon, |len| len.min(horizon));
                        self.sampled_sup_delta2(h)?.max(limit)
                    }
                };
                Ok(BoundedReport {
                    bounded: Some(true),
                    basis: Basis::Analytic,
                    sup_delta2: sup,
                    horizon: None,
                })
            }
            None => {
                let h = self.horizon().map_or(horizon, |len| len.min(horizon));
                let table = self.delta2_table(h)?;
                let sup = table.iter().copied().fold(0.0, f64::max);
                let cut = h - h / 10;
                let early = table[..cut.max(1)].iter().copied().fold(0.0, f64::max);
                // a sup that is still being pushed up at the end of the window is no evidence
                let bounded = if h < 10 || early >= sup { Some(true) } else { None };
                Ok(BoundedReport {
                    bounded,
                    basis: Basis::Sampled,
                    sup_delta2: sup,
                    horizon: Some(h),
                })
            }
        }
    }
}

/// `sum_{s=0}^{q} (-1)^{q-s} binom(q,s) values[s]`.
fn alternating_combination(values: &[BigRational], q: usize) -> BigRational {
    let mut acc = BigRational::zero();
    for (s, v) in values.iter().enumerate().take(q + 1) {
        let b = BigRational::from_integer(binomial_exact(q as u64, s as u64));
        if (q - s).is_multiple_of(2) {
            acc += b * v;
        } else {
            acc -= b * v;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigInt;

    fn rational(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn int(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn hp(m: u32, p: BigRational) -> ScalarSequence {
        ScalarSequence::new(FamilySpec::HpSpace { m, p }).unwrap()
    }

    #[test]
    fn hp_delta2_values() {
        let szego = hp(2, int(2));
        for k in 0..50 {
            assert_eq!(szego.delta2(k).unwrap(), 1.0);
            assert_eq!(szego.delta2_exact(k).unwrap(), int(1));
        }
        assert_eq!(hp(2, int(1)).delta2(0).unwrap(), 2.0);
    }

    #[test]
    fn alternating_twelve_ratios() {
        let s = ScalarSequence::new(FamilySpec::AlternatingTwelve).unwrap();
        for k in 0..20 {
            let want = if k % 2 == 0 { rational(1, 3) } else { rational(1, 4) };
            assert_eq!(s.delta2_exact(k).unwrap(), want);
            // the closed-form gamma agrees with the running product
            assert_eq!(
                s.gamma_exact(k + 1).unwrap(),
                s.gamma_exact(k).unwrap() * s.delta2_exact(k).unwrap()
            );
        }
        assert_eq!(s.nabla_gamma_exact(0, 1).unwrap(), rational(-2, 3));
    }

    #[test]
    fn gamma_closed_forms() {
        let s = ScalarSequence::new(FamilySpec::HpSpace { m: 2, p: int(2) }).unwrap();
        assert_eq!(s.gamma(37).unwrap(), 1.0);
        let da = hp(2, int(1));
        let bergman = hp(2, int(3));
        for k in 0..60 {
            assert_eq!(da.gamma_exact(k).unwrap(), int(k as i64 + 1));
            assert_eq!(bergman.gamma_exact(k).unwrap(), rational(2, k as i64 + 2));
            assert!((da.gamma(k).unwrap() / (k as f64 + 1.0) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn forward_differences() {
        let szego = hp(3, int(3));
        let da = hp(2, int(1));
        for k in 0..30 {
            for q in 1..5 {
                assert!(szego.nabla_gamma_exact(k, q).unwrap().is_zero());
            }
            assert_eq!(da.nabla_gamma_exact(k, 1).unwrap(), int(1));
            assert!(da.nabla_gamma_exact(k, 2).unwrap().is_zero());
            assert!((da.nabla_gamma(k, 1).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn nabla_ratio_matches_direct_difference() {
        let s = hp(3, rational(5, 2));
        for k in 0..25 {
            for q in 1..6 {
                assert_eq!(
                    s.nabla_ratio_exact(k, q).unwrap() * s.gamma_exact(k).unwrap(),
                    s.nabla_gamma_exact(k, q).unwrap()
                );
            }
        }
    }

    #[test]
    fn kernel_coefficients() {
        let szego = hp(2, int(2));
        let da = hp(2, int(1));
        for k in 0..40 {
            assert!((szego.kernel_coefficient(k, 2).unwrap() - (k as f64 + 1.0)).abs() < 1e-10);
            assert_eq!(da.kernel_coefficient_exact(k, 2).unwrap(), int(1));
        }
        let rho = ScalarSequence::new(FamilySpec::RhoEta).unwrap();
        assert_eq!(rho.kernel_coefficient(0, 3).unwrap(), 1.0);
    }

    #[test]
    fn boundedness() {
        let r = hp(2, int(1)).is_bounded(100).unwrap();
        assert_eq!(r.bounded, Some(true));
        assert_eq!(r.basis, Basis::Analytic);
        assert_eq!(r.sup_delta2, 2.0);
        assert_eq!(hp(3, int(5)).is_bounded(10).unwrap().sup_delta2, 1.0);
        let c = ScalarSequence::new(FamilySpec::ConstantDelta { c: rational(3, 2) }).unwrap();
        assert_eq!(c.is_bounded(10).unwrap().sup_delta2, 2.25);
        let rho = ScalarSequence::new(FamilySpec::RhoEta).unwrap().is_bounded(10).unwrap();
        assert_eq!((rho.bounded, rho.sup_delta2), (Some(true), 3.0));
        let table = ScalarSequence::new(FamilySpec::Tabulated {
            values: (1..=50).map(int).collect(),
            tail: TailRule::Error,
        })
        .unwrap();
        let r = table.is_bounded(50).unwrap();
        assert_eq!((r.bounded, r.basis), (None, Basis::Sampled));
        let unbounded = ScalarSequence::new(FamilySpec::Tabulated {
            values: vec![],
            tail: TailRule::Rational {
                num: vec![int(1), int(0), int(1)],
                den: vec![int(1), int(1)],
            },
        })
        .unwrap();
        assert_eq!(unbounded.is_bounded(10).unwrap().bounded, Some(false));
    }

    #[test]
    fn tabulated_overrun() {
        let t = ScalarSequence::new(FamilySpec::Tabulated {
            values: vec![int(1), int(2), int(3)],
            tail: TailRule::Error,
        })
        .unwrap();
        assert!(t.log_bbeta(3).is_ok());
        assert!(matches!(t.log_bbeta(4), Err(Error::TableOutOfRange { .. })));
        assert!(t.delta2_table(4).is_err());
    }

    #[test]
    fn gaps_match_exact_differences() {
        let mut seqs: Vec<ScalarSequence> = registry(3)
            .into_iter()
            .map(|(_, spec)| ScalarSequence::new(spec).unwrap())
            .collect();
        seqs.push(ScalarSequence::new(FamilySpec::PolynomialGamma { coefficients: vec![int(2), int(0), int(3), int(1)] }).unwrap());
        seqs.push(
            ScalarSequence::new(FamilySpec::Tabulated {
                values: vec![int(2), rational(1, 7), int(5)],
                tail: TailRule::Rational {
                    num: vec![int(3), int(1)],
                    den: vec![int(1), int(1)],
                },
            })
            .unwrap(),
        );
        seqs.push(hp(2, rational(7, 3)).scaled(&rational(2, 3)).unwrap());
        for s in &seqs {
            for k in (1..200).chain([1000, 54_321, 99_999]) {
                let exact = to_f64(&(s.delta2_exact(k).unwrap() - s.delta2_exact(k - 1).unwrap()).abs());
                let fast = s.delta2_gap(k).unwrap();
                assert!((fast - exact).abs() <= 1e-12 * exact, "{} k={k}: {fast} vs {exact}", s.label());
            }
        }
    }

    #[test]
    fn scaling_multiplies_delta2() {
        let base = hp(2, int(3));
        let s = base.scaled(&int(2)).unwrap();
        for k in 0..10 {
            assert_eq!(s.delta2_exact(k).unwrap(), base.delta2_exact(k).unwrap() * int(4));
        }
        assert!(s.is_rescaled());
        assert_eq!(s.gamma_polynomial(), PolynomialDecl::NotPolynomial);
    }
}
