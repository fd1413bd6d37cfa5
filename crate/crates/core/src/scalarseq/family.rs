//! Closed-form families of scalar weight data and the key/value family file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{parse_rational, rational_string, to_f64};

/// How a tabulated sequence continues past its last stored value.
#[derive(Clone, Debug, PartialEq)]
pub enum TailRule {
    /// Indices beyond the table are an error.
    Error,
    Constant(BigRational),
    LastValue,
    /// `delta^2_k = num(k) / den(k)`; coefficients in ascending powers of `k`.
    Rational {
        num: Vec<BigRational>,
        den: Vec<BigRational>,
    },
}

/// The families a scalar sequence can be built from. All of them are
/// rational-valued, so every family has an exact evaluator.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilySpec {
    /// `delta^2_k = (k + m) / (k + p)`, the kernel `(1 - <z,w>)^{-p}` on the m-ball.
    HpSpace { m: u32, p: BigRational },
    /// `delta_k = c`.
    ConstantDelta { c: BigRational },
    /// `gamma_k = S(k) / S(0)`; coefficients in ascending powers of `k`.
    PolynomialGamma { coefficients: Vec<BigRational> },
    /// `delta^2_k = rho_k`, `rho_0 = 1`, `rho_{k+1} = rho_k + eta_k`,
    /// `eta_k = 2^{-l}` when `k = 2^{2^l}` and zero otherwise.
    RhoEta,
    /// `gamma_{2k} = 12^{-k}`, `gamma_{2k+1} = 12^{-k} / 3`.
    AlternatingTwelve,
    Tabulated { values: Vec<BigRational>, tail: TailRule },
}

/// Declared large-k behaviour of `delta^2`, used by the analytic verdict paths.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Asymptotics {
    /// `delta^2_k = limit + coeff * k^{-order} + o(k^{-order})` with regularly
    /// varying differences `|delta^2_k - delta^2_{k-1}| ~ |coeff| * order * k^{-order-1}`.
    /// `coeff = 0` means `delta^2` is eventually equal to `limit`.
    PowerLaw {
        limit: f64,
        limit_delta: f64,
        coeff: f64,
        order: f64,
    },
    /// `delta^2` increases to `limit` through isolated jumps of size `2^{-l}`
    /// located right after `k = 2^{2^l}`.
    DoubleExponentialJumps { limit: f64, limit_delta: f64 },
    /// `delta^2` cycles through `values` forever.
    Periodic { values: Vec<f64> },
    Unbounded,
}

/// What the family says about `gamma` being a polynomial in `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolynomialDecl {
    Degree(usize),
    NotPolynomial,
    Unknown,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub(crate) fn poly_eval(coeffs: &[BigRational], x: &BigRational) -> BigRational {
    coeffs
        .iter()
        .rev()
        .fold(BigRational::zero(), |acc, c| acc * x + c)
}

pub(crate) fn poly_eval_f64(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn trimmed(coeffs: &[BigRational]) -> &[BigRational] {
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1].is_zero() {
        n -= 1;
    }
    &coeffs[..n]
}

pub(crate) fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    out
}

/// Coefficients of `k -> p(k + shift)`.
pub(crate) fn poly_shift(coeffs: &[BigRational], shift: i64) -> Vec<BigRational> {
    let linear = [int(shift), int(1)];
    coeffs
        .iter()
        .rev()
        .fold(vec![], |acc, c| poly_sub(&poly_mul(&acc, &linear), &[-c.clone()]))
}

/// Beyond this integer every root of the polynomial lies behind us (Cauchy bound).
fn root_free_from(coeffs: &[BigRational]) -> usize {
    let c = trimmed(coeffs);
    if c.len() <= 1 {
        return 0;
    }
    let lead = c[c.len() - 1].abs();
    let bound = c[..c.len() - 1]
        .iter()
        .map(|a| to_f64(&(a.abs() / &lead)))
        .fold(0.0f64, f64::max);
    (bound + 2.0).ceil().min(1e7) as usize
}

/// True when the polynomial is positive at every integer `k >= from`.
fn positive_on_tail(coeffs: &[BigRational], from: usize) -> bool {
    let c = trimmed(coeffs);
    if c.is_empty() || !c[c.len() - 1].is_positive() {
        return false;
    }
    let last = root_free_from(c).max(from);
    (from..=last).all(|k| poly_eval(c, &int(k as i64)).is_positive())
}

/// sum_{l : 2^{2^l} < k} 2^{-l}, i.e. rho_k - 1.
pub(crate) fn rho_eta_excess(k: usize) -> BigRational {
    let mut acc = BigRational::zero();
    let k = k as u128;
    for l in 0..7u32 {
        let pos = 1u128 << (1u32 << l);
        if pos < k {
            acc += BigRational::new(BigInt::one(), BigInt::from(1u64 << l));
        } else {
            break;
        }
    }
    acc
}

pub(crate) fn rho_eta_f64(k: usize) -> f64 {
    let mut acc = 1.0;
    let k = k as u128;
    for l in 0..7u32 {
        let pos = 1u128 << (1u32 << l);
        if pos < k {
            acc += (-(l as f64)).exp2();
        } else {
            break;
        }
    }
    acc
}

impl FamilySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            FamilySpec::HpSpace { m, p } => {
                if *m == 0 {
                    return Err(Error::EmptyArity);
                }
                if !p.is_positive() {
                    return Err(Error::InvalidFamily(format!("hp: p must be positive, got {p}")));
                }
            }
            FamilySpec::ConstantDelta { c } => {
                if !c.is_positive() {
                    return Err(Error::InvalidFamily(format!("constant: c must be positive, got {c}")));
                }
            }
            FamilySpec::PolynomialGamma { coefficients } => {
                if !positive_on_tail(coefficients, 0) {
                    return Err(Error::InvalidFamily(
                        "polynomial: gamma coefficients must give a polynomial positive on every k >= 0".into(),
                    ));
                }
            }
            FamilySpec::RhoEta | FamilySpec::AlternatingTwelve => {}
            FamilySpec::Tabulated { values, tail } => {
                if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !v.is_positive()) {
                    return Err(Error::NonPositive {
                        k,
                        value: rational_string(v),
                    });
                }
                match tail {
                    TailRule::Error => {
                        if values.is_empty() {
                            return Err(Error::InvalidFamily("tabulated: empty table and no tail rule".into()));
                        }
                    }
                    TailRule::LastValue => {
                        if values.is_empty() {
                            return Err(Error::InvalidFamily("tabulated: last-value tail needs a table".into()));
                        }
                    }
                    TailRule::Constant(c) => {
                        if !c.is_positive() {
                            return Err(Error::InvalidFamily("tabulated: tail constant must be positive".into()));
                        }
                    }
                    TailRule::Rational { num, den } => {
                        let from = values.len();
                        if !positive_on_tail(num, from) || !positive_on_tail(den, from) {
                            return Err(Error::InvalidFamily(
                                "tabulated: rational tail must have numerator and denominator positive past the table"
                                    .into(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of evaluable indices, when finite.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            FamilySpec::Tabulated {
                values,
                tail: TailRule::Error,
            } => Some(values.len()),
            _ => None,
        }
    }

    pub fn delta2_exact(&self, k: usize) -> Result<BigRational> {
        Ok(match self {
            FamilySpec::HpSpace { m, p } => int(k as i64 + *m as i64) / (int(k as i64) + p),
            FamilySpec::ConstantDelta { c } => c * c,
            FamilySpec::PolynomialGamma { coefficients } => {
                poly_eval(coefficients, &int(k as i64 + 1)) / poly_eval(coefficients, &int(k as i64))
            }
            FamilySpec::RhoEta => BigRational::one() + rho_eta_excess(k),
            FamilySpec::AlternatingTwelve => {
                if k.is_multiple_of(2) {
                    rat(1, 3)
                } else {
                    rat(1, 4)
                }
            }
            FamilySpec::Tabulated { values, tail } => {
                if let Some(v) = values.get(k) {
                    v.clone()
                } else {
                    match tail {
                        TailRule::Error => {
                            return Err(Error::TableOutOfRange { k, len: values.len() })
                        }
                        TailRule::Constant(c) => c.clone(),
                        TailRule::LastValue => values[values.len() - 1].clone(),
                        TailRule::Rational { num, den } => {
                            let x = int(k as i64);
                            poly_eval(num, &x) / poly_eval(den, &x)
                        }
                    }
                }
            }
        })
    }

    /// `(N, D, from)` with `delta^2_k = N(k)/D(k)` for every `k >= from`.
    pub(crate) fn rational_form(&self) -> Option<(Vec<BigRational>, Vec<BigRational>, usize)> {
        Some(match self {
            FamilySpec::HpSpace { m, p } => (vec![int(*m as i64), int(1)], vec![p.clone(), int(1)], 0),
            FamilySpec::ConstantDelta { c } => (vec![c * c], vec![int(1)], 0),
            FamilySpec::PolynomialGamma { coefficients } => (poly_shift(coefficients, 1), coefficients.clone(), 0),
            FamilySpec::RhoEta | FamilySpec::AlternatingTwelve => return None,
            FamilySpec::Tabulated { values, tail } => match tail {
                TailRule::Error => return None,
                TailRule::Constant(c) => (vec![c.clone()], vec![int(1)], values.len()),
                TailRule::LastValue => (vec![values[values.len() - 1].clone()], vec![int(1)], values.len()),
                TailRule::Rational { num, den } => (num.clone(), den.clone(), values.len()),
            },
        })
    }

    /// Closed-form `gamma_k` when one is cheaper than the running product.
    pub(crate) fn gamma_exact_closed(&self, k: usize) -> Option<BigRational> {
        match self {
            FamilySpec::ConstantDelta { c } => Some(num::pow(c * c, k)),
            FamilySpec::PolynomialGamma { coefficients } => {
                Some(poly_eval(coefficients, &int(k as i64)) / poly_eval(coefficients, &BigRational::zero()))
            }
            FamilySpec::AlternatingTwelve => {
                let base = BigRational::new(BigInt::one(), num::pow(BigInt::from(12), k / 2));
                Some(if k.is_multiple_of(2) { base } else { base / int(3) })
            }
            _ => None,
        }
    }

    pub fn asymptotics(&self) -> Option<Asymptotics> {
        Some(match self {
            FamilySpec::HpSpace { m, p } => {
                let coeff = *m as f64 - to_f64(p);
                Asymptotics::PowerLaw {
                    limit: 1.0,
                    limit_delta: 1.0,
                    coeff,
                    order: 1.0,
                }
            }
            FamilySpec::ConstantDelta { c } => {
                let cf = to_f64(c);
                Asymptotics::PowerLaw {
                    limit: to_f64(&(c * c)),
                    limit_delta: cf,
                    coeff: 0.0,
                    order: 1.0,
                }
            }
            FamilySpec::PolynomialGamma { coefficients } => {
                let d = trimmed(coefficients).len().saturating_sub(1);
                Asymptotics::PowerLaw {
                    limit: 1.0,
                    limit_delta: 1.0,
                    coeff: d as f64,
                    order: 1.0,
                }
            }
            FamilySpec::RhoEta => Asymptotics::DoubleExponentialJumps {
                limit: 3.0,
                limit_delta: 3f64.sqrt(),
            },
            FamilySpec::AlternatingTwelve => Asymptotics::Periodic {
                values: vec![1.0 / 3.0, 0.25],
            },
            FamilySpec::Tabulated { values, tail } => match tail {
                TailRule::Error => return None,
                TailRule::Constant(c) => constant_law(c),
                TailRule::LastValue => constant_law(&values[values.len() - 1]),
                TailRule::Rational { num, den } => rational_law(num, den),
            },
        })
    }

    /// Declared `sup_k delta^2_k` (attained or approached in the limit).
    pub fn declared_sup_delta2(&self) -> Option<BigRational> {
        match self {
            FamilySpec::HpSpace { m, p } => {
                let ratio = int(*m as i64) / p;
                Some(if ratio > BigRational::one() { ratio } else { BigRational::one() })
            }
            FamilySpec::ConstantDelta { c } => Some(c * c),
            FamilySpec::RhoEta => Some(int(3)),
            FamilySpec::AlternatingTwelve => Some(rat(1, 3)),
            _ => None,
        }
    }

    /// Declared monotonicity of `delta_k` (nondecreasing or not).
    pub fn declared_nondecreasing(&self) -> Option<bool> {
        match self {
            FamilySpec::HpSpace { m, p } => Some(*p >= int(*m as i64)),
            FamilySpec::ConstantDelta { .. } | FamilySpec::RhoEta => Some(true),
            FamilySpec::AlternatingTwelve => Some(false),
            _ => None,
        }
    }

    pub fn gamma_polynomial(&self) -> PolynomialDecl {
        match self {
            FamilySpec::HpSpace { m, p } => {
                // gamma_k = (m)_k / (p)_k is a polynomial exactly when p is an integer <= m
                if p.is_integer() && *p <= int(*m as i64) {
                    PolynomialDecl::Degree((*m as i64 - p.to_integer().to_i64().unwrap_or(0)) as usize)
                } else {
                    PolynomialDecl::NotPolynomial
                }
            }
            FamilySpec::ConstantDelta { c } => {
                if c.is_one() {
                    PolynomialDecl::Degree(0)
                } else {
                    PolynomialDecl::NotPolynomial
                }
            }
            FamilySpec::PolynomialGamma { coefficients } => {
                PolynomialDecl::Degree(trimmed(coefficients).len().saturating_sub(1))
            }
            FamilySpec::RhoEta | FamilySpec::AlternatingTwelve => PolynomialDecl::NotPolynomial,
            FamilySpec::Tabulated { .. } => PolynomialDecl::Unknown,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::HpSpace { .. } => "hp",
            FamilySpec::ConstantDelta { .. } => "constant",
            FamilySpec::PolynomialGamma { .. } => "polynomial",
            FamilySpec::RhoEta => "rho-eta",
            FamilySpec::AlternatingTwelve => "alternating-twelve",
            FamilySpec::Tabulated { .. } => "tabulated",
        }
    }

    /// Parameters rendered as exact strings, for report echoes.
    pub fn parameters(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let join = |v: &[BigRational]| v.iter().map(rational_string).collect::<Vec<_>>().join(",");
        match self {
            FamilySpec::HpSpace { m, p } => {
                out.insert("m".into(), m.to_string());
                out.insert("p".into(), rational_string(p));
            }
            FamilySpec::ConstantDelta { c } => {
                out.insert("c".into(), rational_string(c));
            }
            FamilySpec::PolynomialGamma { coefficients } => {
                out.insert("gamma_coeffs".into(), join(coefficients));
            }
            FamilySpec::RhoEta | FamilySpec::AlternatingTwelve => {}
            FamilySpec::Tabulated { values, tail } => {
                out.insert("table_len".into(), values.len().to_string());
                let t = match tail {
                    TailRule::Error => "error".to_string(),
                    TailRule::Constant(c) => format!("constant:{}", rational_string(c)),
                    TailRule::LastValue => "last".to_string(),
                    TailRule::Rational { num, den } => format!("rational:{};{}", join(num), join(den)),
                };
                out.insert("tail".into(), t);
            }
        }
        out
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        let params = self.parameters();
        if !params.is_empty() {
            let body: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "({})", body.join(","))?;
        }
        Ok(())
    }
}

fn constant_law(c: &BigRational) -> Asymptotics {
    let limit = to_f64(c);
    Asymptotics::PowerLaw {
        limit,
        limit_delta: limit.sqrt(),
        coeff: 0.0,
        order: 1.0,
    }
}

fn rational_law(num: &[BigRational], den: &[BigRational]) -> Asymptotics {
    let num = trimmed(num);
    let den = trimmed(den);
    let (dn, dd) = (num.len() - 1, den.len() - 1);
    if dn > dd {
        return Asymptotics::Unbounded;
    }
    let lead_den = &den[dd];
    if dn < dd {
        return Asymptotics::PowerLaw {
            limit: 0.0,
            limit_delta: 0.0,
            coeff: to_f64(&(&num[dn] / lead_den)),
            order: (dd - dn) as f64,
        };
    }
    let limit = &num[dn] / lead_den;
    // remainder num - limit * den has degree < dd
    let rem: Vec<BigRational> = (0..=dd)
        .map(|i| num.get(i).cloned().unwrap_or_else(BigRational::zero) - &limit * &den[i])
        .collect();
    let rem = trimmed(&rem);
    let lf = to_f64(&limit);
    if rem.is_empty() {
        return Asymptotics::PowerLaw {
            limit: lf,
            limit_delta: lf.sqrt(),
            coeff: 0.0,
            order: 1.0,
        };
    }
    let dr = rem.len() - 1;
    Asymptotics::PowerLaw {
        limit: lf,
        limit_delta: lf.sqrt(),
        coeff: to_f64(&(&rem[dr] / lead_den)),
        order: (dd - dr) as f64,
    }
}

/// A small registry of named instances for arity `m`.
pub fn registry(m: u32) -> Vec<(String, FamilySpec)> {
    let mi = m as i64;
    vec![
        ("szego".into(), FamilySpec::HpSpace { m, p: int(mi) }),
        ("bergman".into(), FamilySpec::HpSpace { m, p: int(mi + 1) }),
        ("drury-arveson".into(), FamilySpec::HpSpace { m, p: int(1) }),
        ("hp-half".into(), FamilySpec::HpSpace { m, p: rat(2 * mi - 1, 2) }),
        ("constant".into(), FamilySpec::ConstantDelta { c: rat(1, 2) }),
        (
            "polynomial".into(),
            FamilySpec::PolynomialGamma {
                coefficients: vec![int(1), int(2), int(1)],
            },
        ),
        ("rho-eta".into(), FamilySpec::RhoEta),
        ("alternating-twelve".into(), FamilySpec::AlternatingTwelve),
        (
            "tabulated-compact".into(),
            FamilySpec::Tabulated {
                values: vec![],
                tail: TailRule::Rational {
                    num: vec![int(1)],
                    den: vec![int(1), int(2), int(1)],
                },
            },
        ),
    ]
}

/// Parameters for building a family from command-line flags or a family file.
#[derive(Clone, Debug, Default)]
pub struct FamilyArgs {
    pub family: String,
    pub m: u32,
    pub p: Option<String>,
    pub c: Option<String>,
    pub gamma_coeffs: Option<String>,
    pub table: Option<Vec<BigRational>>,
    pub tail: Option<String>,
}

fn parse_list(s: &str) -> Result<Vec<BigRational>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(parse_rational).collect()
}

/// Parses `error`, `last`, `constant:V`, or `rational:N0,N1,..;D0,D1,..`.
pub fn parse_tail(s: &str) -> Result<TailRule> {
    let s = s.trim();
    match s {
        "error" => return Ok(TailRule::Error),
        "last" | "last-value" => return Ok(TailRule::LastValue),
        _ => {}
    }
    if let Some(v) = s.strip_prefix("constant:") {
        return Ok(TailRule::Constant(parse_rational(v)?));
    }
    if let Some(body) = s.strip_prefix("rational:") {
        let (n, d) = body
            .split_once(';')
            .ok_or_else(|| Error::InvalidFamily(format!("rational tail `{s}` needs `num;den`")))?;
        return Ok(TailRule::Rational {
            num: parse_list(n)?,
            den: parse_list(d)?,
        });
    }
    Err(Error::InvalidFamily(format!("unknown tail rule `{s}`")))
}

impl FamilyArgs {
    pub fn build(&self) -> Result<FamilySpec> {
        fn need<'a>(family: &str, v: &'a Option<String>, flag: &str) -> Result<&'a str> {
            v.as_deref()
                .ok_or_else(|| Error::InvalidFamily(format!("family `{family}` needs --{flag}")))
        }
        let need = |v, flag| need(&self.family, v, flag);
        let m = self.m;
        let mi = m as i64;
        let spec = match self.family.as_str() {
            "hp" => FamilySpec::HpSpace {
                m,
                p: parse_rational(need(&self.p, "p")?)?,
            },
            "szego" | "hardy" => FamilySpec::HpSpace { m, p: int(mi) },
            "bergman" => FamilySpec::HpSpace { m, p: int(mi + 1) },
            "drury-arveson" => FamilySpec::HpSpace { m, p: int(1) },
            "hp-half" => FamilySpec::HpSpace { m, p: rat(2 * mi - 1, 2) },
            "constant" => FamilySpec::ConstantDelta {
                c: parse_rational(need(&self.c, "c")?)?,
            },
            "polynomial" => FamilySpec::PolynomialGamma {
                coefficients: parse_list(need(&self.gamma_coeffs, "gamma-coeffs")?)?,
            },
            "rho-eta" => FamilySpec::RhoEta,
            "alternating-twelve" => FamilySpec::AlternatingTwelve,
            "tabulated" => FamilySpec::Tabulated {
                values: self.table.clone().unwrap_or_default(),
                tail: match &self.tail {
                    Some(t) => parse_tail(t)?,
                    None => TailRule::Error,
                },
            },
            "tabulated-compact" => registry(m).into_iter().find(|(n, _)| n == "tabulated-compact").unwrap().1,
            other => return Err(Error::UnknownFamily(other.to_string())),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Reads a one-column CSV of `delta^2` values. A non-numeric first row is a header.
pub fn read_table(path: &Path) -> Result<Vec<BigRational>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(0).unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        match parse_rational(cell) {
            Ok(v) => out.push(v),
            Err(e) => {
                if i == 0 {
                    continue;
                }
                return Err(e);
            }
        }
    }
    Ok(out)
}

/// Parses a flat `key = value` family document (`#` starts a comment).
///
/// Recognised keys: `family`, `m`, `p`, `c`, `gamma_coeffs`, `values`
/// (comma-separated delta^2), `table` (CSV path relative to the document), `tail`.
pub fn parse_family_document(text: &str, base_dir: &Path) -> Result<FamilyArgs> {
    let mut kv = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidFamily(format!("line {}: expected `key = value`", lineno + 1)))?;
        let v = v.trim().trim_matches('"').to_string();
        kv.insert(k.trim().to_string(), v);
    }
    let family = kv
        .get("family")
        .cloned()
        .ok_or_else(|| Error::InvalidFamily("family document has no `family` key".into()))?;
    let m = match kv.get("m") {
        Some(s) => s
            .parse::<u32>()
            .map_err(|_| Error::InvalidFamily(format!("m must be a positive integer, got `{s}`")))?,
        None => 2,
    };
    let mut table = None;
    if let Some(vals) = kv.get("values") {
        table = Some(parse_list(vals)?);
    }
    if let Some(path) = kv.get("table") {
        let mut t = table.unwrap_or_default();
        t.extend(read_table(&base_dir.join(path))?);
        table = Some(t);
    }
    for key in kv.keys() {
        if !["family", "m", "p", "c", "gamma_coeffs", "values", "table", "tail"].contains(&key.as_str()) {
            return Err(Error::InvalidFamily(format!("unknown key `{key}` in family document")));
        }
    }
    Ok(FamilyArgs {
        family,
        m,
        p: kv.get("p").cloned(),
        c: kv.get("c").cloned(),
        gamma_coeffs: kv.get("gamma_coeffs").cloned(),
        table,
        tail: kv.get("tail").cloned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_eta_unrolls() {
        let got: Vec<BigRational> = (0..6).map(|k| FamilySpec::RhoEta.delta2_exact(k).unwrap()).collect();
        let want = vec![int(1), int(1), int(1), int(2), int(2), rat(5, 2)];
        assert_eq!(got, want);
        // eta_16 = 1/4 shows up between k = 16 and k = 17
        assert_eq!(rho_eta_f64(17) - rho_eta_f64(16), 0.25);
        assert_eq!(rho_eta_f64(18) - rho_eta_f64(17), 0.0);
    }

    #[test]
    fn rational_tail_laws() {
        // 1/(k+1)^2
        let law = rational_law(&[int(1)], &[int(1), int(2), int(1)]);
        assert_eq!(
            law,
            Asymptotics::PowerLaw {
                limit: 0.0,
                limit_delta: 0.0,
                coeff: 1.0,
                order: 2.0
            }
        );
        // (k+3)/(k+1) = 1 + 2/(k+1)
        let law = rational_law(&[int(3), int(1)], &[int(1), int(1)]);
        assert_eq!(
            law,
            Asymptotics::PowerLaw {
                limit: 1.0,
                limit_delta: 1.0,
                coeff: 2.0,
                order: 1.0
            }
        );
        assert_eq!(rational_law(&[int(0), int(0), int(1)], &[int(1), int(1)]), Asymptotics::Unbounded);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(FamilySpec::HpSpace { m: 2, p: int(0) }.validate().is_err());
        assert!(FamilySpec::ConstantDelta { c: int(-1) }.validate().is_err());
        // k^2 - 3k + 1 is negative at k = 1, 2
        assert!(FamilySpec::PolynomialGamma {
            coefficients: vec![int(1), int(-3), int(1)]
        }
        .validate()
        .is_err());
        assert!(FamilySpec::Tabulated {
            values: vec![],
            tail: TailRule::Error
        }
        .validate()
        .is_err());
    }

    #[test]
    fn table_overrun_is_an_error() {
        let f = FamilySpec::Tabulated {
            values: vec![int(1), int(2)],
            tail: TailRule::Error,
        };
        assert!(matches!(f.delta2_exact(2), Err(Error::TableOutOfRange { k: 2, len: 2 })));
        let f = FamilySpec::Tabulated {
            values: vec![int(1), int(2)],
            tail: TailRule::LastValue,
        };
        assert_eq!(f.delta2_exact(50).unwrap(), int(2));
    }

    #[test]
    fn family_document_round() {
        let doc = "# bergman-like\nfamily = hp\nm = 3\np = 4.5\n";
        let args = parse_family_document(doc, Path::new(".")).unwrap();
        let spec = args.build().unwrap();
        assert_eq!(spec, FamilySpec::HpSpace { m: 3, p: rat(9, 2) });
        let doc = "family = tabulated\nvalues = 1, 1/2, 0.25\ntail = constant:1\n";
        let spec = parse_family_document(doc, Path::new(".")).unwrap().build().unwrap();
        assert_eq!(spec.delta2_exact(2).unwrap(), rat(1, 4));
        assert_eq!(spec.delta2_exact(9).unwrap(), int(1));
        assert!(parse_family_document("family = hp\nbogus = 1\n", Path::new(".")).is_err());
        assert!(matches!(
            FamilyArgs {
                family: "nope".into(),
                m: 2,
                ..Default::default()
            }
            .build(),
            Err(Error::UnknownFamily(_))
        ));
    }

    #[test]
    fn tail_parsing() {
        assert_eq!(parse_tail("error").unwrap(), TailRule::Error);
        assert_eq!(parse_tail("constant:2").unwrap(), TailRule::Constant(int(2)));
        assert_eq!(
            parse_tail("rational:1;1,2,1").unwrap(),
            TailRule::Rational {
                num: vec![int(1)],
                den: vec![int(1), int(2), int(1)]
            }
        );
        assert!(parse_tail("banana").is_err());
    }
}
