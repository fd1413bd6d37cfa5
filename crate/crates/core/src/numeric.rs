//! Small numeric building blocks shared across modules: compensated sums,
//! binomials, log-factorials, tail-exponent fits and exact decimal parsing.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Neumaier-compensated accumulator. Summation order is the call order.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// `binom(n, r)` in floating point via the multiplicative formula.
pub fn binomial_f64(n: u64, r: u64) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    let mut acc = 1.0f64;
    for i in 1..=r {
        acc *= (n - r + i) as f64;
        acc /= i as f64;
    }
    acc
}

/// Number of ways to write `total` as an ordered sum of `parts` non-negative integers.
pub fn compositions_f64(parts: u64, total: u64) -> f64 {
    if parts == 0 {
        return if total == 0 { 1.0 } else { 0.0 };
    }
    binomial_f64(total + parts - 1, parts - 1)
}

/// ln(binom(n, r)) without overflow.
pub fn ln_binomial(n: u64, r: u64) -> f64 {
    if r > n {
        return f64::NEG_INFINITY;
    }
    let r = r.min(n - r);
    let mut acc = CompensatedSum::new();
    for i in 1..=r {
        acc.add(((n - r + i) as f64).ln() - (i as f64).ln());
    }
    acc.value()
}

/// ln(n!) by direct summation.
pub fn ln_factorial(n: u64) -> f64 {
    compensated_sum((2..=n).map(|i| (i as f64).ln()))
}

pub fn binomial_exact(n: u64, r: u64) -> BigInt {
    if r > n {
        return BigInt::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigInt::one();
    for i in 1..=r {
        acc *= BigInt::from(n - r + i);
        acc /= BigInt::from(i);
    }
    acc
}

pub fn factorial_exact(n: u64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Least-squares slope of `ln y` against `ln x` over the points with `y > 0`.
///
/// Returns `None` when fewer than two usable points exist.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    slope_of(&pts)
}

/// Least-squares slope of already log-transformed points `(ln x, ln y)`.
pub fn slope_of(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = compensated_sum(pts.iter().map(|p| p.0)) / n;
    let my = compensated_sum(pts.iter().map(|p| p.1)) / n;
    let sxy = compensated_sum(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)));
    let sxx = compensated_sum(pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)));
    if sxx <= 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Parses `"3"`, `"-2.5"`, `"1e-3"`, `"7/4"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::InvalidNumber(s.to_string());
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((a, b)) = t.split_once('/') {
        let num = parse_rational(a)?;
        let den = parse_rational(b)?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(num / den);
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], t[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut num: BigInt = all.parse().map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::from_integer(num * num::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num::pow(ten, (-scale) as usize))
    };
    Ok(r)
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let ln = ln_abs_rational(r);
        let v = ln.exp();
        if r.is_negative() {
            -v
        } else {
            v
        }
    })
}

/// ln|r| for very large or very small rationals.
pub fn ln_abs_rational(r: &BigRational) -> f64 {
    ln_abs_bigint(r.numer()) - ln_abs_bigint(r.denom())
}

fn ln_abs_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top: BigInt = x.abs() >> shift;
    top.to_f64().unwrap_or(1.0).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact rational from a finite `f64` (binary expansion, no rounding).
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidNumber(x.to_string()))
}

/// Renders a rational as `a/b` (or `a` when integral).
pub fn rational_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serialises a float as a JSON number, or as `"+inf"`, `"-inf"`, `"nan"` when it has no JSON form.
pub fn serialize_real<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if x.is_nan() {
        s.serialize_str("nan")
    } else if *x > 0.0 {
        s.serialize_str("+inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// [`serialize_real`] for optional values.
pub fn serialize_opt_real<S: serde::Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => serialize_real(v, s),
        None => s.serialize_none(),
    }
}

/// Checkpoints `10, 100, ..., ` below `horizon`, followed by `horizon` itself.
pub fn decade_checkpoints(horizon: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut c = 10;
    while c < horizon {
        out.push(c);
        c *= 10;
    }
    out.push(horizon);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("2.5").unwrap(), BigRational::new(5.into(), 2.into()));
        assert_eq!(parse_rational("-0.125").unwrap(), BigRational::new((-1).into(), 8.into()));
        assert_eq!(parse_rational("7/4").unwrap(), BigRational::new(7.into(), 4.into()));
        assert_eq!(parse_rational("1e-2").unwrap(), BigRational::new(1.into(), 100.into()));
        assert_eq!(parse_rational("3").unwrap(), BigRational::from_integer(3.into()));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_f64(8, 2), 28.0);
        assert_eq!(binomial_exact(33, 3), BigInt::from(5456));
        assert_eq!(compositions_f64(0, 0), 1.0);
        assert_eq!(compositions_f64(0, 3), 0.0);
        assert_eq!(compositions_f64(3, 2), 6.0);
        assert!((ln_binomial(40, 20) - binomial_f64(40, 20).ln()).abs() < 1e-12);
    }

    #[test]
    fn slope_recovers_power_law() {
        let pts: Vec<(f64, f64)> = (100..200).map(|k| (k as f64, 3.0 * (k as f64).powf(-1.7))).collect();
        assert!((loglog_slope(&pts).unwrap() + 1.7).abs() < 1e-10);
        assert!(loglog_slope(&[(1.0, 1.0)]).is_none());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let xs = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000));
        assert!((compensated_sum(xs) - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn huge_rationals_convert_through_logs() {
        let big = BigRational::new(num::pow(BigInt::from(3), 2000), num::pow(BigInt::from(2), 3000));
        let expect = 2000.0 * 3f64.ln() - 3000.0 * 2f64.ln();
        assert!((ln_abs_rational(&big) - expect).abs() < 1e-9);
    }
}
