//! The spherical m-shift built from a scalar sequence.
//!
//! Axes are 0-based throughout the library.

use num::{BigInt, BigRational, One, Zero};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::numeric::{binomial_exact, factorial_exact, ln_factorial};
use crate::scalarseq::ScalarSequence;

/// A commuting m-tuple `T_j e_n = w^(j)_n e_{n + e_j}` with
/// `w^(j)_n = delta_{|n|} sqrt((n_j + 1)/(|n| + m))`.
#[derive(Clone, Debug)]
pub struct SphericalShift {
    m: usize,
    seq: ScalarSequence,
}

/// A cross-commutator entry: `[T_j^*, T_l] e_n = coefficient * e_target`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossEntry {
    pub coefficient: f64,
    pub target: MultiIndex,
}

impl SphericalShift {
    pub fn new(m: usize, seq: ScalarSequence) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyArity);
        }
        Ok(Self { m, seq })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seq(&self) -> &ScalarSequence {
        &self.seq
    }

    fn check_index(&self, n: &MultiIndex) -> Result<()> {
        if n.arity() != self.m {
            return Err(Error::DimensionMismatch {
                left: self.m,
                right: n.arity(),
            });
        }
        Ok(())
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.m {
            return Err(Error::AxisOutOfRange { axis, m: self.m });
        }
        Ok(())
    }

    pub fn weight(&self, axis: usize, n: &MultiIndex) -> Result<f64> {
        self.check_axis(axis)?;
        self.check_index(n)?;
        let k = n.degree();
        let frac = (n.get(axis) as f64 + 1.0) / (k + self.m) as f64;
        Ok((self.seq.delta2(k)? * frac).sqrt())
    }

    /// `(w^(j)_n)^2`, exactly.
    pub fn weight2_exact(&self, axis: usize, n: &MultiIndex) -> Result<BigRational> {
        self.check_axis(axis)?;
        self.check_index(n)?;
        let k = n.degree();
        let frac = BigRational::new(BigInt::from(n.get(axis) + 1), BigInt::from(k + self.m));
        Ok(self.seq.delta2_exact(k)? * frac)
    }

    pub fn log_beta_norm(&self, n: &MultiIndex) -> Result<f64> {
        self.check_index(n)?;
        let k = n.degree() as u64;
        let m1 = self.m as u64 - 1;
        let log_n_fact: f64 = n.components().iter().map(|&c| ln_factorial(c as u64)).sum();
        let log_sphere = ln_factorial(m1) + log_n_fact - ln_factorial(m1 + k);
        Ok(self.seq.log_bbeta(n.degree())? + 0.5 * log_sphere)
    }

    /// `||z^n||`, the norm of the monomial in the space of the tuple.
    pub fn beta_norm(&self, n: &MultiIndex) -> Result<f64> {
        Ok(self.log_beta_norm(n)?.exp())
    }

    /// `delta^2_k ... delta^2_{k+s-1}`: the eigenvalue of `Q_T^s(I)` on level `k`.
    pub fn q_diag(&self, k: usize, s: usize) -> Result<f64> {
        if s == 0 {
            return Ok(1.0);
        }
        let pre = self.seq.log_bbeta_prefix(k + s)?;
        Ok((2.0 * (pre[k + s] - pre[k])).exp())
    }

    pub fn q_diag_exact(&self, k: usize, s: usize) -> Result<BigRational> {
        let mut acc = BigRational::one();
        for i in k..k + s {
            acc *= self.seq.delta2_exact(i)?;
        }
        Ok(acc)
    }

    /// Eigenvalue of `B_q(Q_T) = sum_s (-1)^s binom(q,s) Q_T^s(I)` on level `k`.
    pub fn bq_diag(&self, k: usize, q: usize) -> Result<f64> {
        if q == 0 {
            return Err(Error::InvalidParameter("order q must be at least 1".into()));
        }
        let mut acc = 0.0;
        for s in 0..=q {
            let b = crate::numeric::binomial_f64(q as u64, s as u64);
            let term = b * self.q_diag(k, s)?;
            if s % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        Ok(acc)
    }

    pub fn bq_diag_exact(&self, k: usize, q: usize) -> Result<BigRational> {
        if q == 0 {
            return Err(Error::InvalidParameter("order q must be at least 1".into()));
        }
        let mut acc = BigRational::zero();
        let mut prod = BigRational::one();
        for s in 0..=q {
            if s > 0 {
                prod *= self.seq.delta2_exact(k + s - 1)?;
            }
            let term = BigRational::from_integer(binomial_exact(q as u64, s as u64)) * &prod;
            if s % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        Ok(acc)
    }

    /// `delta^2_k / (k + m)`, the building block of every commutator coefficient.
    pub fn level_ratio(&self, k: usize) -> Result<f64> {
        Ok(self.seq.delta2(k)? / (k + self.m) as f64)
    }

    pub fn level_ratio_exact(&self, k: usize) -> Result<BigRational> {
        Ok(self.seq.delta2_exact(k)? / BigRational::from_integer(BigInt::from(k + self.m)))
    }

    /// `delta^2_k/(k+m) - delta^2_{k-1}/(k+m-1)` for `k >= 1`.
    pub fn level_gap(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidParameter("level gap needs k >= 1".into()));
        }
        Ok(self.level_ratio(k)? - self.level_ratio(k - 1)?)
    }

    pub fn level_gap_exact(&self, k: usize) -> Result<BigRational> {
        if k == 0 {
            return Err(Error::InvalidParameter("level gap needs k >= 1".into()));
        }
        Ok(self.level_ratio_exact(k)? - self.level_ratio_exact(k - 1)?)
    }

    /// Diagonal entry of `[T_j^*, T_j]` at `e_n`, from the level `k = |n|` and `t = n_j`.
    pub fn self_comm_at(&self, k: usize, t: usize) -> Result<f64> {
        let up = (t + 1) as f64 * self.level_ratio(k)?;
        if t == 0 {
            return Ok(up);
        }
        Ok(up - t as f64 * self.level_ratio(k - 1)?)
    }

    pub fn self_comm_coeff(&self, axis: usize, n: &MultiIndex) -> Result<f64> {
        self.check_axis(axis)?;
        self.check_index(n)?;
        self.self_comm_at(n.degree(), n.get(axis) as usize)
    }

    pub fn self_comm_coeff_exact(&self, axis: usize, n: &MultiIndex) -> Result<BigRational> {
        self.check_axis(axis)?;
        self.check_index(n)?;
        let (k, t) = (n.degree(), n.get(axis) as i64);
        let up = BigRational::from_integer(BigInt::from(t + 1)) * self.level_ratio_exact(k)?;
        if t == 0 {
            return Ok(up);
        }
        Ok(up - BigRational::from_integer(BigInt::from(t)) * self.level_ratio_exact(k - 1)?)
    }

    /// `[T_j^*, T_l] e_n` for `j != l`; `None` when `n_j = 0` (the zero map).
    pub fn cross_comm_coeff(&self, j: usize, l: usize, n: &MultiIndex) -> Result<Option<CrossEntry>> {
        self.check_axis(j)?;
        self.check_axis(l)?;
        self.check_index(n)?;
        if j == l {
            return Err(Error::InvalidParameter("cross commutator needs distinct axes".into()));
        }
        let Some(lowered) = n.sub_unit(j)? else {
            return Ok(None);
        };
        let radicand = n.get(j) as f64 * (n.get(l) as f64 + 1.0);
        Ok(Some(CrossEntry {
            coefficient: radicand.sqrt() * self.level_gap(n.degree())?,
            target: lowered.add_unit(l)?,
        }))
    }
}

/// `(m-1)! n! / (m-1+|n|)!`, the squared `L^2(sphere)` norm of `z^n`.
pub fn sphere_monomial_norm2(n: &MultiIndex) -> BigRational {
    let m1 = n.arity() as u64 - 1;
    let num = n
        .components()
        .iter()
        .fold(factorial_exact(m1), |acc, &c| acc * factorial_exact(c as u64));
    BigRational::new(num, factorial_exact(m1 + n.degree() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::enumerate_level;
    use crate::scalarseq::{registry, FamilySpec};

    fn int(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn idx(c: &[u32]) -> MultiIndex {
        MultiIndex::new(c.to_vec()).unwrap()
    }

    fn hp(m: usize, p: BigRational) -> SphericalShift {
        let seq = ScalarSequence::new(FamilySpec::HpSpace { m: m as u32, p }).unwrap();
        SphericalShift::new(m, seq).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    fn all_shifts() -> Vec<SphericalShift> {
        let mut out = Vec::new();
        for m in 1..=3u32 {
            for (_, spec) in registry(m) {
                out.push(SphericalShift::new(m as usize, ScalarSequence::new(spec).unwrap()).unwrap());
            }
        }
        out
    }

    #[test]
    fn weights() {
        let sz = hp(2, int(2));
        assert!(close(sz.weight(0, &idx(&[0, 0])).unwrap(), 0.5f64.sqrt()));
        let h = hp(3, rat(5, 2));
        let n = idx(&[2, 0, 3]);
        assert!(close(h.weight(2, &n).unwrap(), (4.0f64 / 7.5).sqrt()));
        let c = SphericalShift::new(
            2,
            ScalarSequence::new(FamilySpec::ConstantDelta { c: rat(1, 3) }).unwrap(),
        )
        .unwrap();
        assert!(close(c.weight(1, &idx(&[1, 1])).unwrap(), 0.5f64.sqrt() / 3.0));
        assert!(sz.weight(2, &n).is_err());
    }

    #[test]
    fn monomial_norms() {
        let sz = hp(2, int(2));
        assert!(close(sz.beta_norm(&idx(&[1, 1])).unwrap(), (1.0f64 / 6.0).sqrt()));
        assert!(close(sz.beta_norm(&idx(&[2, 0])).unwrap(), (1.0f64 / 3.0).sqrt()));
        for s in all_shifts() {
            let zero = MultiIndex::zero(s.m()).unwrap();
            assert_eq!(s.beta_norm(&zero).unwrap(), 1.0);
        }
        assert_eq!(sphere_monomial_norm2(&idx(&[1, 0])), rat(1, 2));
        assert_eq!(sphere_monomial_norm2(&idx(&[0, 0, 0])), int(1));
        assert_eq!(sphere_monomial_norm2(&idx(&[2, 1])), rat(1, 12));
    }

    #[test]
    fn weights_are_monomial_norm_ratios() {
        for s in all_shifts() {
            for k in 0..=15 {
                for n in enumerate_level(s.m(), k).unwrap().iter() {
                    for axis in 0..s.m() {
                        let w = s.weight(axis, n).unwrap();
                        assert!(w > 0.0);
                        let up = n.add_unit(axis).unwrap();
                        let ratio = (s.log_beta_norm(&up).unwrap() - s.log_beta_norm(n).unwrap()).exp();
                        assert!(close(w, ratio), "{} {n} {axis}", s.seq().label());
                    }
                }
            }
        }
    }

    #[test]
    fn commutativity_relation_exact() {
        for s in all_shifts() {
            for k in 0..=15 {
                for n in enumerate_level(s.m(), k).unwrap().iter() {
                    for j in 0..s.m() {
                        for l in 0..s.m() {
                            let lhs = s.weight2_exact(j, n).unwrap() * s.weight2_exact(l, &n.add_unit(j).unwrap()).unwrap();
                            let rhs = s.weight2_exact(l, n).unwrap() * s.weight2_exact(j, &n.add_unit(l).unwrap()).unwrap();
                            assert_eq!(lhs, rhs);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn weights_square_sum_to_delta2() {
        for s in all_shifts() {
            for k in 0..=12 {
                for n in enumerate_level(s.m(), k).unwrap().iter() {
                    let total = (0..s.m()).fold(BigRational::zero(), |acc, a| acc + s.weight2_exact(a, n).unwrap());
                    assert_eq!(total, s.seq().delta2_exact(k).unwrap());
                }
            }
        }
    }

    #[test]
    fn q_and_b_diagonals() {
        let sz = hp(2, int(2));
        let berg = hp(2, int(3));
        let da = hp(2, int(1));
        for k in 0..20 {
            assert_eq!(sz.q_diag(k, 3).unwrap(), 1.0);
            assert_eq!(sz.bq_diag_exact(k, 1).unwrap(), int(0));
            assert_eq!(da.bq_diag_exact(k, 2).unwrap(), int(0));
            assert_eq!(berg.q_diag(k, 0).unwrap(), 1.0);
        }
        assert_eq!(berg.q_diag_exact(0, 1).unwrap(), rat(2, 3));
        assert!(close(berg.q_diag(0, 1).unwrap(), 2.0 / 3.0));
        assert_eq!(berg.bq_diag_exact(0, 1).unwrap(), rat(1, 3));
    }

    #[test]
    fn bq_matches_nabla_gamma() {
        for s in all_shifts() {
            let seq = s.seq();
            let mut g = BigRational::one();
            for k in 0..=100 {
                for q in 1..=6 {
                    let mut lhs = s.bq_diag_exact(k, q).unwrap() * &g;
                    if q % 2 == 1 {
                        lhs = -lhs;
                    }
                    // the window path is quadratic in k, so spot-check it early on
                    let rhs = if k <= 20 {
                        seq.nabla_gamma_exact(k, q).unwrap()
                    } else {
                        seq.nabla_ratio_exact(k, q).unwrap() * &g
                    };
                    assert_eq!(lhs, rhs);
                }
                g *= seq.delta2_exact(k).unwrap();
            }
        }
    }

    #[test]
    fn q_diag_is_one_variable_norm() {
        // at arity 1 the tuple is the associated shift itself
        for (_, spec) in registry(2) {
            let seq = ScalarSequence::new(spec).unwrap();
            let one = SphericalShift::new(1, seq.clone()).unwrap();
            let two = SphericalShift::new(2, seq).unwrap();
            for k in 0..30 {
                for s in 0..5 {
                    let mut norm2 = 1.0;
                    for i in k..k + s {
                        norm2 *= one.weight(0, &idx(&[i as u32])).unwrap().powi(2);
                    }
                    assert!(close(two.q_diag(k, s).unwrap(), norm2));
                }
            }
        }
    }

    #[test]
    fn commutator_coefficients() {
        let sz = hp(2, int(2));
        assert!(close(sz.self_comm_coeff(0, &idx(&[0, 0])).unwrap(), 0.5));
        assert!(close(sz.self_comm_coeff(0, &idx(&[1, 0])).unwrap(), 1.0 / 6.0));
        assert_eq!(sz.self_comm_coeff_exact(0, &idx(&[1, 0])).unwrap(), rat(1, 6));
        let e = sz.cross_comm_coeff(0, 1, &idx(&[1, 0])).unwrap().unwrap();
        assert!(close(e.coefficient, -1.0 / 6.0));
        assert_eq!(e.target, idx(&[0, 1]));
        assert_eq!(sz.cross_comm_coeff(0, 1, &idx(&[0, 3])).unwrap(), None);
        let sz3 = hp(3, int(3));
        let e = sz3.cross_comm_coeff(0, 2, &idx(&[1, 1, 0])).unwrap().unwrap();
        assert!(close(e.coefficient, -1.0 / 20.0));
        assert_eq!(e.target, idx(&[0, 1, 1]));
        // zero branch of the self commutator
        let berg = hp(3, int(4));
        let n = idx(&[0, 2, 1]);
        assert!(close(berg.self_comm_coeff(0, &n).unwrap(), berg.seq().delta2(3).unwrap() / 6.0));
    }
}
