//! Multi-indices in N^m and the fixed-degree levels used to lay out
//! truncation matrices and per-level sums.
//!
//! Within a level, indices are listed in descending lexicographic order
//! (`(2,0), (1,1), (0,2)` for `m = 2, k = 2`). Axes are 0-based.

use std::fmt;

use num::{BigInt, One};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{binomial_exact, compositions_f64, factorial_exact};

/// An element of N^m with fixed arity.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyArity);
        }
        Ok(Self(components))
    }

    pub fn zero(m: usize) -> Result<Self> {
        Self::new(vec![0; m])
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> u32 {
        self.0[axis]
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.arity() {
            return Err(Error::AxisOutOfRange {
                axis,
                m: self.arity(),
            });
        }
        Ok(())
    }

    /// `n + e_axis`.
    pub fn add_unit(&self, axis: usize) -> Result<Self> {
        self.check_axis(axis)?;
        let mut c = self.0.clone();
        c[axis] += 1;
        Ok(Self(c))
    }

    /// `n - e_axis`, or `None` when that component is already zero.
    pub fn sub_unit(&self, axis: usize) -> Result<Option<Self>> {
        self.check_axis(axis)?;
        if self.0[axis] == 0 {
            return Ok(None);
        }
        let mut c = self.0.clone();
        c[axis] -= 1;
        Ok(Some(Self(c)))
    }

    /// `|n|! / (n_1! ... n_m!)`.
    pub fn multinomial(&self) -> BigInt {
        let num = factorial_exact(self.degree() as u64);
        let den = self
            .0
            .iter()
            .fold(BigInt::one(), |acc, &c| acc * factorial_exact(c as u64));
        num / den
    }

    /// Position of this index within its level.
    pub fn rank(&self) -> usize {
        let m = self.arity();
        let mut remaining = self.degree() as u64;
        let mut r = 0f64;
        for i in 0..m.saturating_sub(1) {
            let c = self.0[i] as u64;
            // every tuple with the same prefix and a larger component here comes first
            for v in (c + 1)..=remaining {
                r += compositions_f64((m - i - 1) as u64, remaining - v);
            }
            remaining -= c;
        }
        r as usize
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// All multi-indices of arity `m` and degree `k`, in descending lex order.
#[derive(Clone, Debug)]
pub struct Level {
    m: usize,
    k: usize,
    indices: Vec<MultiIndex>,
}

impl Level {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn unrank(&self, i: usize) -> Option<&MultiIndex> {
        self.indices.get(i)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }
}

pub fn enumerate_level(m: usize, k: usize) -> Result<Level> {
    if m == 0 {
        return Err(Error::EmptyArity);
    }
    let mut indices = Vec::with_capacity(compositions_f64(m as u64, k as u64) as usize);
    let mut buf = vec![0u32; m];
    fill(&mut buf, 0, k, &mut indices);
    Ok(Level { m, k, indices })
}

fn fill(buf: &mut [u32], pos: usize, remaining: usize, out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining as u32;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for v in (0..=remaining).rev() {
        buf[pos] = v as u32;
        fill(buf, pos + 1, remaining - v, out);
    }
}

/// `binom(k + m - 1, m - 1)`, exactly.
pub fn level_count(m: usize, k: usize) -> Result<BigInt> {
    if m == 0 {
        return Err(Error::EmptyArity);
    }
    Ok(binomial_exact((k + m - 1) as u64, (m - 1) as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::ToPrimitive;

    fn mi(c: &[u32]) -> MultiIndex {
        MultiIndex::new(c.to_vec()).unwrap()
    }

    #[test]
    fn small_levels() {
        let l = enumerate_level(2, 2).unwrap();
        assert_eq!(l.indices(), &[mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]);
        let l = enumerate_level(3, 0).unwrap();
        assert_eq!(l.indices(), &[mi(&[0, 0, 0])]);
        assert_eq!(enumerate_level(3, 6).unwrap().len(), 28);
        assert!(enumerate_level(0, 2).is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(level_count(2, 5).unwrap(), BigInt::from(6));
        assert_eq!(level_count(3, 2).unwrap(), BigInt::from(6));
        assert_eq!(level_count(4, 30).unwrap(), BigInt::from(5456));
        assert_eq!(enumerate_level(4, 30).unwrap().len(), 5456);
    }

    #[test]
    fn multinomials() {
        assert_eq!(mi(&[1, 1]).multinomial(), BigInt::from(2));
        assert_eq!(mi(&[0, 0, 0]).multinomial(), BigInt::from(1));
        // 4! / (2! 1! 1!) = 24 / 2
        assert_eq!(mi(&[2, 1, 1]).multinomial(), BigInt::from(12));
    }

    #[test]
    fn unit_arithmetic() {
        assert_eq!(mi(&[1, 0]).add_unit(1).unwrap(), mi(&[1, 1]));
        assert_eq!(mi(&[0, 3]).sub_unit(0).unwrap(), None);
        assert_eq!(mi(&[2, 1]).sub_unit(0).unwrap(), Some(mi(&[1, 1])));
        assert!(mi(&[2, 1]).add_unit(2).is_err());
        assert!(MultiIndex::new(vec![]).is_err());
    }

    #[test]
    fn level_sizes_match_counts() {
        for m in 1..=4 {
            for k in 0..=30 {
                let l = enumerate_level(m, k).unwrap();
                assert_eq!(l.len(), level_count(m, k).unwrap().to_usize().unwrap());
            }
        }
    }

    #[test]
    fn multinomial_theorem() {
        for m in 1..=4usize {
            for k in 0..=12usize {
                let total: BigInt = enumerate_level(m, k)
                    .unwrap()
                    .iter()
                    .map(|a| a.multinomial())
                    .sum();
                assert_eq!(total, num::pow(BigInt::from(m), k));
            }
        }
    }

    #[test]
    fn rank_unrank_inverse() {
        for m in 1..=4 {
            for k in 0..=12 {
                let l = enumerate_level(m, k).unwrap();
                for (i, n) in l.iter().enumerate() {
                    assert_eq!(n.rank(), i);
                    assert_eq!(l.unrank(i), Some(n));
                }
            }
        }
    }
}
