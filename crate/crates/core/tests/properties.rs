use num::{BigInt, BigRational, Zero};
use proptest::prelude::*;

use sphershift::exec::Exec;
use sphershift::multiindex::{enumerate_level, level_count, MultiIndex};
use sphershift::numeric::{binomial_exact, to_f64};
use sphershift::scalarseq::{FamilySpec, ScalarSequence, TailRule};
use sphershift::schatten::{decide_grid, Convergence};
use sphershift::shift::SphericalShift;
use sphershift::spectra::{radii, SpectraConfig};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn hp_strategy() -> impl Strategy<Value = (u32, BigRational)> {
    (1u32..=4, 1i64..=12, 1i64..=4).prop_map(|(m, n, d)| (m, rat(n, d)))
}

/// Tabulated delta^2 in [1/8, 8] followed by a constant tail.
fn table_strategy() -> impl Strategy<Value = ScalarSequence> {
    (prop::collection::vec((1i64..=64, 1i64..=8), 1..40), 1i64..=16).prop_map(|(vals, tail)| {
        ScalarSequence::new(FamilySpec::Tabulated {
            values: vals.into_iter().map(|(n, d)| rat(n, d)).collect(),
            tail: TailRule::Constant(rat(tail, 4)),
        })
        .unwrap()
    })
}

fn index_strategy() -> impl Strategy<Value = MultiIndex> {
    prop::collection::vec(0u32..6, 1..5).prop_map(|v| MultiIndex::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn level_sizes_and_rank(m in 1usize..5, k in 0usize..9) {
        let level = enumerate_level(m, k).unwrap();
        prop_assert_eq!(BigInt::from(level.len()), binomial_exact((k + m - 1) as u64, (m - 1) as u64));
        prop_assert_eq!(BigInt::from(level.len()), level_count(m, k).unwrap());
        for (i, n) in level.iter().enumerate() {
            prop_assert_eq!(n.degree(), k);
            prop_assert_eq!(n.rank(), i);
        }
    }

    #[test]
    fn unit_steps_invert(n in index_strategy(), axis in 0usize..4) {
        prop_assume!(axis < n.arity());
        let up = n.add_unit(axis).unwrap();
        prop_assert_eq!(up.degree(), n.degree() + 1);
        prop_assert_eq!(up.sub_unit(axis).unwrap(), Some(n));
    }

    #[test]
    fn weights_square_sum_to_delta2((m, p) in hp_strategy(), raw in prop::collection::vec(0u32..8, 4)) {
        let n = MultiIndex::new(raw[..m as usize].to_vec()).unwrap();
        let shift = SphericalShift::new(m as usize, ScalarSequence::new(FamilySpec::HpSpace { m, p }).unwrap()).unwrap();
        let total = (0..m as usize).fold(BigRational::zero(), |acc, j| acc + shift.weight2_exact(j, &n).unwrap());
        prop_assert_eq!(total, shift.seq().delta2_exact(n.degree()).unwrap());
    }

    #[test]
    fn weights_commute(seq in table_strategy(), raw in prop::collection::vec(0u32..6, 3)) {
        let n = MultiIndex::new(raw).unwrap();
        let shift = SphericalShift::new(3, seq).unwrap();
        for j in 0..3 {
            for l in 0..3 {
                let a = shift.weight2_exact(j, &n).unwrap() * shift.weight2_exact(l, &n.add_unit(j).unwrap()).unwrap();
                let b = shift.weight2_exact(l, &n).unwrap() * shift.weight2_exact(j, &n.add_unit(l).unwrap()).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn bq_matches_nabla_gamma(seq in table_strategy(), k in 0usize..30, q in 1usize..5) {
        let shift = SphericalShift::new(2, seq.clone()).unwrap();
        let lhs = shift.bq_diag_exact(k, q).unwrap() * seq.gamma_exact(k).unwrap();
        let mut rhs = seq.nabla_gamma_exact(k, q).unwrap();
        if q % 2 == 1 {
            rhs = -rhs;
        }
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn float_and_exact_delta2_agree(seq in table_strategy(), k in 0usize..60) {
        let exact = to_f64(&seq.delta2_exact(k).unwrap());
        prop_assert!((seq.delta2(k).unwrap() - exact).abs() <= 1e-15 * exact);
    }

    #[test]
    fn radii_ordered(seq in table_strategy()) {
        let cfg = SpectraConfig { horizon: 2000, j_points: 20, ..SpectraConfig::default() };
        let r = radii(&seq, &cfg, Exec::default()).unwrap();
        prop_assert!(r.inner.sampled.estimate <= r.convergence.sampled.estimate);
        prop_assert!(r.convergence.sampled.estimate <= r.outer.sampled.estimate);
        prop_assert!(r.m_infinity.agrees);
    }

    #[test]
    fn radii_scale_with_delta(seq in table_strategy(), c in 1i64..=9) {
        let cfg = SpectraConfig { horizon: 2000, j_points: 20, ..SpectraConfig::default() };
        let scale = rat(c, 3);
        let a = radii(&seq, &cfg, Exec::default()).unwrap();
        let b = radii(&seq.scaled(&scale).unwrap(), &cfg, Exec::default()).unwrap();
        let cf = c as f64 / 3.0;
        for (x, y) in [(&a.outer, &b.outer), (&a.convergence, &b.convergence), (&a.inner, &b.inner)] {
            prop_assert!((y.sampled.estimate - cf * x.sampled.estimate).abs() <= 1e-9 * y.sampled.estimate);
        }
    }

    #[test]
    fn schatten_monotone_and_cut_off((m, p) in hp_strategy()) {
        let seq = ScalarSequence::new(FamilySpec::HpSpace { m, p }).unwrap();
        let grid = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0];
        let v = decide_grid(&seq, m as usize, &grid, 1000, Exec::default()).unwrap();
        let first = v.iter().position(|x| x.verdict == Convergence::Converges);
        if let Some(i) = first {
            prop_assert!(v[i..].iter().all(|x| x.verdict == Convergence::Converges));
            prop_assert!(v[i].p > m as f64);
        }
        prop_assert!(v.iter().all(|x| x.cutoff_consistent));
    }
}

#[cfg(feature = "parallel")]
proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn strategies_agree(seq in table_strategy()) {
        let cfg = SpectraConfig { horizon: 3000, j_points: 20, ..SpectraConfig::default() };
        let a = radii(&seq, &cfg, Exec::Sequential).unwrap();
        let b = radii(&seq, &cfg, Exec::Parallel).unwrap();
        prop_assert_eq!(a, b);
        let g = [1.0, 2.0, 3.5];
        let x = decide_grid(&seq, 2, &g, 3000, Exec::Sequential).unwrap();
        let y = decide_grid(&seq, 2, &g, 3000, Exec::Parallel).unwrap();
        prop_assert_eq!(x, y);
    }
}
