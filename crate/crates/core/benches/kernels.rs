use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num::{BigInt, BigRational};

use sphershift::exec::Exec;
use sphershift::scalarseq::{FamilySpec, ScalarSequence};
use sphershift::schatten::{asymptotic_lemma_check, decide_grid, default_shifts, schatten_oracle_suite};
use sphershift::spectra::{radii, SpectraConfig};
use sphershift::truncation::{verify_suite, SuiteConfig};

fn strategies() -> Vec<Exec> {
    let mut v = vec![Exec::Sequential];
    #[cfg(feature = "parallel")]
    v.push(Exec::Parallel);
    v
}

fn bergman(m: u32) -> ScalarSequence {
    let p = BigRational::from_integer(BigInt::from(m + 1));
    ScalarSequence::new(FamilySpec::HpSpace { m, p }).unwrap()
}

fn oracle_suite(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle_suite");
    g.sample_size(10);
    let cfg = SuiteConfig {
        n_max: 8,
        ..SuiteConfig::default()
    };
    for exec in strategies() {
        g.bench_with_input(BenchmarkId::new("operators", exec.name()), &exec, |b, &e| {
            b.iter(|| verify_suite(black_box(&cfg), e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("schatten", exec.name()), &exec, |b, &e| {
            b.iter(|| schatten_oracle_suite(&[2, 3], 8, &[1.0, 2.0, 4.0], e).unwrap())
        });
    }
    g.finish();
}

fn schatten_grid(c: &mut Criterion) {
    let mut g = c.benchmark_group("schatten_decide_grid");
    g.sample_size(10);
    let rho = ScalarSequence::new(FamilySpec::RhoEta).unwrap();
    let grid = [1.0, 2.0, 2.5, 3.0, 3.25, 4.0];
    for exec in strategies() {
        g.bench_with_input(BenchmarkId::new("rho_eta_K1e5", exec.name()), &exec, |b, &e| {
            b.iter(|| decide_grid(black_box(&rho), 3, &grid, 100_000, e).unwrap())
        });
    }
    g.finish();
}

fn lemma_windows(c: &mut Criterion) {
    let mut g = c.benchmark_group("lemma_windows");
    g.sample_size(10);
    let shifts = default_shifts();
    for exec in strategies() {
        g.bench_with_input(BenchmarkId::new("m3_p1_k3000", exec.name()), &exec, |b, &e| {
            b.iter(|| asymptotic_lemma_check(3, 1.0, (100, 3000), &shifts, e).unwrap())
        });
    }
    g.finish();
}

fn spectral_radii(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral_radii");
    g.sample_size(10);
    let seq = bergman(2);
    let cfg = SpectraConfig::default();
    for exec in strategies() {
        g.bench_with_input(BenchmarkId::new("bergman_K1e5", exec.name()), &exec, |b, &e| {
            b.iter(|| radii(black_box(&seq), &cfg, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, oracle_suite, schatten_grid, lemma_windows, spectral_radii);
criterion_main!(benches);
