use std::collections::BTreeSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cpi_core::gen::{random_process, rng, GenConfig};
use cpi_core::{check, check_completeness, check_nonforwarding, encode_with_handlers, parse, successors, ParseMode};

fn terms(count: usize, cfg: &GenConfig) -> Vec<cpi_core::Process> {
    let mut r = rng(99);
    (0..count).map(|_| random_process(&mut r, cfg)).collect()
}

fn lts(c: &mut Criterion) {
    let mut group = c.benchmark_group("successors");
    for size in [6, 10, 14] {
        let ps = terms(32, &GenConfig::cpi(size));
        let env = BTreeSet::new();
        group.bench_with_input(BenchmarkId::from_parameter(size), &ps, |b, ps| {
            b.iter(|| ps.iter().map(|p| successors(black_box(p), &env).unwrap().len()).sum::<usize>())
        });
    }
    group.finish();
}

fn bisim(c: &mut Criterion) {
    let mut group = c.benchmark_group("bisim");
    let ps = terms(16, &GenConfig::cpi(6));
    for depth in [2, 3, 4] {
        group.bench_with_input(BenchmarkId::new("random_pairs", depth), &depth, |b, &d| {
            b.iter(|| ps.windows(2).filter(|w| check(&w[0], &w[1], d).unwrap().is_bisimilar()).count())
        });
    }
    let lhs = parse("!a?(x).b!<a>.0", ParseMode::CpiStrict).unwrap();
    let rhs = parse("a?(x).b!<a>.0 | !a?(x).b!<a>.0", ParseMode::CpiStrict).unwrap();
    group.bench_function("replication_unfold_depth4", |b| b.iter(|| check(&lhs, &rhs, 4).unwrap()));
    group.finish();
}

fn nonforward(c: &mut Criterion) {
    let ps = terms(32, &GenConfig::pi(8));
    c.bench_function("nonforward/random_pi_depth5", |b| {
        b.iter(|| ps.iter().filter(|p| check_nonforwarding(p, 5).unwrap().is_satisfied()).count())
    });
}

fn encoding(c: &mut Criterion) {
    let ps = terms(32, &GenConfig::pi(10));
    c.bench_function("encode/with_handlers", |b| {
        b.iter(|| ps.iter().map(|p| encode_with_handlers(p).unwrap().size()).sum::<usize>())
    });
    let comm = parse("new k, l in (k!<l>.0 | k?(x).0)", ParseMode::PiFull).unwrap();
    c.bench_function("encode/completeness_comm", |b| b.iter(|| check_completeness(&comm, 12, 4).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = lts, bisim, nonforward, encoding
}
criterion_main!(benches);
