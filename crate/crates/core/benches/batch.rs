use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use retrospatial::par::Execution;
use retrospatial::spatial::{Query, RetroPointSet};
use retrospatial::zorder::{Grid, Point};

const BITS: u32 = 16;

fn point(g: &Grid, rng: &mut ChaCha8Rng) -> Point {
    let c: Vec<u32> = (0..g.dim()).map(|_| rng.gen_range(0..1u32 << BITS)).collect();
    g.point(&c).unwrap()
}

fn setup(n: usize, q: usize) -> (RetroPointSet, Vec<Query>, Vec<Query>) {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let g = Grid::new(2, BITS).unwrap();
    let mut set = RetroPointSet::new(2, BITS, 42).unwrap();
    let horizon = 2 * n as i64;
    for _ in 0..n {
        let s = rng.gen_range(0..horizon);
        let e = rng.gen_bool(0.9).then(|| s + rng.gen_range(1..horizon / 2));
        set.add_lifespan(point(&g, &mut rng), s, e).unwrap();
    }
    let r = 2.0 / (n as f64).sqrt();
    let ranges = (0..q).map(|_| Query::Range { q: point(&g, &mut rng), r, eps: 0.5, t: rng.gen_range(0..horizon) }).collect();
    let anns = (0..q).map(|_| Query::Ann { q: point(&g, &mut rng), eps: 0.25, t: rng.gen_range(0..horizon) }).collect();
    (set, ranges, anns)
}

fn batch(c: &mut Criterion) {
    let (set, ranges, anns) = setup(20_000, 1_000);
    let mut group = c.benchmark_group("batch");
    group.sample_size(20);
    for (name, queries) in [("range", &ranges), ("ann", &anns)] {
        for exec in [Execution::Sequential, Execution::Parallel] {
            group.bench_with_input(BenchmarkId::new(name, format!("{exec:?}")), queries, |b, qs| {
                b.iter(|| black_box(set.answer_batch(qs, exec)))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
