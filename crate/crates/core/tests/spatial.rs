use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use retrospatial::oracle::NaiveTimeline;
use retrospatial::par::Execution;
use retrospatial::spatial::{Query, RetroPointSet};
use retrospatial::zorder::{Grid, Point};

const BITS: u32 = 12;

fn point(g: &Grid, rng: &mut ChaCha8Rng) -> Point {
    let c: Vec<u32> = (0..g.dim()).map(|_| rng.gen_range(0..1u32 << BITS)).collect();
    g.point(&c).unwrap()
}

#[test]
fn add_remove_storm_matches_oracle() {
    for (seed, d) in [(1u64, 1usize), (2, 2), (3, 3), (4, 2)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::new(d, BITS).unwrap();
        let mut set = RetroPointSet::new(d, BITS, seed).unwrap();
        let mut or = NaiveTimeline::new(BITS);
        let mut live = Vec::new();
        for round in 0..1500 {
            if live.len() > 20 && rng.gen_bool(0.4) {
                let h = live.swap_remove(rng.gen_range(0..live.len()));
                set.remove_lifespan(h).unwrap();
                or.remove(h);
            } else {
                let p = point(&g, &mut rng);
                let s = rng.gen_range(0..500);
                let e = rng.gen_bool(0.8).then(|| s + rng.gen_range(1..200));
                let h = set.add_lifespan(p, s, e).unwrap();
                or.add(h, p, s, e);
                live.push(h);
            }
            if round % 25 == 0 {
                let q = point(&g, &mut rng);
                let t = rng.gen_range(-5..600);
                let r = rng.gen_range(0.01..0.4);
                let eps = [0.1, 0.5, 1.0][round % 3];
                or.check_range(&q, r, eps, t, &set.range_report(&q, r, eps, t).unwrap()).unwrap();
                or.check_empty(&q, r, eps, t, set.spherical_empty(&q, r, eps, t).unwrap()).unwrap();
                or.check_ann(&q, eps, t, set.ann(&q, eps, t).unwrap()).unwrap();
            }
        }
        set.audit().unwrap();
    }
}

#[test]
fn shifted_trees_hold_the_same_lifespans() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = 3;
    let g = Grid::new(d, BITS).unwrap();
    let mut set = RetroPointSet::new(d, BITS, 0).unwrap();
    for _ in 0..400 {
        let s = rng.gen_range(0..100);
        set.add_lifespan(point(&g, &mut rng), s, Some(s + rng.gen_range(1..50))).unwrap();
    }
    for t in [-1, 0, 17, 50, 99, 149, 200] {
        let mut want: Vec<u64> = set.lifespans().filter(|(_, l)| l.alive_at(t)).map(|(h, _)| h).collect();
        want.sort_unstable();
        for j in 0..=d {
            let tree = set.tree(j);
            let (lo, hi) = (tree.keys().next(), tree.keys().next_back());
            let mut got = match (lo, hi) {
                (Some(lo), Some(hi)) => tree.report(t, lo, hi),
                _ => Vec::new(),
            };
            got.sort_unstable();
            assert_eq!(got, want, "shift {j} at t={t}");
        }
    }
}

#[test]
fn batch_answers_match_single_queries() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = Grid::new(2, BITS).unwrap();
    let mut set = RetroPointSet::new(2, BITS, 1).unwrap();
    for _ in 0..500 {
        let s = rng.gen_range(0..100);
        set.add_lifespan(point(&g, &mut rng), s, None).unwrap();
    }
    let queries: Vec<Query> = (0..200)
        .map(|i| {
            let q = point(&g, &mut rng);
            match i % 3 {
                0 => Query::Range { q, r: 0.1, eps: 0.5, t: i },
                1 => Query::Empty { q, r: 0.05, eps: 0.5, t: i },
                _ => Query::Ann { q, eps: 0.1, t: i },
            }
        })
        .collect();
    let seq = set.answer_batch(&queries, Execution::Sequential);
    let par = set.answer_batch(&queries, Execution::Parallel);
    assert_eq!(seq, par);
    for (q, a) in queries.iter().zip(&seq) {
        let mut probe = Default::default();
        assert_eq!(&set.answer(q, &mut probe).unwrap(), &a.as_ref().unwrap().0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // edits confined to [t1, t2) never change answers outside it
    #[test]
    fn edits_do_not_leak_outside_their_interval(
        base in proptest::collection::vec((0u32..4096, 0u32..4096, 0i64..100, 1i64..60), 1..80),
        edit in (0u32..4096, 0u32..4096, 0i64..100, 1i64..60),
        queries in proptest::collection::vec((0u32..4096, 0u32..4096, -5i64..170, 0.01f64..0.5), 1..12),
    ) {
        let g = Grid::new(2, BITS).unwrap();
        let mut set = RetroPointSet::new(2, BITS, 3).unwrap();
        for &(x, y, s, len) in &base {
            set.add_lifespan(g.point(&[x, y]).unwrap(), s, Some(s + len)).unwrap();
        }
        let ask = |set: &RetroPointSet| -> Vec<String> {
            queries.iter().map(|&(x, y, t, r)| {
                let q = g.point(&[x, y]).unwrap();
                let mut hs: Vec<u64> = set.range_report(&q, r, 0.5, t).unwrap().into_iter().map(|e| e.1).collect();
                hs.sort_unstable();
                format!("{hs:?} {:?} {:?}", set.spherical_empty(&q, r, 0.5, t).unwrap(), set.ann(&q, 0.3, t).unwrap())
            }).collect()
        };
        let before = ask(&set);
        let (x, y, s, len) = edit;
        let h = set.add_lifespan(g.point(&[x, y]).unwrap(), s, Some(s + len)).unwrap();
        let after = ask(&set);
        set.remove_lifespan(h).unwrap();
        let undone = ask(&set);
        for (i, &(_, _, t, _)) in queries.iter().enumerate() {
            if t < s || t >= s + len {
                prop_assert_eq!(&before[i], &after[i]);
            }
        }
        prop_assert_eq!(before, undone);
    }
}
