use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use retrospatial::segtree::RetroTree;

fn alive(spans: &[(u64, u32, i64, Option<i64>)], t: i64, lo: u32, hi: u32) -> Vec<u64> {
    let mut v: Vec<u64> = spans
        .iter()
        .filter(|&&(_, k, s, e)| s <= t && e.map_or(true, |e| t < e) && lo <= k && k <= hi)
        .map(|&(h, ..)| h)
        .collect();
    v.sort_unstable();
    v
}

#[test]
fn thousand_inserts_stay_audited() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut tree: RetroTree<u32> = RetroTree::new();
    let mut spans = Vec::new();
    for h in 1..=1000u64 {
        let k = rng.gen::<u32>();
        let s = rng.gen_range(-500..500);
        let e = rng.gen_bool(0.85).then(|| s + rng.gen_range(1..300));
        tree.insert(h, k, s, e).unwrap();
        spans.push((h, k, s, e));
        if h % 100 == 0 {
            tree.audit().unwrap();
        }
    }
    tree.audit().unwrap();
    assert_eq!(tree.len(), 1000);
    for _ in 0..300 {
        let t = rng.gen_range(-600..900);
        let (a, b) = (rng.gen::<u32>(), rng.gen::<u32>());
        let (lo, hi) = (a.min(b), a.max(b));
        let mut got = tree.report(t, &lo, &hi);
        got.sort_unstable();
        assert_eq!(got, alive(&spans, t, lo, hi));
        let want_succ = spans.iter().filter(|&&(_, k, s, e)| s <= t && e.map_or(true, |e| t < e) && k >= lo).min_by_key(|&&(_, k, ..)| k).map(|x| x.0);
        assert_eq!(tree.succ(t, &lo), want_succ);
        let want_pred = spans.iter().filter(|&&(_, k, s, e)| s <= t && e.map_or(true, |e| t < e) && k <= hi).max_by_key(|&&(_, k, ..)| k).map(|x| x.0);
        assert_eq!(tree.pred(t, &hi), want_pred);
    }
}

#[test]
fn deletes_back_to_empty() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut tree: RetroTree<u32> = RetroTree::new();
    let mut handles: Vec<u64> = (1..=600).collect();
    for &h in &handles {
        let s = rng.gen_range(0..1000);
        tree.insert(h, h as u32 * 7, s, Some(s + 10)).unwrap();
    }
    while !handles.is_empty() {
        let h = handles.swap_remove(rng.gen_range(0..handles.len()));
        tree.delete(h).unwrap();
        if handles.len() % 97 == 0 {
            tree.audit().unwrap();
        }
    }
    assert!(tree.is_empty());
    assert!(tree.report(5, &0, &u32::MAX).is_empty());
    assert_eq!(tree.succ(5, &0), None);
}
