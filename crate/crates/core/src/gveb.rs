//! Colored van Emde Boas tree over a universe of `2^(2^l)` integer keys.
//!
//! Every recursive node keeps, per color, the minimum and maximum key of that
//! color directly; keys strictly between them live in `bottom[k >> half]`, and
//! `top` records which buckets hold which colors. The min/max arrays are
//! indexed by a [`RankIndex`] so that "which colors have their minimum in
//! `[i, j]`" is a couple of binary searches over at most 64 entries plus one
//! mask operation.

use std::collections::HashMap;

use crate::color::ColorSet;
use crate::error::{Error, Result};
use crate::probe::Probe;

const NONE: u64 = u64::MAX;
const BASE_BITS: u32 = 6;
pub const MAX_UNIVERSE_BITS: u32 = 32;

/// Per-color values with constant-size range reporting over them.
#[derive(Clone, Debug)]
pub struct RankIndex {
    // sorted by (value, color); one entry per color with a value
    entries: Vec<(u64, u8)>,
    // prefix[r] = colors of entries[..r]
    prefix: Vec<u64>,
}

impl Default for RankIndex {
    fn default() -> Self {
        RankIndex { entries: Vec::new(), prefix: vec![0] }
    }
}

impl RankIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values(values: &[Option<u64>]) -> Self {
        let mut r = RankIndex::new();
        for (c, v) in values.iter().enumerate() {
            if let Some(v) = *v {
                r.set(c as u8, None, Some(v));
            }
        }
        r
    }

    /// Replace color `c`'s value `old` with `new`.
    pub fn set(&mut self, c: u8, old: Option<u64>, new: Option<u64>) {
        let mut from = self.entries.len();
        if let Some(o) = old {
            let pos = self.entries.binary_search(&(o, c)).expect("stale rank entry");
            self.entries.remove(pos);
            from = from.min(pos);
        }
        if let Some(n) = new {
            let pos = self.entries.binary_search(&(n, c)).unwrap_err();
            self.entries.insert(pos, (n, c));
            from = from.min(pos);
        }
        self.prefix.truncate(from + 1);
        let mut acc = self.prefix[from];
        for &(_, col) in &self.entries[from..] {
            acc |= 1u64 << col;
            self.prefix.push(acc);
        }
    }

    #[inline]
    fn total(&self) -> u64 {
        self.prefix[self.entries.len()]
    }

    /// Colors `c` with `i <= A[c] <= j`.
    pub fn report(&self, i: u64, j: u64) -> ColorSet {
        if i > j {
            return ColorSet::EMPTY;
        }
        let lo = self.entries.partition_point(|e| e.0 < i);
        let hi = self.entries.partition_point(|e| e.0 <= j);
        ColorSet(self.prefix[hi] & !self.prefix[lo])
    }

    /// Smallest (value, color) among colors in `mask`.
    pub fn min_in(&self, mask: ColorSet) -> Option<(u64, u8)> {
        if self.total() & mask.0 == 0 {
            return None;
        }
        let r = self.prefix[1..].partition_point(|p| p & mask.0 == 0);
        Some(self.entries[r])
    }

    /// Largest (value, color) among colors in `mask`.
    pub fn max_in(&self, mask: ColorSet) -> Option<(u64, u8)> {
        let total = self.total();
        if total & mask.0 == 0 {
            return None;
        }
        // largest r whose suffix entries[r..] still meets the mask
        let (mut lo, mut hi) = (0usize, self.entries.len());
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if total & !self.prefix[mid] & mask.0 != 0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(self.entries[lo])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug)]
struct Node {
    bits: u32,
    present: ColorSet,
    body: Body,
}

#[derive(Clone, Debug)]
enum Body {
    // universe <= 64: one bitset per color
    Base(Vec<u64>),
    Rec(Box<Rec>),
}

#[derive(Clone, Debug)]
struct Rec {
    min_key: Vec<u64>,
    max_key: Vec<u64>,
    min_rank: RankIndex,
    max_rank: RankIndex,
    top: Option<Box<Node>>,
    bottom: HashMap<u64, Node>,
}

#[inline]
fn range_mask(i: u64, j: u64) -> u64 {
    let hi = if j >= 63 { u64::MAX } else { (1u64 << (j + 1)) - 1 };
    hi & (u64::MAX << i)
}

fn lex_min(a: Option<(u64, u8)>, b: Option<(u64, u8)>) -> Option<(u64, u8)> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn lex_max(a: Option<(u64, u8)>, b: Option<(u64, u8)>) -> Option<(u64, u8)> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl Node {
    fn new(bits: u32, ncolors: u8) -> Node {
        let body = if bits <= BASE_BITS {
            Body::Base(vec![0; ncolors as usize])
        } else {
            Body::Rec(Box::new(Rec {
                min_key: vec![NONE; ncolors as usize],
                max_key: vec![NONE; ncolors as usize],
                min_rank: RankIndex::new(),
                max_rank: RankIndex::new(),
                top: None,
                bottom: HashMap::new(),
            }))
        };
        Node { bits, present: ColorSet::EMPTY, body }
    }

    #[inline]
    fn half(&self) -> u32 {
        self.bits / 2
    }

    #[inline]
    fn max_key_in_universe(&self) -> u64 {
        (1u64 << self.bits) - 1
    }

    fn ncolors(&self) -> u8 {
        match &self.body {
            Body::Base(s) => s.len() as u8,
            Body::Rec(r) => r.min_key.len() as u8,
        }
    }

    fn min_of(&self, c: u8) -> Option<u64> {
        if !self.present.contains(c) {
            return None;
        }
        match &self.body {
            Body::Base(s) => Some(s[c as usize].trailing_zeros() as u64),
            Body::Rec(r) => Some(r.min_key[c as usize]),
        }
    }

    fn max_of(&self, c: u8) -> Option<u64> {
        if !self.present.contains(c) {
            return None;
        }
        match &self.body {
            Body::Base(s) => Some(63 - s[c as usize].leading_zeros() as u64),
            Body::Rec(r) => Some(r.max_key[c as usize]),
        }
    }

    fn min_in(&self, mask: ColorSet) -> Option<(u64, u8)> {
        match &self.body {
            Body::Base(s) => (mask & self.present)
                .iter()
                .map(|c| (s[c as usize].trailing_zeros() as u64, c))
                .min(),
            Body::Rec(r) => r.min_rank.min_in(mask & self.present),
        }
    }

    fn max_in(&self, mask: ColorSet) -> Option<(u64, u8)> {
        match &self.body {
            Body::Base(s) => (mask & self.present)
                .iter()
                .map(|c| (63 - s[c as usize].leading_zeros() as u64, c))
                .max(),
            Body::Rec(r) => r.max_rank.max_in(mask & self.present),
        }
    }

    /// Colors whose largest key is at least `lo`.
    fn colors_max_ge(&self, lo: u64) -> ColorSet {
        match &self.body {
            Body::Base(s) => ColorSet::from_colors(
                self.present.iter().filter(|&c| s[c as usize] & (u64::MAX << lo) != 0),
            ),
            Body::Rec(r) => r.max_rank.report(lo, u64::MAX - 1),
        }
    }

    /// Colors whose smallest key is at most `hi`.
    fn colors_min_le(&self, hi: u64) -> ColorSet {
        match &self.body {
            Body::Base(s) => ColorSet::from_colors(
                self.present.iter().filter(|&c| s[c as usize] & range_mask(0, hi) != 0),
            ),
            Body::Rec(r) => r.min_rank.report(0, hi),
        }
    }

    fn insert(&mut self, k: u64, c: u8, probe: &mut Probe) {
        probe.gveb_levels += 1;
        let was = self.present.contains(c);
        self.present = self.present.with(c);
        let bits = self.bits;
        let half = self.half();
        let ncolors = self.ncolors();
        match &mut self.body {
            Body::Base(s) => s[c as usize] |= 1u64 << k,
            Body::Rec(r) => {
                let ci = c as usize;
                if !was {
                    r.set_min(c, k);
                    r.set_max(c, k);
                    return;
                }
                let (mn, mx) = (r.min_key[ci], r.max_key[ci]);
                if mn == mx {
                    if k < mn {
                        r.set_min(c, k);
                    } else {
                        r.set_max(c, k);
                    }
                    return;
                }
                let x = if k < mn {
                    r.set_min(c, k);
                    mn
                } else if k > mx {
                    r.set_max(c, k);
                    mx
                } else {
                    k
                };
                let (b, lo) = (x >> half, x & ((1u64 << half) - 1));
                let bn = r.bottom.entry(b).or_insert_with(|| Node::new(half, ncolors));
                if !bn.present.contains(c) {
                    r.top
                        .get_or_insert_with(|| Box::new(Node::new(bits - half, ncolors)))
                        .insert(b, c, probe);
                }
                bn.insert(lo, c, probe);
            }
        }
    }

    fn delete(&mut self, k: u64, c: u8, probe: &mut Probe) {
        probe.gveb_levels += 1;
        let half = self.half();
        match &mut self.body {
            Body::Base(s) => {
                s[c as usize] &= !(1u64 << k);
                if s[c as usize] == 0 {
                    self.present = self.present.without(c);
                }
            }
            Body::Rec(r) => {
                let ci = c as usize;
                let (mn, mx) = (r.min_key[ci], r.max_key[ci]);
                if mn == mx {
                    debug_assert_eq!(mn, k);
                    r.clear(c);
                    self.present = self.present.without(c);
                    return;
                }
                let has_rec = r.top.as_ref().is_some_and(|t| t.present.contains(c));
                let x = if k == mn {
                    if !has_rec {
                        r.set_min(c, mx);
                        return;
                    }
                    let top = r.top.as_ref().expect("top present");
                    let b = top.min_of(c).expect("color in top");
                    let nk = b << half | r.bottom[&b].min_of(c).expect("color in bucket");
                    r.set_min(c, nk);
                    nk
                } else if k == mx {
                    if !has_rec {
                        r.set_max(c, mn);
                        return;
                    }
                    let top = r.top.as_ref().expect("top present");
                    let b = top.max_of(c).expect("color in top");
                    let nk = b << half | r.bottom[&b].max_of(c).expect("color in bucket");
                    r.set_max(c, nk);
                    nk
                } else {
                    k
                };
                let (b, lo) = (x >> half, x & ((1u64 << half) - 1));
                let bn = r.bottom.get_mut(&b).expect("bucket present");
                bn.delete(lo, c, probe);
                if !bn.present.contains(c) {
                    let empty = bn.present.is_empty();
                    if empty {
                        r.bottom.remove(&b);
                    }
                    r.top.as_mut().expect("top present").delete(b, c, probe);
                }
            }
        }
    }

    /// Lexicographically smallest (key, color) with key >= k and color in cq.
    fn succ(&self, k: u64, cq: ColorSet, probe: &mut Probe) -> Option<(u64, u8)> {
        probe.gveb_levels += 1;
        let cq = cq & self.present;
        if cq.is_empty() {
            return None;
        }
        match &self.body {
            Body::Base(s) => cq
                .iter()
                .filter_map(|c| {
                    let m = s[c as usize] & (u64::MAX << k);
                    (m != 0).then(|| (m.trailing_zeros() as u64, c))
                })
                .min(),
            Body::Rec(r) => {
                let half = self.half();
                let mut best = r.min_rank.min_in(r.min_rank.report(k, u64::MAX - 1) & cq);
                if k == 0 {
                    return best;
                }
                let span = r.min_rank.report(0, k - 1) & r.max_rank.report(k, u64::MAX - 1) & cq;
                if span.is_empty() {
                    return best;
                }
                best = lex_min(best, r.max_rank.min_in(span));
                let (b, lo) = (k >> half, k & ((1u64 << half) - 1));
                let inb = r.bottom.get(&b).map(|bn| (bn, bn.colors_max_ge(lo) & span));
                match inb {
                    Some((bn, m)) if !m.is_empty() => {
                        let hit = bn.succ(lo, m, probe).map(|(x, c)| (b << half | x, c));
                        best = lex_min(best, hit);
                    }
                    _ => {
                        let buckets = 1u64 << (self.bits - half);
                        if let (Some(top), true) = (&r.top, b + 1 < buckets) {
                            if let Some((b2, _)) = top.succ(b + 1, span, probe) {
                                let hit = r.bottom[&b2].min_in(span).map(|(x, c)| (b2 << half | x, c));
                                best = lex_min(best, hit);
                            }
                        }
                    }
                }
                best
            }
        }
    }

    /// Lexicographically largest (key, color) with key <= k and color in cq.
    fn pred(&self, k: u64, cq: ColorSet, probe: &mut Probe) -> Option<(u64, u8)> {
        probe.gveb_levels += 1;
        let cq = cq & self.present;
        if cq.is_empty() {
            return None;
        }
        match &self.body {
            Body::Base(s) => cq
                .iter()
                .filter_map(|c| {
                    let m = s[c as usize] & range_mask(0, k);
                    (m != 0).then(|| (63 - m.leading_zeros() as u64, c))
                })
                .max(),
            Body::Rec(r) => {
                let half = self.half();
                let mut best = r.max_rank.max_in(r.max_rank.report(0, k) & cq);
                if k >= self.max_key_in_universe() {
                    return best;
                }
                let span = r.min_rank.report(0, k) & r.max_rank.report(k + 1, u64::MAX - 1) & cq;
                if span.is_empty() {
                    return best;
                }
                best = lex_max(best, r.min_rank.max_in(span));
                let (b, lo) = (k >> half, k & ((1u64 << half) - 1));
                let inb = r.bottom.get(&b).map(|bn| (bn, bn.colors_min_le(lo) & span));
                match inb {
                    Some((bn, m)) if !m.is_empty() => {
                        let hit = bn.pred(lo, m, probe).map(|(x, c)| (b << half | x, c));
                        best = lex_max(best, hit);
                    }
                    _ => {
                        if let (Some(top), true) = (&r.top, b > 0) {
                            if let Some((b2, _)) = top.pred(b - 1, span, probe) {
                                let hit = r.bottom[&b2].max_in(span).map(|(x, c)| (b2 << half | x, c));
                                best = lex_max(best, hit);
                            }
                        }
                    }
                }
                best
            }
        }
    }

    /// One element per color of `cq` present in `[i, j]`; reported colors are
    /// removed from `cq`.
    fn reportany(&self, i: u64, j: u64, cq: &mut ColorSet, out: &mut Vec<(u64, u8)>, probe: &mut Probe) {
        probe.gveb_levels += 1;
        if i > j || !cq.intersects(self.present) {
            return;
        }
        match &self.body {
            Body::Base(s) => {
                let m = range_mask(i, j);
                for c in (*cq & self.present).iter() {
                    let hit = s[c as usize] & m;
                    if hit != 0 {
                        out.push((hit.trailing_zeros() as u64, c));
                        *cq = cq.without(c);
                    }
                }
            }
            Body::Rec(r) => {
                let cmin = r.min_rank.report(i, j) & *cq;
                for c in cmin.iter() {
                    out.push((r.min_key[c as usize], c));
                }
                *cq = *cq - cmin;
                let cmax = r.max_rank.report(i, j) & *cq;
                for c in cmax.iter() {
                    out.push((r.max_key[c as usize], c));
                }
                *cq = *cq - cmax;
                if i == 0 || j == self.max_key_in_universe() {
                    return;
                }
                // only colors straddling the whole range can still have keys inside it
                let mut rest = *cq & r.min_rank.report(0, i - 1) & r.max_rank.report(j + 1, u64::MAX - 1);
                if rest.is_empty() {
                    return;
                }
                let before = rest;
                let half = self.half();
                let low = (1u64 << half) - 1;
                let (bi, bj) = (i >> half, j >> half);
                let mut tmp = Vec::new();
                if bi == bj {
                    if let Some(bn) = r.bottom.get(&bi) {
                        bn.reportany(i & low, j & low, &mut rest, &mut tmp, probe);
                        out.extend(tmp.drain(..).map(|(x, c)| (bi << half | x, c)));
                    }
                } else {
                    if let Some(bn) = r.bottom.get(&bi) {
                        bn.reportany(i & low, low, &mut rest, &mut tmp, probe);
                        out.extend(tmp.drain(..).map(|(x, c)| (bi << half | x, c)));
                    }
                    if bi + 1 < bj {
                        if let Some(top) = &r.top {
                            top.reportany(bi + 1, bj - 1, &mut rest, &mut tmp, probe);
                            // bucket pointers become the bucket's minimum of that color
                            for (b, c) in tmp.drain(..) {
                                let x = r.bottom[&b].min_of(c).expect("bucket holds color");
                                out.push((b << half | x, c));
                            }
                        }
                    }
                    if let Some(bn) = r.bottom.get(&bj) {
                        bn.reportany(0, j & low, &mut rest, &mut tmp, probe);
                        out.extend(tmp.drain(..).map(|(x, c)| (bj << half | x, c)));
                    }
                }
                *cq = *cq - (before - rest);
            }
        }
    }

    fn audit(&self, lo_bound: u64, out: &mut Vec<(u64, u8)>, offset: u64) -> std::result::Result<(), String> {
        match &self.body {
            Body::Base(s) => {
                for (c, &set) in s.iter().enumerate() {
                    if (set != 0) != self.present.contains(c as u8) {
                        return Err(format!("base presence mismatch for color {c}"));
                    }
                    let mut m = set;
                    while m != 0 {
                        out.push((offset + m.trailing_zeros() as u64, c as u8));
                        m &= m - 1;
                    }
                }
                let _ = lo_bound;
                Ok(())
            }
            Body::Rec(r) => {
                let half = self.half();
                let mut inner = Vec::new();
                for (&b, bn) in &r.bottom {
                    if bn.present.is_empty() {
                        return Err("empty bucket retained".into());
                    }
                    let top_colors = r
                        .top
                        .as_ref()
                        .map(|t| ColorSet::from_colors((0..self.ncolors()).filter(|&c| t.contains(b, c))))
                        .unwrap_or_default();
                    if top_colors != bn.present {
                        return Err(format!("top colors for bucket {b} disagree with bucket"));
                    }
                    bn.audit(0, &mut inner, offset + (b << half))?;
                }
                for c in 0..self.ncolors() {
                    let ci = c as usize;
                    let present = self.present.contains(c);
                    if present != (r.min_key[ci] != NONE) || present != (r.max_key[ci] != NONE) {
                        return Err(format!("min/max presence mismatch for color {c}"));
                    }
                    if !present {
                        if inner.iter().any(|e| e.1 == c) {
                            return Err(format!("recursive keys for absent color {c}"));
                        }
                        continue;
                    }
                    let (mn, mx) = (offset + r.min_key[ci], offset + r.max_key[ci]);
                    if inner.iter().any(|&(k, col)| col == c && (k <= mn || k >= mx)) {
                        return Err(format!("recursive key outside (min, max) for color {c}"));
                    }
                    out.push((mn, c));
                    if mx != mn {
                        out.push((mx, c));
                    }
                    let (lo_r, hi_r) = (r.min_rank.report(r.min_key[ci], r.min_key[ci]), r.max_rank.report(r.max_key[ci], r.max_key[ci]));
                    if !lo_r.contains(c) || !hi_r.contains(c) {
                        return Err(format!("rank index stale for color {c}"));
                    }
                }
                if r.min_rank.len() != self.present.len() as usize || r.max_rank.len() != self.present.len() as usize {
                    return Err("rank index size mismatch".into());
                }
                out.extend(inner);
                Ok(())
            }
        }
    }

    fn contains(&self, k: u64, c: u8) -> bool {
        if !self.present.contains(c) {
            return false;
        }
        match &self.body {
            Body::Base(s) => s[c as usize] >> k & 1 == 1,
            Body::Rec(r) => {
                let ci = c as usize;
                if r.min_key[ci] == k || r.max_key[ci] == k {
                    return true;
                }
                let half = self.half();
                r.bottom
                    .get(&(k >> half))
                    .is_some_and(|bn| bn.contains(k & ((1u64 << half) - 1), c))
            }
        }
    }
}

impl Rec {
    fn set_min(&mut self, c: u8, k: u64) {
        let old = self.min_key[c as usize];
        self.min_key[c as usize] = k;
        self.min_rank.set(c, (old != NONE).then_some(old), Some(k));
    }

    fn set_max(&mut self, c: u8, k: u64) {
        let old = self.max_key[c as usize];
        self.max_key[c as usize] = k;
        self.max_rank.set(c, (old != NONE).then_some(old), Some(k));
    }

    fn clear(&mut self, c: u8) {
        let ci = c as usize;
        let (mn, mx) = (self.min_key[ci], self.max_key[ci]);
        self.min_rank.set(c, Some(mn), None);
        self.max_rank.set(c, Some(mx), None);
        self.min_key[ci] = NONE;
        self.max_key[ci] = NONE;
    }
}

/// Colored successor/predecessor and colored range reporting over
/// `(key, color)` pairs with keys in `[0, 2^bits)`.
#[derive(Clone, Debug)]
pub struct Gveb {
    root: Node,
    ncolors: u8,
    len: usize,
    // per-color neighbor pointers (prev, next) for range reporting
    links: HashMap<(u64, u8), (u64, u64)>,
}

impl Gveb {
    /// The universe is rounded up to `2^(2^l)` keys; at most `2^32`.
    pub fn new(universe_bits: u32, ncolors: u8) -> Result<Gveb> {
        if universe_bits == 0 || universe_bits > MAX_UNIVERSE_BITS {
            return Err(Error::Precondition("universe must span 1..=32 bits"));
        }
        if ncolors == 0 || ncolors > 64 {
            return Err(Error::Precondition("color alphabet must have 1..=64 colors"));
        }
        let bits = universe_bits.next_power_of_two();
        Ok(Gveb { root: Node::new(bits, ncolors), ncolors, len: 0, links: HashMap::new() })
    }

    pub fn universe_bits(&self) -> u32 {
        self.root.bits
    }

    pub fn ncolors(&self) -> u8 {
        self.ncolors
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Colors with at least one key.
    pub fn colors(&self) -> ColorSet {
        self.root.present
    }

    fn check(&self, k: u64, c: u8) -> Result<()> {
        if c >= self.ncolors {
            return Err(Error::BadColor(c));
        }
        if k >> self.root.bits != 0 {
            return Err(Error::KeyOutOfUniverse { key: k, bits: self.root.bits });
        }
        Ok(())
    }

    pub fn contains(&self, k: u64, c: u8) -> bool {
        self.links.contains_key(&(k, c))
    }

    /// Smallest and largest key of color `c` as held at the root.
    pub fn min_key(&self, c: u8) -> Option<u64> {
        self.root.min_of(c)
    }

    pub fn max_key(&self, c: u8) -> Option<u64> {
        self.root.max_of(c)
    }

    pub fn insert(&mut self, k: u64, c: u8) -> Result<()> {
        self.insert_with(k, c, &mut Probe::default())
    }

    pub fn insert_with(&mut self, k: u64, c: u8, probe: &mut Probe) -> Result<()> {
        self.check(k, c)?;
        if self.contains(k, c) {
            return Err(Error::DuplicateElement { key: k, color: c });
        }
        let only = ColorSet::single(c);
        let prev = if k > 0 { self.root.pred(k - 1, only, probe).map(|e| e.0) } else { None };
        let next = self.root.succ(k + 1, only, probe).map(|e| e.0);
        self.root.insert(k, c, probe);
        let (p, n) = (prev.unwrap_or(NONE), next.unwrap_or(NONE));
        if let Some(e) = prev.and_then(|p| self.links.get_mut(&(p, c))) {
            e.1 = k;
        }
        if let Some(e) = next.and_then(|n| self.links.get_mut(&(n, c))) {
            e.0 = k;
        }
        self.links.insert((k, c), (p, n));
        self.len += 1;
        Ok(())
    }

    pub fn delete(&mut self, k: u64, c: u8) -> Result<()> {
        self.delete_with(k, c, &mut Probe::default())
    }

    pub fn delete_with(&mut self, k: u64, c: u8, probe: &mut Probe) -> Result<()> {
        self.check(k, c)?;
        let (p, n) = self.links.remove(&(k, c)).ok_or(Error::MissingElement { key: k, color: c })?;
        if p != NONE {
            self.links.get_mut(&(p, c)).expect("linked predecessor").1 = n;
        }
        if n != NONE {
            self.links.get_mut(&(n, c)).expect("linked successor").0 = p;
        }
        self.root.delete(k, c, probe);
        self.len -= 1;
        Ok(())
    }

    /// Smallest `(key, color)` with `key >= k` and color in `cq`; ties on the
    /// key go to the smaller color.
    pub fn find(&self, k: u64, cq: ColorSet) -> Option<(u64, u8)> {
        self.find_with(k, cq, &mut Probe::default())
    }

    pub fn find_with(&self, k: u64, cq: ColorSet, probe: &mut Probe) -> Option<(u64, u8)> {
        if k >> self.root.bits != 0 {
            return None;
        }
        self.root.succ(k, cq, probe)
    }

    /// Largest `(key, color)` with `key <= k` and color in `cq`; ties on the
    /// key go to the larger color.
    pub fn find_prev(&self, k: u64, cq: ColorSet) -> Option<(u64, u8)> {
        self.find_prev_with(k, cq, &mut Probe::default())
    }

    pub fn find_prev_with(&self, k: u64, cq: ColorSet, probe: &mut Probe) -> Option<(u64, u8)> {
        let k = k.min(self.root.max_key_in_universe());
        self.root.pred(k, cq, probe)
    }

    /// One element in `[i, j]` for every color of `cq` that has one there.
    pub fn reportany(&self, i: u64, j: u64, cq: ColorSet) -> Vec<(u64, u8)> {
        let mut out = Vec::new();
        self.reportany_with(i, j, cq, &mut out, &mut Probe::default());
        out
    }

    pub fn reportany_with(&self, i: u64, j: u64, cq: ColorSet, out: &mut Vec<(u64, u8)>, probe: &mut Probe) {
        let j = j.min(self.root.max_key_in_universe());
        let mut cq = cq & ColorSet::all(self.ncolors);
        self.root.reportany(i, j, &mut cq, out, probe);
    }

    /// Every `(key, color)` with `i <= key <= j` and color in `cq`.
    pub fn report(&self, i: u64, j: u64, cq: ColorSet) -> Vec<(u64, u8)> {
        let mut out = Vec::new();
        self.report_with(i, j, cq, &mut out, &mut Probe::default());
        out
    }

    pub fn report_with(&self, i: u64, j: u64, cq: ColorSet, out: &mut Vec<(u64, u8)>, probe: &mut Probe) {
        let start = out.len();
        self.reportany_with(i, j, cq, out, probe);
        let seeds = out.len();
        for s in start..seeds {
            let (k, c) = out[s];
            let (mut p, mut n) = self.links[&(k, c)];
            while p != NONE && p >= i {
                out.push((p, c));
                p = self.links[&(p, c)].0;
            }
            while n != NONE && n <= j {
                out.push((n, c));
                n = self.links[&(n, c)].1;
            }
        }
    }

    /// Full consistency check of the recursive layout against the neighbor
    /// pointers.
    pub fn audit(&self) -> Result<()> {
        let mut all = Vec::new();
        self.root.audit(0, &mut all, 0).map_err(Error::Audit)?;
        all.sort_unstable();
        let mut linked: Vec<_> = self.links.keys().copied().collect();
        linked.sort_unstable();
        if all != linked || all.len() != self.len {
            return Err(Error::Audit("stored elements disagree with neighbor pointers".into()));
        }
        for &(k, c) in &all {
            let (p, n) = self.links[&(k, c)];
            let want_p = all.iter().rev().find(|e| e.1 == c && e.0 < k).map_or(NONE, |e| e.0);
            let want_n = all.iter().find(|e| e.1 == c && e.0 > k).map_or(NONE, |e| e.0);
            if p != want_p || n != want_n {
                return Err(Error::Audit(format!("neighbor pointers of ({k}, {c}) are stale")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RED: u8 = 0;
    const BLUE: u8 = 1;

    fn cs(c: &[u8]) -> ColorSet {
        ColorSet::from_colors(c.iter().copied())
    }

    #[test]
    fn rank_report_examples() {
        let a = RankIndex::from_values(&[None, None, None]);
        assert!(a.report(0, u64::MAX - 1).is_empty());
        let a = RankIndex::from_values(&[Some(4), Some(10)]);
        assert_eq!(a.report(3, 5), cs(&[0]));
        assert_eq!(a.report(0, u64::MAX - 1), cs(&[0, 1]));
        assert_eq!(a.report(5, 3), ColorSet::EMPTY);
        assert_eq!(a.min_in(cs(&[1])), Some((10, 1)));
        assert_eq!(a.max_in(cs(&[0, 1])), Some((10, 1)));
        assert_eq!(a.max_in(cs(&[0])), Some((4, 0)));
    }

    #[test]
    fn rank_index_updates() {
        let mut a = RankIndex::new();
        a.set(3, None, Some(7));
        a.set(1, None, Some(7));
        a.set(2, None, Some(1));
        assert_eq!(a.report(7, 7), cs(&[1, 3]));
        a.set(3, Some(7), Some(0));
        assert_eq!(a.report(0, 1), cs(&[2, 3]));
        assert_eq!(a.min_in(cs(&[1, 2, 3])), Some((0, 3)));
        a.set(2, Some(1), None);
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn insert_delete_inverse() {
        let mut g = Gveb::new(16, 4).unwrap();
        g.insert(5, RED).unwrap();
        g.delete(5, RED).unwrap();
        assert!(g.is_empty());
        assert_eq!(g.find(0, ColorSet::all(4)), None);
        g.audit().unwrap();
    }

    #[test]
    fn singleton_color_min_max() {
        let mut g = Gveb::new(16, 4).unwrap();
        g.insert(5, RED).unwrap();
        g.insert(9, BLUE).unwrap();
        assert_eq!(g.min_key(RED), Some(5));
        assert_eq!(g.max_key(RED), Some(5));
        assert_eq!(g.min_key(BLUE), Some(9));
    }

    #[test]
    fn find_examples() {
        let mut g = Gveb::new(16, 4).unwrap();
        assert_eq!(g.find(0, ColorSet::all(4)), None);
        g.insert(5, RED).unwrap();
        g.insert(9, BLUE).unwrap();
        assert_eq!(g.find(4, cs(&[RED, BLUE])), Some((5, RED)));
        assert_eq!(g.find(6, cs(&[BLUE])), Some((9, BLUE)));
        assert_eq!(g.find(6, cs(&[RED])), None);
        assert_eq!(g.find(3, ColorSet::EMPTY), None);
        assert_eq!(g.find_prev(8, cs(&[RED, BLUE])), Some((5, RED)));
    }

    #[test]
    fn errors() {
        let mut g = Gveb::new(8, 2).unwrap();
        g.insert(1, 0).unwrap();
        assert!(matches!(g.insert(1, 0), Err(Error::DuplicateElement { .. })));
        assert!(matches!(g.delete(2, 0), Err(Error::MissingElement { .. })));
        assert!(matches!(g.insert(256, 0), Err(Error::KeyOutOfUniverse { .. })));
        assert!(matches!(g.insert(3, 2), Err(Error::BadColor(2))));
        assert!(Gveb::new(33, 2).is_err());
    }

    #[test]
    fn reportany_examples() {
        let mut g = Gveb::new(16, 2).unwrap();
        assert!(g.reportany(5, 2, cs(&[RED, BLUE])).is_empty());
        g.insert(3, RED).unwrap();
        g.insert(5, RED).unwrap();
        g.insert(7, BLUE).unwrap();
        let any = g.reportany(2, 8, cs(&[RED, BLUE]));
        assert_eq!(any.len(), 2);
        assert!(any.iter().any(|&(k, c)| c == RED && (2..=8).contains(&k)));
        assert!(any.contains(&(7, BLUE)));
        let whole = g.reportany(0, u64::MAX, cs(&[RED, BLUE]));
        assert_eq!(whole.len(), 2);
    }

    #[test]
    fn report_examples() {
        let mut g = Gveb::new(16, 2).unwrap();
        assert!(g.report(0, 100, cs(&[RED])).is_empty());
        g.insert(3, RED).unwrap();
        g.insert(5, RED).unwrap();
        g.insert(7, BLUE).unwrap();
        let mut r = g.report(2, 8, cs(&[RED]));
        r.sort();
        assert_eq!(r, vec![(3, RED), (5, RED)]);
        let mut all = g.report(0, u64::MAX, cs(&[RED, BLUE]));
        all.sort();
        assert_eq!(all, vec![(3, RED), (5, RED), (7, BLUE)]);
    }

    #[test]
    fn deep_recursion_paths() {
        let mut g = Gveb::new(32, 3).unwrap();
        let keys = [0u64, 1, 17, 65_535, 65_536, 1 << 20, (1 << 32) - 1, 123_456_789];
        for (i, &k) in keys.iter().enumerate() {
            g.insert(k, (i % 3) as u8).unwrap();
        }
        g.audit().unwrap();
        assert_eq!(g.find(18, ColorSet::all(3)), Some((65_535, 0)));
        assert_eq!(g.find_prev(65_534, ColorSet::all(3)), Some((17, 2)));
        assert_eq!(g.find((1 << 32) - 1, ColorSet::single(0)), Some(((1 << 32) - 1, 0)));
        for (i, &k) in keys.iter().enumerate() {
            g.delete(k, (i % 3) as u8).unwrap();
            g.audit().unwrap();
        }
        assert!(g.is_empty());
    }
}
