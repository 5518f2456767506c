//! Fully retroactive ordered set of keyed lifespans.
//!
//! A weight-balanced segment tree over the distinct timestamps, branching at
//! most [`LAMBDA`]. Node `v` catalogs every lifespan with an endpoint below
//! it, colored by which children hold its endpoints. A query at time `t`
//! walks the path to `t`'s leaf; at node `v` with next child `u` the lifespans
//! alive at `t` and absent below `u` are exactly those with a color in
//! `Q(v)[u]`, and the cascade into `u`'s catalog follows colors `F(u)`.
//!
//! Children keep a stable slot id for their whole life, and colors refer to
//! slots, so inserting a timestamp never recolors a catalog.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::color::ColorSet;
use crate::error::{Error, Result};
use crate::gusf::{ElemId, Gusf};
use crate::probe::Probe;

pub type Handle = u64;

pub const LAMBDA: usize = 8;
pub const NCOLORS: u8 = 52;

const NIL: u32 = u32::MAX;
const NO_SLOT: u8 = u8::MAX;
const MIN_CAPACITY: usize = 64;

/// A leaf position on the time axis. `NegInf` precedes every timestamp.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stamp {
    NegInf,
    At(i64),
}

/// Color of a lifespan whose endpoints sit under slots `s1` and `s2`.
pub fn pair_color(s1: u8, s2: u8) -> u8 {
    let (a, b) = (s1.min(s2), s1.max(s2));
    if a == b {
        28 + a
    } else {
        let l = LAMBDA as u8;
        a * (2 * l - a - 1) / 2 + (b - a - 1)
    }
}

/// Only the left endpoint is below slot `s`.
pub fn left_color(s: u8) -> u8 {
    36 + s
}

/// Only the right endpoint is below slot `s`.
pub fn right_color(s: u8) -> u8 {
    44 + s
}

/// Colors of lifespans with an endpoint under slot `s`.
pub fn f_colors(s: u8) -> ColorSet {
    let mut f = ColorSet::single(left_color(s)).with(right_color(s));
    for w in 0..LAMBDA as u8 {
        f = f.with(pair_color(s, w));
    }
    f
}

#[derive(Clone, Copy, Debug)]
enum Child {
    Leaf(Stamp),
    Node(u32),
}

#[derive(Clone, Debug)]
struct TNode {
    parent: u32,
    children: Vec<Child>,
    starts: Vec<Stamp>,
    slots: Vec<u8>,
    hi: Stamp,
    weight: u64,
    catalog: Gusf<Handle>,
    // per child position: colors alive across the child, and the same plus
    // lifespans starting at a leaf child
    q: Vec<ColorSet>,
    lq: Vec<ColorSet>,
}

impl TNode {
    fn empty(parent: u32) -> TNode {
        TNode {
            parent,
            children: Vec::new(),
            starts: Vec::new(),
            slots: Vec::new(),
            hi: Stamp::NegInf,
            weight: 0,
            catalog: Gusf::new(NCOLORS).expect("valid alphabet"),
            q: Vec::new(),
            lq: Vec::new(),
        }
    }

    /// Position of the child whose range holds `s`, if `s` is under this node.
    fn pos_of(&self, s: Stamp) -> Option<usize> {
        if s < self.starts[0] || s > self.hi {
            return None;
        }
        Some(self.starts.partition_point(|&x| x <= s) - 1)
    }

    fn recompute_tables(&mut self) {
        let k = self.children.len();
        self.q = vec![ColorSet::EMPTY; k];
        self.lq = vec![ColorSet::EMPTY; k];
        if self.slots.iter().any(|&s| s == NO_SLOT) {
            return;
        }
        for i in 0..k {
            let mut q = ColorSet::EMPTY;
            for l in 0..i {
                q = q.with(left_color(self.slots[l]));
                for r in i + 1..k {
                    q = q.with(pair_color(self.slots[l], self.slots[r]));
                }
            }
            for r in i + 1..k {
                q = q.with(right_color(self.slots[r]));
            }
            let mut lq = q.with(left_color(self.slots[i]));
            for w in i + 1..k {
                lq = lq.with(pair_color(self.slots[i], self.slots[w]));
            }
            self.q[i] = q;
            self.lq[i] = lq;
        }
    }

    fn color_for(&self, a: Stamp, b: Option<Stamp>) -> Option<u8> {
        let pa = self.pos_of(a);
        let pb = b.and_then(|b| self.pos_of(b));
        match (pa, pb) {
            (Some(i), Some(j)) => Some(pair_color(self.slots[i], self.slots[j])),
            (Some(i), None) => Some(left_color(self.slots[i])),
            (None, Some(j)) => Some(right_color(self.slots[j])),
            (None, None) => None,
        }
    }
}

/// A stored lifespan: `key` is alive on `[start, end)`; `end == None` means
/// it never ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Span<K> {
    pub key: K,
    pub start: i64,
    pub end: Option<i64>,
}

impl<K> Span<K> {
    pub fn alive_at(&self, t: i64) -> bool {
        self.start <= t && self.end.map_or(true, |e| t < e)
    }

    fn stamps(&self) -> (Stamp, Option<Stamp>) {
        (Stamp::At(self.start), self.end.map(Stamp::At))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TreeStats {
    pub subtree_rebuilds: u64,
    pub global_rebuilds: u64,
}

#[derive(Clone, Debug)]
pub struct RetroTree<K> {
    nodes: Vec<TNode>,
    free: Vec<u32>,
    root: u32,
    spans: HashMap<Handle, Span<K>>,
    keys: BTreeMap<K, Handle>,
    stamp_uses: HashMap<i64, u32>,
    leaves: usize,
    capacity: usize,
    stats: TreeStats,
}

impl<K: Ord + Clone> Default for RetroTree<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Ord + Clone> RetroTree<K> {
    pub fn new() -> RetroTree<K> {
        let mut root = TNode::empty(NIL);
        root.children.push(Child::Leaf(Stamp::NegInf));
        root.starts.push(Stamp::NegInf);
        root.slots.push(0);
        root.weight = 1;
        root.recompute_tables();
        RetroTree {
            nodes: vec![root],
            free: Vec::new(),
            root: 0,
            spans: HashMap::new(),
            keys: BTreeMap::new(),
            stamp_uses: HashMap::new(),
            leaves: 1,
            capacity: MIN_CAPACITY,
            stats: TreeStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn span(&self, h: Handle) -> Option<&Span<K>> {
        self.spans.get(&h)
    }

    /// Keys of every stored lifespan, in key order.
    pub fn keys(&self) -> impl DoubleEndedIterator<Item = &K> + '_ {
        self.keys.keys()
    }

    pub fn stats(&self) -> TreeStats {
        self.stats
    }

    /// Leaves on the time axis, dead ones and the sentinel included.
    pub fn leaf_count(&self) -> usize {
        self.leaves
    }

    /// Total catalog elements over all nodes, tombstones included.
    pub fn catalog_entries(&self) -> usize {
        self.live_nodes().map(|v| self.nodes[v as usize].catalog.len() + self.nodes[v as usize].catalog.tombstones()).sum()
    }

    pub fn height(&self) -> usize {
        fn rec<K>(t: &RetroTree<K>, v: u32) -> usize {
            1 + t.nodes[v as usize]
                .children
                .iter()
                .map(|c| match *c {
                    Child::Node(u) => rec(t, u),
                    Child::Leaf(_) => 0,
                })
                .max()
                .unwrap_or(0)
        }
        rec(self, self.root)
    }

    fn live_nodes(&self) -> impl Iterator<Item = u32> + '_ {
        let mut stack = vec![self.root];
        std::iter::from_fn(move || {
            let v = stack.pop()?;
            for c in &self.nodes[v as usize].children {
                if let Child::Node(u) = *c {
                    stack.push(u);
                }
            }
            Some(v)
        })
    }

    fn alloc(&mut self, parent: u32) -> u32 {
        let n = TNode::empty(parent);
        match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = n;
                id
            }
            None => {
                self.nodes.push(n);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    /// Nodes from the root down to the one holding `s` as a leaf child, with
    /// the child position taken at each.
    fn path(&self, s: Stamp) -> Vec<(u32, usize)> {
        let mut out = Vec::new();
        let mut v = self.root;
        loop {
            let n = &self.nodes[v as usize];
            let i = n.starts.partition_point(|&x| x <= s) - 1;
            out.push((v, i));
            match n.children[i] {
                Child::Node(u) => v = u,
                Child::Leaf(_) => return out,
            }
        }
    }

    // ---- time axis maintenance ----

    fn insert_stamp(&mut self, x: i64, probe: &mut Probe) {
        let s = Stamp::At(x);
        let path = self.path(s);
        let &(v, i) = path.last().expect("nonempty path");
        if let Child::Leaf(existing) = self.nodes[v as usize].children[i] {
            if existing == s {
                return;
            }
        }
        probe.time_nodes += path.len() as u64;
        {
            let n = &mut self.nodes[v as usize];
            let slot = (0..LAMBDA as u8).find(|c| !n.slots.contains(c)).unwrap_or(NO_SLOT);
            n.children.insert(i + 1, Child::Leaf(s));
            n.starts.insert(i + 1, s);
            n.slots.insert(i + 1, slot);
            n.recompute_tables();
        }
        for &(u, _) in &path {
            let n = &mut self.nodes[u as usize];
            n.weight += 1;
            if n.hi < s {
                n.hi = s;
            }
        }
        self.leaves += 1;
        let violator = path.iter().map(|&(u, _)| u).find(|&u| !self.balanced(u));
        if let Some(w) = violator {
            self.rebuild_subtree(w, probe);
        }
    }

    fn balanced(&self, v: u32) -> bool {
        let n = &self.nodes[v as usize];
        if n.children.len() > LAMBDA {
            return false;
        }
        let w = n.weight;
        n.children.iter().all(|c| match *c {
            Child::Leaf(_) => true,
            Child::Node(u) => {
                let cw = self.nodes[u as usize].weight;
                cw * 4 * LAMBDA as u64 >= w && cw * LAMBDA as u64 <= 4 * w
            }
        })
    }

    fn collect_leaves(&self, v: u32, out: &mut Vec<Stamp>) {
        for c in &self.nodes[v as usize].children {
            match *c {
                Child::Leaf(s) => out.push(s),
                Child::Node(u) => self.collect_leaves(u, out),
            }
        }
    }

    fn free_below(&mut self, v: u32) {
        let kids: Vec<u32> = self.nodes[v as usize]
            .children
            .iter()
            .filter_map(|c| if let Child::Node(u) = *c { Some(u) } else { None })
            .collect();
        for u in kids {
            self.free_below(u);
            self.nodes[u as usize].catalog = Gusf::new(NCOLORS).expect("valid alphabet");
            self.free.push(u);
        }
    }

    fn rebuild_subtree(&mut self, w: u32, probe: &mut Probe) {
        self.stats.subtree_rebuilds += 1;
        let mut leaves = Vec::new();
        self.collect_leaves(w, &mut leaves);
        let members: Vec<Handle> = {
            let cat = &self.nodes[w as usize].catalog;
            cat.iter().map(|e| cat.payload(e)).collect()
        };
        self.free_below(w);
        let parent = self.nodes[w as usize].parent;
        self.build_into(w, parent, &leaves, &members, probe);
    }

    fn global_rebuild(&mut self, probe: &mut Probe) {
        self.stats.global_rebuilds += 1;
        let mut stamps: Vec<i64> = self.stamp_uses.keys().copied().collect();
        stamps.sort_unstable();
        let leaves: Vec<Stamp> = std::iter::once(Stamp::NegInf).chain(stamps.into_iter().map(Stamp::At)).collect();
        let members: Vec<Handle> = self.keys.values().copied().collect();
        self.nodes.clear();
        self.free.clear();
        self.root = self.alloc(NIL);
        self.leaves = leaves.len();
        self.capacity = (2 * self.leaves).max(MIN_CAPACITY);
        self.build_into(self.root, NIL, &leaves, &members, probe);
    }

    fn build_into(&mut self, id: u32, parent: u32, leaves: &[Stamp], members: &[Handle], probe: &mut Probe) {
        let n = leaves.len();
        probe.rebuild_work += (n + members.len()) as u64;
        let mut node = TNode::empty(parent);
        node.weight = n as u64;
        node.hi = leaves[n - 1];
        if n <= LAMBDA {
            node.children = leaves.iter().map(|&s| Child::Leaf(s)).collect();
            node.starts = leaves.to_vec();
        } else {
            let mut cap = LAMBDA;
            while cap * LAMBDA < n {
                cap *= LAMBDA;
            }
            let k = n.div_ceil(cap).max(3);
            let mut from = 0;
            for part in 0..k {
                let to = from + (n - from) / (k - part);
                let child = self.alloc(id);
                let (lo, hi) = (leaves[from], leaves[to - 1]);
                let sub: Vec<Handle> = members
                    .iter()
                    .copied()
                    .filter(|h| {
                        let (a, b) = self.spans[h].stamps();
                        (lo..=hi).contains(&a) || b.is_some_and(|b| (lo..=hi).contains(&b))
                    })
                    .collect();
                self.build_into(child, id, &leaves[from..to], &sub, probe);
                node.children.push(Child::Node(child));
                node.starts.push(lo);
                from = to;
            }
        }
        node.slots = (0..node.children.len() as u8).collect();
        node.recompute_tables();
        let items: Vec<(Handle, ColorSet)> = members
            .iter()
            .map(|h| {
                let (a, b) = self.spans[h].stamps();
                (*h, ColorSet::single(node.color_for(a, b).expect("member has an endpoint below")))
            })
            .collect();
        node.catalog = Gusf::from_sorted(NCOLORS, items).expect("fresh catalog");
        self.nodes[id as usize] = node;
    }

    // ---- updates ----

    /// Store lifespan `[start, end)` of `key` under `handle`.
    pub fn insert(&mut self, handle: Handle, key: K, start: i64, end: Option<i64>) -> Result<()> {
        self.insert_with(handle, key, start, end, &mut Probe::default())
    }

    pub fn insert_with(&mut self, handle: Handle, key: K, start: i64, end: Option<i64>, probe: &mut Probe) -> Result<()> {
        if let Some(e) = end {
            if start >= e {
                return Err(Error::InvalidInterval { start, end: e });
            }
        }
        if self.spans.contains_key(&handle) {
            return Err(Error::DuplicateHandle(handle));
        }
        if self.keys.contains_key(&key) {
            return Err(Error::Precondition("duplicate key"));
        }
        self.insert_stamp(start, probe);
        if let Some(e) = end {
            self.insert_stamp(e, probe);
        }
        *self.stamp_uses.entry(start).or_insert(0) += 1;
        if let Some(e) = end {
            *self.stamp_uses.entry(e).or_insert(0) += 1;
        }
        let pred = self.keys.range(..&key).next_back().map(|(_, &h)| h);
        self.keys.insert(key.clone(), handle);
        let span = Span { key, start, end };
        let (a, b) = span.stamps();
        self.spans.insert(handle, span);

        let pa = self.path(a);
        let pb = b.map(|b| self.path(b)).unwrap_or_default();
        let mut prev_at: HashMap<u32, Option<ElemId>> = HashMap::new();
        for path in [&pa, &pb] {
            let mut prev = None;
            for (depth, &(v, pos)) in path.iter().enumerate() {
                probe.time_nodes += 1;
                if depth == 0 {
                    prev = pred.and_then(|p| self.nodes[v as usize].catalog.locate(&p));
                }
                if let Some(&p) = prev_at.get(&v) {
                    prev = p;
                } else {
                    let n = &mut self.nodes[v as usize];
                    let color = n.color_for(a, b).expect("node on an endpoint path");
                    probe.catalog_calls += 2;
                    let e = n.catalog.insert_after_with(prev, handle, probe)?;
                    n.catalog.mark_with(e, color, probe)?;
                    prev_at.insert(v, prev);
                }
                if let Child::Node(u) = self.nodes[v as usize].children[pos] {
                    let n = &self.nodes[v as usize];
                    let f = f_colors(n.slots[pos]);
                    probe.catalog_calls += 1;
                    prev = prev
                        .and_then(|p| n.catalog.find_prev_with(p, f, probe))
                        .map(|p| n.catalog.payload(p))
                        .map(|h| self.nodes[u as usize].catalog.locate(&h).expect("nested catalogs"));
                }
            }
        }
        if self.leaves > self.capacity {
            self.global_rebuild(probe);
        }
        Ok(())
    }

    pub fn delete(&mut self, handle: Handle) -> Result<Span<K>> {
        self.delete_with(handle, &mut Probe::default())
    }

    pub fn delete_with(&mut self, handle: Handle, probe: &mut Probe) -> Result<Span<K>> {
        let span = self.spans.get(&handle).ok_or(Error::UnknownHandle(handle))?.clone();
        let (a, b) = span.stamps();
        let mut seen = HashSet::new();
        let mut nodes: Vec<u32> = self.path(a).into_iter().map(|p| p.0).collect();
        if let Some(b) = b {
            nodes.extend(self.path(b).into_iter().map(|p| p.0));
        }
        for v in nodes {
            if !seen.insert(v) {
                continue;
            }
            probe.time_nodes += 1;
            probe.catalog_calls += 2;
            let cat = &mut self.nodes[v as usize].catalog;
            let e = cat.locate(&handle).expect("member of path catalog");
            let c = cat.colors(e).first().expect("colored member");
            cat.unmark_with(e, c, probe)?;
            cat.remove_with(e, probe)?;
        }
        self.spans.remove(&handle);
        self.keys.remove(&span.key);
        for t in std::iter::once(span.start).chain(span.end) {
            let u = self.stamp_uses.get_mut(&t).expect("stamp in use");
            *u -= 1;
            if *u == 0 {
                self.stamp_uses.remove(&t);
            }
        }
        let live = self.stamp_uses.len() + 1;
        let dead = self.leaves - live;
        if (dead > live && self.leaves > MIN_CAPACITY) || (self.capacity > MIN_CAPACITY && live < self.capacity / 4) {
            self.global_rebuild(probe);
        }
        Ok(span)
    }

    // ---- queries ----

    fn key_of(&self, h: Handle) -> &K {
        &self.spans[&h].key
    }

    /// Handles of lifespans alive at `t` whose key lies in `[y, z]`.
    pub fn report(&self, t: i64, y: &K, z: &K) -> Vec<Handle> {
        let mut out = Vec::new();
        self.report_with(t, y, z, &mut out, &mut Probe::default());
        out
    }

    pub fn report_with(&self, t: i64, y: &K, z: &K, out: &mut Vec<Handle>, probe: &mut Probe) {
        if y > z {
            return;
        }
        let mut range = self.keys.range(y..=z);
        let Some((_, &hy)) = range.next() else { return };
        let hz = range.next_back().map_or(hy, |(_, &h)| h);
        self.report_from(t, hy, hz, out, probe);
    }

    fn report_from(&self, t: i64, hy: Handle, hz: Handle, out: &mut Vec<Handle>, probe: &mut Probe) {
        let ts = Stamp::At(t);
        let mut v = self.root;
        let root = &self.nodes[v as usize].catalog;
        let (mut ey, mut ez) = (root.locate(&hy).expect("root holds every key"), root.locate(&hz).expect("root holds every key"));
        let mut buf = Vec::new();
        loop {
            probe.time_nodes += 1;
            let n = &self.nodes[v as usize];
            let i = n.starts.partition_point(|&x| x <= ts) - 1;
            let cq = match n.children[i] {
                Child::Leaf(_) => n.lq[i],
                Child::Node(_) => n.q[i],
            };
            probe.catalog_calls += 1;
            buf.clear();
            n.catalog.report_with(ey, ez, cq, &mut buf, probe);
            probe.reported += buf.len() as u64;
            out.extend(buf.iter().map(|&e| n.catalog.payload(e)));
            let Child::Node(u) = n.children[i] else { return };
            let f = f_colors(n.slots[i]);
            probe.catalog_calls += 2;
            let (Some(ny), Some(nz)) = (n.catalog.find_next_with(ey, f, probe), n.catalog.find_prev_with(ez, f, probe)) else {
                return;
            };
            let (hy, hz) = (n.catalog.payload(ny), n.catalog.payload(nz));
            if self.key_of(hy) > self.key_of(hz) {
                return;
            }
            let child = &self.nodes[u as usize].catalog;
            ey = child.locate(&hy).expect("nested catalogs");
            ez = child.locate(&hz).expect("nested catalogs");
            v = u;
        }
    }

    /// Lifespan alive at `t` with the smallest key `>= y`.
    pub fn succ(&self, t: i64, y: &K) -> Option<Handle> {
        self.succ_with(t, y, &mut Probe::default())
    }

    pub fn succ_with(&self, t: i64, y: &K, probe: &mut Probe) -> Option<Handle> {
        let (_, &h0) = self.keys.range(y..).next()?;
        self.cascade(t, h0, true, probe)
    }

    /// Lifespan alive at `t` with the largest key `<= y`.
    pub fn pred(&self, t: i64, y: &K) -> Option<Handle> {
        self.pred_with(t, y, &mut Probe::default())
    }

    pub fn pred_with(&self, t: i64, y: &K, probe: &mut Probe) -> Option<Handle> {
        let (_, &h0) = self.keys.range(..=y).next_back()?;
        self.cascade(t, h0, false, probe)
    }

    fn cascade(&self, t: i64, h0: Handle, forward: bool, probe: &mut Probe) -> Option<Handle> {
        let ts = Stamp::At(t);
        let mut v = self.root;
        let mut e = self.nodes[v as usize].catalog.locate(&h0).expect("root holds every key");
        let mut best: Option<Handle> = None;
        let better = |a: Handle, b: Option<Handle>| match b {
            None => true,
            Some(b) => (self.key_of(a) < self.key_of(b)) == forward,
        };
        loop {
            probe.time_nodes += 1;
            let n = &self.nodes[v as usize];
            let cat = &n.catalog;
            let i = n.starts.partition_point(|&x| x <= ts) - 1;
            let cq = match n.children[i] {
                Child::Leaf(_) => n.lq[i],
                Child::Node(_) => n.q[i],
            };
            let step = |x: ElemId, c: ColorSet, probe: &mut Probe| {
                probe.catalog_calls += 1;
                if forward {
                    cat.find_next_with(x, c, probe)
                } else {
                    cat.find_prev_with(x, c, probe)
                }
            };
            if let Some(c) = step(e, cq, probe) {
                let h = cat.payload(c);
                if better(h, best) {
                    best = Some(h);
                }
            }
            let Child::Node(u) = n.children[i] else { break };
            let Some(next) = step(e, f_colors(n.slots[i]), probe) else { break };
            let hn = cat.payload(next);
            if let Some(b) = best {
                // everything deeper is at least as far as `next`
                if !better(hn, Some(b)) {
                    break;
                }
            }
            e = self.nodes[u as usize].catalog.locate(&hn).expect("nested catalogs");
            v = u;
        }
        best
    }

    /// Full structural and catalog audit.
    pub fn audit(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Audit(format!("time tree: {m}")));
        if self.keys.len() != self.spans.len() || self.keys.iter().any(|(k, h)| self.spans.get(h).map(|s| &s.key) != Some(k)) {
            return fail("root key index".into());
        }
        let mut leaves = Vec::new();
        self.collect_leaves(self.root, &mut leaves);
        if leaves.len() != self.leaves || leaves.windows(2).any(|w| w[0] >= w[1]) || leaves[0] != Stamp::NegInf {
            return fail("leaf sequence".into());
        }
        for s in self.stamp_uses.keys() {
            if leaves.binary_search(&Stamp::At(*s)).is_err() {
                return fail(format!("stamp {s} has no leaf"));
            }
        }
        for v in self.live_nodes() {
            let n = &self.nodes[v as usize];
            if v != self.root && !self.balanced(v) {
                return fail(format!("node {v} unbalanced"));
            }
            if n.children.len() > LAMBDA {
                return fail(format!("node {v} has too many children"));
            }
            let mut seen = 0u64;
            let mut under = Vec::new();
            self.collect_leaves(v, &mut under);
            if n.weight != under.len() as u64 || n.hi != *under.last().expect("leaves") {
                return fail(format!("node {v} weight or range"));
            }
            for (i, c) in n.children.iter().enumerate() {
                let first = match *c {
                    Child::Leaf(s) => {
                        seen += 1;
                        s
                    }
                    Child::Node(u) => {
                        if self.nodes[u as usize].parent != v {
                            return fail(format!("node {u} parent link"));
                        }
                        seen += self.nodes[u as usize].weight;
                        self.nodes[u as usize].starts[0]
                    }
                };
                if n.starts[i] != first {
                    return fail(format!("node {v} starts"));
                }
            }
            if seen != n.weight {
                return fail(format!("node {v} child weights"));
            }
            let mut slots = n.slots.clone();
            slots.sort_unstable();
            slots.dedup();
            if slots.len() != n.slots.len() || slots.iter().any(|&s| s as usize >= LAMBDA) {
                return fail(format!("node {v} slots"));
            }
            let mut fresh = n.clone();
            fresh.recompute_tables();
            if fresh.q != n.q || fresh.lq != n.lq {
                return fail(format!("node {v} tables"));
            }
            n.catalog.audit()?;
            // membership and colors by definition
            let mut want: Vec<(&K, Handle, u8)> = self
                .spans
                .iter()
                .filter_map(|(&h, s)| {
                    let (a, b) = s.stamps();
                    n.color_for(a, b).map(|c| (&s.key, h, c))
                })
                .collect();
            want.sort();
            let got: Vec<(&K, Handle, u8)> = n
                .catalog
                .iter()
                .map(|e| {
                    let h = n.catalog.payload(e);
                    let c = n.catalog.colors(e);
                    (self.key_of(h), h, if c.len() == 1 { c.first().unwrap() } else { u8::MAX })
                })
                .collect();
            if want != got {
                return fail(format!("node {v} catalog differs from its definition"));
            }
            // nesting: each child catalog is the parent's restriction to F
            for (i, c) in n.children.iter().enumerate() {
                if let Child::Node(u) = *c {
                    let f = f_colors(n.slots[i]);
                    let restricted: Vec<Handle> =
                        n.catalog.iter().filter(|&e| n.catalog.colors(e).intersects(f)).map(|e| n.catalog.payload(e)).collect();
                    let cat = &self.nodes[u as usize].catalog;
                    let child: Vec<Handle> = cat.iter().map(|e| cat.payload(e)).collect();
                    if restricted != child {
                        return fail(format!("nesting between {v} and {u}"));
                    }
                }
            }
        }
        Ok(())
    }
}
