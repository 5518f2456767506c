//! Colored ordered catalog: an ordered list of elements, each marked with a
//! few colors, answering colored next/previous and colored range reports.
//!
//! Elements are grouped into blocks of `B` to `2B` consecutive elements. Each
//! block keeps a balanced leaf-oriented tree whose internal nodes know, per
//! color, one leaf below them with that color. Blocks carry order-maintenance
//! labels, and a [`Gveb`] over `(label, color)` jumps between blocks.

use std::collections::HashMap;
use std::hash::Hash;

use smallvec::SmallVec;

use crate::color::ColorSet;
use crate::error::{Error, Result};
use crate::gveb::Gveb;
use crate::order::{ItemId, OrderList};
use crate::probe::Probe;

pub type ElemId = u32;
type TId = u32;
type BlockId = u32;

const NIL: u32 = u32::MAX;
const LABEL_BITS: u32 = 32;
const MIN_CAPACITY: usize = 64;
pub const DEFAULT_COLOR_CAP: usize = 2;

#[derive(Clone, Debug)]
struct Elem<P> {
    payload: P,
    colors: ColorSet,
    block: BlockId,
    leaf: TId,
    live: bool,
    // (color, prev, next) along the list of elements with that color
    links: SmallVec<[(u8, ElemId, ElemId); 2]>,
}

#[derive(Clone, Debug)]
struct TNode {
    parent: TId,
    left: TId,
    right: TId,
    size: u32,
    elem: ElemId,
    mask: ColorSet,
    // one leaf per color below this node, sorted by color
    leafs: SmallVec<[(u8, ElemId); 4]>,
}

#[derive(Clone, Debug)]
struct Block {
    root: TId,
    size: u32,
    item: ItemId,
    prev: BlockId,
    next: BlockId,
}

/// Counters describing the catalog's maintenance history.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GusfStats {
    pub splits: u64,
    pub rebuilds: u64,
    pub relabels: u64,
}

#[derive(Clone, Debug)]
pub struct Gusf<P> {
    ncolors: u8,
    color_cap: usize,
    elems: Vec<Elem<P>>,
    elem_free: Vec<ElemId>,
    tnodes: Vec<TNode>,
    tfree: Vec<TId>,
    blocks: Vec<Block>,
    bfree: Vec<BlockId>,
    first_block: BlockId,
    om: OrderList,
    item_block: HashMap<ItemId, BlockId>,
    gveb: Gveb,
    label_block: HashMap<u64, BlockId>,
    index: HashMap<P, ElemId>,
    live: usize,
    dead: usize,
    capacity: usize,
    bsize: usize,
    stats: GusfStats,
}

fn block_param(capacity: usize) -> usize {
    let lg = (capacity.max(2) as f64).log2().ceil() as usize;
    (lg * lg).max(16)
}

fn leafs_get(leafs: &[(u8, ElemId)], c: u8) -> Option<ElemId> {
    leafs.binary_search_by_key(&c, |e| e.0).ok().map(|i| leafs[i].1)
}

impl<P: Copy + Eq + Hash> Gusf<P> {
    pub fn new(ncolors: u8) -> Result<Gusf<P>> {
        Self::with_color_cap(ncolors, DEFAULT_COLOR_CAP)
    }

    pub fn with_color_cap(ncolors: u8, color_cap: usize) -> Result<Gusf<P>> {
        if color_cap == 0 {
            return Err(Error::Precondition("color cap must be positive"));
        }
        Ok(Gusf {
            ncolors,
            color_cap,
            elems: Vec::new(),
            elem_free: Vec::new(),
            tnodes: Vec::new(),
            tfree: Vec::new(),
            blocks: Vec::new(),
            bfree: Vec::new(),
            first_block: NIL,
            om: OrderList::new(),
            item_block: HashMap::new(),
            gveb: Gveb::new(LABEL_BITS, ncolors)?,
            label_block: HashMap::new(),
            index: HashMap::new(),
            live: 0,
            dead: 0,
            capacity: MIN_CAPACITY,
            bsize: block_param(MIN_CAPACITY),
            stats: GusfStats::default(),
        })
    }

    /// Bulk-build from elements already in list order.
    pub fn from_sorted<I: IntoIterator<Item = (P, ColorSet)>>(ncolors: u8, items: I) -> Result<Gusf<P>> {
        let mut g = Gusf::new(ncolors)?;
        let mut order = Vec::new();
        for (payload, colors) in items {
            g.check_colors(colors)?;
            if g.index.contains_key(&payload) {
                return Err(Error::Precondition("duplicate payload in catalog"));
            }
            let id = g.alloc_elem(payload);
            g.elems[id as usize].colors = colors;
            order.push(id);
        }
        g.live = order.len();
        g.rebuild_from(order, &mut Probe::default());
        Ok(g)
    }

    fn check_colors(&self, colors: ColorSet) -> Result<()> {
        if let Some(c) = colors.iter().find(|&c| c >= self.ncolors) {
            return Err(Error::BadColor(c));
        }
        if colors.len() as usize > self.color_cap {
            return Err(Error::Precondition("too many colors on one element"));
        }
        Ok(())
    }

    pub fn ncolors(&self) -> u8 {
        self.ncolors
    }

    /// Live elements.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Tombstoned elements awaiting the next rebuild.
    pub fn tombstones(&self) -> usize {
        self.dead
    }

    pub fn block_param(&self) -> usize {
        self.bsize
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len() - self.bfree.len()
    }

    pub fn stats(&self) -> GusfStats {
        GusfStats { relabels: self.om.relabel_count() + self.stats.relabels, ..self.stats }
    }

    pub fn locate(&self, payload: &P) -> Option<ElemId> {
        self.index.get(payload).copied()
    }

    pub fn payload(&self, e: ElemId) -> P {
        self.elems[e as usize].payload
    }

    pub fn colors(&self, e: ElemId) -> ColorSet {
        self.elems[e as usize].colors
    }

    pub fn is_live(&self, e: ElemId) -> bool {
        self.elems.get(e as usize).is_some_and(|x| x.live)
    }

    fn label_of(&self, b: BlockId) -> u64 {
        self.om.label(self.blocks[b as usize].item)
    }

    // ---- arena helpers ----

    fn alloc_elem(&mut self, payload: P) -> ElemId {
        let e = Elem { payload, colors: ColorSet::EMPTY, block: NIL, leaf: NIL, live: true, links: SmallVec::new() };
        let id = match self.elem_free.pop() {
            Some(id) => {
                self.elems[id as usize] = e;
                id
            }
            None => {
                self.elems.push(e);
                (self.elems.len() - 1) as ElemId
            }
        };
        self.index.insert(payload, id);
        id
    }

    fn alloc_node(&mut self, n: TNode) -> TId {
        match self.tfree.pop() {
            Some(id) => {
                self.tnodes[id as usize] = n;
                id
            }
            None => {
                self.tnodes.push(n);
                (self.tnodes.len() - 1) as TId
            }
        }
    }

    fn alloc_block(&mut self, b: Block) -> BlockId {
        match self.bfree.pop() {
            Some(id) => {
                self.blocks[id as usize] = b;
                id
            }
            None => {
                self.blocks.push(b);
                (self.blocks.len() - 1) as BlockId
            }
        }
    }

    fn new_leaf(&mut self, e: ElemId, block: BlockId) -> TId {
        let colors = self.elems[e as usize].colors;
        let leafs = colors.iter().map(|c| (c, e)).collect();
        let t = self.alloc_node(TNode { parent: NIL, left: NIL, right: NIL, size: 1, elem: e, mask: colors, leafs });
        let el = &mut self.elems[e as usize];
        el.leaf = t;
        el.block = block;
        t
    }

    /// Recompute size and color summary of an internal node from its children.
    fn pull(&mut self, t: TId) {
        let (l, r) = (self.tnodes[t as usize].left, self.tnodes[t as usize].right);
        let (ln, rn) = (&self.tnodes[l as usize], &self.tnodes[r as usize]);
        let size = ln.size + rn.size;
        let mask = ln.mask | rn.mask;
        let mut leafs: SmallVec<[(u8, ElemId); 4]> = SmallVec::new();
        for c in mask.iter() {
            let e = leafs_get(&ln.leafs, c).or_else(|| leafs_get(&rn.leafs, c)).expect("color below");
            leafs.push((c, e));
        }
        let n = &mut self.tnodes[t as usize];
        n.size = size;
        n.mask = mask;
        n.leafs = leafs;
    }

    fn build_tree(&mut self, elems: &[ElemId], block: BlockId, probe: &mut Probe) -> TId {
        probe.rebuild_work += 1;
        if elems.len() == 1 {
            return self.new_leaf(elems[0], block);
        }
        let mid = elems.len() / 2;
        let l = self.build_tree(&elems[..mid], block, probe);
        let r = self.build_tree(&elems[mid..], block, probe);
        let t = self.alloc_node(TNode {
            parent: NIL,
            left: l,
            right: r,
            size: 0,
            elem: NIL,
            mask: ColorSet::EMPTY,
            leafs: SmallVec::new(),
        });
        self.tnodes[l as usize].parent = t;
        self.tnodes[r as usize].parent = t;
        self.pull(t);
        t
    }

    /// Elements below `t` in order; the subtree's nodes are freed.
    fn dismantle(&mut self, t: TId, out: &mut Vec<ElemId>) {
        let n = &self.tnodes[t as usize];
        if n.elem != NIL {
            out.push(n.elem);
        } else {
            let (l, r) = (n.left, n.right);
            self.dismantle(l, out);
            self.dismantle(r, out);
        }
        self.tfree.push(t);
    }

    fn first_leaf(&self, mut t: TId) -> TId {
        while self.tnodes[t as usize].elem == NIL {
            t = self.tnodes[t as usize].left;
        }
        t
    }

    /// First element below `t` carrying a color of `cq`; `t` must have one.
    fn descend_first(&self, mut t: TId, cq: ColorSet, probe: &mut Probe) -> ElemId {
        loop {
            probe.block_nodes += 1;
            let n = &self.tnodes[t as usize];
            if n.elem != NIL {
                return n.elem;
            }
            t = if self.tnodes[n.left as usize].mask.intersects(cq) { n.left } else { n.right };
        }
    }

    fn descend_last(&self, mut t: TId, cq: ColorSet, probe: &mut Probe) -> ElemId {
        loop {
            probe.block_nodes += 1;
            let n = &self.tnodes[t as usize];
            if n.elem != NIL {
                return n.elem;
            }
            t = if self.tnodes[n.right as usize].mask.intersects(cq) { n.right } else { n.left };
        }
    }

    // ---- queries ----

    /// First element at or after `x` with a color in `cq`.
    pub fn find_next(&self, x: ElemId, cq: ColorSet) -> Option<ElemId> {
        self.find_next_with(x, cq, &mut Probe::default())
    }

    pub fn find_next_with(&self, x: ElemId, cq: ColorSet, probe: &mut Probe) -> Option<ElemId> {
        let el = &self.elems[x as usize];
        if el.colors.intersects(cq) {
            return Some(x);
        }
        let mut t = el.leaf;
        loop {
            probe.block_nodes += 1;
            let p = self.tnodes[t as usize].parent;
            if p == NIL {
                break;
            }
            let pn = &self.tnodes[p as usize];
            if pn.left == t && self.tnodes[pn.right as usize].mask.intersects(cq) {
                return Some(self.descend_first(pn.right, cq, probe));
            }
            t = p;
        }
        let label = self.label_of(el.block);
        let (l2, _) = self.gveb.find_with(label + 1, cq, probe)?;
        let b2 = self.label_block[&l2];
        Some(self.descend_first(self.blocks[b2 as usize].root, cq, probe))
    }

    /// Last element at or before `x` with a color in `cq`.
    pub fn find_prev(&self, x: ElemId, cq: ColorSet) -> Option<ElemId> {
        self.find_prev_with(x, cq, &mut Probe::default())
    }

    pub fn find_prev_with(&self, x: ElemId, cq: ColorSet, probe: &mut Probe) -> Option<ElemId> {
        let el = &self.elems[x as usize];
        if el.colors.intersects(cq) {
            return Some(x);
        }
        let mut t = el.leaf;
        loop {
            probe.block_nodes += 1;
            let p = self.tnodes[t as usize].parent;
            if p == NIL {
                break;
            }
            let pn = &self.tnodes[p as usize];
            if pn.right == t && self.tnodes[pn.left as usize].mask.intersects(cq) {
                return Some(self.descend_last(pn.left, cq, probe));
            }
            t = p;
        }
        let label = self.label_of(el.block);
        if label == 0 {
            return None;
        }
        let (l2, _) = self.gveb.find_prev_with(label - 1, cq, probe)?;
        let b2 = self.label_block[&l2];
        Some(self.descend_last(self.blocks[b2 as usize].root, cq, probe))
    }

    /// First element of the catalog with a color in `cq`.
    pub fn find_first(&self, cq: ColorSet, probe: &mut Probe) -> Option<ElemId> {
        let (l, _) = self.gveb.find_with(0, cq, probe)?;
        let b = self.label_block[&l];
        Some(self.descend_first(self.blocks[b as usize].root, cq, probe))
    }

    /// Last element of the catalog with a color in `cq`.
    pub fn find_last(&self, cq: ColorSet, probe: &mut Probe) -> Option<ElemId> {
        let (l, _) = self.gveb.find_prev_with(u64::MAX, cq, probe)?;
        let b = self.label_block[&l];
        Some(self.descend_last(self.blocks[b as usize].root, cq, probe))
    }

    fn rank_in_block(&self, e: ElemId) -> u32 {
        let mut t = self.elems[e as usize].leaf;
        let mut r = 0;
        loop {
            let p = self.tnodes[t as usize].parent;
            if p == NIL {
                return r;
            }
            let pn = &self.tnodes[p as usize];
            if pn.right == t {
                r += self.tnodes[pn.left as usize].size;
            }
            t = p;
        }
    }

    /// List order of two elements.
    pub fn cmp_pos(&self, a: ElemId, b: ElemId) -> std::cmp::Ordering {
        let (ba, bb) = (self.elems[a as usize].block, self.elems[b as usize].block);
        self.label_of(ba)
            .cmp(&self.label_of(bb))
            .then_with(|| self.rank_in_block(a).cmp(&self.rank_in_block(b)))
    }

    fn collect_ranks(&self, t: TId, offset: u32, lo: u32, hi: u32, cq: ColorSet, out: &mut Vec<ElemId>, probe: &mut Probe) {
        let n = &self.tnodes[t as usize];
        probe.block_nodes += 1;
        if !n.mask.intersects(cq) || offset > hi || offset + n.size - 1 < lo {
            return;
        }
        if n.elem != NIL {
            out.push(n.elem);
            return;
        }
        let lsize = self.tnodes[n.left as usize].size;
        let (l, r) = (n.left, n.right);
        self.collect_ranks(l, offset, lo, hi, cq, out, probe);
        self.collect_ranks(r, offset + lsize, lo, hi, cq, out, probe);
    }

    /// Every element between `y1` and `y2` inclusive (list order) with a
    /// color in `cq`, each once.
    pub fn report(&self, y1: ElemId, y2: ElemId, cq: ColorSet) -> Vec<ElemId> {
        let mut out = Vec::new();
        self.report_with(y1, y2, cq, &mut out, &mut Probe::default());
        out
    }

    pub fn report_with(&self, y1: ElemId, y2: ElemId, cq: ColorSet, out: &mut Vec<ElemId>, probe: &mut Probe) {
        let cq = cq & ColorSet::all(self.ncolors);
        if cq.is_empty() {
            return;
        }
        let (b1, b2) = (self.elems[y1 as usize].block, self.elems[y2 as usize].block);
        let (r1, r2) = (self.rank_in_block(y1), self.rank_in_block(y2));
        if b1 == b2 {
            if r1 <= r2 {
                self.collect_ranks(self.blocks[b1 as usize].root, 0, r1, r2, cq, out, probe);
            }
            return;
        }
        let (l1, l2) = (self.label_of(b1), self.label_of(b2));
        if l1 > l2 {
            return;
        }
        self.collect_ranks(self.blocks[b1 as usize].root, 0, r1, u32::MAX, cq, out, probe);
        if l1 + 1 < l2 {
            let mut hits = Vec::new();
            self.gveb.report_with(l1 + 1, l2 - 1, cq, &mut hits, probe);
            for (l, c) in hits {
                let b = self.label_block[&l];
                let root = &self.tnodes[self.blocks[b as usize].root as usize];
                let start = leafs_get(&root.leafs, c).expect("block color has a leaf");
                self.walk_color(start, c, b, cq, out, probe);
            }
        }
        self.collect_ranks(self.blocks[b2 as usize].root, 0, 0, r2, cq, out, probe);
    }

    fn link(&self, e: ElemId, c: u8) -> (ElemId, ElemId) {
        let l = &self.elems[e as usize].links;
        let i = l.iter().position(|x| x.0 == c).expect("color link");
        (l[i].1, l[i].2)
    }

    fn link_mut(&mut self, e: ElemId, c: u8) -> &mut (u8, ElemId, ElemId) {
        let l = &mut self.elems[e as usize].links;
        let i = l.iter().position(|x| x.0 == c).expect("color link");
        &mut l[i]
    }

    // report every color-c element of block b reachable from `start`, under
    // its smallest query color only
    fn walk_color(&self, start: ElemId, c: u8, b: BlockId, cq: ColorSet, out: &mut Vec<ElemId>, probe: &mut Probe) {
        let emit = |e: ElemId, out: &mut Vec<ElemId>| {
            if (self.elems[e as usize].colors & cq).first() == Some(c) {
                out.push(e);
            }
        };
        emit(start, out);
        let (mut p, mut n) = self.link(start, c);
        while p != NIL && self.elems[p as usize].block == b {
            probe.block_nodes += 1;
            emit(p, out);
            p = self.link(p, c).0;
        }
        while n != NIL && self.elems[n as usize].block == b {
            probe.block_nodes += 1;
            emit(n, out);
            n = self.link(n, c).1;
        }
    }

    // ---- color updates ----

    pub fn mark(&mut self, x: ElemId, c: u8) -> Result<()> {
        self.mark_with(x, c, &mut Probe::default())
    }

    pub fn mark_with(&mut self, x: ElemId, c: u8, probe: &mut Probe) -> Result<()> {
        if !self.is_live(x) {
            return Err(Error::Precondition("mark on a dead element"));
        }
        if c >= self.ncolors {
            return Err(Error::BadColor(c));
        }
        let colors = self.elems[x as usize].colors;
        if colors.contains(c) {
            return Err(Error::Precondition("element already has this color"));
        }
        if colors.len() as usize >= self.color_cap {
            return Err(Error::Precondition("too many colors on one element"));
        }
        let only = ColorSet::single(c);
        let p = self.find_prev_with(x, only, probe).unwrap_or(NIL);
        let n = self.find_next_with(x, only, probe).unwrap_or(NIL);
        if p != NIL {
            self.link_mut(p, c).2 = x;
        }
        if n != NIL {
            self.link_mut(n, c).1 = x;
        }
        let el = &mut self.elems[x as usize];
        el.links.push((c, p, n));
        el.colors = colors.with(c);
        let mut t = el.leaf;
        while t != NIL && !self.tnodes[t as usize].mask.contains(c) {
            probe.block_nodes += 1;
            let node = &mut self.tnodes[t as usize];
            node.mask = node.mask.with(c);
            let pos = node.leafs.binary_search_by_key(&c, |e| e.0).unwrap_err();
            node.leafs.insert(pos, (c, x));
            t = node.parent;
        }
        if t == NIL {
            let label = self.label_of(self.elems[x as usize].block);
            self.gveb.insert_with(label, c, probe)?;
        }
        Ok(())
    }

    pub fn unmark(&mut self, x: ElemId, c: u8) -> Result<()> {
        self.unmark_with(x, c, &mut Probe::default())
    }

    pub fn unmark_with(&mut self, x: ElemId, c: u8, probe: &mut Probe) -> Result<()> {
        if !self.is_live(x) || !self.elems[x as usize].colors.contains(c) {
            return Err(Error::Precondition("unmark of a color the element does not have"));
        }
        let (p, n) = self.link(x, c);
        if p != NIL {
            self.link_mut(p, c).2 = n;
        }
        if n != NIL {
            self.link_mut(n, c).1 = p;
        }
        let el = &mut self.elems[x as usize];
        el.links.retain(|l| l.0 != c);
        el.colors = el.colors.without(c);
        let leaf = el.leaf;
        let block = el.block;
        {
            let node = &mut self.tnodes[leaf as usize];
            node.mask = node.mask.without(c);
            node.leafs.retain(|e| e.0 != c);
        }
        let mut t = self.tnodes[leaf as usize].parent;
        while t != NIL {
            probe.block_nodes += 1;
            if leafs_get(&self.tnodes[t as usize].leafs, c) != Some(x) {
                break;
            }
            let (l, r) = (self.tnodes[t as usize].left, self.tnodes[t as usize].right);
            let repl = leafs_get(&self.tnodes[l as usize].leafs, c).or_else(|| leafs_get(&self.tnodes[r as usize].leafs, c));
            let node = &mut self.tnodes[t as usize];
            let pos = node.leafs.binary_search_by_key(&c, |e| e.0).expect("color entry");
            match repl {
                Some(e) => node.leafs[pos].1 = e,
                None => {
                    node.leafs.remove(pos);
                    node.mask = node.mask.without(c);
                }
            }
            t = node.parent;
        }
        let root = self.blocks[block as usize].root;
        if t == NIL && !self.tnodes[root as usize].mask.contains(c) {
            let label = self.label_of(block);
            self.gveb.delete_with(label, c, probe)?;
        }
        Ok(())
    }

    // ---- element updates ----

    /// Insert an unmarked element right after `at`, or at the front.
    pub fn insert_after(&mut self, at: Option<ElemId>, payload: P) -> Result<ElemId> {
        self.insert_after_with(at, payload, &mut Probe::default())
    }

    pub fn insert_after_with(&mut self, at: Option<ElemId>, payload: P, probe: &mut Probe) -> Result<ElemId> {
        if self.index.contains_key(&payload) {
            return Err(Error::Precondition("duplicate payload in catalog"));
        }
        if let Some(a) = at {
            if !self.is_live(a) {
                return Err(Error::Precondition("insert position is not a live element"));
            }
        }
        let x = self.alloc_elem(payload);
        self.live += 1;
        if self.first_block == NIL {
            let (item, _) = self.om.insert_after(None)?;
            let b = self.alloc_block(Block { root: NIL, size: 1, item, prev: NIL, next: NIL });
            self.item_block.insert(item, b);
            self.label_block.insert(self.om.label(item), b);
            self.blocks[b as usize].root = self.new_leaf(x, b);
            self.first_block = b;
            return Ok(x);
        }
        let (anchor, after) = match at {
            Some(a) => (self.elems[a as usize].leaf, true),
            None => (self.first_leaf(self.blocks[self.first_block as usize].root), false),
        };
        let b = self.elems[self.tnodes[anchor as usize].elem as usize].block;
        let leaf = self.new_leaf(x, b);
        let parent = self.tnodes[anchor as usize].parent;
        let (l, r) = if after { (anchor, leaf) } else { (leaf, anchor) };
        let inner = self.alloc_node(TNode {
            parent,
            left: l,
            right: r,
            size: 0,
            elem: NIL,
            mask: ColorSet::EMPTY,
            leafs: SmallVec::new(),
        });
        self.tnodes[l as usize].parent = inner;
        self.tnodes[r as usize].parent = inner;
        self.pull(inner);
        if parent == NIL {
            self.blocks[b as usize].root = inner;
        } else if self.tnodes[parent as usize].left == anchor {
            self.tnodes[parent as usize].left = inner;
        } else {
            self.tnodes[parent as usize].right = inner;
        }
        // sizes up the path; rebuild the highest unbalanced subtree
        let mut t = parent;
        let mut scapegoat = NIL;
        while t != NIL {
            probe.block_nodes += 1;
            self.tnodes[t as usize].size += 1;
            let (l, r) = (self.tnodes[t as usize].left, self.tnodes[t as usize].right);
            let (ls, rs) = (self.tnodes[l as usize].size, self.tnodes[r as usize].size);
            let size = ls + rs;
            if size > 4 && ls.max(rs) * 4 > size * 3 {
                scapegoat = t;
            }
            t = self.tnodes[t as usize].parent;
        }
        if scapegoat != NIL {
            self.rebuild_subtree(scapegoat, b, probe);
        }
        self.blocks[b as usize].size += 1;
        if self.blocks[b as usize].size as usize > 2 * self.bsize {
            self.split(b, probe)?;
        }
        if self.live > self.capacity {
            self.rebuild(probe);
        }
        Ok(x)
    }

    fn rebuild_subtree(&mut self, t: TId, b: BlockId, probe: &mut Probe) {
        let parent = self.tnodes[t as usize].parent;
        let mut elems = Vec::new();
        self.dismantle(t, &mut elems);
        let nt = self.build_tree(&elems, b, probe);
        self.tnodes[nt as usize].parent = parent;
        if parent == NIL {
            self.blocks[b as usize].root = nt;
        } else if self.tnodes[parent as usize].left == t {
            self.tnodes[parent as usize].left = nt;
        } else {
            self.tnodes[parent as usize].right = nt;
        }
        // ancestors must keep pointing at leaves their children point at
        let mut t = parent;
        while t != NIL {
            self.pull(t);
            t = self.tnodes[t as usize].parent;
        }
    }

    fn split(&mut self, b: BlockId, probe: &mut Probe) -> Result<()> {
        self.stats.splits += 1;
        let old_label = self.label_of(b);
        let old_colors = self.tnodes[self.blocks[b as usize].root as usize].mask;
        let mut elems = Vec::new();
        let root = self.blocks[b as usize].root;
        self.dismantle(root, &mut elems);
        let half = elems.len() / 2;
        let left = self.build_tree(&elems[..half], b, probe);
        let next = self.blocks[b as usize].next;
        let item_b = self.blocks[b as usize].item;
        let nb = self.alloc_block(Block { root: NIL, size: (elems.len() - half) as u32, item: NIL, prev: b, next });
        let right = self.build_tree(&elems[half..], nb, probe);
        self.blocks[nb as usize].root = right;
        {
            let blk = &mut self.blocks[b as usize];
            blk.root = left;
            blk.size = half as u32;
            blk.next = nb;
        }
        if next != NIL {
            self.blocks[next as usize].prev = nb;
        }
        let (item, events) = self.om.insert_after(Some(item_b))?;
        self.blocks[nb as usize].item = item;
        self.item_block.insert(item, nb);
        // drop every stale (label, color) entry before inserting new ones so
        // that old and new labels never collide
        for c in old_colors.iter() {
            self.gveb.delete_with(old_label, c, probe)?;
        }
        self.label_block.remove(&old_label);
        let moved: Vec<(BlockId, u64, u64)> = events
            .iter()
            .filter(|e| e.item != item_b)
            .map(|e| (self.item_block[&e.item], e.old, e.new))
            .collect();
        for &(mb, old, _) in &moved {
            let colors = self.tnodes[self.blocks[mb as usize].root as usize].mask;
            for c in colors.iter() {
                self.gveb.delete_with(old, c, probe)?;
            }
            self.label_block.remove(&old);
        }
        probe.rebuild_work += moved.len() as u64;
        for blk in [b, nb].into_iter().chain(moved.iter().map(|m| m.0)) {
            let label = self.label_of(blk);
            let colors = self.tnodes[self.blocks[blk as usize].root as usize].mask;
            for c in colors.iter() {
                self.gveb.insert_with(label, c, probe)?;
            }
            self.label_block.insert(label, blk);
        }
        Ok(())
    }

    /// Tombstone an unmarked element.
    pub fn remove(&mut self, x: ElemId) -> Result<()> {
        self.remove_with(x, &mut Probe::default())
    }

    pub fn remove_with(&mut self, x: ElemId, probe: &mut Probe) -> Result<()> {
        if !self.is_live(x) {
            return Err(Error::Precondition("remove of a dead element"));
        }
        if !self.elems[x as usize].colors.is_empty() {
            return Err(Error::Precondition("remove of a marked element"));
        }
        let el = &mut self.elems[x as usize];
        el.live = false;
        let payload = el.payload;
        self.index.remove(&payload);
        self.live -= 1;
        self.dead += 1;
        if self.dead > self.live || (self.capacity > MIN_CAPACITY && self.live < self.capacity / 4) {
            self.rebuild(probe);
        }
        Ok(())
    }

    /// Live elements in list order.
    pub fn iter(&self) -> impl Iterator<Item = ElemId> + '_ {
        let mut out = Vec::with_capacity(self.live);
        let mut b = self.first_block;
        while b != NIL {
            self.in_order(self.blocks[b as usize].root, &mut out);
            b = self.blocks[b as usize].next;
        }
        out.into_iter().filter(move |&e| self.elems[e as usize].live)
    }

    fn in_order(&self, t: TId, out: &mut Vec<ElemId>) {
        let n = &self.tnodes[t as usize];
        if n.elem != NIL {
            out.push(n.elem);
        } else {
            self.in_order(n.left, out);
            self.in_order(n.right, out);
        }
    }

    /// Rebuild everything from the live elements; element ids are kept.
    pub fn rebuild(&mut self, probe: &mut Probe) {
        let mut all = Vec::with_capacity(self.live + self.dead);
        let mut b = self.first_block;
        while b != NIL {
            self.in_order(self.blocks[b as usize].root, &mut all);
            b = self.blocks[b as usize].next;
        }
        let (order, dead): (Vec<ElemId>, Vec<ElemId>) = all.into_iter().partition(|&e| self.elems[e as usize].live);
        self.elem_free.extend(dead);
        self.rebuild_from(order, probe);
    }

    fn rebuild_from(&mut self, order: Vec<ElemId>, probe: &mut Probe) {
        self.stats.rebuilds += 1;
        self.stats.relabels += self.om.relabel_count();
        probe.rebuild_work += order.len() as u64;
        self.dead = 0;
        self.capacity = (2 * order.len()).max(MIN_CAPACITY);
        self.bsize = block_param(self.capacity);
        self.tnodes.clear();
        self.tfree.clear();
        self.blocks.clear();
        self.bfree.clear();
        self.item_block.clear();
        self.label_block.clear();
        self.first_block = NIL;
        self.gveb = Gveb::new(LABEL_BITS, self.ncolors).expect("valid universe");
        let b = self.bsize;
        let mut chunks: Vec<&[ElemId]> = order.chunks(b).collect();
        if chunks.len() > 1 && chunks.last().is_some_and(|c| c.len() < b / 2) {
            let last = chunks.len() - 1;
            let start = last - 1;
            chunks[start] = &order[start * b..];
            chunks.pop();
        }
        let (om, items) = OrderList::bulk(chunks.len()).expect("label space");
        self.om = om;
        let mut prev = NIL;
        for (chunk, &item) in chunks.iter().zip(&items) {
            let blk = self.alloc_block(Block { root: NIL, size: chunk.len() as u32, item, prev, next: NIL });
            let root = self.build_tree(chunk, blk, probe);
            self.blocks[blk as usize].root = root;
            if prev == NIL {
                self.first_block = blk;
            } else {
                self.blocks[prev as usize].next = blk;
            }
            let label = self.om.label(item);
            self.item_block.insert(item, blk);
            self.label_block.insert(label, blk);
            for c in self.tnodes[root as usize].mask.iter() {
                self.gveb.insert_with(label, c, probe).expect("fresh label");
            }
            prev = blk;
        }
        let mut last: Vec<ElemId> = vec![NIL; self.ncolors as usize];
        for &e in &order {
            let colors = self.elems[e as usize].colors;
            let mut links = SmallVec::new();
            for c in colors.iter() {
                let p = last[c as usize];
                if p != NIL {
                    self.link_mut(p, c).2 = e;
                }
                links.push((c, p, NIL));
                last[c as usize] = e;
            }
            self.elems[e as usize].links = links;
        }
    }

    /// Full consistency check; intended for tests.
    pub fn audit(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Audit(format!("catalog: {m}")));
        let mut order = Vec::new();
        let mut b = self.first_block;
        let mut prev = NIL;
        let mut last_label = None;
        let mut nblocks = 0;
        let mut expect_index = Vec::new();
        while b != NIL {
            nblocks += 1;
            let blk = &self.blocks[b as usize];
            if blk.prev != prev {
                return fail("block back link");
            }
            let label = self.om.label(blk.item);
            if last_label.is_some_and(|l| l >= label) {
                return fail("labels not increasing");
            }
            last_label = Some(label);
            if self.label_block.get(&label) != Some(&b) || self.item_block.get(&blk.item) != Some(&b) {
                return fail("label map");
            }
            let mut elems = Vec::new();
            self.audit_node(blk.root, NIL, b, &mut elems)?;
            if elems.len() as u32 != blk.size || self.tnodes[blk.root as usize].size != blk.size {
                return fail("block size");
            }
            if blk.size as usize > 2 * self.bsize {
                return fail("block too large");
            }
            let root_mask = self.tnodes[blk.root as usize].mask;
            for c in 0..self.ncolors {
                if self.gveb.contains(label, c) != root_mask.contains(c) {
                    return fail("block index disagrees with block colors");
                }
                if root_mask.contains(c) {
                    expect_index.push((label, c));
                }
            }
            order.extend(elems);
            prev = b;
            b = blk.next;
        }
        if self.gveb.len() != expect_index.len() {
            return fail("stale block index entries");
        }
        if nblocks > 1 {
            let mut bb = self.first_block;
            while bb != NIL {
                if (self.blocks[bb as usize].size as usize) < self.bsize / 2 {
                    return fail("block too small");
                }
                bb = self.blocks[bb as usize].next;
            }
        }
        let live: Vec<ElemId> = order.iter().copied().filter(|&e| self.elems[e as usize].live).collect();
        if live.len() != self.live || order.len() - live.len() != self.dead {
            return fail("live/dead counts");
        }
        if self.index.len() != self.live || live.iter().any(|&e| self.index.get(&self.elems[e as usize].payload) != Some(&e)) {
            return fail("payload index");
        }
        for c in 0..self.ncolors {
            let seq: Vec<ElemId> = live.iter().copied().filter(|&e| self.elems[e as usize].colors.contains(c)).collect();
            for (i, &e) in seq.iter().enumerate() {
                let p = if i == 0 { NIL } else { seq[i - 1] };
                let n = seq.get(i + 1).copied().unwrap_or(NIL);
                if self.link(e, c) != (p, n) {
                    return fail("color links");
                }
            }
        }
        for &e in &order {
            let el = &self.elems[e as usize];
            if !el.live && !el.colors.is_empty() {
                return fail("tombstone with colors");
            }
            if el.links.len() != el.colors.len() as usize || el.colors.len() as usize > self.color_cap {
                return fail("element color bookkeeping");
            }
        }
        Ok(())
    }

    fn audit_node(&self, t: TId, parent: TId, b: BlockId, out: &mut Vec<ElemId>) -> Result<()> {
        let fail = |m: &str| Err(Error::Audit(format!("catalog tree: {m}")));
        let n = &self.tnodes[t as usize];
        if n.parent != parent {
            return fail("parent link");
        }
        let start = out.len();
        if n.elem != NIL {
            let el = &self.elems[n.elem as usize];
            if el.leaf != t || el.block != b || n.size != 1 || n.mask != el.colors {
                return fail("leaf");
            }
            out.push(n.elem);
        } else {
            self.audit_node(n.left, t, b, out)?;
            self.audit_node(n.right, t, b, out)?;
            let (l, r) = (&self.tnodes[n.left as usize], &self.tnodes[n.right as usize]);
            if n.size != l.size + r.size || n.mask != (l.mask | r.mask) {
                return fail("summary");
            }
        }
        let below = &out[start..];
        if n.leafs.len() != n.mask.len() as usize || n.leafs.windows(2).any(|w| w[0].0 >= w[1].0) {
            return fail("leafs table shape");
        }
        for &(c, e) in &n.leafs {
            if !n.mask.contains(c) || !below.contains(&e) || !self.elems[e as usize].colors.contains(c) {
                return fail("leafs entry");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // reference: plain ordered list of (payload, colors)
    fn scan_next(list: &[(u32, ColorSet)], from: usize, cq: ColorSet) -> Option<u32> {
        list[from..].iter().find(|e| e.1.intersects(cq)).map(|e| e.0)
    }

    fn scan_prev(list: &[(u32, ColorSet)], from: usize, cq: ColorSet) -> Option<u32> {
        list[..=from].iter().rev().find(|e| e.1.intersects(cq)).map(|e| e.0)
    }

    fn cs(c: &[u8]) -> ColorSet {
        ColorSet::from_colors(c.iter().copied())
    }

    #[test]
    fn add_to_empty() {
        let mut g: Gusf<u32> = Gusf::new(4).unwrap();
        let x = g.insert_after(None, 7).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.block_count(), 1);
        assert_eq!(g.iter().collect::<Vec<_>>(), vec![x]);
        g.audit().unwrap();
    }

    #[test]
    fn find_examples() {
        let mut g: Gusf<u32> = Gusf::new(4).unwrap();
        let a = g.insert_after(None, 1).unwrap();
        let b = g.insert_after(Some(a), 2).unwrap();
        g.mark(a, 1).unwrap();
        assert_eq!(g.find_next(a, cs(&[1])), Some(a));
        assert_eq!(g.find_next(b, cs(&[1])), None);
        assert_eq!(g.find_prev(b, cs(&[1])), Some(a));
    }

    #[test]
    fn report_examples() {
        let mut g: Gusf<u32> = Gusf::new(4).unwrap();
        let a = g.insert_after(None, 1).unwrap();
        g.mark(a, 0).unwrap();
        assert_eq!(g.report(a, a, cs(&[0])), vec![a]);
        assert!(g.report(a, a, ColorSet::EMPTY).is_empty());
    }

    #[test]
    fn mark_unmark_inverse_and_block_index() {
        let mut g: Gusf<u32> = Gusf::new(4).unwrap();
        let a = g.insert_after(None, 1).unwrap();
        let b = g.insert_after(Some(a), 2).unwrap();
        g.mark(b, 3).unwrap();
        assert!(g.gveb.contains(g.label_of(g.elems[b as usize].block), 3));
        g.unmark(b, 3).unwrap();
        assert!(g.gveb.is_empty());
        assert!(g.colors(b).is_empty());
        g.audit().unwrap();
        assert!(g.unmark(b, 3).is_err());
        g.mark(a, 0).unwrap();
        g.mark(a, 1).unwrap();
        assert!(g.mark(a, 2).is_err());
        assert!(g.mark(a, 9).is_err());
        assert!(g.remove(a).is_err());
    }

    #[test]
    fn one_split_after_two_b_plus_one() {
        let mut g = Gusf::from_sorted(2, (0..1000u32).map(|i| (i, ColorSet::EMPTY))).unwrap();
        let b = g.block_param();
        let first = g.locate(&0).unwrap();
        let start = g.blocks[g.elems[first as usize].block as usize].size as usize;
        let adds = 2 * b + 1 - start;
        for i in 0..adds as u32 {
            assert_eq!(g.stats().splits, 0);
            g.insert_after(Some(first), 10_000 + i).unwrap();
        }
        assert_eq!(g.stats().splits, 1);
        let mut blk = g.first_block;
        while blk != NIL {
            let s = g.blocks[blk as usize].size as usize;
            assert!(s >= b / 2 && s <= 2 * b);
            blk = g.blocks[blk as usize].next;
        }
        g.audit().unwrap();
    }

    #[test]
    fn add_remove_restores_queries() {
        let items: Vec<(u32, ColorSet)> = (0..100).map(|i| (i, if i % 3 == 0 { cs(&[0]) } else { ColorSet::EMPTY })).collect();
        let mut g = Gusf::from_sorted(2, items.clone()).unwrap();
        let first = g.locate(&0).unwrap();
        let last = g.locate(&99).unwrap();
        let before = g.report(first, last, cs(&[0]));
        let x = g.insert_after(Some(g.locate(&50).unwrap()), 1000).unwrap();
        g.remove(x).unwrap();
        let mut after = g.report(first, last, cs(&[0]));
        let mut before = before;
        before.sort();
        after.sort();
        assert_eq!(before, after);
        g.audit().unwrap();
    }

    #[test]
    fn rebuild_keeps_ids() {
        let mut g: Gusf<u32> = Gusf::new(3).unwrap();
        let mut ids = vec![g.insert_after(None, 0).unwrap()];
        for i in 1..300u32 {
            ids.push(g.insert_after(Some(ids[ids.len() - 1]), i).unwrap());
        }
        for (i, &e) in ids.iter().enumerate() {
            if i % 2 == 1 {
                g.mark(e, (i % 3) as u8).unwrap();
            }
        }
        for (i, &e) in ids.iter().enumerate().take(250) {
            if i % 2 == 0 {
                g.remove(e).unwrap();
            }
        }
        assert!(g.stats().rebuilds > 0);
        g.audit().unwrap();
        for (i, &e) in ids.iter().enumerate() {
            if i % 2 == 1 || i >= 250 {
                assert_eq!(g.payload(e), i as u32);
                assert!(g.is_live(e));
            }
        }
    }

    #[derive(Clone, Debug)]
    enum Op {
        Add(usize),
        Remove(usize),
        Mark(usize, u8),
        Unmark(usize, u8),
        Next(usize, u8),
        Prev(usize, u8),
        Report(usize, usize, u8),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            3 => any::<usize>().prop_map(Op::Add),
            1 => any::<usize>().prop_map(Op::Remove),
            3 => (any::<usize>(), 0u8..6).prop_map(|(i, c)| Op::Mark(i, c)),
            1 => (any::<usize>(), 0u8..6).prop_map(|(i, c)| Op::Unmark(i, c)),
            1 => (any::<usize>(), 1u8..64).prop_map(|(i, c)| Op::Next(i, c)),
            1 => (any::<usize>(), 1u8..64).prop_map(|(i, c)| Op::Prev(i, c)),
            1 => (any::<usize>(), any::<usize>(), 1u8..64).prop_map(|(i, j, c)| Op::Report(i, j, c)),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn agrees_with_list(ops in proptest::collection::vec(op(), 1..600)) {
            let mut g: Gusf<u32> = Gusf::new(6).unwrap();
            let mut list: Vec<(u32, ColorSet)> = Vec::new();
            let mut next_payload = 0u32;
            for op in ops {
                let op2 = op.clone();
                match op {
                    Op::Add(i) => {
                        let pos = if list.is_empty() { 0 } else { i % (list.len() + 1) };
                        let at = if pos == 0 { None } else { Some(g.locate(&list[pos - 1].0).unwrap()) };
                        g.insert_after(at, next_payload).unwrap();
                        list.insert(pos, (next_payload, ColorSet::EMPTY));
                        next_payload += 1;
                    }
                    Op::Remove(i) if !list.is_empty() => {
                        let pos = i % list.len();
                        let x = g.locate(&list[pos].0).unwrap();
                        for c in list[pos].1.iter() {
                            g.unmark(x, c).unwrap();
                        }
                        g.remove(x).unwrap();
                        list.remove(pos);
                    }
                    Op::Mark(i, c) if !list.is_empty() => {
                        let pos = i % list.len();
                        let x = g.locate(&list[pos].0).unwrap();
                        let ok = g.mark(x, c).is_ok();
                        let want = !list[pos].1.contains(c) && list[pos].1.len() < 2;
                        prop_assert_eq!(ok, want);
                        if ok { list[pos].1 = list[pos].1.with(c); }
                    }
                    Op::Unmark(i, c) if !list.is_empty() => {
                        let pos = i % list.len();
                        let x = g.locate(&list[pos].0).unwrap();
                        let ok = g.unmark(x, c).is_ok();
                        prop_assert_eq!(ok, list[pos].1.contains(c));
                        if ok { list[pos].1 = list[pos].1.without(c); }
                    }
                    Op::Next(i, m) if !list.is_empty() => {
                        let pos = i % list.len();
                        let x = g.locate(&list[pos].0).unwrap();
                        let got = g.find_next(x, ColorSet(m as u64)).map(|e| g.payload(e));
                        prop_assert_eq!(got, scan_next(&list, pos, ColorSet(m as u64)));
                    }
                    Op::Prev(i, m) if !list.is_empty() => {
                        let pos = i % list.len();
                        let x = g.locate(&list[pos].0).unwrap();
                        let got = g.find_prev(x, ColorSet(m as u64)).map(|e| g.payload(e));
                        prop_assert_eq!(got, scan_prev(&list, pos, ColorSet(m as u64)));
                    }
                    Op::Report(i, j, m) if !list.is_empty() => {
                        let (a, b) = { let (a, b) = (i % list.len(), j % list.len()); (a.min(b), a.max(b)) };
                        let (x, y) = (g.locate(&list[a].0).unwrap(), g.locate(&list[b].0).unwrap());
                        let mut got: Vec<u32> = g.report(x, y, ColorSet(m as u64)).into_iter().map(|e| g.payload(e)).collect();
                        got.sort();
                        let mut want: Vec<u32> = list[a..=b].iter().filter(|e| e.1.intersects(ColorSet(m as u64))).map(|e| e.0).collect();
                        want.sort();
                        prop_assert_eq!(got, want);
                    }
                    _ => {}
                }
                if let Err(e) = g.audit() { panic!("{e:?} after {op2:?}"); }
            }
            g.audit().unwrap();
            let order: Vec<u32> = g.iter().map(|e| g.payload(e)).collect();
            prop_assert_eq!(order, list.iter().map(|e| e.0).collect::<Vec<_>>());
        }
    }
}
