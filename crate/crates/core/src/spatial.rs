//! Fully retroactive approximate range reporting, spherical emptiness and
//! approximate nearest neighbor over points with lifespans.
//!
//! A skip quadtree holds every location with at least one lifespan. One
//! [`RetroTree`] per shift index `j` orders lifespans by the z-order of the
//! point shifted by `j`. Range queries decompose the ball into quadtree
//! cells, each a contiguous z-order run answered by the unshifted tree; the
//! shifted trees supply nearest-neighbor candidates.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::exact::radius_sq_threshold;
use crate::par::{self, Execution};
use crate::probe::Probe;
use crate::quadtree::{check_radius, SkipQuadtree};
use crate::segtree::{Handle, RetroTree};
use crate::zorder::{c_constant, z_cmp, Grid, Point, ShiftIndex};

/// A point ordered by z-order, ties broken by lifespan handle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZOrderKey {
    pub point: Point,
    pub handle: Handle,
}

impl Ord for ZOrderKey {
    fn cmp(&self, other: &Self) -> Ordering {
        z_cmp(&self.point, &other.point).then(self.handle.cmp(&other.handle))
    }
}

impl PartialOrd for ZOrderKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lifespan {
    pub point: Point,
    pub start: i64,
    pub end: Option<i64>,
}

impl Lifespan {
    pub fn alive_at(&self, t: i64) -> bool {
        self.start <= t && self.end.map_or(true, |e| t < e)
    }
}

/// A query against a [`RetroPointSet`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Query {
    Range { q: Point, r: f64, eps: f64, t: i64 },
    Empty { q: Point, r: f64, eps: f64, t: i64 },
    Ann { q: Point, eps: f64, t: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Answer {
    Points(Vec<(Point, Handle)>),
    Single(Option<(Point, Handle)>),
}

const MAX_BISECTIONS: usize = 256;

#[derive(Clone, Debug)]
pub struct RetroPointSet {
    grid: Grid,
    quad: SkipQuadtree,
    trees: Vec<RetroTree<ZOrderKey>>,
    table: HashMap<Handle, Lifespan>,
    next_handle: Handle,
}

impl RetroPointSet {
    pub fn new(dim: usize, bits: u32, seed: u64) -> Result<RetroPointSet> {
        let grid = Grid::new(dim, bits)?;
        Ok(RetroPointSet {
            grid,
            quad: SkipQuadtree::new(grid, seed),
            trees: (0..=dim).map(|_| RetroTree::new()).collect(),
            table: HashMap::new(),
            next_handle: 1,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn lifespan(&self, h: Handle) -> Option<&Lifespan> {
        self.table.get(&h)
    }

    pub fn lifespans(&self) -> impl Iterator<Item = (Handle, &Lifespan)> {
        self.table.iter().map(|(&h, l)| (h, l))
    }

    pub fn quadtree(&self) -> &SkipQuadtree {
        &self.quad
    }

    /// The time tree ordering keys by shift `j`.
    pub fn tree(&self, j: usize) -> &RetroTree<ZOrderKey> {
        &self.trees[j]
    }

    /// Total catalog elements across all time trees.
    pub fn catalog_entries(&self) -> usize {
        self.trees.iter().map(|t| t.catalog_entries()).sum()
    }

    fn shifted(&self, p: &Point, j: usize) -> Point {
        self.grid.shift(p, ShiftIndex::new(j, self.dim()).expect("shift index in range"))
    }

    fn dist_sq(&self, q: &Point, h: Handle) -> u128 {
        q.dist_sq(&self.table[&h].point)
    }

    // ---- updates ----

    /// Make `p` exist during `[start, end)`; `end == None` means forever.
    pub fn add_lifespan(&mut self, p: Point, start: i64, end: Option<i64>) -> Result<Handle> {
        self.add_lifespan_with(p, start, end, &mut Probe::default())
    }

    pub fn add_lifespan_with(&mut self, p: Point, start: i64, end: Option<i64>, probe: &mut Probe) -> Result<Handle> {
        self.grid.check(&p)?;
        if let Some(e) = end {
            if start >= e {
                return Err(Error::InvalidInterval { start, end: e });
            }
        }
        let h = self.next_handle;
        self.next_handle += 1;
        self.quad.insert_with(&p, h, probe)?;
        for j in 0..self.trees.len() {
            let key = ZOrderKey { point: self.shifted(&p, j), handle: h };
            self.trees[j].insert_with(h, key, start, end, probe)?;
        }
        self.table.insert(h, Lifespan { point: p, start, end });
        Ok(h)
    }

    pub fn remove_lifespan(&mut self, h: Handle) -> Result<Lifespan> {
        self.remove_lifespan_with(h, &mut Probe::default())
    }

    pub fn remove_lifespan_with(&mut self, h: Handle, probe: &mut Probe) -> Result<Lifespan> {
        let span = self.table.remove(&h).ok_or(Error::UnknownHandle(h))?;
        for tree in &mut self.trees {
            tree.delete_with(h, probe)?;
        }
        self.quad.delete_with(&span.point, h, probe)?;
        Ok(span)
    }

    // ---- queries ----

    fn bounds(lo: Point, hi: Point) -> (ZOrderKey, ZOrderKey) {
        (ZOrderKey { point: lo, handle: 0 }, ZOrderKey { point: hi, handle: Handle::MAX })
    }

    /// Every point alive at `t` within `r` of `q`, possibly plus some within
    /// `(1 + eps) r`; radii are in unit-cube coordinates.
    pub fn range_report(&self, q: &Point, r: f64, eps: f64, t: i64) -> Result<Vec<(Point, Handle)>> {
        self.range_report_with(q, r, eps, t, &mut Probe::default())
    }

    pub fn range_report_with(&self, q: &Point, r: f64, eps: f64, t: i64, probe: &mut Probe) -> Result<Vec<(Point, Handle)>> {
        let cells = self.quad.inner_nodes(q, r, eps, probe)?;
        let mut out = Vec::new();
        let mut handles = Vec::new();
        for v in cells {
            if let Some(p) = self.quad.leaf_point(v) {
                for &h in self.quad.handles(p) {
                    probe.quad_nodes += 1;
                    if self.table[&h].alive_at(t) {
                        probe.reported += 1;
                        out.push((*p, h));
                    }
                }
                continue;
            }
            let (lo, hi) = self.quad.node_extremes(v, probe);
            let (y, z) = Self::bounds(lo, hi);
            handles.clear();
            self.trees[0].report_with(t, &y, &z, &mut handles, probe);
            out.extend(handles.iter().map(|&h| (self.table[&h].point, h)));
        }
        Ok(out)
    }

    /// Some point alive at `t` within `(1 + eps) r` of `q`, or `None`, in
    /// which case no alive point lies within `r`.
    pub fn spherical_empty(&self, q: &Point, r: f64, eps: f64, t: i64) -> Result<Option<(Point, Handle)>> {
        self.spherical_empty_with(q, r, eps, t, &mut Probe::default())
    }

    pub fn spherical_empty_with(&self, q: &Point, r: f64, eps: f64, t: i64, probe: &mut Probe) -> Result<Option<(Point, Handle)>> {
        let cells = self.quad.inner_nodes(q, r, eps, probe)?;
        for v in cells {
            if let Some(p) = self.quad.leaf_point(v) {
                let hit = self.quad.handles(p).iter().copied().filter(|h| self.table[h].alive_at(t)).min();
                if let Some(h) = hit {
                    return Ok(Some((*p, h)));
                }
                continue;
            }
            let (lo, hi) = self.quad.node_extremes(v, probe);
            let (y, z) = Self::bounds(lo, hi);
            if let Some(h) = self.trees[0].succ_with(t, &y, probe) {
                if self.trees[0].span(h).is_some_and(|s| s.key <= z) {
                    return Ok(Some((self.table[&h].point, h)));
                }
            }
        }
        Ok(None)
    }

    /// Z-order predecessor and successor of `q` alive at `t` in every shifted
    /// order, deduplicated by handle.
    pub fn ann_candidates(&self, q: &Point, t: i64) -> Result<Vec<(Point, Handle)>> {
        self.ann_candidates_with(q, t, &mut Probe::default())
    }

    pub fn ann_candidates_with(&self, q: &Point, t: i64, probe: &mut Probe) -> Result<Vec<(Point, Handle)>> {
        self.grid.check(q)?;
        let mut hs = Vec::with_capacity(2 * self.trees.len());
        for (j, tree) in self.trees.iter().enumerate() {
            let qs = self.shifted(q, j);
            hs.extend(tree.pred_with(t, &ZOrderKey { point: qs, handle: Handle::MAX }, probe));
            hs.extend(tree.succ_with(t, &ZOrderKey { point: qs, handle: 0 }, probe));
        }
        hs.sort_unstable();
        hs.dedup();
        Ok(hs.into_iter().map(|h| (self.table[&h].point, h)).collect())
    }

    /// A point alive at `t` whose distance to `q` is within `(1 + eps)` of the
    /// nearest alive point's; `None` when nothing is alive at `t`.
    pub fn ann(&self, q: &Point, eps: f64, t: i64) -> Result<Option<(Point, Handle)>> {
        self.ann_with(q, eps, t, &mut Probe::default())
    }

    pub fn ann_with(&self, q: &Point, eps: f64, t: i64, probe: &mut Probe) -> Result<Option<(Point, Handle)>> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::BadQueryParameter("eps"));
        }
        let cands = self.ann_candidates_with(q, t, probe)?;
        let closer = |a: &(Point, Handle), b: &(Point, Handle)| (q.dist_sq(&a.0), a.1) < (q.dist_sq(&b.0), b.1);
        let Some(mut best) = cands.iter().copied().reduce(|a, b| if closer(&b, &a) { b } else { a }) else {
            return Ok(None);
        };
        let scale = (1u64 << self.grid.bits()) as f64;
        let unit_dist = |d_sq: u128| (d_sq as f64).sqrt() / scale;
        let mut d_best = self.dist_sq(q, best.1);
        if d_best == 0 {
            return Ok(Some(best));
        }
        let slack = eps.min(1.0) / 4.0;
        let c = c_constant(self.dim());
        let mut hi = unit_dist(d_best);
        let mut lo = hi / c;
        // certify the lower end: nothing alive strictly inside `lo`
        for _ in 0..MAX_BISECTIONS {
            match self.spherical_empty_with(q, lo, slack, t, probe)? {
                None => break,
                Some(p) => {
                    if closer(&p, &best) {
                        best = p;
                        d_best = q.dist_sq(&p.0);
                        hi = unit_dist(d_best);
                    }
                    if d_best == 0 {
                        return Ok(Some(best));
                    }
                    lo /= c;
                }
            }
        }
        for _ in 0..MAX_BISECTIONS {
            if d_best <= radius_sq_threshold(lo, eps, self.grid.bits()) {
                break;
            }
            let mid = (lo + hi) / 2.0;
            if mid <= lo || mid >= hi {
                break;
            }
            match self.spherical_empty_with(q, mid, slack, t, probe)? {
                Some(p) => {
                    if closer(&p, &best) {
                        best = p;
                        d_best = q.dist_sq(&p.0);
                    }
                    hi = unit_dist(d_best).min(mid * (1.0 + slack));
                }
                None => lo = mid,
            }
        }
        Ok(Some(best))
    }

    /// Answer one query, recording work in `probe`.
    pub fn answer(&self, query: &Query, probe: &mut Probe) -> Result<Answer> {
        match *query {
            Query::Range { q, r, eps, t } => {
                check_radius(r, eps)?;
                self.range_report_with(&q, r, eps, t, probe).map(Answer::Points)
            }
            Query::Empty { q, r, eps, t } => self.spherical_empty_with(&q, r, eps, t, probe).map(Answer::Single),
            Query::Ann { q, eps, t } => self.ann_with(&q, eps, t, probe).map(Answer::Single),
        }
    }

    /// Answer a batch of queries against this snapshot.
    pub fn answer_batch(&self, queries: &[Query], exec: Execution) -> Vec<Result<(Answer, Probe)>> {
        par::map(queries, exec, |q| {
            let mut probe = Probe::default();
            self.answer(q, &mut probe).map(|a| (a, probe))
        })
    }

    /// Consistency of the quadtree, the time trees and the handle table.
    pub fn audit(&self) -> Result<()> {
        self.quad.audit()?;
        let mut at: HashMap<Point, Vec<Handle>> = HashMap::new();
        for (&h, l) in &self.table {
            at.entry(l.point).or_default().push(h);
        }
        if at.len() != self.quad.len() {
            return Err(Error::Audit("quadtree locations differ from live lifespans".into()));
        }
        for (p, mut hs) in at {
            let mut got = self.quad.handles(&p).to_vec();
            hs.sort_unstable();
            got.sort_unstable();
            if hs != got {
                return Err(Error::Audit("quadtree handles differ from the handle table".into()));
            }
        }
        for (j, tree) in self.trees.iter().enumerate() {
            tree.audit()?;
            if tree.len() != self.table.len() {
                return Err(Error::Audit(format!("time tree {j} size")));
            }
            for (&h, l) in &self.table {
                let s = tree.span(h).ok_or_else(|| Error::Audit(format!("time tree {j} misses handle {h}")))?;
                if s.start != l.start || s.end != l.end || s.key.point != self.shifted(&l.point, j) {
                    return Err(Error::Audit(format!("time tree {j} disagrees on handle {h}")));
                }
            }
        }
        Ok(())
    }
}
