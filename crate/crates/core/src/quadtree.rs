//! Compressed quadtree with randomized skip levels.
//!
//! Level 0 holds every stored location; each location is also present in
//! levels `1..=h` where `h` is geometric with parameter 1/2. A node at level
//! `i > 0` links down to the node with the same cell at level `i - 1`, which
//! always exists because a branching cell stays branching on a superset.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::radius_sq_threshold;
use crate::probe::Probe;
use crate::zorder::{Grid, Point, QuadCell};

pub type NodeId = u32;

const MAX_HEIGHT: usize = 48;

#[derive(Clone, Debug)]
struct QNode {
    cell: QuadCell,
    parent: Option<NodeId>,
    // sorted by quadrant index, so iteration follows z-order
    children: Vec<(u16, NodeId)>,
    down: Option<NodeId>,
}

#[derive(Clone, Debug, Default)]
struct Level {
    root: Option<NodeId>,
    cells: HashMap<QuadCell, NodeId>,
}

#[derive(Clone, Debug)]
struct Stored {
    handles: Vec<u64>,
    height: usize,
}

#[derive(Clone, Debug)]
pub struct SkipQuadtree {
    grid: Grid,
    nodes: Vec<QNode>,
    free: Vec<NodeId>,
    levels: Vec<Level>,
    stored: HashMap<Point, Stored>,
    rng: ChaCha8Rng,
}

impl SkipQuadtree {
    pub fn new(grid: Grid, seed: u64) -> SkipQuadtree {
        SkipQuadtree {
            grid,
            nodes: Vec::new(),
            free: Vec::new(),
            levels: vec![Level::default()],
            stored: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of distinct stored locations.
    pub fn len(&self) -> usize {
        self.stored.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stored.is_empty()
    }

    pub fn height(&self) -> usize {
        self.levels.len()
    }

    /// Handles stored at location `p`.
    pub fn handles(&self, p: &Point) -> &[u64] {
        self.stored.get(p).map_or(&[], |s| &s.handles)
    }

    pub fn locations(&self) -> impl Iterator<Item = &Point> {
        self.stored.keys()
    }

    pub fn root(&self) -> Option<NodeId> {
        self.levels[0].root
    }

    pub fn cell(&self, v: NodeId) -> QuadCell {
        self.nodes[v as usize].cell
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.nodes[v as usize].children.is_empty()
    }

    pub fn children(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[v as usize].children.iter().map(|&(_, c)| c)
    }

    /// Stored location of a leaf node.
    pub fn leaf_point(&self, v: NodeId) -> Option<&Point> {
        let n = &self.nodes[v as usize];
        n.children.is_empty().then(|| n.cell.anchor())
    }

    /// Level-0 node whose cell is exactly `c`.
    pub fn node_of(&self, c: &QuadCell) -> Option<NodeId> {
        self.levels[0].cells.get(c).copied()
    }

    fn alloc(&mut self, level: usize, cell: QuadCell) -> NodeId {
        let down = if level > 0 { self.levels[level - 1].cells.get(&cell).copied() } else { None };
        debug_assert!(level == 0 || down.is_some(), "missing lower copy of a cell");
        let node = QNode { cell, parent: None, children: Vec::new(), down };
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as NodeId
            }
        };
        self.levels[level].cells.insert(cell, id);
        id
    }

    fn release(&mut self, level: usize, v: NodeId) {
        let cell = self.nodes[v as usize].cell;
        self.levels[level].cells.remove(&cell);
        self.free.push(v);
    }

    fn child_at(&self, v: NodeId, q: u16) -> Option<NodeId> {
        let ch = &self.nodes[v as usize].children;
        ch.binary_search_by_key(&q, |e| e.0).ok().map(|i| ch[i].1)
    }

    fn set_child(&mut self, v: NodeId, q: u16, c: NodeId) {
        let ch = &mut self.nodes[v as usize].children;
        match ch.binary_search_by_key(&q, |e| e.0) {
            Ok(i) => ch[i].1 = c,
            Err(i) => ch.insert(i, (q, c)),
        }
        self.nodes[c as usize].parent = Some(v);
    }

    /// Deepest node containing `p` at every level, found top-down through the
    /// skip links.
    fn locate_path(&self, p: &Point, probe: &mut Probe) -> Vec<Option<NodeId>> {
        let mut path = vec![None; self.levels.len()];
        let mut cur: Option<NodeId> = None;
        for i in (0..self.levels.len()).rev() {
            let start = match cur {
                Some(v) => self.nodes[v as usize].down,
                None => self.levels[i].root.filter(|&r| self.nodes[r as usize].cell.contains(p)),
            };
            let Some(mut v) = start else { continue };
            probe.quad_nodes += 1;
            loop {
                let n = &self.nodes[v as usize];
                if n.children.is_empty() {
                    break;
                }
                let q = n.cell.quadrant_of(p) as u16;
                match self.child_at(v, q) {
                    Some(c) if self.nodes[c as usize].cell.contains(p) => {
                        probe.quad_nodes += 1;
                        v = c;
                    }
                    _ => break,
                }
            }
            path[i] = Some(v);
            cur = Some(v);
        }
        path
    }

    /// Deepest level-0 node whose cell contains `p`; `None` when the tree is
    /// empty or `p` lies outside the root cell.
    pub fn locate(&self, p: &Point) -> Option<NodeId> {
        self.locate_with(p, &mut Probe::default())
    }

    pub fn locate_with(&self, p: &Point, probe: &mut Probe) -> Option<NodeId> {
        self.locate_path(p, probe)[0]
    }

    pub fn insert(&mut self, p: &Point, handle: u64) -> Result<()> {
        self.insert_with(p, handle, &mut Probe::default())
    }

    pub fn insert_with(&mut self, p: &Point, handle: u64, probe: &mut Probe) -> Result<()> {
        self.grid.check(p)?;
        if let Some(s) = self.stored.get_mut(p) {
            if s.handles.contains(&handle) {
                return Err(Error::DuplicateHandle(handle));
            }
            s.handles.push(handle);
            return Ok(());
        }
        let mut height = 0;
        while height + 1 < MAX_HEIGHT && self.rng.gen_bool(0.5) {
            height += 1;
        }
        while self.levels.len() <= height {
            self.levels.push(Level::default());
        }
        let path = self.locate_path(p, probe);
        for (i, at) in path.iter().enumerate().take(height + 1) {
            self.insert_at(i, p, *at);
            probe.quad_nodes += 1;
        }
        self.stored.insert(*p, Stored { handles: vec![handle], height });
        Ok(())
    }

    fn insert_at(&mut self, level: usize, p: &Point, at: Option<NodeId>) {
        let leaf_cell = self.grid.point_cell(p);
        let Some(root) = self.levels[level].root else {
            let leaf = self.alloc(level, leaf_cell);
            self.levels[level].root = Some(leaf);
            return;
        };
        let Some(v) = at else {
            // p lies outside the root cell: a new root joins both
            let joined = self.nodes[root as usize].cell.join_point(p);
            let leaf = self.alloc(level, leaf_cell);
            let w = self.alloc(level, joined);
            let qr = joined.quadrant_of(self.nodes[root as usize].cell.anchor()) as u16;
            self.set_child(w, qr, root);
            self.set_child(w, joined.quadrant_of(p) as u16, leaf);
            self.levels[level].root = Some(w);
            return;
        };
        let vcell = self.nodes[v as usize].cell;
        let q = vcell.quadrant_of(p) as u16;
        let leaf = self.alloc(level, leaf_cell);
        match self.child_at(v, q) {
            None => self.set_child(v, q, leaf),
            Some(u) => {
                let ucell = self.nodes[u as usize].cell;
                let joined = ucell.join_point(p);
                let w = self.alloc(level, joined);
                self.set_child(w, joined.quadrant_of(ucell.anchor()) as u16, u);
                self.set_child(w, joined.quadrant_of(p) as u16, leaf);
                self.set_child(v, q, w);
            }
        }
    }

    /// Remove one handle at `p`; the location leaves the tree with its last
    /// handle.
    pub fn delete(&mut self, p: &Point, handle: u64) -> Result<()> {
        self.delete_with(p, handle, &mut Probe::default())
    }

    pub fn delete_with(&mut self, p: &Point, handle: u64, probe: &mut Probe) -> Result<()> {
        let s = self.stored.get_mut(p).ok_or(Error::PointNotFound)?;
        let i = s.handles.iter().position(|&h| h == handle).ok_or(Error::UnknownHandle(handle))?;
        s.handles.swap_remove(i);
        if !s.handles.is_empty() {
            return Ok(());
        }
        let height = s.height;
        self.stored.remove(p);
        let leaf_cell = self.grid.point_cell(p);
        for level in (0..=height).rev() {
            probe.quad_nodes += 1;
            self.delete_at(level, &leaf_cell);
        }
        while self.levels.len() > 1 && self.levels.last().is_some_and(|l| l.root.is_none()) {
            self.levels.pop();
        }
        Ok(())
    }

    fn delete_at(&mut self, level: usize, leaf_cell: &QuadCell) {
        let leaf = self.levels[level].cells[leaf_cell];
        let parent = self.nodes[leaf as usize].parent;
        self.release(level, leaf);
        let Some(v) = parent else {
            self.levels[level].root = None;
            return;
        };
        self.nodes[v as usize].children.retain(|&(_, c)| c != leaf);
        if self.nodes[v as usize].children.len() > 1 {
            return;
        }
        // v now has a single child: splice it out
        let only = self.nodes[v as usize].children[0].1;
        let grand = self.nodes[v as usize].parent;
        self.release(level, v);
        match grand {
            None => {
                self.nodes[only as usize].parent = None;
                self.levels[level].root = Some(only);
            }
            Some(g) => {
                let q = self.nodes[g as usize].cell.quadrant_of(self.nodes[v as usize].cell.anchor()) as u16;
                self.set_child(g, q, only);
            }
        }
    }

    /// Disjoint level-0 nodes covering every stored location within `r` of
    /// `q`, each lying within `(1 + eps) r` of `q`.
    pub fn inner_nodes(&self, q: &Point, r: f64, eps: f64, probe: &mut Probe) -> Result<Vec<NodeId>> {
        Ok(self.inner_cover(q, r, eps, probe)?.into_iter().map(|(v, _)| v).collect())
    }

    /// Like [`inner_nodes`](Self::inner_nodes), pairing each node with the
    /// dyadic cell that admitted it.
    ///
    /// The admitted cells are those of the uncompressed recursion from the
    /// unit cube (skip cells beyond `r`, take cells within `(1 + eps) r`,
    /// split the rest), so which locations are covered depends only on the
    /// query and never on the other stored points. A compressed node stands
    /// for the chain of dyadic cells between its parent and its own cell; the
    /// first chain cell inside the outer ball is found by bisecting levels.
    pub fn inner_cover(&self, q: &Point, r: f64, eps: f64, probe: &mut Probe) -> Result<Vec<(NodeId, QuadCell)>> {
        check_radius(r, eps)?;
        self.grid.check(q)?;
        let bits = self.grid.bits();
        let inner_sq = radius_sq_threshold(r, 0.0, bits);
        let outer_sq = radius_sq_threshold(r, eps, bits);
        let mut out = Vec::new();
        let Some(root) = self.root() else { return Ok(out) };
        // (node, shallowest chain level)
        let mut stack = vec![(root, 0u32)];
        while let Some((v, top)) = stack.pop() {
            probe.quad_nodes += 1;
            let n = &self.nodes[v as usize];
            let c = n.cell;
            let (near, far) = c.dist_sq_range(q);
            if far <= outer_sq {
                let (mut lo, mut hi) = (top, c.level());
                while lo < hi {
                    probe.quad_nodes += 1;
                    let mid = (lo + hi) / 2;
                    if QuadCell::enclosing(c.anchor(), mid, bits).dist_sq_range(q).1 <= outer_sq {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                let d = if lo == c.level() { c } else { QuadCell::enclosing(c.anchor(), lo, bits) };
                if d.dist_sq_range(q).0 <= inner_sq {
                    out.push((v, d));
                }
                continue;
            }
            // a leaf has near == far, so it never reaches the split
            if near <= inner_sq {
                stack.extend(n.children.iter().rev().map(|&(_, u)| (u, c.level() + 1)));
            }
        }
        Ok(out)
    }

    /// The admitted dyadic cells of [`inner_cover`](Self::inner_cover).
    pub fn inner_cells(&self, q: &Point, r: f64, eps: f64) -> Result<Vec<QuadCell>> {
        Ok(self.inner_cover(q, r, eps, &mut Probe::default())?.into_iter().map(|(_, c)| c).collect())
    }

    /// Z-order first and last stored locations below node `v`.
    pub fn node_extremes(&self, v: NodeId, probe: &mut Probe) -> (Point, Point) {
        let descend = |first: bool, probe: &mut Probe| {
            let mut u = v;
            loop {
                probe.quad_nodes += 1;
                let ch = &self.nodes[u as usize].children;
                let next = if first { ch.first() } else { ch.last() };
                match next {
                    Some(&(_, c)) => u = c,
                    None => return *self.nodes[u as usize].cell.anchor(),
                }
            }
        };
        (descend(true, probe), descend(false, probe))
    }

    pub fn cell_extremes(&self, c: &QuadCell) -> Result<(Point, Point)> {
        let v = self.node_of(c).ok_or(Error::CellNotFound)?;
        Ok(self.node_extremes(v, &mut Probe::default()))
    }

    /// Full structural check of every level.
    pub fn audit(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Audit(m));
        for (i, level) in self.levels.iter().enumerate() {
            let mut seen = 0usize;
            let mut leaves = Vec::new();
            if let Some(root) = level.root {
                if self.nodes[root as usize].parent.is_some() {
                    return fail(format!("level {i}: root has a parent"));
                }
                let mut stack = vec![root];
                while let Some(v) = stack.pop() {
                    seen += 1;
                    let n = &self.nodes[v as usize];
                    if level.cells.get(&n.cell) != Some(&v) {
                        return fail(format!("level {i}: cell map out of sync"));
                    }
                    if i > 0 {
                        let below = self.levels[i - 1].cells.get(&n.cell);
                        if below.is_none() || n.down != below.copied() {
                            return fail(format!("level {i}: bad down link"));
                        }
                    }
                    if n.children.is_empty() {
                        if n.cell.side_log() != 0 {
                            return fail(format!("level {i}: leaf is not a point cell"));
                        }
                        leaves.push(*n.cell.anchor());
                        continue;
                    }
                    if n.children.len() < 2 {
                        return fail(format!("level {i}: uncompressed node"));
                    }
                    for w in n.children.windows(2) {
                        if w[0].0 >= w[1].0 {
                            return fail(format!("level {i}: children out of order"));
                        }
                    }
                    for &(q, c) in &n.children {
                        let cn = &self.nodes[c as usize];
                        if cn.parent != Some(v)
                            || cn.cell.level() <= n.cell.level()
                            || !n.cell.contains_cell(&cn.cell)
                            || n.cell.quadrant_of(cn.cell.anchor()) as u16 != q
                        {
                            return fail(format!("level {i}: bad child link"));
                        }
                        stack.push(c);
                    }
                }
            }
            if seen != level.cells.len() {
                return fail(format!("level {i}: unreachable nodes in cell map"));
            }
            let expected = self.stored.iter().filter(|(_, s)| s.height >= i).count();
            if leaves.len() != expected || leaves.iter().any(|p| self.stored.get(p).map_or(true, |s| s.height < i)) {
                return fail(format!("level {i}: leaf set disagrees with stored locations"));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_radius(r: f64, eps: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::BadQueryParameter("radius"));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::BadQueryParameter("eps"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zorder::z_cmp;

    fn grid(d: usize, w: u32) -> Grid {
        Grid::new(d, w).unwrap()
    }

    // reference: recursive splitting of a point set, returning the sorted list
    // of (level, anchor) of branching cells plus leaves
    fn reference_cells(g: &Grid, pts: &[Point]) -> Vec<(u32, Point)> {
        fn rec(g: &Grid, cell: QuadCell, pts: &[Point], out: &mut Vec<(u32, Point)>) {
            if pts.len() == 1 {
                let c = g.point_cell(&pts[0]);
                out.push((c.level(), *c.anchor()));
                return;
            }
            if cell.side_log() == 0 {
                out.push((cell.level(), *cell.anchor()));
                return;
            }
            let mut groups: HashMap<usize, Vec<Point>> = HashMap::new();
            for p in pts {
                groups.entry(cell.quadrant_of(p)).or_default().push(*p);
            }
            if groups.len() > 1 {
                out.push((cell.level(), *cell.anchor()));
            }
            for (_, g2) in groups {
                let sub = QuadCell::enclosing(&g2[0], cell.level() + 1, g.bits());
                rec(g, sub, &g2, out);
            }
        }
        let mut out = Vec::new();
        if !pts.is_empty() {
            rec(g, g.root_cell(), pts, &mut out);
        }
        out.sort_by(|a, b| a.0.cmp(&b.0).then(z_cmp(&a.1, &b.1)));
        out
    }

    fn tree_cells(t: &SkipQuadtree) -> Vec<(u32, Point)> {
        let mut out: Vec<_> = t.levels[0].cells.keys().map(|c| (c.level(), *c.anchor())).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0).then(z_cmp(&a.1, &b.1)));
        out
    }

    #[test]
    fn single_leaf_is_root() {
        let g = grid(2, 3);
        let mut t = SkipQuadtree::new(g, 1);
        let p = g.point(&[3, 5]).unwrap();
        t.insert(&p, 1).unwrap();
        let root = t.root().unwrap();
        assert!(t.is_leaf(root));
        assert_eq!(t.leaf_point(root), Some(&p));
        t.audit().unwrap();
    }

    #[test]
    fn two_quadrants_give_branching_root() {
        let g = grid(2, 3);
        let mut t = SkipQuadtree::new(g, 2);
        t.insert(&g.point(&[0, 0]).unwrap(), 1).unwrap();
        t.insert(&g.point(&[7, 7]).unwrap(), 2).unwrap();
        let root = t.root().unwrap();
        assert_eq!(t.cell(root).level(), 0);
        assert_eq!(t.children(root).count(), 2);
        assert!(t.children(root).all(|c| t.is_leaf(c)));
        t.audit().unwrap();
    }

    #[test]
    fn full_grid_is_complete_tree() {
        let g = grid(2, 3);
        let mut t = SkipQuadtree::new(g, 3);
        let mut pts = Vec::new();
        for x in 0..8 {
            for y in 0..8 {
                let p = g.point(&[x, y]).unwrap();
                pts.push(p);
                t.insert(&p, (x * 8 + y) as u64).unwrap();
            }
        }
        t.audit().unwrap();
        assert_eq!(tree_cells(&t), reference_cells(&g, &pts));
        assert_eq!(t.levels[0].cells.len(), 1 + 4 + 16 + 64);
        let (lo, hi) = t.cell_extremes(&g.root_cell()).unwrap();
        assert_eq!(g.shuffle(&lo), crate::zorder::ZKey::from_u64(0));
        assert_eq!(g.shuffle(&hi), crate::zorder::ZKey::from_u64(63));
    }

    #[test]
    fn delete_recompresses() {
        let g = grid(2, 3);
        let mut t = SkipQuadtree::new(g, 4);
        let a = g.point(&[0, 0]).unwrap();
        let b = g.point(&[1, 0]).unwrap();
        let c = g.point(&[7, 7]).unwrap();
        for (i, p) in [a, b, c].iter().enumerate() {
            t.insert(p, i as u64).unwrap();
        }
        t.delete(&b, 1).unwrap();
        t.audit().unwrap();
        let root = t.root().unwrap();
        assert_eq!(t.children(root).count(), 2);
        assert!(t.children(root).all(|c| t.is_leaf(c)));
        assert_eq!(tree_cells(&t), reference_cells(&g, &[a, c]));
    }

    #[test]
    fn insert_delete_inverse_and_shared_handles() {
        let g = grid(2, 3);
        let mut t = SkipQuadtree::new(g, 5);
        let p = g.point(&[2, 6]).unwrap();
        t.insert(&p, 1).unwrap();
        t.insert(&p, 2).unwrap();
        assert_eq!(t.len(), 1);
        t.delete(&p, 1).unwrap();
        assert_eq!(t.handles(&p), &[2]);
        t.delete(&p, 2).unwrap();
        assert!(t.is_empty());
        assert!(t.root().is_none());
        assert_eq!(t.delete(&p, 2), Err(Error::PointNotFound));
        t.audit().unwrap();
    }

    #[test]
    fn locate_cases() {
        let g = grid(2, 3);
        let mut t = SkipQuadtree::new(g, 6);
        let p = g.point(&[0, 0]).unwrap();
        assert_eq!(t.locate(&p), None);
        let q = g.point(&[1, 1]).unwrap();
        let far = g.point(&[7, 7]).unwrap();
        t.insert(&p, 1).unwrap();
        t.insert(&q, 2).unwrap();
        t.insert(&far, 3).unwrap();
        let leaf = t.locate(&q).unwrap();
        assert_eq!(t.leaf_point(leaf), Some(&q));
        // (0,1) sits in the compressed gap below the 2x2 cell at the origin
        let gap = g.point(&[0, 1]).unwrap();
        let v = t.locate(&gap).unwrap();
        assert_eq!(t.cell(v).level(), 2);
        // (3,3) is inside the root's lower-left quadrant but not in any child
        let v = t.locate(&g.point(&[3, 3]).unwrap()).unwrap();
        assert_eq!(t.cell(v).level(), 0);
    }

    #[test]
    fn extremes_of_two_points() {
        let g = grid(2, 3);
        let mut t = SkipQuadtree::new(g, 7);
        let a = g.point(&[5, 1]).unwrap();
        let b = g.point(&[1, 5]).unwrap();
        t.insert(&a, 1).unwrap();
        t.insert(&b, 2).unwrap();
        let root = t.cell(t.root().unwrap());
        let (lo, hi) = t.cell_extremes(&root).unwrap();
        let (want_lo, want_hi) = if z_cmp(&a, &b).is_lt() { (a, b) } else { (b, a) };
        assert_eq!((lo, hi), (want_lo, want_hi));
        let leaf = g.point_cell(&a);
        assert_eq!(t.cell_extremes(&leaf).unwrap(), (a, a));
        assert_eq!(t.cell_extremes(&g.root_cell().clone()).map(|_| ()).is_ok(), t.node_of(&g.root_cell()).is_some());
    }

    #[test]
    fn inner_cells_trivial_cases() {
        let g = grid(2, 10);
        let mut t = SkipQuadtree::new(g, 8);
        let p = g.point(&[100, 100]).unwrap();
        t.insert(&p, 1).unwrap();
        let q = g.point(&[101, 100]).unwrap();
        let cells = t.inner_cells(&q, 0.01, 0.5).unwrap();
        assert_eq!(cells.len(), 1);
        assert!(cells[0].contains(&p));
        assert!(cells[0].dist_sq_range(&q).1 <= radius_sq_threshold(0.01, 0.5, 10));
        let far = g.point(&[1000, 1000]).unwrap();
        assert!(t.inner_cells(&far, 0.01, 0.5).unwrap().is_empty());
        assert!(t.inner_cells(&q, 0.0, 0.5).is_err());
        assert!(t.inner_cells(&q, 0.1, -1.0).is_err());
    }

    fn covered(t: &SkipQuadtree, q: &Point, r: f64, eps: f64) -> Vec<Point> {
        let mut out = Vec::new();
        for (v, _) in t.inner_cover(q, r, eps, &mut Probe::default()).unwrap() {
            let mut stack = vec![v];
            while let Some(u) = stack.pop() {
                match t.leaf_point(u) {
                    Some(p) => out.push(*p),
                    None => stack.extend(t.children(u)),
                }
            }
        }
        out.sort_by(z_cmp);
        out
    }

    proptest::proptest! {
        #[test]
        fn cover_ignores_other_points(
            base in proptest::collection::vec((0u32..256, 0u32..256), 1..40),
            extra in proptest::collection::vec((0u32..256, 0u32..256), 1..40),
            q in (0u32..256, 0u32..256),
            r in 0.01f64..0.5,
            eps in proptest::sample::select(vec![0.1, 0.5, 1.0]),
        ) {
            let g = grid(2, 8);
            let pt = |&(x, y): &(u32, u32)| g.point(&[x, y]).unwrap();
            let q = pt(&q);
            let mut small = SkipQuadtree::new(g, 1);
            let mut big = SkipQuadtree::new(g, 2);
            let mut h = 0;
            for p in base.iter().map(pt) {
                h += 1;
                small.insert(&p, h).unwrap();
                big.insert(&p, h).unwrap();
            }
            for p in extra.iter().map(pt) {
                h += 1;
                big.insert(&p, h).unwrap();
            }
            let inner = radius_sq_threshold(r, 0.0, 8);
            let outer = radius_sq_threshold(r, eps, 8);
            let a = covered(&small, &q, r, eps);
            let b: Vec<Point> = covered(&big, &q, r, eps).into_iter().filter(|p| !small.handles(p).is_empty()).collect();
            proptest::prop_assert_eq!(&a, &b);
            for p in small.locations() {
                let d = p.dist_sq(&q);
                proptest::prop_assert!(d > inner || a.contains(p));
                proptest::prop_assert!(d <= outer || !a.contains(p));
            }
        }
    }
}
