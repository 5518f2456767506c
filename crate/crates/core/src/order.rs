//! List labeling: items of a linked list carry integer labels in `[0, 2^32)`
//! that increase along the list.
//!
//! Inserting into a full gap relabels the smallest enclosing aligned label
//! range whose density is below `(2/T)^i` for a range of `2^i` labels, spreading
//! its items evenly. Every label change is returned to the caller.

use crate::error::{Error, Result};

pub type ItemId = u32;

const NIL: u32 = u32::MAX;
const LABEL_BITS: u32 = 32;
const UNIVERSE: u64 = 1 << LABEL_BITS;
const T: f64 = 1.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Relabel {
    pub item: ItemId,
    pub old: u64,
    pub new: u64,
}

#[derive(Clone, Debug)]
struct Item {
    label: u64,
    prev: u32,
    next: u32,
    live: bool,
}

#[derive(Clone, Debug, Default)]
pub struct OrderList {
    items: Vec<Item>,
    free: Vec<u32>,
    head: Option<ItemId>,
    len: usize,
    relabels: u64,
}

impl OrderList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Total label changes performed so far.
    pub fn relabel_count(&self) -> u64 {
        self.relabels
    }

    pub fn label(&self, x: ItemId) -> u64 {
        self.items[x as usize].label
    }

    pub fn next(&self, x: ItemId) -> Option<ItemId> {
        let n = self.items[x as usize].next;
        (n != NIL).then_some(n)
    }

    pub fn prev(&self, x: ItemId) -> Option<ItemId> {
        let p = self.items[x as usize].prev;
        (p != NIL).then_some(p)
    }

    pub fn first(&self) -> Option<ItemId> {
        self.head
    }

    fn alloc(&mut self, label: u64, prev: u32, next: u32) -> ItemId {
        let it = Item { label, prev, next, live: true };
        self.len += 1;
        match self.free.pop() {
            Some(id) => {
                self.items[id as usize] = it;
                id
            }
            None => {
                self.items.push(it);
                (self.items.len() - 1) as ItemId
            }
        }
    }

    /// Build a list of `n` evenly labeled items, returned in order.
    pub fn bulk(n: usize) -> Result<(OrderList, Vec<ItemId>)> {
        if n as u64 > UNIVERSE / 2 {
            return Err(Error::Precondition("order list capacity exceeded"));
        }
        let mut o = OrderList::new();
        let step = if n == 0 { 0 } else { UNIVERSE / (n as u64 + 1) };
        let mut ids = Vec::with_capacity(n);
        for i in 0..n {
            let prev = if i == 0 { NIL } else { ids[i - 1] };
            let id = o.alloc(step * (i as u64 + 1), prev, NIL);
            if i > 0 {
                o.items[prev as usize].next = id;
            }
            ids.push(id);
        }
        o.head = ids.first().copied();
        Ok((o, ids))
    }

    /// Insert a new item after `x`, or at the front when `x` is `None`.
    pub fn insert_after(&mut self, x: Option<ItemId>) -> Result<(ItemId, Vec<Relabel>)> {
        if self.len as u64 >= UNIVERSE / 2 {
            return Err(Error::Precondition("order list capacity exceeded"));
        }
        let (prev, next) = match x {
            Some(x) => {
                if !self.items.get(x as usize).is_some_and(|i| i.live) {
                    return Err(Error::Precondition("unknown order item"));
                }
                (x, self.items[x as usize].next)
            }
            None => (NIL, self.head.unwrap_or(NIL)),
        };
        let lo = if prev == NIL { 0 } else { self.items[prev as usize].label + 1 };
        let hi = if next == NIL { UNIVERSE } else { self.items[next as usize].label };
        let label = if hi > lo { lo + (hi - lo) / 2 } else { 0 };
        let id = self.alloc(label, prev, next);
        if prev == NIL {
            self.head = Some(id);
        } else {
            self.items[prev as usize].next = id;
        }
        if next != NIL {
            self.items[next as usize].prev = id;
        }
        if hi > lo {
            return Ok((id, Vec::new()));
        }
        let events = self.spread_around(id, lo.min(UNIVERSE - 1));
        Ok((id, events))
    }

    /// Relabel the smallest sparse enough aligned range around `pos` so that
    /// `id` (whose label is not yet valid) fits.
    fn spread_around(&mut self, id: ItemId, pos: u64) -> Vec<Relabel> {
        for i in 1..=LABEL_BITS {
            let size = 1u64 << i;
            let base = pos >> i << i;
            let end = base + size;
            // walk outwards from the new item, skipping its own placeholder label
            let mut first = id;
            loop {
                let p = self.items[first as usize].prev;
                if p == NIL || self.items[p as usize].label < base {
                    break;
                }
                first = p;
            }
            let mut members = Vec::new();
            let mut cur = first;
            while cur != NIL && (cur == id || self.items[cur as usize].label < end) {
                members.push(cur);
                cur = self.items[cur as usize].next;
            }
            let limit = (2.0 / T).powi(i as i32);
            if (members.len() as f64) <= limit || i == LABEL_BITS {
                let step = size / members.len() as u64;
                let mut events = Vec::new();
                for (k, &m) in members.iter().enumerate() {
                    let new = base + step * k as u64;
                    let old = self.items[m as usize].label;
                    self.items[m as usize].label = new;
                    if m != id && old != new {
                        self.relabels += 1;
                        events.push(Relabel { item: m, old, new });
                    }
                }
                return events;
            }
        }
        unreachable!("the full range always fits")
    }

    pub fn delete(&mut self, x: ItemId) -> Result<()> {
        if !self.items.get(x as usize).is_some_and(|i| i.live) {
            return Err(Error::Precondition("unknown order item"));
        }
        let Item { prev, next, .. } = self.items[x as usize].clone();
        if prev == NIL {
            self.head = (next != NIL).then_some(next);
        } else {
            self.items[prev as usize].next = next;
        }
        if next != NIL {
            self.items[next as usize].prev = prev;
        }
        self.items[x as usize].live = false;
        self.free.push(x);
        self.len -= 1;
        Ok(())
    }

    /// Items in list order.
    pub fn iter(&self) -> impl Iterator<Item = ItemId> + '_ {
        std::iter::successors(self.head, move |&x| self.next(x))
    }
}
