//! Fixed-point coordinates and the z-order (bit-shuffle) over them.
//!
//! Points live on the `2^w` lattice of each axis. Comparisons in z-order never
//! materialize the interleaved key: [`z_less`] decides the order from the most
//! significant differing bit across axes using only XOR and comparisons.
//! Materialized keys ([`ZKey`]) exist for cell intervals and for tests.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 8;
pub const DEFAULT_BITS: u32 = 31;

/// A point with `dim` fixed-point coordinates.
///
/// Unused trailing coordinates are always zero so derived equality and hashing
/// only see the live axes.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Point {
    coords: [u32; MAX_DIM],
    dim: u8,
}

impl Point {
    pub fn new(coords: &[u32]) -> Result<Point> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::BadDimension(coords.len()));
        }
        let mut c = [0u32; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Point { coords: c, dim: coords.len() as u8 })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[u32] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn coord(&self, i: usize) -> u32 {
        self.coords[i]
    }

    /// Squared Euclidean distance in lattice units.
    pub fn dist_sq(&self, other: &Point) -> u128 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(&a, &b)| {
                let d = (a as i64 - b as i64).unsigned_abs() as u128;
                d * d
            })
            .sum()
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{:?}", self.coords())
    }
}

/// An interleaved z-order key. Wide enough for `MAX_DIM * 32` bits.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ZKey(pub BigUint);

impl ZKey {
    pub fn from_u64(v: u64) -> ZKey {
        ZKey(BigUint::from(v))
    }
}

/// Interleave the low `bits` bits of every coordinate, most significant level
/// first and axis 0 first within a level.
pub fn shuffle(p: &Point, bits: u32) -> ZKey {
    let d = p.dim();
    let total = d * bits as usize;
    let mut digits = vec![0u32; total.div_ceil(32).max(1)];
    for b in 0..bits as usize {
        for (i, &c) in p.coords().iter().enumerate() {
            if c >> b & 1 == 1 {
                let pos = b * d + (d - 1 - i);
                digits[pos / 32] |= 1 << (pos % 32);
            }
        }
    }
    ZKey(BigUint::new(digits))
}

/// `floor(log2 x) < floor(log2 y)` with `floor(log2 0) = -1`.
#[inline]
pub fn msb_less(x: u64, y: u64) -> bool {
    if x > y {
        return false;
    }
    x < (x ^ y)
}

/// Strict z-order comparison in O(d) word operations.
#[inline]
pub fn z_less(p: &Point, q: &Point) -> bool {
    z_cmp(p, q) == Ordering::Less
}

pub fn z_cmp(p: &Point, q: &Point) -> Ordering {
    debug_assert_eq!(p.dim, q.dim);
    let mut axis = 0;
    let mut best = (p.coords[0] ^ q.coords[0]) as u64;
    for j in 1..p.dim() {
        let x = (p.coords[j] ^ q.coords[j]) as u64;
        if msb_less(best, x) {
            axis = j;
            best = x;
        }
    }
    p.coords[axis].cmp(&q.coords[axis])
}

/// Index of one of the `d + 1` diagonal shifts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ShiftIndex(u8);

impl ShiftIndex {
    pub fn new(j: usize, dim: usize) -> Result<ShiftIndex> {
        if j > dim {
            return Err(Error::Precondition("shift index exceeds dimension"));
        }
        Ok(ShiftIndex(j as u8))
    }

    pub fn get(self) -> usize {
        self.0 as usize
    }
}

/// `sqrt(d) * (4d + 4) + 1`, the approximation factor of the shifted-neighbor
/// candidates.
pub fn c_constant(d: usize) -> f64 {
    let d = d as f64;
    d.sqrt() * (4.0 * d + 4.0) + 1.0
}

/// The coordinate model shared by every point of one structure: dimension and
/// bits per coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    dim: u8,
    bits: u8,
}

impl Grid {
    pub fn new(dim: usize, bits: u32) -> Result<Grid> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::BadDimension(dim));
        }
        if !(1..=DEFAULT_BITS).contains(&bits) {
            return Err(Error::BadBits(bits));
        }
        Ok(Grid { dim: dim as u8, bits: bits as u8 })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits as u32
    }

    /// Validate lattice coordinates.
    pub fn point(&self, coords: &[u32]) -> Result<Point> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch { want: self.dim(), got: coords.len() });
        }
        if let Some(&c) = coords.iter().find(|&&c| (c as u64) >> self.bits != 0) {
            return Err(Error::FixedOutOfRange(c as u64));
        }
        Point::new(coords)
    }

    pub fn check(&self, p: &Point) -> Result<()> {
        self.point(p.coords()).map(|_| ())
    }

    /// Quantize reals in `[0, 1)` by flooring to `bits` bits.
    pub fn quantize(&self, reals: &[f64]) -> Result<Point> {
        if reals.len() != self.dim() {
            return Err(Error::DimensionMismatch { want: self.dim(), got: reals.len() });
        }
        let scale = (1u64 << self.bits) as f64;
        let mut c = [0u32; MAX_DIM];
        for (slot, &x) in c.iter_mut().zip(reals) {
            if !(0.0..1.0).contains(&x) {
                return Err(Error::CoordinateOutOfRange(x));
            }
            *slot = ((x * scale).floor() as u64).min((1u64 << self.bits) - 1) as u32;
        }
        Point::new(&c[..self.dim()])
    }

    pub fn to_unit(&self, p: &Point) -> Vec<f64> {
        let scale = (1u64 << self.bits) as f64;
        p.coords().iter().map(|&c| c as f64 / scale).collect()
    }

    /// Per-axis offset of shift `j`: `floor(j * 2^w / (d + 1))`.
    pub fn shift_offset(&self, j: ShiftIndex) -> u32 {
        (((j.get() as u64) << self.bits) / (self.dim as u64 + 1)) as u32
    }

    /// `p + v(j)`; the result uses up to `w + 1` bits per axis and never wraps.
    pub fn shift(&self, p: &Point, j: ShiftIndex) -> Point {
        let off = self.shift_offset(j);
        let mut out = *p;
        for c in out.coords[..self.dim()].iter_mut() {
            *c += off;
        }
        out
    }

    pub fn shuffle(&self, p: &Point) -> ZKey {
        shuffle(p, self.bits())
    }

    pub fn root_cell(&self) -> QuadCell {
        QuadCell {
            anchor: Point::new(&vec![0; self.dim()]).expect("valid dimension"),
            level: 0,
            bits: self.bits,
        }
    }

    /// The single-point cell at the finest level.
    pub fn point_cell(&self, p: &Point) -> QuadCell {
        QuadCell { anchor: *p, level: self.bits, bits: self.bits }
    }

    /// Minimum and maximum z-key of any lattice point inside `c`.
    pub fn cell_interval(&self, c: &QuadCell) -> (ZKey, ZKey) {
        let lo = self.shuffle(&c.anchor);
        let free = self.dim() * (self.bits() - c.level()) as usize;
        let mask = (BigUint::from(1u8) << free) - BigUint::from(1u8);
        let hi = ZKey(&lo.0 | mask);
        (lo, hi)
    }
}

/// A dyadic cell: the anchor's top `level` bits per axis are fixed, the
/// remaining `bits - level` bits range freely.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct QuadCell {
    anchor: Point,
    level: u8,
    bits: u8,
}

impl QuadCell {
    pub fn new(grid: &Grid, anchor: Point, level: u32) -> Result<QuadCell> {
        grid.check(&anchor)?;
        if level > grid.bits() {
            return Err(Error::Precondition("cell level exceeds bit width"));
        }
        let low = grid.bits() - level;
        if anchor.coords().iter().any(|&c| low < 32 && c & ((1u32 << low) - 1) != 0) {
            return Err(Error::Precondition("cell anchor not aligned to its level"));
        }
        Ok(QuadCell { anchor, level: level as u8, bits: grid.bits })
    }

    /// The level-`level` cell containing `p`.
    pub(crate) fn enclosing(p: &Point, level: u32, bits: u32) -> QuadCell {
        let low = bits - level;
        let mut anchor = *p;
        if low > 0 {
            let mask = !((1u32 << low) - 1);
            for c in anchor.coords[..p.dim()].iter_mut() {
                *c &= mask;
            }
        }
        QuadCell { anchor, level: level as u8, bits: bits as u8 }
    }

    #[inline]
    pub fn anchor(&self) -> &Point {
        &self.anchor
    }

    #[inline]
    pub fn level(&self) -> u32 {
        self.level as u32
    }

    /// log2 of the side length in lattice units.
    #[inline]
    pub fn side_log(&self) -> u32 {
        (self.bits - self.level) as u32
    }

    pub fn contains(&self, p: &Point) -> bool {
        let low = self.side_log();
        self.anchor
            .coords()
            .iter()
            .zip(p.coords())
            .all(|(&a, &c)| (c as u64) >> low == (a as u64) >> low)
    }

    pub fn contains_cell(&self, other: &QuadCell) -> bool {
        other.level >= self.level && self.contains(&other.anchor)
    }

    /// Quadrant index of `p` inside this cell; axis 0 is the most significant
    /// bit so that sorted quadrant indices follow z-order.
    pub fn quadrant_of(&self, p: &Point) -> usize {
        debug_assert!(self.side_log() > 0);
        let b = self.side_log() - 1;
        let d = p.dim();
        p.coords()
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &c)| acc | (((c >> b) & 1) as usize) << (d - 1 - i))
    }

    /// Smallest cell containing both this cell and `p`.
    pub(crate) fn join_point(&self, p: &Point) -> QuadCell {
        let common = self
            .anchor
            .coords()
            .iter()
            .zip(p.coords())
            .map(|(&a, &c)| {
                let x = a ^ c;
                if x == 0 {
                    self.bits as u32
                } else {
                    self.bits as u32 - (32 - x.leading_zeros())
                }
            })
            .min()
            .unwrap_or(0);
        QuadCell::enclosing(p, common.min(self.level as u32), self.bits as u32)
    }

    /// Squared distance from `q` to the nearest and farthest lattice points
    /// of the cell.
    pub fn dist_sq_range(&self, q: &Point) -> (u128, u128) {
        let side = 1u64 << self.side_log();
        let mut near = 0u128;
        let mut far = 0u128;
        for (&a, &x) in self.anchor.coords().iter().zip(q.coords()) {
            let lo = a as i64;
            let hi = a as i64 + side as i64 - 1;
            let x = x as i64;
            let n = if x < lo {
                lo - x
            } else if x > hi {
                x - hi
            } else {
                0
            } as u128;
            let f = (x - lo).abs().max((x - hi).abs()) as u128;
            near += n * n;
            far += f * f;
        }
        (near, far)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[u32]) -> Point {
        Point::new(c).unwrap()
    }

    #[test]
    fn shuffle_examples() {
        assert_eq!(shuffle(&p(&[0, 0]), 3), ZKey::from_u64(0));
        assert_eq!(shuffle(&p(&[0b101, 0b011]), 3), ZKey::from_u64(39));
        for x in [0u32, 1, 77, (1 << 31) - 1] {
            assert_eq!(shuffle(&p(&[x]), 31), ZKey::from_u64(x as u64));
        }
    }

    #[test]
    fn msb_less_examples() {
        assert!(msb_less(1, 2));
        assert!(!msb_less(5, 3));
        assert!(!msb_less(2, 3));
        assert!(msb_less(0, 1));
        assert!(!msb_less(1, 0));
        assert!(!msb_less(0, 0));
    }

    #[test]
    fn z_less_examples() {
        let a = p(&[2, 3]);
        assert!(!z_less(&a, &a));
        assert!(!z_less(&p(&[2, 3]), &p(&[3, 1])));
        assert!(z_less(&p(&[3, 1]), &p(&[2, 3])));
        assert!(z_less(&p(&[0, 0]), &p(&[1, 0])));
    }

    #[test]
    fn shift_examples() {
        let g = Grid::new(2, 4).unwrap();
        let x = g.point(&[3, 9]).unwrap();
        assert_eq!(g.shift(&x, ShiftIndex::new(0, 2).unwrap()), x);
        assert_eq!(g.shift_offset(ShiftIndex::new(1, 2).unwrap()), 5);
        assert_eq!(g.shift_offset(ShiftIndex::new(2, 2).unwrap()), 10);
        assert_eq!(g.shift(&x, ShiftIndex::new(2, 2).unwrap()).coords(), &[13, 19]);
        assert!(ShiftIndex::new(3, 2).is_err());
        // the largest shift of the largest coordinate still fits in w + 1 bits
        let g = Grid::new(8, 31).unwrap();
        let top = g.point(&[(1 << 31) - 1; 8]).unwrap();
        let s = g.shift(&top, ShiftIndex::new(8, 8).unwrap());
        assert!(s.coords().iter().all(|&c| (c as u64) < 1u64 << 32));
    }

    #[test]
    fn cell_interval_examples() {
        let g = Grid::new(2, 3).unwrap();
        let (lo, hi) = g.cell_interval(&g.root_cell());
        assert_eq!((lo, hi), (ZKey::from_u64(0), ZKey::from_u64(63)));
        let quad = QuadCell::new(&g, g.point(&[4, 0]).unwrap(), 1).unwrap();
        assert_eq!(g.cell_interval(&quad), (ZKey::from_u64(32), ZKey::from_u64(47)));
        let x = g.point(&[5, 3]).unwrap();
        let single = g.point_cell(&x);
        assert_eq!(g.cell_interval(&single), (g.shuffle(&x), g.shuffle(&x)));
        assert!(QuadCell::new(&g, g.point(&[5, 0]).unwrap(), 1).is_err());
    }

    #[test]
    fn c_constant_examples() {
        assert_eq!(c_constant(1), 9.0);
        assert!((c_constant(2) - 17.970_562_748).abs() < 1e-6);
        assert!(c_constant(2) > 15.0);
        assert_eq!(c_constant(4), 41.0);
    }

    #[test]
    fn quantize_floors() {
        let g = Grid::new(2, 3).unwrap();
        assert_eq!(g.quantize(&[0.25, 0.999]).unwrap().coords(), &[2, 7]);
        assert!(g.quantize(&[1.0, 0.0]).is_err());
        assert!(g.quantize(&[-0.1, 0.0]).is_err());
        assert!(g.quantize(&[0.5]).is_err());
    }

    #[test]
    fn cell_geometry() {
        let g = Grid::new(2, 3).unwrap();
        let c = QuadCell::new(&g, g.point(&[4, 0]).unwrap(), 1).unwrap();
        assert!(c.contains(&g.point(&[7, 3]).unwrap()));
        assert!(!c.contains(&g.point(&[3, 3]).unwrap()));
        assert_eq!(c.quadrant_of(&g.point(&[6, 1]).unwrap()), 0b10);
        let q = g.point(&[0, 0]).unwrap();
        assert_eq!(c.dist_sq_range(&q), (16, 49 + 9));
        let j = g.point_cell(&g.point(&[4, 0]).unwrap()).join_point(&g.point(&[7, 3]).unwrap());
        assert_eq!(j, c);
    }
}
