//! Brute-force reference answers.
//!
//! Nothing here calls into the indexed structures: distances, shifts and bit
//! interleaving are recomputed from raw coordinates so that agreement with the
//! fast paths means something.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;

use crate::segtree::Handle;
use crate::zorder::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NaiveSpan {
    pub point: Point,
    pub start: i64,
    pub end: Option<i64>,
    pub handle: Handle,
}

impl NaiveSpan {
    fn covers(&self, t: i64) -> bool {
        self.start <= t && match self.end {
            Some(e) => t < e,
            None => true,
        }
    }
}

/// A flat list of lifespans answered by linear scans.
#[derive(Clone, Debug, Default)]
pub struct NaiveTimeline {
    pub bits: u32,
    spans: Vec<NaiveSpan>,
}

fn sq_dist(a: &Point, b: &Point) -> u128 {
    let mut s = 0u128;
    for i in 0..a.dim() {
        let (x, y) = (a.coords()[i] as i128, b.coords()[i] as i128);
        s += ((x - y) * (x - y)) as u128;
    }
    s
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Largest integer `x` with `x <= (factor * r * 2^bits)^2`; an integer squared
/// distance is within the radius iff it is at most this bound.
fn bound(r: f64, factor: f64, bits: u32) -> u128 {
    let side = exact(r) * exact(factor) * BigRational::from_integer(BigInt::one() << bits);
    let floor = (&side * &side).floor().to_integer();
    u128::try_from(floor).unwrap_or(u128::MAX)
}

impl NaiveTimeline {
    pub fn new(bits: u32) -> NaiveTimeline {
        NaiveTimeline { bits, spans: Vec::new() }
    }

    pub fn add(&mut self, handle: Handle, point: Point, start: i64, end: Option<i64>) {
        self.spans.push(NaiveSpan { point, start, end, handle });
    }

    pub fn remove(&mut self, handle: Handle) -> Option<NaiveSpan> {
        let i = self.spans.iter().position(|s| s.handle == handle)?;
        Some(self.spans.swap_remove(i))
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn spans(&self) -> &[NaiveSpan] {
        &self.spans
    }

    /// Lifespans covering `t`, by handle.
    pub fn alive_at(&self, t: i64) -> Vec<(Point, Handle)> {
        let mut out: Vec<_> = self.spans.iter().filter(|s| s.covers(t)).map(|s| (s.point, s.handle)).collect();
        out.sort_by_key(|&(_, h)| h);
        out
    }

    /// Alive points within unit-cube distance `r` of `q`, by handle.
    pub fn exact_range(&self, q: &Point, r: f64, t: i64) -> Vec<(Point, Handle)> {
        let b = bound(r, 1.0, self.bits);
        self.alive_at(t).into_iter().filter(|(p, _)| sq_dist(p, q) <= b).collect()
    }

    fn is_alive(alive: &[(Point, Handle)], p: &Point, h: Handle) -> bool {
        alive.binary_search_by_key(&h, |e| e.1).is_ok_and(|i| alive[i].0 == *p)
    }

    /// Nearest alive point with its squared fixed-point distance; ties go to
    /// the smaller handle.
    pub fn exact_nn(&self, q: &Point, t: i64) -> Option<(Point, Handle, u128)> {
        self.alive_at(t).into_iter().map(|(p, h)| (p, h, sq_dist(&p, q))).min_by_key(|&(_, h, d)| (d, h))
    }

    /// Check a range report: every point within `r` present, nothing beyond
    /// `(1 + eps) r` or dead at `t`, no duplicates.
    pub fn check_range(&self, q: &Point, r: f64, eps: f64, t: i64, got: &[(Point, Handle)]) -> Result<(), String> {
        let mut hs: Vec<Handle> = got.iter().map(|&(_, h)| h).collect();
        hs.sort_unstable();
        if hs.windows(2).any(|w| w[0] == w[1]) {
            return Err("duplicate handle in output".into());
        }
        let alive = self.alive_at(t);
        let outer = bound(r, 1.0 + eps, self.bits);
        for &(p, h) in got {
            if !Self::is_alive(&alive, &p, h) {
                return Err(format!("handle {h} reported but not alive at {t}"));
            }
            if sq_dist(&p, q) > outer {
                return Err(format!("handle {h} lies beyond the outer radius"));
            }
        }
        for (_, h) in self.exact_range(q, r, t) {
            if hs.binary_search(&h).is_err() {
                return Err(format!("handle {h} within r is missing"));
            }
        }
        Ok(())
    }

    /// Check an emptiness answer against its one-sided contract.
    pub fn check_empty(&self, q: &Point, r: f64, eps: f64, t: i64, got: Option<(Point, Handle)>) -> Result<(), String> {
        match got {
            None => match self.exact_range(q, r, t).first() {
                Some((_, h)) => Err(format!("reported empty but handle {h} is within r")),
                None => Ok(()),
            },
            Some((p, h)) => {
                if !Self::is_alive(&self.alive_at(t), &p, h) {
                    Err(format!("returned {h} which is not alive at {t}"))
                } else if sq_dist(&p, q) > bound(r, 1.0 + eps, self.bits) {
                    Err(format!("returned {h} beyond the outer radius"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Check an approximate nearest neighbor answer.
    pub fn check_ann(&self, q: &Point, eps: f64, t: i64, got: Option<(Point, Handle)>) -> Result<(), String> {
        match (got, self.exact_nn(q, t)) {
            (None, None) => Ok(()),
            (None, Some((_, h, _))) => Err(format!("no answer but handle {h} is alive")),
            (Some((_, h)), None) => Err(format!("answered {h} but nothing is alive")),
            (Some((p, h)), Some((_, _, best))) => {
                if !Self::is_alive(&self.alive_at(t), &p, h) {
                    return Err(format!("answered {h} which is not alive at {t}"));
                }
                let d = BigRational::from_integer(BigInt::from(sq_dist(&p, q)));
                let f = BigRational::one() + exact(eps);
                if d <= &f * &f * BigRational::from_integer(BigInt::from(best)) {
                    Ok(())
                } else {
                    Err(format!("answer {h} is farther than (1+eps) times the nearest"))
                }
            }
        }
    }
}

/// The z-order key of `p` after shift `j`: per-axis offset
/// `floor(j 2^bits / (d + 1))`, then `bits + 1` interleaved bits per axis,
/// most significant level first, axis 0 highest within a level.
pub fn ref_z_key(p: &Point, bits: u32, j: usize) -> BigUint {
    let d = p.dim();
    let off = ((j as u128) << bits) / (d as u128 + 1);
    let shifted: Vec<u128> = p.coords().iter().map(|&c| c as u128 + off).collect();
    let mut digits = String::with_capacity(d * (bits as usize + 1));
    for level in (0..=bits).rev() {
        for c in &shifted {
            digits.push(if (c >> level) & 1 == 1 { '1' } else { '0' });
        }
    }
    BigUint::parse_bytes(digits.as_bytes(), 2).expect("binary digits")
}

/// Sort points by materialized shifted z-order keys; ties keep input order.
pub fn ref_z_sort(points: &[Point], bits: u32, j: usize) -> Vec<Point> {
    let mut keyed: Vec<(BigUint, Point)> = points.iter().map(|p| (ref_z_key(p, bits, j), *p)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.into_iter().map(|(_, p)| p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zorder::{z_cmp, Grid, ShiftIndex};
    use proptest::prelude::*;

    fn p1(x: u32) -> Point {
        Point::new(&[x]).unwrap()
    }

    #[test]
    fn empty_and_early() {
        let mut o = NaiveTimeline::new(4);
        assert!(o.alive_at(0).is_empty());
        assert!(o.exact_nn(&p1(3), 0).is_none());
        o.add(1, p1(3), 5, None);
        assert!(o.alive_at(4).is_empty());
        assert_eq!(o.alive_at(5), vec![(p1(3), 1)]);
    }

    #[test]
    fn intro_nearest() {
        let mut o = NaiveTimeline::new(4);
        for x in [1u32, 4, 7, 10, 13] {
            o.add(x as u64, p1(x), x as i64, None);
        }
        assert_eq!(o.exact_nn(&p1(6), 12).unwrap().0, p1(7));
        o.add(6, p1(6), 6, None);
        assert_eq!(o.exact_nn(&p1(6), 12).unwrap(), (p1(6), 6, 0));
    }

    #[test]
    fn half_open_intervals() {
        let mut o = NaiveTimeline::new(4);
        o.add(1, p1(2), 3, Some(7));
        assert_eq!(o.alive_at(6).len(), 1);
        assert!(o.alive_at(7).is_empty());
        assert!(o.remove(1).is_some());
        assert!(o.remove(1).is_none());
    }

    #[test]
    fn full_grid_enumerates_in_order() {
        let mut pts = Vec::new();
        for x in 0..8u32 {
            for y in 0..8u32 {
                pts.push(Point::new(&[x, y]).unwrap());
            }
        }
        let sorted = ref_z_sort(&pts, 3, 0);
        for (i, p) in sorted.iter().enumerate() {
            // unshifted keys carry a leading zero level
            assert_eq!(ref_z_key(p, 3, 0), BigUint::from(i));
        }
    }

    #[test]
    fn checks_flag_violations() {
        let mut o = NaiveTimeline::new(4);
        o.add(1, p1(0), 0, None);
        o.add(2, p1(8), 0, None);
        let q = p1(0);
        assert!(o.check_range(&q, 0.1, 0.1, 0, &[]).is_err());
        assert!(o.check_range(&q, 0.1, 0.1, 0, &[(p1(0), 1), (p1(8), 2)]).is_err());
        assert!(o.check_range(&q, 0.1, 0.1, 0, &[(p1(0), 1)]).is_ok());
        assert!(o.check_ann(&q, 0.5, 0, Some((p1(8), 2))).is_err());
        assert!(o.check_empty(&q, 0.1, 0.1, 0, None).is_err());
        assert!(o.check_empty(&p1(4), 0.1, 0.1, 0, None).is_ok());
    }

    proptest! {
        #[test]
        fn agrees_with_z_cmp(raw in proptest::collection::vec((0u32..1024, 0u32..1024, 0u32..1024), 1..60), j in 0usize..4) {
            let g = Grid::new(3, 10).unwrap();
            let pts: Vec<Point> = raw.iter().map(|&(a, b, c)| g.point(&[a, b, c]).unwrap()).collect();
            let mut fast: Vec<Point> = pts.iter().map(|p| g.shift(p, ShiftIndex::new(j, 3).unwrap())).collect();
            fast.sort_by(z_cmp);
            let slow: Vec<Point> = ref_z_sort(&pts, 10, j).iter().map(|p| g.shift(p, ShiftIndex::new(j, 3).unwrap())).collect();
            prop_assert_eq!(fast, slow);
        }
    }
}
