use std::fmt;

/// A set of colors from an alphabet of at most 64, packed into one word.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ColorSet(pub u64);

impl ColorSet {
    pub const EMPTY: ColorSet = ColorSet(0);

    pub fn single(c: u8) -> Self {
        debug_assert!(c < 64);
        ColorSet(1u64 << c)
    }

    /// All colors `0..n`.
    pub fn all(n: u8) -> Self {
        if n >= 64 {
            ColorSet(u64::MAX)
        } else {
            ColorSet((1u64 << n) - 1)
        }
    }

    pub fn from_colors<I: IntoIterator<Item = u8>>(it: I) -> Self {
        it.into_iter().fold(ColorSet::EMPTY, |s, c| s.with(c))
    }

    #[inline]
    pub fn contains(self, c: u8) -> bool {
        c < 64 && self.0 >> c & 1 == 1
    }

    #[inline]
    pub fn with(self, c: u8) -> Self {
        ColorSet(self.0 | 1u64 << c)
    }

    #[inline]
    pub fn without(self, c: u8) -> Self {
        ColorSet(self.0 & !(1u64 << c))
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    #[inline]
    pub fn intersects(self, other: ColorSet) -> bool {
        self.0 & other.0 != 0
    }

    /// Smallest color in the set.
    #[inline]
    pub fn first(self) -> Option<u8> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as u8)
    }

    pub fn iter(self) -> ColorIter {
        ColorIter(self.0)
    }
}

impl std::ops::BitAnd for ColorSet {
    type Output = ColorSet;
    fn bitand(self, rhs: Self) -> Self {
        ColorSet(self.0 & rhs.0)
    }
}

impl std::ops::BitOr for ColorSet {
    type Output = ColorSet;
    fn bitor(self, rhs: Self) -> Self {
        ColorSet(self.0 | rhs.0)
    }
}

impl std::ops::Sub for ColorSet {
    type Output = ColorSet;
    fn sub(self, rhs: Self) -> Self {
        ColorSet(self.0 & !rhs.0)
    }
}

impl std::ops::BitOrAssign for ColorSet {
    fn bitor_assign(&mut self, rhs: Self) {
        self.0 |= rhs.0;
    }
}

impl std::ops::BitAndAssign for ColorSet {
    fn bitand_assign(&mut self, rhs: Self) {
        self.0 &= rhs.0;
    }
}

impl fmt::Debug for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub struct ColorIter(u64);

impl Iterator for ColorIter {
    type Item = u8;
    fn next(&mut self) -> Option<u8> {
        if self.0 == 0 {
            return None;
        }
        let c = self.0.trailing_zeros() as u8;
        self.0 &= self.0 - 1;
        Some(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_ops() {
        let s = ColorSet::from_colors([0, 5, 63]);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 5, 63]);
        assert!(s.contains(63) && !s.contains(1));
        assert_eq!(s.without(5).len(), 2);
        assert_eq!(ColorSet::all(64).len(), 64);
        assert_eq!(ColorSet::all(3), ColorSet::from_colors([0, 1, 2]));
        assert_eq!((s - ColorSet::single(0)).first(), Some(5));
    }
}
