//! One-hot core identities and OR-composed core masks.

use std::fmt;
use std::ops::{BitAnd, BitOr, BitOrAssign, Not};

/// Largest supported pool.
pub const MAX_CORES: usize = 64;

/// Index of a physical core. Its identity mask has exactly one bit set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoreId(u8);

impl CoreId {
    pub fn new(index: usize) -> CoreId {
        assert!(index < MAX_CORES, "core index {index} out of range");
        CoreId(index as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn mask(self) -> CoreMask {
        CoreMask(1u64 << self.0)
    }
}

impl fmt::Display for CoreId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CoreMask(pub u64);

impl CoreMask {
    pub const EMPTY: CoreMask = CoreMask(0);

    /// Mask with the lowest `n` bits set.
    pub fn first(n: usize) -> CoreMask {
        assert!(n <= MAX_CORES);
        if n == MAX_CORES {
            CoreMask(u64::MAX)
        } else {
            CoreMask((1u64 << n) - 1)
        }
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, id: CoreId) -> bool {
        self.0 & id.mask().0 != 0
    }

    pub fn is_one_hot(self) -> bool {
        self.0.is_power_of_two()
    }

    pub fn lowest(self) -> Option<CoreId> {
        (self.0 != 0).then(|| CoreId(self.0.trailing_zeros() as u8))
    }

    pub fn insert(&mut self, id: CoreId) {
        self.0 |= id.mask().0;
    }

    pub fn remove(&mut self, id: CoreId) {
        self.0 &= !id.mask().0;
    }

    /// Removes and returns the lowest-index member.
    pub fn pop_lowest(&mut self) -> Option<CoreId> {
        let id = self.lowest()?;
        self.remove(id);
        Some(id)
    }

    pub fn iter(self) -> impl Iterator<Item = CoreId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros();
            bits &= bits - 1;
            Some(CoreId(i as u8))
        })
    }
}

impl BitOr for CoreMask {
    type Output = CoreMask;
    fn bitor(self, rhs: CoreMask) -> CoreMask {
        CoreMask(self.0 | rhs.0)
    }
}

impl BitOrAssign for CoreMask {
    fn bitor_assign(&mut self, rhs: CoreMask) {
        self.0 |= rhs.0;
    }
}

impl BitAnd for CoreMask {
    type Output = CoreMask;
    fn bitand(self, rhs: CoreMask) -> CoreMask {
        CoreMask(self.0 & rhs.0)
    }
}

impl Not for CoreMask {
    type Output = CoreMask;
    fn not(self) -> CoreMask {
        CoreMask(!self.0)
    }
}

impl fmt::Display for CoreMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_are_one_hot() {
        for i in 0..MAX_CORES {
            assert!(CoreId::new(i).mask().is_one_hot());
        }
    }

    #[test]
    fn pop_lowest_walks_in_index_order() {
        let mut m = CoreMask(0b1010_0100);
        let order: Vec<usize> = std::iter::from_fn(|| m.pop_lowest()).map(CoreId::index).collect();
        assert_eq!(order, vec![2, 5, 7]);
        assert!(m.is_empty());
        assert_eq!(CoreMask::first(64).count(), 64);
        assert_eq!(CoreMask::first(3).iter().count(), 3);
    }
}
