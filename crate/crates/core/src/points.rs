//! Point and block identifiers, and a dense bitset over the points of a space.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Index of a point in a finite space, in `0..n_points`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointId(pub usize);

impl PointId {
    #[inline]
    pub const fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for PointId {
    fn from(i: usize) -> Self {
        PointId(i)
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of a block of a partition, in `0..n_blocks`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub usize);

impl BlockId {
    #[inline]
    pub const fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for BlockId {
    fn from(i: usize) -> Self {
        BlockId(i)
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

const WORD: usize = 64;

/// A subset of `{0, .., universe - 1}` stored as a bitset.
///
/// All binary operations expect both operands to share the same universe.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PointSet {
    universe: usize,
    words: Vec<u64>,
}

impl PointSet {
    pub fn empty(universe: usize) -> Self {
        PointSet {
            universe,
            words: vec![0; universe.div_ceil(WORD)],
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = Self::empty(universe);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.trim();
        s
    }

    pub fn singleton(universe: usize, p: PointId) -> Self {
        let mut s = Self::empty(universe);
        s.insert(p);
        s
    }

    /// Panics if a point lies outside the universe.
    pub fn from_points<I>(universe: usize, points: I) -> Self
    where
        I: IntoIterator,
        I::Item: Into<PointId>,
    {
        let mut s = Self::empty(universe);
        for p in points {
            s.insert(p.into());
        }
        s
    }

    fn trim(&mut self) {
        let rem = self.universe % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn contains(&self, p: PointId) -> bool {
        p.0 < self.universe && self.words[p.0 / WORD] >> (p.0 % WORD) & 1 == 1
    }

    pub fn insert(&mut self, p: PointId) -> bool {
        assert!(
            p.0 < self.universe,
            "point {} outside universe of size {}",
            p.0,
            self.universe
        );
        let (w, b) = (p.0 / WORD, p.0 % WORD);
        let fresh = self.words[w] >> b & 1 == 0;
        self.words[w] |= 1 << b;
        fresh
    }

    pub fn remove(&mut self, p: PointId) -> bool {
        if p.0 >= self.universe {
            return false;
        }
        let (w, b) = (p.0 / WORD, p.0 % WORD);
        let present = self.words[w] >> b & 1 == 1;
        self.words[w] &= !(1 << b);
        present
    }

    /// Lowest-index member.
    pub fn first(&self) -> Option<PointId> {
        self.iter().next()
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter {
            words: &self.words,
            word: 0,
            bits: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn union_with(&mut self, other: &PointSet) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn intersect_with(&mut self, other: &PointSet) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    pub fn subtract(&mut self, other: &PointSet) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !*b;
        }
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn intersection(&self, other: &PointSet) -> PointSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        let mut s = self.clone();
        s.subtract(other);
        s
    }

    pub fn complement(&self) -> PointSet {
        PointSet::full(self.universe).difference(self)
    }

    pub fn intersects(&self, other: &PointSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn to_vec(&self) -> Vec<PointId> {
        self.iter().collect()
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|p| p.0)).finish()
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = PointId;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}

/// Ascending iterator over the members of a [`PointSet`].
pub struct Iter<'a> {
    words: &'a [u64],
    word: usize,
    bits: u64,
}

impl Iterator for Iter<'_> {
    type Item = PointId;

    fn next(&mut self) -> Option<PointId> {
        loop {
            if self.bits != 0 {
                let tz = self.bits.trailing_zeros() as usize;
                self.bits &= self.bits - 1;
                return Some(PointId(self.word * WORD + tz));
            }
            self.word += 1;
            if self.word >= self.words.len() {
                return None;
            }
            self.bits = self.words[self.word];
        }
    }
}
