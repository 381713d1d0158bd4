use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::Error;

/// Node of the binary genealogical tree, as the sequence of child choices
/// from the root (the empty sequence).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct TreePath {
    len: u32,
    words: SmallVec<[u64; 2]>,
}

impl TreePath {
    pub fn root() -> Self {
        TreePath::default()
    }

    /// Generation `|u|`.
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_root(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> u8 {
        assert!(i < self.len(), "bit {i} out of range for path of length {}", self.len);
        ((self.words[i / 64] >> (i % 64)) & 1) as u8
    }

    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len()).map(|i| self.bit(i))
    }

    pub fn push(&mut self, bit: u8) {
        let i = self.len();
        if i % 64 == 0 {
            self.words.push(0);
        }
        if bit != 0 {
            self.words[i / 64] |= 1 << (i % 64);
        }
        self.len += 1;
    }

    pub fn child(&self, bit: u8) -> Self {
        let mut c = self.clone();
        c.push(bit);
        c
    }

    /// `u⁻`, or `None` at the root.
    pub fn parent(&self) -> Option<Self> {
        if self.is_root() {
            return None;
        }
        let mut p = self.clone();
        p.len -= 1;
        let i = p.len();
        p.words[i / 64] &= !(1 << (i % 64));
        if i % 64 == 0 {
            p.words.pop();
        }
        Some(p)
    }

    /// First `k` choices (the ancestor at generation `k`).
    pub fn prefix(&self, k: usize) -> Self {
        self.bits().take(k).fold(TreePath::root(), |p, b| p.child(b))
    }

    pub fn is_ancestor_of(&self, other: &TreePath) -> bool {
        self.len() < other.len() && (0..self.len()).all(|i| self.bit(i) == other.bit(i))
    }

    /// Breadth-first index (`0` for the root, children of `i` at `2i+1`, `2i+2`).
    pub fn bfs_index(&self) -> Option<usize> {
        if self.len() >= usize::BITS as usize - 1 {
            return None;
        }
        let offset = self.bits().fold(0usize, |acc, b| (acc << 1) | b as usize);
        Some((1usize << self.len()) - 1 + offset)
    }

    pub fn from_bfs_index(index: usize) -> Self {
        let depth = (usize::BITS - 1 - (index + 1).leading_zeros()) as usize;
        let offset = index + 1 - (1 << depth);
        let mut p = TreePath::root();
        for i in (0..depth).rev() {
            p.push(((offset >> i) & 1) as u8);
        }
        p
    }
}

/// Breadth-first, then lexicographic.
impl Ord for TreePath {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| self.bits().cmp(other.bits()))
    }
}

impl PartialOrd for TreePath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TreePath(\"{self}\")")
    }
}

impl FromStr for TreePath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let mut p = TreePath::root();
        for c in s.trim().chars() {
            match c {
                '0' => p.push(0),
                '1' => p.push(1),
                other => return Err(Error::Schema(format!("invalid character {other:?} in tree path {s:?}"))),
            }
        }
        Ok(p)
    }
}
