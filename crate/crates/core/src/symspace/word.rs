//! Finite words over a small alphabet.

use std::fmt;

/// A finite word of alphabet letters; the empty word indexes depth 0.
///
/// Words are ordered lexicographically, which is exactly the canonical basis
/// order of the cylinder spaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<u8>);

impl Word {
    /// The empty word.
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds a word from letters without admissibility checking.
    pub fn new(letters: Vec<u8>) -> Self {
        Word(letters)
    }

    /// Number of letters.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True for the empty word.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The letters of the word.
    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    /// First letter, if any.
    pub fn first(&self) -> Option<u8> {
        self.0.first().copied()
    }

    /// The word with its first letter removed.
    pub fn tail(&self) -> Word {
        Word(self.0[1.min(self.0.len())..].to_vec())
    }

    /// The word truncated to its first `d` letters.
    ///
    /// Panics if `d` exceeds the length; callers check depths first.
    pub fn prefix(&self, d: usize) -> Word {
        Word(self.0[..d].to_vec())
    }

    /// The word with `letter` prepended.
    pub fn with_prefix(&self, letter: u8) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(letter);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// The last `d` letters as a word.
    pub fn suffix(&self, d: usize) -> Word {
        Word(self.0[self.0.len() - d..].to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        for &a in &self.0 {
            write!(f, "{a}")?;
        }
        Ok(())
    }
}
