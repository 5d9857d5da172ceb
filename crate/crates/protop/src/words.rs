//! Freely reduced words over a ranked alphabet with formal inverses.
//!
//! A letter is a nonzero signed integer: `+i` is the `i`-th generator,
//! `-i` its inverse, with `1 <= i <= rank`. The text form maps `a..z`
//! to generators `1..26` and `A..Z` to their inverses; the identity is
//! written `1`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WordError {
    #[error("letter index {index} exceeds rank {rank}")]
    LetterOutOfRange { index: usize, rank: usize },
    #[error("invalid character {0:?} in word")]
    InvalidChar(char),
    #[error("text word form requires rank <= 26, got {0}")]
    RankTooLargeForText(usize),
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("zero is not a valid letter")]
    ZeroLetter,
}

/// A freely reduced word in the free group of the given rank.
///
/// Words are immutable values; every constructor freely reduces its
/// input, so no adjacent pair `x, -x` ever survives.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    rank: usize,
    letters: Vec<i32>,
}

impl Word {
    pub fn identity(rank: usize) -> Self {
        Word { rank, letters: Vec::new() }
    }

    /// The single-letter word for generator `i` (1-based).
    pub fn generator(rank: usize, i: usize) -> Result<Self, WordError> {
        if i == 0 || i > rank {
            return Err(WordError::LetterOutOfRange { index: i, rank });
        }
        Ok(Word { rank, letters: vec![i as i32] })
    }

    /// Builds a word from signed letters, freely reducing as it goes.
    pub fn from_letters(rank: usize, letters: &[i32]) -> Result<Self, WordError> {
        let mut reduced: Vec<i32> = Vec::with_capacity(letters.len());
        for &l in letters {
            if l == 0 {
                return Err(WordError::ZeroLetter);
            }
            let idx = l.unsigned_abs() as usize;
            if idx > rank {
                return Err(WordError::LetterOutOfRange { index: idx, rank });
            }
            if reduced.last() == Some(&-l) {
                reduced.pop();
            } else {
                reduced.push(l);
            }
        }
        Ok(Word { rank, letters: reduced })
    }

    /// Parses the compact text form: lowercase = generator, uppercase =
    /// inverse, `"1"` = identity. Only defined for rank <= 26.
    pub fn parse(text: &str, rank: usize) -> Result<Self, WordError> {
        if rank > 26 {
            return Err(WordError::RankTooLargeForText(rank));
        }
        if text == "1" {
            return Ok(Word::identity(rank));
        }
        let mut letters = Vec::with_capacity(text.len());
        for c in text.chars() {
            let l = match c {
                'a'..='z' => (c as i32) - ('a' as i32) + 1,
                'A'..='Z' => -((c as i32) - ('A' as i32) + 1),
                _ => return Err(WordError::InvalidChar(c)),
            };
            letters.push(l);
        }
        Word::from_letters(rank, &letters)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Freely reduced product `self * other`.
    pub fn concat(&self, other: &Word) -> Result<Word, WordError> {
        if self.rank != other.rank {
            return Err(WordError::RankMismatch(self.rank, other.rank));
        }
        let mut reduced = self.letters.clone();
        for &l in &other.letters {
            if reduced.last() == Some(&-l) {
                reduced.pop();
            } else {
                reduced.push(l);
            }
        }
        Ok(Word { rank: self.rank, letters: reduced })
    }

    pub fn inverse(&self) -> Word {
        let letters = self.letters.iter().rev().map(|&l| -l).collect();
        Word { rank: self.rank, letters }
    }

    /// `self^k` for any integer k.
    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity(self.rank);
        for _ in 0..k.unsigned_abs() {
            // a reduced word times itself only cancels across the seam
            out = out.concat(&base).expect("equal ranks");
        }
        out
    }

    /// Commutator `[self, other] = self^-1 other^-1 self other`.
    pub fn commutator(&self, other: &Word) -> Result<Word, WordError> {
        self.inverse()
            .concat(&other.inverse())?
            .concat(self)?
            .concat(other)
    }

    /// Per-generator exponent sums (the image in Z^rank).
    pub fn exponent_vector(&self) -> Vec<i64> {
        let mut v = vec![0i64; self.rank];
        for &l in &self.letters {
            let idx = l.unsigned_abs() as usize - 1;
            v[idx] += l.signum() as i64;
        }
        v
    }

    /// JSON wire form: array of nonzero integers.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.letters.iter().map(|&l| serde_json::Value::from(l)).collect(),
        )
    }
}

/// Printable name of a letter: `a..z` for rank <= 26, `x3`/`X3` beyond.
pub fn letter_name(letter: i32, rank: usize) -> String {
    let idx = letter.unsigned_abs();
    if rank <= 26 {
        let base = if letter > 0 { b'a' } else { b'A' };
        ((base + (idx as u8) - 1) as char).to_string()
    } else if letter > 0 {
        format!("x{idx}")
    } else {
        format!("X{idx}")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for &l in &self.letters {
            write!(f, "{}", letter_name(l, self.rank))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_direct_transliteration() {
        let w = Word::parse("abA", 2).unwrap();
        assert_eq!(w.letters(), &[1, 2, -1]);
    }

    #[test]
    fn parse_cancels_inverse_pair() {
        let w = Word::parse("aA", 2).unwrap();
        assert!(w.is_empty());
        assert_eq!(w.to_string(), "1");
    }

    #[test]
    fn parse_rejects_letter_beyond_rank() {
        assert_eq!(
            Word::parse("abc", 2),
            Err(WordError::LetterOutOfRange { index: 3, rank: 2 })
        );
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(matches!(Word::parse("a?b", 2), Err(WordError::InvalidChar('?'))));
    }

    #[test]
    fn concat_cancels_fully() {
        let u = Word::parse("ab", 2).unwrap();
        let v = Word::parse("BA", 2).unwrap();
        assert!(u.concat(&v).unwrap().is_empty());
    }

    #[test]
    fn concat_no_cancellation() {
        let u = Word::parse("ab", 2).unwrap();
        let v = Word::parse("ba", 2).unwrap();
        assert_eq!(u.concat(&v).unwrap().to_string(), "abba");
    }

    #[test]
    fn concat_partial_cancellation() {
        let u = Word::parse("aB", 2).unwrap();
        let v = Word::parse("ba", 2).unwrap();
        assert_eq!(u.concat(&v).unwrap().to_string(), "aa");
    }

    #[test]
    fn concat_rank_mismatch() {
        let u = Word::parse("a", 2).unwrap();
        let v = Word::parse("a", 3).unwrap();
        assert_eq!(u.concat(&v), Err(WordError::RankMismatch(2, 3)));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(Word::parse("abA", 2).unwrap().inverse().to_string(), "aBA");
        assert!(Word::identity(2).inverse().is_empty());
    }

    #[test]
    fn exponent_vector_counts() {
        assert_eq!(Word::parse("abAb", 2).unwrap().exponent_vector(), vec![0, 2]);
        // commutators die in the abelianization
        assert_eq!(Word::parse("aBAb", 2).unwrap().exponent_vector(), vec![0, 0]);
    }

    #[test]
    fn pow_and_commutator() {
        let a = Word::parse("a", 2).unwrap();
        let b = Word::parse("b", 2).unwrap();
        assert_eq!(a.pow(3).to_string(), "aaa");
        assert_eq!(a.pow(-2).to_string(), "AA");
        assert_eq!(a.commutator(&b).unwrap().to_string(), "ABab");
    }

    #[test]
    fn display_round_trip() {
        for text in ["1", "a", "abAb", "zZy"] {
            let w = Word::parse(text, 26).unwrap();
            assert_eq!(Word::parse(&w.to_string(), 26).unwrap(), w);
        }
    }
}
