//! Finite words over the integer alphabet `{0, 1, …}` and a few string
//! primitives (border array, occurrence search) the rest of the crate uses.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ParseError;

/// Letters are small integers; the canonical alphabet is `0..m+p`.
pub type Letter = u32;

/// A finite word.
///
/// Serialized as contiguous digits when every letter is below 10, and as
/// space-separated decimals otherwise.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn push(&mut self, a: Letter) {
        self.0.push(a);
    }

    pub fn extend_from_slice(&mut self, w: &[Letter]) {
        self.0.extend_from_slice(w);
    }

    pub fn concat(parts: &[&[Letter]]) -> Self {
        let mut out = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
        for p in parts {
            out.extend_from_slice(p);
        }
        Word(out)
    }

    /// `self · a⁻¹`; `None` if the word does not end with `a`.
    pub fn strip_last(&self, a: Letter) -> Option<Word> {
        match self.0.split_last() {
            Some((&last, rest)) if last == a => Some(Word(rest.to_vec())),
            _ => None,
        }
    }
}

impl Deref for Word {
    type Target = [Letter];
    fn deref(&self) -> &[Letter] {
        &self.0
    }
}

impl From<Vec<Letter>> for Word {
    fn from(v: Vec<Letter>) -> Self {
        Word(v)
    }
}

impl From<&[Letter]> for Word {
    fn from(v: &[Letter]) -> Self {
        Word(v.to_vec())
    }
}

impl FromIterator<Letter> for Word {
    fn from_iter<I: IntoIterator<Item = Letter>>(iter: I) -> Self {
        Word(iter.into_iter().collect())
    }
}

/// Writes a letter sequence in the serialization format described on [`Word`].
pub fn format_letters(letters: &[Letter]) -> String {
    if letters.iter().all(|&a| a < 10) {
        letters.iter().map(|&a| char::from(b'0' + a as u8)).collect()
    } else {
        letters
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_letters(&self.0))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({})", self)
    }
}

impl FromStr for Word {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.contains(char::is_whitespace) {
            s.split_whitespace()
                .map(|tok| {
                    tok.parse::<Letter>().map_err(|_| ParseError::Syntax {
                        position: tok.as_ptr() as usize - s.as_ptr() as usize,
                        message: format!("bad letter {tok:?}"),
                    })
                })
                .collect()
        } else {
            s.char_indices()
                .map(|(i, c)| {
                    c.to_digit(10).ok_or_else(|| ParseError::Syntax {
                        position: i,
                        message: format!("unexpected character {c:?}"),
                    })
                })
                .collect()
        }
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Border array: `border[i]` is the length of the longest proper border of `w[..=i]`.
pub fn border_array(w: &[Letter]) -> Vec<usize> {
    let mut border = vec![0usize; w.len()];
    let mut k = 0;
    for i in 1..w.len() {
        while k > 0 && w[i] != w[k] {
            k = border[k - 1];
        }
        if w[i] == w[k] {
            k += 1;
        }
        border[i] = k;
    }
    border
}

/// Smallest period of a nonempty word.
pub fn smallest_period(w: &[Letter]) -> usize {
    assert!(!w.is_empty());
    w.len() - border_array(w)[w.len() - 1]
}

/// All (possibly overlapping) starting positions of `pattern` in `text`, in increasing order.
pub fn occurrences(text: &[Letter], pattern: &[Letter]) -> Vec<usize> {
    if pattern.is_empty() {
        return (0..=text.len()).collect();
    }
    if pattern.len() > text.len() {
        return Vec::new();
    }
    let border = border_array(pattern);
    let mut out = Vec::new();
    let mut k = 0;
    for (i, &a) in text.iter().enumerate() {
        while k > 0 && (k == pattern.len() || pattern[k] != a) {
            k = border[k - 1];
        }
        if pattern[k] == a {
            k += 1;
        }
        if k == pattern.len() {
            out.push(i + 1 - k);
        }
    }
    out
}

pub fn contains(text: &[Letter], pattern: &[Letter]) -> bool {
    if pattern.is_empty() {
        return true;
    }
    !occurrences(text, pattern).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_switches_on_large_letters() {
        let w: Word = vec![0, 0, 1, 2].into();
        assert_eq!(w.to_string(), "0012");
        let w: Word = vec![0, 12, 3].into();
        assert_eq!(w.to_string(), "0 12 3");
        assert_eq!("0 12 3".parse::<Word>().unwrap(), w);
        assert_eq!("0012".parse::<Word>().unwrap().letters(), &[0, 0, 1, 2]);
        assert_eq!("".parse::<Word>().unwrap(), Word::new());
        assert!("00a".parse::<Word>().is_err());
    }

    #[test]
    fn occurrence_search_finds_overlaps() {
        let t: Word = "0000".parse().unwrap();
        assert_eq!(occurrences(&t, &[0, 0]), vec![0, 1, 2]);
        let t: Word = "00100101".parse().unwrap();
        assert_eq!(occurrences(&t, &[0, 1]), vec![1, 4, 6]);
        assert!(occurrences(&t, &[2]).is_empty());
    }

    #[test]
    fn periods() {
        assert_eq!(smallest_period(&[0, 1, 0, 0, 1, 0]), 3);
        assert_eq!(smallest_period(&[0, 1, 0, 1]), 2);
        assert_eq!(smallest_period(&[0, 0, 1]), 3);
        assert_eq!(smallest_period(&[5]), 1);
    }
}
