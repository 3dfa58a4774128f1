//! Brute-force facts about a finite prefix: factors, extensions, special
//! factors, indices of repetitions and return words.
//!
//! Everything here is observational. A value computed on a prefix is a
//! lower bound (indices) or a subset (extensions, return words) of the
//! corresponding value for the infinite word.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::word::{occurrences, smallest_period, Letter, Word};

pub fn factors_of_length(prefix: &[Letter], n: usize) -> BTreeSet<Word> {
    if n > prefix.len() {
        return BTreeSet::new();
    }
    let distinct: HashSet<&[Letter]> = prefix.windows(n.max(1)).collect();
    if n == 0 {
        return std::iter::once(Word::new()).collect();
    }
    distinct.into_iter().map(Word::from).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtensionRecord {
    pub factor: Word,
    pub left_extensions: BTreeSet<Letter>,
    pub right_extensions: BTreeSet<Letter>,
    pub occurrences: usize,
    /// The factor occurs as a suffix of the prefix, so one right extension
    /// may be missing.
    pub touches_end: bool,
}

pub fn extensions(prefix: &[Letter], w: &[Letter]) -> Result<ExtensionRecord> {
    let occ = occurrences(prefix, w);
    if occ.is_empty() {
        return Err(Error::FactorAbsent(Word::from(w).to_string()));
    }
    let mut left = BTreeSet::new();
    let mut right = BTreeSet::new();
    let mut touches_end = false;
    for &i in &occ {
        if i > 0 {
            left.insert(prefix[i - 1]);
        }
        match prefix.get(i + w.len()) {
            Some(&b) => {
                right.insert(b);
            }
            None => touches_end = true,
        }
    }
    Ok(ExtensionRecord {
        factor: Word::from(w),
        left_extensions: left,
        right_extensions: right,
        occurrences: occ.len(),
        touches_end,
    })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SpecialFactors {
    pub left_special: Vec<Word>,
    pub right_special: Vec<Word>,
    pub bispecial: Vec<Word>,
}

pub fn special_factors(prefix: &[Letter], n: usize) -> SpecialFactors {
    let mut ext: HashMap<&[Letter], (BTreeSet<Letter>, BTreeSet<Letter>)> = HashMap::new();
    if n > prefix.len() {
        return SpecialFactors::default();
    }
    for i in 0..=prefix.len() - n {
        let entry = ext.entry(&prefix[i..i + n]).or_default();
        if i > 0 {
            entry.0.insert(prefix[i - 1]);
        }
        if let Some(&b) = prefix.get(i + n) {
            entry.1.insert(b);
        }
    }
    let mut sorted: Vec<_> = ext.into_iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(b.0));
    let mut out = SpecialFactors::default();
    for (w, (l, r)) in sorted {
        if l.len() >= 2 {
            out.left_special.push(Word::from(w));
        }
        if r.len() >= 2 {
            out.right_special.push(Word::from(w));
        }
        if l.len() >= 2 && r.len() >= 2 {
            out.bispecial.push(Word::from(w));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexRecord {
    pub factor: Word,
    pub maximal_power: Word,
    #[serde(serialize_with = "crate::ser::rational")]
    pub index: BigRational,
    pub attained_at: usize,
    pub prefix_length: usize,
}

/// Length of the longest prefix of `w^ω` starting at `i`, given that `w`
/// occurs at `i`.
fn periodic_extent(prefix: &[Letter], i: usize, period: usize) -> usize {
    let mut e = i + period;
    while e < prefix.len() && prefix[e] == prefix[e - period] {
        e += 1;
    }
    e - i
}

pub fn index_of(prefix: &[Letter], w: &[Letter]) -> Result<IndexRecord> {
    if w.is_empty() {
        return Err(Error::InvalidArgument("index of the empty word".into()));
    }
    let n = w.len();
    let occ = occurrences(prefix, w);
    if occ.is_empty() {
        return Err(Error::FactorAbsent(Word::from(w).to_string()));
    }
    let (mut best_len, mut best_at) = (0, 0);
    let mut run_end = 0;
    for &i in &occ {
        // an occurrence inside the previous run ends at the same place
        if i + n <= run_end {
            continue;
        }
        let len = periodic_extent(prefix, i, n);
        run_end = i + len;
        if len > best_len {
            best_len = len;
            best_at = i;
        }
    }
    Ok(IndexRecord {
        factor: Word::from(w),
        maximal_power: Word::from(&prefix[best_at..best_at + best_len]),
        index: ratio(best_len, n),
        attained_at: best_at,
        prefix_length: prefix.len(),
    })
}

pub(crate) fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexRow {
    pub length: usize,
    #[serde(serialize_with = "crate::ser::rational")]
    pub index: BigRational,
    pub witness: Word,
    pub position: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexTable {
    pub rows: Vec<IndexRow>,
    /// Running maximum of the row indices.
    #[serde(serialize_with = "crate::ser::rational_vec")]
    pub running_sup: Vec<BigRational>,
    /// Largest index over all lengths (a lower bound on E).
    #[serde(serialize_with = "crate::ser::rational")]
    pub partial_e: BigRational,
    /// Largest index over the upper half of the lengths (a proxy for E*).
    #[serde(serialize_with = "crate::ser::rational")]
    pub partial_e_star: BigRational,
    pub prefix_length: usize,
}

/// Longest run of `prefix[j] == prefix[j + n]`: every factor of length `n`
/// with its maximal power inside the prefix is covered by one such run.
fn max_index_for_length(prefix: &[Letter], n: usize) -> IndexRow {
    let (mut cur, mut best, mut best_end) = (0usize, 0usize, 0usize);
    for j in 0..prefix.len() - n {
        if prefix[j] == prefix[j + n] {
            cur += 1;
            if cur > best {
                best = cur;
                best_end = j + 1;
            }
        } else {
            cur = 0;
        }
    }
    let start = best_end - best;
    IndexRow {
        length: n,
        index: ratio(best + n, n),
        witness: Word::from(&prefix[start..start + n]),
        position: start,
    }
}

pub fn ind_n_table(prefix: &[Letter], max_len: usize) -> Result<IndexTable> {
    if max_len == 0 || 2 * max_len > prefix.len() {
        return Err(Error::InvalidArgument(format!(
            "max_len must be in 1..={}, got {max_len}",
            prefix.len() / 2
        )));
    }
    let rows: Vec<IndexRow> = (1..=max_len)
        .into_par_iter()
        .map(|n| max_index_for_length(prefix, n))
        .collect();
    let mut running_sup = Vec::with_capacity(rows.len());
    for r in &rows {
        let next = match running_sup.last() {
            Some(s) if s >= &r.index => BigRational::clone(s),
            _ => r.index.clone(),
        };
        running_sup.push(next);
    }
    let partial_e = running_sup.last().cloned().expect("nonempty");
    let partial_e_star = rows[max_len / 2..]
        .iter()
        .map(|r| &r.index)
        .max()
        .cloned()
        .expect("nonempty");
    Ok(IndexTable {
        rows,
        running_sup,
        partial_e,
        partial_e_star,
        prefix_length: prefix.len(),
    })
}

impl IndexTable {
    /// Rows `length, numerator, denominator, witness`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("length\tnumerator\tdenominator\twitness\n");
        for r in &self.rows {
            let _ = writeln!(s, "{}\t{}\t{}\t{}", r.length, r.index.numer(), r.index.denom(), r.witness);
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReturnWordSet {
    pub target: Word,
    /// Distinct complete return words in order of first appearance.
    pub complete_returns: Vec<Word>,
    pub left_returns: Vec<Word>,
    pub right_returns: Vec<Word>,
    pub observation_prefix_length: usize,
    /// Start positions of each complete return word in the prefix.
    #[serde(skip)]
    pub positions: Vec<Vec<usize>>,
}

impl ReturnWordSet {
    pub fn complete_set(&self) -> BTreeSet<Word> {
        self.complete_returns.iter().cloned().collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

pub fn return_words(prefix: &[Letter], w: &[Letter]) -> Result<ReturnWordSet> {
    if w.is_empty() {
        return Err(Error::InvalidArgument("return words of the empty word".into()));
    }
    let occ = occurrences(prefix, w);
    if occ.len() < 2 {
        return Err(Error::TooFewOccurrences {
            factor: Word::from(w).to_string(),
            found: occ.len(),
        });
    }
    let n = w.len();
    let mut index: HashMap<&[Letter], usize> = HashMap::new();
    let mut complete = Vec::new();
    let mut positions: Vec<Vec<usize>> = Vec::new();
    for pair in occ.windows(2) {
        let (i, j) = (pair[0], pair[1]);
        let crw = &prefix[i..j + n];
        let k = *index.entry(crw).or_insert_with(|| {
            complete.push(Word::from(crw));
            positions.push(Vec::new());
            complete.len() - 1
        });
        positions[k].push(i);
    }
    let left_returns = complete.iter().map(|c| Word::from(&c[..c.len() - n])).collect();
    let right_returns = complete.iter().map(|c| Word::from(&c[n..])).collect();
    Ok(ReturnWordSet {
        target: Word::from(w),
        complete_returns: complete,
        left_returns,
        right_returns,
        observation_prefix_length: prefix.len(),
        positions,
    })
}

/// Shortest `r` with `w` a prefix of `r^ω`.
pub fn root_of(w: &[Letter]) -> Word {
    Word::from(&w[..smallest_period(w)])
}

/// Distinct cyclic shifts, starting with `w` itself.
pub fn conjugates(w: &[Letter]) -> Vec<Word> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for k in 0..w.len().max(1) {
        let c: Word = w[k..].iter().chain(&w[..k]).copied().collect();
        if seen.insert(c.clone()) {
            out.push(c);
        }
    }
    out
}

pub fn is_primitive_word(w: &[Letter]) -> bool {
    conjugates(w).len() == w.len()
}

/// Whether `v` is a cyclic shift of `w`.
pub fn is_conjugate(v: &[Letter], w: &[Letter]) -> bool {
    if v.len() != w.len() {
        return false;
    }
    if v.is_empty() {
        return true;
    }
    let doubled: Vec<Letter> = w.iter().chain(w).copied().collect();
    !occurrences(&doubled[..doubled.len() - 1], v).is_empty()
}

/// Trie of all factors of length at most `depth`, with the left extensions
/// observed for each of them. The children of a node are its right extensions.
#[derive(Debug, Clone)]
pub struct FactorTrie {
    nodes: Vec<TrieNode>,
    depth: usize,
    prefix_length: usize,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: Vec<(Letter, u32)>,
    left: Vec<Letter>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ObservedFactor {
    pub word: Word,
    pub left_extensions: Vec<Letter>,
    pub right_extensions: Vec<Letter>,
}

impl FactorTrie {
    pub fn build(prefix: &[Letter], depth: usize) -> Self {
        let mut nodes = vec![TrieNode::default()];
        for i in 0..prefix.len() {
            let left = if i > 0 { Some(prefix[i - 1]) } else { None };
            let mut node = 0usize;
            add_left(&mut nodes[0], left);
            for &a in &prefix[i..(i + depth).min(prefix.len())] {
                let next = match nodes[node].children.iter().find(|c| c.0 == a) {
                    Some(&(_, c)) => c as usize,
                    None => {
                        nodes.push(TrieNode::default());
                        let c = nodes.len() - 1;
                        nodes[node].children.push((a, c as u32));
                        c
                    }
                };
                node = next;
                add_left(&mut nodes[node], left);
            }
        }
        FactorTrie {
            nodes,
            depth,
            prefix_length: prefix.len(),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn prefix_length(&self) -> usize {
        self.prefix_length
    }

    /// Number of distinct factors of each length `0..=depth`.
    pub fn complexity(&self) -> Vec<usize> {
        let mut counts = vec![0; self.depth + 1];
        self.walk(|w, _| counts[w.len()] += 1);
        counts
    }

    /// Bispecial factors of length below the trie depth (right extensions of
    /// the deepest level are not recorded).
    pub fn bispecial_factors(&self) -> Vec<ObservedFactor> {
        let mut out = Vec::new();
        self.walk(|w, node| {
            if w.len() < self.depth && node.left.len() >= 2 && node.children.len() >= 2 {
                let mut left = node.left.clone();
                left.sort_unstable();
                let mut right: Vec<Letter> = node.children.iter().map(|c| c.0).collect();
                right.sort_unstable();
                out.push(ObservedFactor {
                    word: Word::from(w),
                    left_extensions: left,
                    right_extensions: right,
                });
            }
        });
        out.sort();
        out
    }

    fn walk(&self, mut visit: impl FnMut(&[Letter], &TrieNode)) {
        let mut path: Vec<Letter> = Vec::new();
        let mut stack: Vec<(usize, usize, Letter)> = vec![(0, 0, 0)];
        while let Some((node, level, letter)) = stack.pop() {
            if level > 0 {
                path.truncate(level - 1);
                path.push(letter);
            }
            visit(&path, &self.nodes[node]);
            for &(a, c) in self.nodes[node].children.iter().rev() {
                stack.push((c as usize, level + 1, a));
            }
        }
    }
}

fn add_left(node: &mut TrieNode, left: Option<Letter>) {
    if let Some(a) = left {
        if !node.left.contains(&a) {
            node.left.push(a);
        }
    }
}
