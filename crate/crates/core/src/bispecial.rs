//! Bispecial factors of `u_β` generated symbolically: the parameters `t` and
//! `z`, the words `z^(n)`, the f-image map and its closed form, the type I
//! chains, and the classification of return words of `z^(n)`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor_oracle::{return_words, FactorTrie, ObservedFactor};
use crate::numeration::RenyiExpansion;
use crate::substitution::{ParikhVector, Substitution};
use crate::word::{occurrences, Letter, Word};

fn trailing_zeros(seq: impl DoubleEndedIterator<Item = u64>) -> usize {
    seq.rev().take_while(|&t| t == 0).count()
}

fn require_bispecial_domain(e: &RenyiExpansion) -> Result<()> {
    if e.is_simple() {
        return Err(Error::Unsupported(format!(
            "{e} is simple; bispecial factors are handled for non-simple expansions only"
        )));
    }
    if e.t1() < 2 {
        return Err(Error::Unsupported(format!("{e} has t_1 < 2")));
    }
    Ok(())
}

/// `t = min(t_m, t_{m+p})` and the nonzero left extension `z` of `0^t m`.
pub fn t_and_z(e: &RenyiExpansion) -> Result<(u64, Letter)> {
    require_bispecial_domain(e)?;
    let (m, p) = (e.m(), e.p());
    let (tm, tmp) = (e.coeff(m), e.coeff(m + p));
    let zeros = if tm > tmp {
        trailing_zeros((m + 1..=m + p).chain(m + 1..m + p).map(|i| e.coeff(i)))
    } else {
        trailing_zeros((1..m).map(|i| e.coeff(i)))
    };
    Ok((tm.min(tmp), (1 + zeros) as Letter))
}

/// Left extensions of a nonzero letter `a`, read off the coefficients.
pub fn left_extensions_of_letter(e: &RenyiExpansion, a: Letter) -> Result<BTreeSet<Letter>> {
    require_bispecial_domain(e)?;
    let a = a as usize;
    let (m, p) = (e.m(), e.p());
    if a == 0 {
        return Err(Error::InvalidArgument(
            "every letter is a left extension of 0".into(),
        ));
    }
    if a >= m + p {
        return Err(Error::InvalidArgument(format!("letter {a} outside the alphabet")));
    }
    let mut out = BTreeSet::new();
    out.insert(trailing_zeros((1..=a).map(|i| e.coeff(i))) as Letter);
    if a >= m {
        let c = trailing_zeros((m + 1..=m + p).chain(m + 1..=a).map(|i| e.coeff(i)));
        out.insert(c as Letter);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ZBranch {
    Empty,
    Telescoped,
    Single,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZWord {
    pub n: usize,
    pub branch: ZBranch,
    #[serde(serialize_with = "crate::ser::biguint")]
    pub length: BigUint,
    /// `None` when the word exceeds the materialization cap.
    pub word: Option<Word>,
    #[serde(skip)]
    pub parikh: ParikhVector,
}

fn zero_t_m(s: &Substitution, t: u64) -> Vec<Letter> {
    let mut w = vec![0; t as usize];
    w.push(s.m() as Letter);
    w
}

/// Exponents `j` such that `z^(n)` is the concatenation of the `φ^j(0^t m)`.
fn z_exponents(s: &Substitution, z: Letter, n: usize) -> (ZBranch, Vec<usize>) {
    let (m, p) = (s.m(), s.p());
    if n < m {
        (ZBranch::Empty, Vec::new())
    } else if (z as usize).is_multiple_of(p) {
        let (l, k) = (n / m, n % m);
        (ZBranch::Telescoped, (0..l).map(|i| k + i * m).collect())
    } else {
        (ZBranch::Single, vec![n - m])
    }
}

pub fn z_word(s: &Substitution, n: usize, cap: usize) -> Result<ZWord> {
    let (t, z) = t_and_z(s.expansion())?;
    let base = zero_t_m(s, t);
    let (branch, exps) = z_exponents(s, z, n);
    let d = s.alphabet_size();
    let mut parikh = ParikhVector::of(&[], d);
    for &j in &exps {
        let piece = s.parikh_n(&base, j as u64);
        for (acc, c) in parikh.counts.iter_mut().zip(piece.counts) {
            *acc += c;
        }
    }
    let length = parikh.len();
    let word = if length <= BigUint::from(cap) {
        let mut w = Vec::new();
        for &j in &exps {
            s.stream_n(&base, j, |a| {
                w.push(a);
                true
            });
        }
        Some(Word::from(w))
    } else {
        None
    };
    Ok(ZWord {
        n,
        branch,
        length,
        word,
        parikh,
    })
}

/// A factor `v` with `a v c` and `b v d` both in the language.
///
/// The pairs are kept so that `t_{c⊕1} t_{c⊕2} ⋯ ⪯ t_{d⊕1} t_{d⊕2} ⋯`.
#[derive(Debug, Clone, Serialize)]
pub struct BispecialFactor {
    pub word: Option<Word>,
    #[serde(serialize_with = "crate::ser::biguint")]
    pub length: BigUint,
    pub left_pair: (Letter, Letter),
    pub right_pair: (Letter, Letter),
    pub seed: Word,
    pub iterations: usize,
    #[serde(skip)]
    pub parikh: ParikhVector,
}

impl BispecialFactor {
    /// An `(a−c, b−d)`-bispecial factor, with the pairs swapped jointly if needed.
    pub fn new(
        e: &RenyiExpansion,
        word: Word,
        (a, c): (Letter, Letter),
        (b, d): (Letter, Letter),
    ) -> Self {
        let parikh = ParikhVector::of(&word, e.alphabet_size());
        let (left_pair, right_pair) = ordered_pairs(e, (a, c), (b, d));
        BispecialFactor {
            length: BigUint::from(word.len()),
            seed: word.clone(),
            word: Some(word),
            left_pair,
            right_pair,
            iterations: 0,
            parikh,
        }
    }

    /// `(a, c, b, d)`.
    pub fn extension_key(&self) -> (Letter, Letter, Letter, Letter) {
        (self.left_pair.0, self.right_pair.0, self.left_pair.1, self.right_pair.1)
    }
}

fn ordered_pairs(
    e: &RenyiExpansion,
    (a, c): (Letter, Letter),
    (b, d): (Letter, Letter),
) -> ((Letter, Letter), (Letter, Letter)) {
    let swap = match e.compare_tails(c as usize, d as usize) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (a, c) > (b, d),
    };
    if swap {
        ((b, a), (d, c))
    } else {
        ((a, b), (c, d))
    }
}

fn common_suffix_len(x: &[Letter], y: &[Letter]) -> usize {
    x.iter().rev().zip(y.iter().rev()).take_while(|(p, q)| p == q).count()
}

fn common_prefix_len(x: &[Letter], y: &[Letter]) -> usize {
    x.iter().zip(y).take_while(|(p, q)| p == q).count()
}

struct FStep {
    left_affix: Vec<Letter>,
    right_affix: Vec<Letter>,
    left_pair: (Letter, Letter),
    right_pair: (Letter, Letter),
}

fn f_step(s: &Substitution, z: Letter, (a, b): (Letter, Letter), (c, d): (Letter, Letter)) -> FStep {
    let (pa, pb) = (s.image(a), s.image(b));
    let ls = common_suffix_len(pa, pb);
    let left_of = |img: &Word| img[..img.len() - ls].last().copied().unwrap_or(z);
    let (pc, pd) = (s.image(c), s.image(d));
    let lp = common_prefix_len(pc, pd);
    let right_of = |img: &Word| img[lp..].first().copied().expect("images of distinct letters differ");
    FStep {
        left_affix: pa[pa.len() - ls..].to_vec(),
        right_affix: pc[..lp].to_vec(),
        left_pair: (left_of(pa), left_of(pb)),
        right_pair: (right_of(pc), right_of(pd)),
    }
}

/// `f(v) = f_L(a, b) φ(v) f_R(c, d)` with the updated extension pairs.
pub fn f_image(v: &BispecialFactor, s: &Substitution, cap: usize) -> Result<BispecialFactor> {
    let e = s.expansion();
    let (_, z) = t_and_z(e)?;
    let step = f_step(s, z, v.left_pair, v.right_pair);
    let d = s.alphabet_size();
    let mut parikh = ParikhVector::of(&step.left_affix, d)
        .counts
        .into_iter()
        .zip(v.parikh.times(&s.incidence_matrix().to_big()).counts)
        .zip(ParikhVector::of(&step.right_affix, d).counts)
        .map(|((x, y), w)| x + y + w)
        .collect::<Vec<_>>();
    let length: BigUint = parikh.iter().sum();
    let word = match &v.word {
        Some(w) if length <= BigUint::from(cap) => {
            let mut out = step.left_affix.clone();
            out.extend_from_slice(&s.apply(w));
            out.extend_from_slice(&step.right_affix);
            Some(Word::from(out))
        }
        _ => None,
    };
    let ((a, b), (c, dd)) = (step.left_pair, step.right_pair);
    let (left_pair, right_pair) = ordered_pairs(e, (a, c), (b, dd));
    Ok(BispecialFactor {
        word,
        length,
        left_pair,
        right_pair,
        seed: v.seed.clone(),
        iterations: v.iterations + 1,
        parikh: ParikhVector {
            counts: std::mem::take(&mut parikh),
        },
    })
}

/// `f^n(v) = u_1 φ^n(v) u_2` with `u_2 = φ^n(c) (c⊕n)^{-1}` and
/// `u_1 = z^(n + min(a, b))` when `p | a − b`, else empty.
pub fn fn_image_closed_form(
    seed: &BispecialFactor,
    s: &Substitution,
    n: usize,
    cap: usize,
) -> Result<BispecialFactor> {
    let e = s.expansion();
    let (_, z) = t_and_z(e)?;
    let seed_word = seed
        .word
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("closed form needs a materialized seed".into()))?;
    let (a, b) = seed.left_pair;
    let (c, _) = seed.right_pair;
    let u1 = if (a as i64 - b as i64).rem_euclid(s.p() as i64) == 0 {
        Some(z_word(s, n + a.min(b) as usize, cap)?)
    } else {
        None
    };
    let d = s.alphabet_size();
    let big = s.incidence_matrix().to_big().pow(n as u64);
    let mut counts: Vec<BigUint> = seed.parikh.times(&big).counts;
    let c_image = ParikhVector::of(&[c], d).times(&big);
    for (acc, x) in counts.iter_mut().zip(c_image.counts) {
        *acc += x;
    }
    counts[s.oplus(c as usize, n) as usize] -= 1u32;
    if let Some(u) = &u1 {
        for (acc, x) in counts.iter_mut().zip(&u.parikh.counts) {
            *acc += x;
        }
    }
    let length: BigUint = counts.iter().sum();
    let word = if length <= BigUint::from(cap) {
        let mut out = u1.as_ref().map(|u| u.word.clone().expect("below cap").into_letters()).unwrap_or_default();
        s.stream_n(seed_word, n, |x| {
            out.push(x);
            true
        });
        let c_len = s.image_length(&[c], n as u64).to_usize().expect("below cap");
        out.extend_from_slice(&s.image_prefix(&[c], n, c_len - 1));
        Some(Word::from(out))
    } else {
        None
    };
    let mut pairs = (seed.left_pair, seed.right_pair);
    for _ in 0..n {
        let step = f_step(s, z, pairs.0, pairs.1);
        pairs = ordered_pairs(e, (step.left_pair.0, step.right_pair.0), (step.left_pair.1, step.right_pair.1));
    }
    Ok(BispecialFactor {
        word,
        length,
        left_pair: pairs.0,
        right_pair: pairs.1,
        seed: seed.seed.clone(),
        iterations: seed.iterations + n,
        parikh: ParikhVector { counts },
    })
}

/// All extension pairs of the initial bispecial factors `0^k`, `0 ≤ k < t_1`,
/// observed in `prefix`.
pub fn initial_bispecials(s: &Substitution, prefix: &[Letter]) -> Result<Vec<BispecialFactor>> {
    let e = s.expansion();
    require_bispecial_domain(e)?;
    let required = s
        .image_length(&[0], s.alphabet_size() as u64)
        .to_usize()
        .and_then(|l| l.checked_mul(10))
        .unwrap_or(usize::MAX);
    if prefix.len() < required {
        return Err(Error::PrefixTooShort {
            required,
            actual: prefix.len(),
        });
    }
    let mut out = Vec::new();
    for k in 0..e.t1() as usize {
        let zeros = vec![0 as Letter; k];
        let mut contexts = BTreeSet::new();
        for i in 1..prefix.len().saturating_sub(k + 1) {
            if prefix[i..i + k].iter().all(|&x| x == 0) {
                contexts.insert((prefix[i - 1], prefix[i + k]));
            }
        }
        let contexts: Vec<_> = contexts.into_iter().collect();
        let mut seen = HashSet::new();
        for (i, &(a, c)) in contexts.iter().enumerate() {
            for &(b, d) in &contexts[i + 1..] {
                if a == b || c == d {
                    continue;
                }
                let bs = BispecialFactor::new(e, Word::from(zeros.clone()), (a, c), (b, d));
                if seen.insert(bs.extension_key()) {
                    out.push(bs);
                }
            }
        }
    }
    Ok(out)
}

/// Materialized words of every chain `v, f(v), f²(v), …` started from the
/// given seeds, up to length `max_len`.
pub fn chain_words(s: &Substitution, seeds: &[BispecialFactor], max_len: usize) -> Result<HashSet<Word>> {
    let mut words = HashSet::new();
    for seed in seeds {
        let mut states = HashSet::new();
        let mut v = seed.clone();
        loop {
            let w = match &v.word {
                Some(w) if w.len() <= max_len => w.clone(),
                _ => break,
            };
            if !states.insert((w.clone(), v.extension_key())) {
                break;
            }
            words.insert(w);
            v = f_image(&v, s, max_len + 1)?;
        }
    }
    Ok(words)
}

/// Oracle bispecial factors of length at most `max_len` in `prefix` that no
/// chain from the initial factors produces.
pub fn uncovered_bispecials(
    s: &Substitution,
    prefix: &[Letter],
    max_len: usize,
) -> Result<(usize, Vec<ObservedFactor>)> {
    let seeds = initial_bispecials(s, prefix)?;
    let words = chain_words(s, &seeds, max_len)?;
    let observed = FactorTrie::build(prefix, max_len + 1).bispecial_factors();
    let total = observed.len();
    let misses = observed.into_iter().filter(|f| !words.contains(&f.word)).collect();
    Ok((total, misses))
}

/// `w_I^(n) = z^(n) φ^n(0) (z^(n))^{-1}`, a conjugate of `φ^n(0)`.
pub fn w_i_n(s: &Substitution, n: usize, cap: usize) -> Result<Word> {
    let zw = z_word(s, n, cap)?;
    let image = s.apply_n(&[0], n, cap)?;
    let z = zw.word.ok_or(Error::MemoryCap {
        required: zw.length.clone(),
        cap,
    })?;
    if !image.ends_with(&z) {
        return Err(Error::InvalidArgument(format!("z^({n}) is not a suffix of φ^{n}(0)")));
    }
    Ok(Word::concat(&[&z, &image[..image.len() - z.len()]]))
}

/// The `(0−1, p−0)`-bispecial factor `0^{t_1 − 1}`.
pub fn type_one_seed(s: &Substitution) -> Result<BispecialFactor> {
    let e = s.expansion();
    require_bispecial_domain(e)?;
    let zeros = Word::from(vec![0; e.t1() as usize - 1]);
    Ok(BispecialFactor::new(e, zeros, (0, 1), (s.p() as Letter, 0)))
}

/// `v_I^(n)`, the `f^n`-image of the type I seed.
pub fn v_i_n(s: &Substitution, n: usize, cap: usize) -> Result<BispecialFactor> {
    fn_image_closed_form(&type_one_seed(s)?, s, n, cap)
}

/// `z^(n) φ^n(0^{t_1} 1)` without its last letter: the maximal power of `w_I^(n)`.
pub fn type_one_power(s: &Substitution, n: usize, cap: usize) -> Result<Word> {
    let e = s.expansion();
    let zw = z_word(s, n, cap)?;
    let mut seed = vec![0; e.t1() as usize];
    seed.push(1);
    let mut out = zw
        .word
        .ok_or(Error::MemoryCap {
            required: zw.length.clone(),
            cap,
        })?
        .into_letters();
    let body = s.apply_n(&seed, n, cap)?;
    out.extend_from_slice(&body[..body.len() - 1]);
    Ok(Word::from(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ReturnType {
    A,
    B,
    C,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReturnTypeReport {
    pub n: usize,
    pub target: Word,
    pub type_a: Vec<Word>,
    pub type_b: Vec<Word>,
    pub type_c: Vec<Word>,
    pub undetermined: Vec<Word>,
    pub observation_prefix_length: usize,
}

impl ReturnTypeReport {
    pub fn of_type(&self, t: ReturnType) -> &[Word] {
        match t {
            ReturnType::A => &self.type_a,
            ReturnType::B => &self.type_b,
            ReturnType::C => &self.type_c,
        }
    }
}

/// Inverse image of `x` under `φ^k`, if `x` is a concatenation of `φ^k`-images.
pub fn desubstitute(s: &Substitution, x: &[Letter], k: usize) -> Option<Word> {
    let mut cur = x.to_vec();
    for _ in 0..k {
        let mut out = Vec::new();
        let mut start = 0;
        for (i, &a) in cur.iter().enumerate() {
            if a != 0 {
                let block = &cur[start..=i];
                let pre = s.images().iter().position(|img| img.letters() == block)?;
                out.push(pre as Letter);
                start = i + 1;
            }
        }
        if start != cur.len() {
            return None;
        }
        cur = out;
    }
    Some(Word::from(cur))
}

/// Splits the complete return words of `z^(n)` observed in `prefix` into the
/// three types.
///
/// A return word `z^(n) x` is traced back to the return word `0^t m x'` of
/// `0^t m` with `x = φ^{n−m}(x')`. That one is of type A when it ends with
/// `φ^m(0)`, of type B when `x' = φ^m(w y)` with `y` a positive multiple of
/// `p`, `w` free of 0 and of multiples of `p`, and `0 w y` a factor, and of
/// type C when `x' = φ^p(w' m)` for a return word `0^t m w' m` of type B or C.
/// A word meeting both the B and the C description is reported as C.
/// Anything else is reported as undetermined.
pub fn classify_returns_zn(s: &Substitution, n: usize, prefix: &[Letter]) -> Result<ReturnTypeReport> {
    let m = s.m();
    if n < m {
        return Err(Error::InvalidArgument(format!("n = {n} is below m = {m}")));
    }
    let cap = prefix.len();
    let zw = z_word(s, n, cap)?;
    let target = zw.word.ok_or(Error::PrefixTooShort {
        required: zw.length.to_usize().unwrap_or(usize::MAX),
        actual: prefix.len(),
    })?;
    let full = return_words(prefix, &target)?;
    let half = return_words(&prefix[..prefix.len() / 2], &target)?;
    if full.complete_set() != half.complete_set() {
        return Err(Error::UnstableReturnSet(target.to_string()));
    }
    let (t, _) = t_and_z(s.expansion())?;
    let base = zero_t_m(s, t);
    let classifier = BaseClassifier {
        s,
        prefix,
        base: &base,
        image: s.apply_n(&[0], m, cap)?,
    };
    let mut report = ReturnTypeReport {
        n,
        target: target.clone(),
        type_a: Vec::new(),
        type_b: Vec::new(),
        type_c: Vec::new(),
        undetermined: Vec::new(),
        observation_prefix_length: prefix.len(),
    };
    for crw in &full.complete_returns {
        let kind = desubstitute(s, &crw[target.len()..], n - m).and_then(|x| {
            let lifted = Word::concat(&[&base, &x]);
            classifier.classify(&lifted, 0)
        });
        match kind {
            Some(ReturnType::A) => report.type_a.push(crw.clone()),
            Some(ReturnType::B) => report.type_b.push(crw.clone()),
            Some(ReturnType::C) => report.type_c.push(crw.clone()),
            None => report.undetermined.push(crw.clone()),
        }
    }
    Ok(report)
}

struct BaseClassifier<'a> {
    s: &'a Substitution,
    prefix: &'a [Letter],
    base: &'a [Letter],
    /// `φ^m(0)`
    image: Word,
}

impl BaseClassifier<'_> {
    /// Type of a complete return word `v` of `0^t m`.
    fn classify(&self, v: &[Letter], depth: usize) -> Option<ReturnType> {
        if depth > 64 || occurrences(v, self.base).len() != 2 {
            return None;
        }
        if v.ends_with(&self.image) {
            return Some(ReturnType::A);
        }
        let (m, p) = (self.s.m(), self.s.p());
        let x = &v[self.base.len()..];
        if let Some(wm) = desubstitute(self.s, x, p) {
            if wm.last() == Some(&(m as Letter)) && wm.len() < x.len() {
                let inner = Word::concat(&[self.base, &wm]);
                if matches!(self.classify(&inner, depth + 1), Some(ReturnType::B | ReturnType::C)) {
                    return Some(ReturnType::C);
                }
            }
        }
        if let Some(wy) = desubstitute(self.s, x, m) {
            if let Some((&y, w)) = wy.split_last() {
                let y = y as usize;
                let w_ok = w.iter().all(|&a| a != 0 && !(a as usize).is_multiple_of(p));
                if y >= p && y.is_multiple_of(p) && w_ok {
                    let mut probe = vec![0];
                    probe.extend_from_slice(&wy);
                    if !occurrences(self.prefix, &probe).is_empty() {
                        return Some(ReturnType::B);
                    }
                }
            }
        }
        None
    }
}

/// Whether `z^(n)` is a suffix of `φ^n(0)`, checked by streaming the tail.
pub fn z_is_suffix_of_image(s: &Substitution, n: usize, cap: usize) -> Result<bool> {
    let zw = z_word(s, n, cap)?;
    let z = zw.word.ok_or(Error::MemoryCap {
        required: zw.length.clone(),
        cap,
    })?;
    if BigUint::from(z.len()) > s.image_length(&[0], n as u64) {
        return Ok(false);
    }
    Ok(s.image_suffix(&[0], n, z.len()) == z)
}

/// Positions where `a v c` occurs, used to confirm an extension pair.
pub fn extension_occurs(prefix: &[Letter], a: Letter, v: &[Letter], c: Letter) -> bool {
    let mut w = Vec::with_capacity(v.len() + 2);
    w.push(a);
    w.extend_from_slice(v);
    w.push(c);
    !occurrences(prefix, &w).is_empty()
}

impl ZWord {
    pub fn is_empty(&self) -> bool {
        self.length.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor_oracle::{conjugates, extensions, index_of, ratio};
    use crate::substitution::build_substitution;

    fn subst(s: &str) -> Substitution {
        build_substitution(&s.parse().unwrap())
    }

    const CAP: usize = 1 << 22;

    #[test]
    fn t_and_z_values() {
        let tz = |s: &str| t_and_z(&s.parse().unwrap()).unwrap();
        assert_eq!(tz("22(01)"), (1, 2));
        assert_eq!(tz("2000(1)").0, 0);
        assert_eq!(tz("21(1200)"), (0, 2));
        assert_eq!(tz("221(12)"), (1, 1));
        assert!(t_and_z(&"21".parse().unwrap()).is_err());
        assert!(t_and_z(&"11(01)".parse().unwrap()).is_err());
    }

    #[test]
    fn z_matches_the_left_extension_of_zero_t_m() {
        for e in ["221(12)", "2000(1)", "22(01)", "21(1200)", "33(02)", "41(2)", "302(110)", "4000(31)"] {
            let s = subst(e);
            let (t, z) = t_and_z(s.expansion()).unwrap();
            let u = s.fixed_point_prefix(200_000);
            let ext = extensions(&u, &zero_t_m(&s, t)).unwrap();
            assert_eq!(ext.left_extensions, [0, z].into(), "{e}");
        }
    }

    #[test]
    fn letter_left_extensions_match_the_oracle() {
        for e in ["221(12)", "2000(1)", "22(01)", "21(1200)", "33(02)", "302(110)", "4000(31)"] {
            let s = subst(e);
            let u = s.fixed_point_prefix(200_000);
            for a in 1..s.alphabet_size() as Letter {
                let predicted = left_extensions_of_letter(s.expansion(), a).unwrap();
                let seen = extensions(&u, &[a]).unwrap().left_extensions;
                assert_eq!(predicted, seen, "{e}, letter {a}");
            }
        }
        let e = "22(01)".parse().unwrap();
        assert_eq!(left_extensions_of_letter(&e, 2).unwrap(), [0].into());
        assert!(left_extensions_of_letter(&e, 0).is_err());
    }

    #[test]
    fn z_words_from_examples() {
        let s = subst("2(1)");
        let z3 = z_word(&s, 3, CAP).unwrap();
        let expected = Word::concat(&[
            &[0, 1],
            &s.apply(&[0, 1]),
            &s.apply_n(&[0, 1], 2, CAP).unwrap(),
        ]);
        assert_eq!(z3.word.unwrap(), expected);
        assert_eq!(z3.branch, ZBranch::Telescoped);
        let s = subst("33(02)");
        assert_eq!(z_word(&s, 2, CAP).unwrap().word.unwrap().to_string(), "002");
        let s = subst("22(01)");
        assert_eq!(z_word(&s, 4, CAP).unwrap().word.unwrap().to_string(), "0200100100202");
        assert_eq!(z_word(&s, 1, CAP).unwrap().branch, ZBranch::Empty);
        assert_eq!(z_word(&subst("21(1200)"), 5, CAP).unwrap().branch, ZBranch::Single);
    }

    #[test]
    fn z_is_a_suffix_of_the_image_of_zero() {
        for e in ["221(12)", "2000(1)", "22(01)", "21(1200)", "33(02)", "2(1)", "4000(31)"] {
            let s = subst(e);
            for n in (0..14).filter(|&n| s.image_length(&[0], n as u64) <= BigUint::from(CAP)) {
                assert!(z_is_suffix_of_image(&s, n, CAP).unwrap(), "{e}, n = {n}");
            }
        }
    }

    #[test]
    fn f_image_of_the_three_three_example() {
        let s = subst("33(02)");
        let e = s.expansion();
        let seed = BispecialFactor::new(e, Word::from(vec![0, 0]), (0, 1), (2, 0));
        let f2 = f_image(&f_image(&seed, &s, CAP).unwrap(), &s, CAP).unwrap();
        let phi2 = |w: &[Letter]| s.apply_n(w, 2, CAP).unwrap();
        let p1 = phi2(&[1]);
        let expected = Word::concat(&[&[0, 0, 2], &phi2(&[0]), &phi2(&[0]), &p1[..p1.len() - 1]]);
        assert_eq!(f2.word.unwrap(), expected);
        assert_eq!(f2.left_pair, (0, 2));
        assert_eq!(f2.right_pair, (3, 0));
    }

    #[test]
    fn empty_factor_maps_to_empty_factor() {
        let s = subst("2000(1)");
        // φ(1) = 2, φ(2) = 3: no common affixes
        let v = BispecialFactor::new(s.expansion(), Word::new(), (1, 2), (2, 1));
        let f = f_image(&v, &s, CAP).unwrap();
        assert_eq!(f.word.unwrap(), Word::new());
        assert_eq!(f.length, BigUint::zero());
    }

    #[test]
    fn iterated_f_agrees_with_closed_form() {
        for e in ["221(12)", "2000(1)", "22(01)", "21(1200)", "33(02)", "41(2)", "302(110)"] {
            let s = subst(e);
            let u = s.fixed_point_prefix(200_000);
            for seed in initial_bispecials(&s, &u).unwrap() {
                let mut v = seed.clone();
                for n in 1..=8 {
                    v = f_image(&v, &s, CAP).unwrap();
                    let closed = fn_image_closed_form(&seed, &s, n, CAP).unwrap();
                    assert_eq!(v.word, closed.word, "{e}, seed {:?}, n = {n}", seed.extension_key());
                    assert_eq!(v.length, closed.length);
                    assert_eq!(v.extension_key(), closed.extension_key());
                }
            }
        }
    }

    #[test]
    fn f_images_stay_bispecial() {
        for e in ["221(12)", "2000(1)", "22(01)"] {
            let s = subst(e);
            let u = s.fixed_point_prefix(300_000);
            for seed in initial_bispecials(&s, &u).unwrap() {
                let mut v = seed;
                for _ in 0..5 {
                    let w = v.word.clone().unwrap();
                    let (a, b) = v.left_pair;
                    let (c, d) = v.right_pair;
                    assert!(extension_occurs(&u, a, &w, c) && extension_occurs(&u, b, &w, d));
                    v = f_image(&v, &s, CAP).unwrap();
                }
            }
        }
    }

    #[test]
    fn initial_factors_need_a_long_prefix() {
        let s = subst("221(12)");
        let u = s.fixed_point_prefix(100);
        assert!(matches!(initial_bispecials(&s, &u), Err(Error::PrefixTooShort { .. })));
        let u = s.fixed_point_prefix(100_000);
        let init = initial_bispecials(&s, &u).unwrap();
        assert!(init.iter().all(|b| b.word.as_ref().unwrap().iter().all(|&x| x == 0)));
        assert!(init.iter().any(|b| b.word.as_ref().unwrap().len() == 1));
        let s = subst("33(02)");
        let u = s.fixed_point_prefix(100_000);
        let init = initial_bispecials(&s, &u).unwrap();
        assert!(init.iter().any(|b| b.seed.len() == 2 && b.extension_key() == (0, 1, 2, 0)));
    }

    #[test]
    fn type_one_words() {
        for e in ["221(12)", "2000(1)", "22(01)", "21(1200)", "33(02)"] {
            let s = subst(e);
            let u = s.fixed_point_prefix(1_000_000);
            assert_eq!(w_i_n(&s, 0, CAP).unwrap(), Word::from(vec![0]));
            for n in (0..=12).filter(|&n| s.image_length(&[0], n as u64) <= BigUint::from(CAP / 8)) {
                let w = w_i_n(&s, n, CAP).unwrap();
                let img = s.apply_n(&[0], n, CAP).unwrap();
                assert_eq!(w.len(), img.len());
                if n <= 6 {
                    assert!(conjugates(&img).contains(&w), "{e}, n = {n}");
                }
                let v = v_i_n(&s, n, CAP).unwrap().word.unwrap();
                let power = type_one_power(&s, n, CAP).unwrap();
                assert!(power.starts_with(&w) && power.starts_with(&v));
                if n <= 5 && power.len() < 100_000 {
                    assert!(!occurrences(&u, &power).is_empty(), "{e}, n = {n}");
                    let rec = index_of(&u, &w).unwrap();
                    assert_eq!(rec.index, ratio(power.len(), w.len()), "{e}, n = {n}");
                }
            }
        }
        let s = subst("21(1200)");
        for n in 2..8 {
            assert_eq!(
                w_i_n(&s, n, CAP).unwrap(),
                s.apply_n(&[2, 0, 0, 1, 0, 0, 1, 0], n - 2, CAP).unwrap()
            );
        }
    }

    fn words(v: &[Word]) -> BTreeSet<String> {
        v.iter().map(|w| w.to_string()).collect()
    }

    fn set(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn return_types_of_zero_three() {
        let s = subst("221(12)");
        let u = s.fixed_point_prefix(100_000);
        let r = classify_returns_zn(&s, 3, &u).unwrap();
        assert_eq!(r.target.to_string(), "03");
        assert_eq!(
            words(&r.type_a),
            set(&[
                "0300100100200100100200100103",
                "030010010020010010400100100200100100200100103",
                "030010010020010010020010400100100200100100200100103",
            ])
        );
        assert_eq!(words(&r.type_b), set(&["03001001002001003", "03001001002001001002001003"]));
        assert!(r.type_c.is_empty() && r.undetermined.is_empty());
    }

    #[test]
    fn return_types_of_four() {
        let s = subst("2000(1)");
        let u = s.fixed_point_prefix(200_000);
        let r = classify_returns_zn(&s, 4, &u).unwrap();
        assert_eq!(words(&r.type_a), set(&["40010012001001230010012001001234"]));
        assert_eq!(words(&r.type_b), set(&["404"]));
        assert_eq!(
            words(&r.type_c),
            set(&["400104", "4001001200104", "4001001200100123001001200104"])
        );
        assert!(r.undetermined.is_empty());
    }

    #[test]
    fn return_types_partition_the_set() {
        for e in ["22(01)", "33(02)", "21(1200)", "302(110)", "2(1)"] {
            let s = subst(e);
            let u = s.fixed_point_prefix(400_000);
            for n in s.m()..s.m() + 3 {
                let r = classify_returns_zn(&s, n, &u).unwrap();
                let all = return_words(&u, &r.target).unwrap().complete_set();
                let total = r.type_a.len() + r.type_b.len() + r.type_c.len() + r.undetermined.len();
                assert_eq!(total, all.len(), "{e}, n = {n}");
                assert!(!r.type_a.is_empty(), "{e}, n = {n}");
            }
        }
    }

    #[test]
    fn every_observed_bispecial_is_generated() {
        for e in ["221(12)", "2000(1)", "22(01)", "21(1200)", "33(02)"] {
            let s = subst(e);
            let u = s.fixed_point_prefix(200_000);
            let (total, misses) = uncovered_bispecials(&s, &u, 30).unwrap();
            assert!(total > 0);
            assert!(misses.is_empty(), "{e}: {:?}", misses.iter().map(|m| m.word.to_string()).collect::<Vec<_>>());
        }
    }
}
