//! The canonical substitution of a Parry number, its incidence matrix and
//! streamed powers.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeration::RenyiExpansion;
use crate::word::{Letter, Word};

/// `k ⊕ l` on the alphabet `0..m+p`.
///
/// For a simple expansion (`p = 0`) the sum must stay below `m`.
pub fn oplus(k: usize, l: usize, m: usize, p: usize) -> Letter {
    let s = k + l;
    if s < m + p {
        s as Letter
    } else {
        assert!(p > 0, "k ⊕ l leaves the alphabet of a simple substitution");
        (m + (s - m) % p) as Letter
    }
}

/// `t_{k⊕l}`, i.e. the coefficient at index `k + l` of the infinite sequence.
pub fn t_oplus(k: usize, l: usize, e: &RenyiExpansion) -> Result<u64> {
    if k + l == 0 {
        return Err(Error::InvalidArgument("t_{k⊕l} needs k + l > 0".into()));
    }
    Ok(e.coeff(k + l))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParikhVector {
    pub counts: Vec<BigUint>,
}

impl ParikhVector {
    pub fn of(w: &[Letter], alphabet: usize) -> Self {
        let mut counts = vec![BigUint::zero(); alphabet];
        for &a in w {
            counts[a as usize] += 1u32;
        }
        ParikhVector { counts }
    }

    /// `|w| = Σ counts`.
    pub fn len(&self) -> BigUint {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|c| c.is_zero())
    }

    /// Row vector times matrix.
    pub fn times(&self, m: &BigMatrix) -> ParikhVector {
        let d = self.counts.len();
        let counts = (0..d)
            .map(|b| (0..d).map(|a| &self.counts[a] * &m.0[a][b]).sum())
            .collect();
        ParikhVector { counts }
    }
}

/// Square matrix over arbitrary-precision naturals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigMatrix(pub Vec<Vec<BigUint>>);

impl BigMatrix {
    pub fn identity(d: usize) -> Self {
        BigMatrix(
            (0..d)
                .map(|i| (0..d).map(|j| BigUint::from((i == j) as u8)).collect())
                .collect(),
        )
    }

    pub fn mul(&self, other: &BigMatrix) -> BigMatrix {
        let d = self.0.len();
        BigMatrix(
            (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| (0..d).map(|k| &self.0[i][k] * &other.0[k][j]).sum())
                        .collect()
                })
                .collect(),
        )
    }

    pub fn pow(&self, mut n: u64) -> BigMatrix {
        let mut base = self.clone();
        let mut acc = BigMatrix::identity(self.0.len());
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }
}

/// `M_{a,b} = |φ(a)|_b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IncidenceMatrix {
    pub entries: Vec<Vec<u64>>,
}

impl IncidenceMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn to_big(&self) -> BigMatrix {
        BigMatrix(
            self.entries
                .iter()
                .map(|r| r.iter().map(|&x| BigUint::from(x)).collect())
                .collect(),
        )
    }

    /// Coefficients of `det(xI − M)`, constant term first (Faddeev–LeVerrier).
    pub fn characteristic_polynomial(&self) -> Vec<BigInt> {
        let n = self.size();
        let a: Vec<Vec<BigInt>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let mut c = vec![BigInt::zero(); n + 1];
        c[n] = BigInt::one();
        let mut mk = vec![vec![BigInt::zero(); n]; n];
        for k in 1..=n {
            // M_k = A M_{k−1} + c_{n−k+1} I
            let mut next = vec![vec![BigInt::zero(); n]; n];
            for i in 0..n {
                for j in 0..n {
                    let mut s = BigInt::zero();
                    for l in 0..n {
                        if !a[i][l].is_zero() {
                            s += &a[i][l] * &mk[l][j];
                        }
                    }
                    if i == j {
                        s += &c[n - k + 1];
                    }
                    next[i][j] = s;
                }
            }
            mk = next;
            let mut trace = BigInt::zero();
            for i in 0..n {
                for l in 0..n {
                    trace += &a[i][l] * &mk[l][i];
                }
            }
            c[n - k] = -trace / BigInt::from(k);
        }
        c
    }

    /// Some power `M^k` with `k ≤ (d−1)² + 1` is entrywise positive.
    pub fn is_primitive(&self) -> bool {
        let d = self.size();
        let b: Vec<Vec<bool>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|&x| x > 0).collect())
            .collect();
        let mut power = b.clone();
        for _ in 0..((d - 1) * (d - 1) + 1) {
            if power.iter().all(|r| r.iter().all(|&x| x)) {
                return true;
            }
            power = (0..d)
                .map(|i| (0..d).map(|j| (0..d).any(|k| power[i][k] && b[k][j])).collect())
                .collect();
        }
        false
    }

    /// Dominant eigenvalue estimated from a normalized high power of `M`.
    pub fn power_iteration_estimate(&self) -> f64 {
        let d = self.size();
        let m: Vec<Vec<f64>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|&x| x as f64).collect())
            .collect();
        let mut p = m.clone();
        for _ in 0..64 {
            let mut q = vec![vec![0.0; d]; d];
            for i in 0..d {
                for k in 0..d {
                    if p[i][k] != 0.0 {
                        for j in 0..d {
                            q[i][j] += p[i][k] * p[k][j];
                        }
                    }
                }
            }
            let max = q.iter().flatten().cloned().fold(0.0, f64::max);
            for x in q.iter_mut().flatten() {
                *x /= max;
            }
            p = q;
        }
        let v: Vec<f64> = p.iter().map(|r| r.iter().sum()).collect();
        let mv: Vec<f64> = m
            .iter()
            .map(|r| r.iter().zip(&v).map(|(a, b)| a * b).sum())
            .collect();
        mv.iter().sum::<f64>() / v.iter().sum::<f64>()
    }
}

/// The canonical substitution `φ_β` on `{0, …, m+p−1}` (or `{0, …, m−1}` when simple).
#[derive(Debug, Clone)]
pub struct Substitution {
    expansion: RenyiExpansion,
    images: Vec<Word>,
}

pub fn build_substitution(e: &RenyiExpansion) -> Substitution {
    let s = Substitution::canonical(e);
    assert!(s.incidence_matrix().is_primitive(), "canonical substitution must be primitive");
    s
}

impl Substitution {
    pub fn canonical(e: &RenyiExpansion) -> Self {
        let d = e.alphabet_size();
        let images = (0..d)
            .map(|a| {
                let zeros = e.coeff(a + 1) as usize;
                let mut w = vec![0; zeros];
                if a + 1 < d {
                    w.push((a + 1) as Letter);
                } else if !e.is_simple() {
                    w.push(e.m() as Letter);
                }
                Word::from(w)
            })
            .collect();
        Substitution {
            expansion: e.clone(),
            images,
        }
    }

    pub fn expansion(&self) -> &RenyiExpansion {
        &self.expansion
    }

    pub fn alphabet_size(&self) -> usize {
        self.images.len()
    }

    pub fn m(&self) -> usize {
        self.expansion.m()
    }

    pub fn p(&self) -> usize {
        self.expansion.p()
    }

    pub fn image(&self, a: Letter) -> &Word {
        &self.images[a as usize]
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn oplus(&self, k: usize, l: usize) -> Letter {
        oplus(k, l, self.m(), self.p())
    }

    pub fn t_oplus(&self, k: usize, l: usize) -> Result<u64> {
        t_oplus(k, l, &self.expansion)
    }

    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        let d = self.alphabet_size();
        let entries = self
            .images
            .iter()
            .map(|w| {
                let mut row = vec![0u64; d];
                for &b in w.iter() {
                    row[b as usize] += 1;
                }
                row
            })
            .collect();
        IncidenceMatrix { entries }
    }

    pub fn apply(&self, w: &[Letter]) -> Word {
        let mut out = Vec::with_capacity(w.iter().map(|&a| self.image(a).len()).sum());
        for &a in w {
            out.extend_from_slice(self.image(a));
        }
        Word::from(out)
    }

    /// `|φ^n(a)|` for every letter `a`.
    pub fn letter_lengths(&self, n: usize) -> Vec<BigUint> {
        let mut len = vec![BigUint::one(); self.alphabet_size()];
        for _ in 0..n {
            len = self.next_lengths(&len);
        }
        len
    }

    /// Table of `|φ^k(a)|` for `k = 0..=n`.
    pub fn length_table(&self, n: usize) -> Vec<Vec<BigUint>> {
        let mut table = vec![vec![BigUint::one(); self.alphabet_size()]];
        for k in 0..n {
            let next = self.next_lengths(&table[k]);
            table.push(next);
        }
        table
    }

    fn next_lengths(&self, len: &[BigUint]) -> Vec<BigUint> {
        self.images
            .iter()
            .map(|w| w.iter().map(|&b| &len[b as usize]).sum())
            .collect()
    }

    pub fn parikh_n(&self, w: &[Letter], n: u64) -> ParikhVector {
        let v = ParikhVector::of(w, self.alphabet_size());
        if n == 0 {
            return v;
        }
        v.times(&self.incidence_matrix().to_big().pow(n))
    }

    pub fn image_length(&self, w: &[Letter], n: u64) -> BigUint {
        self.parikh_n(w, n).len()
    }

    /// Streams the letters of `φ^n(w)` into `sink` until it returns `false`.
    /// Memory is `O(n · max |φ(a)|)` regardless of the image length.
    pub fn stream_n(&self, w: &[Letter], n: usize, mut sink: impl FnMut(Letter) -> bool) {
        let mut stack: Vec<(Letter, usize)> = w.iter().rev().map(|&a| (a, n)).collect();
        while let Some((a, depth)) = stack.pop() {
            if depth == 0 {
                if !sink(a) {
                    return;
                }
            } else {
                stack.extend(self.image(a).iter().rev().map(|&b| (b, depth - 1)));
            }
        }
    }

    /// Like [`stream_n`](Self::stream_n) but from the last letter backwards.
    pub fn stream_n_rev(&self, w: &[Letter], n: usize, mut sink: impl FnMut(Letter) -> bool) {
        let mut stack: Vec<(Letter, usize)> = w.iter().map(|&a| (a, n)).collect();
        while let Some((a, depth)) = stack.pop() {
            if depth == 0 {
                if !sink(a) {
                    return;
                }
            } else {
                stack.extend(self.image(a).iter().map(|&b| (b, depth - 1)));
            }
        }
    }

    /// First `len` letters of `φ^n(w)` (fewer if the image is shorter).
    pub fn image_prefix(&self, w: &[Letter], n: usize, len: usize) -> Word {
        let mut out = Vec::with_capacity(len);
        if len > 0 {
            self.stream_n(w, n, |a| {
                out.push(a);
                out.len() < len
            });
        }
        Word::from(out)
    }

    /// Last `len` letters of `φ^n(w)` (fewer if the image is shorter).
    pub fn image_suffix(&self, w: &[Letter], n: usize, len: usize) -> Word {
        let mut out = Vec::with_capacity(len);
        if len > 0 {
            self.stream_n_rev(w, n, |a| {
                out.push(a);
                out.len() < len
            });
        }
        out.reverse();
        Word::from(out)
    }

    /// `φ^n(w)`, refused when its length exceeds `cap`.
    pub fn apply_n(&self, w: &[Letter], n: usize, cap: usize) -> Result<Word> {
        let required = self.image_length(w, n as u64);
        let len = match required.to_usize() {
            Some(l) if l <= cap => l,
            _ => return Err(Error::MemoryCap { required, cap }),
        };
        let mut out = Vec::with_capacity(len);
        self.stream_n(w, n, |a| {
            out.push(a);
            true
        });
        Ok(Word::from(out))
    }

    /// Prefix of length `n` of the fixed point `u_β = lim φ^k(0)`.
    pub fn fixed_point_prefix(&self, n: usize) -> Word {
        let target = BigUint::from(n);
        let mut k = 0;
        let mut len = vec![BigUint::one(); self.alphabet_size()];
        while len[0] < target {
            len = self.next_lengths(&len);
            k += 1;
        }
        self.image_prefix(&[0], k, n)
    }

    /// Whether `φ^n(a)` ends with `0^{t_{a⊕n}} (a⊕n)`.
    pub fn suffix_letter_check(&self, a: Letter, n: usize) -> bool {
        if n == 0 {
            return true;
        }
        let last = self.oplus(a as usize, n);
        let t = self.expansion.coeff(a as usize + n) as usize;
        let mut expected = vec![0; t];
        expected.push(last);
        self.image_suffix(&[a], n, t + 1).letters() == expected.as_slice()
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .images
            .iter()
            .enumerate()
            .map(|(a, w)| format!("{a}->{w}"))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeration::compute_beta;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn subst(s: &str) -> Substitution {
        build_substitution(&s.parse().unwrap())
    }

    fn imgs(s: &Substitution) -> Vec<String> {
        s.images().iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn canonical_images() {
        assert_eq!(imgs(&subst("221(12)")), ["001", "002", "03", "04", "003"]);
        assert_eq!(imgs(&subst("2000(1)")), ["001", "2", "3", "4", "04"]);
        assert_eq!(imgs(&subst("21")), ["001", "0"]);
        assert_eq!(imgs(&subst("2(1)")), ["001", "01"]);
    }

    #[test]
    fn oplus_formula() {
        assert_eq!(oplus(3, 2, 3, 2), 3);
        assert_eq!(oplus(4, 0, 3, 2), 4);
        assert_eq!(oplus(4, 1, 3, 2), 3);
        assert_eq!(oplus(4, 2, 3, 2), 4);
        let e = "22(01)".parse().unwrap();
        assert_eq!(t_oplus(3, 2, &e).unwrap(), e.coeff(3));
        assert!(t_oplus(0, 0, &e).is_err());
    }

    #[test]
    fn powers_of_two_one_omega() {
        let s = subst("2(1)");
        assert_eq!(s.apply_n(&[0], 2, 100).unwrap().to_string(), "00100101");
        assert_eq!(
            s.apply_n(&[0], 3, 100).unwrap().to_string(),
            "001001010010010100101"
        );
        assert_eq!(s.apply(&[]), Word::new());
        assert_eq!(s.fixed_point_prefix(8).to_string(), "00100101");
        assert_eq!(s.fixed_point_prefix(0), Word::new());
        assert_eq!(s.image_length(&[0], 2), BigUint::from(8u32));
        assert!(matches!(
            s.apply_n(&[0], 40, 1000),
            Err(Error::MemoryCap { .. })
        ));
    }

    #[test]
    fn incidence_matrix_shape() {
        let s = subst("221(12)");
        let m = s.incidence_matrix();
        let e = s.expansion();
        let d = s.alphabet_size();
        for a in 0..d {
            for b in 0..d {
                let mut expect = 0;
                if b == 0 {
                    expect += e.coeff(a + 1);
                }
                if b == a + 1 {
                    expect += 1;
                }
                if a == d - 1 && b == e.m() {
                    expect += 1;
                }
                assert_eq!(m.entries[a][b], expect, "entry {a},{b}");
            }
        }
    }

    #[test]
    fn characteristic_polynomial_matches_parry_polynomial() {
        for s in ["221(12)", "2000(1)", "22(01)", "21(1200)", "21", "2(1)", "41(2)", "302(110)"] {
            let e: RenyiExpansion = s.parse().unwrap();
            let m = Substitution::canonical(&e).incidence_matrix();
            assert_eq!(m.characteristic_polynomial(), e.parry_polynomial(), "{s}");
            assert!(m.is_primitive());
        }
    }

    #[test]
    fn suffix_letters() {
        let s = subst("221(12)");
        assert!(s.image_suffix(&[0], 3, 2).to_string() == "03");
        for a in 0..5 {
            for n in 0..8 {
                assert!(s.suffix_letter_check(a, n), "a={a} n={n}");
            }
        }
    }

    #[test]
    fn length_ratio_tends_to_beta() {
        for s in ["221(12)", "2000(1)", "21(1200)"] {
            let sub = subst(s);
            let beta = compute_beta(sub.expansion(), 1e-14).unwrap();
            let table = sub.length_table(200);
            let n = (0..200)
                .find(|&n| table[n][0] > BigUint::from(10u64.pow(10)))
                .unwrap();
            let ratio = BigRational::new(
                BigInt::from(table[n + 1][0].clone()),
                BigInt::from(table[n][0].clone()),
            );
            assert!((ratio.to_f64().unwrap() - beta.value).abs() < 1e-8, "{s}");
        }
    }

    #[test]
    fn streamed_suffix_agrees_with_materialized_word() {
        let s = subst("2000(1)");
        let w = s.apply_n(&[0, 4, 2], 9, 1 << 20).unwrap();
        assert_eq!(s.image_suffix(&[0, 4, 2], 9, 30).letters(), &w[w.len() - 30..]);
        assert_eq!(s.image_prefix(&[0, 4, 2], 9, 30).letters(), &w[..30]);
    }

    proptest! {
        #[test]
        fn parikh_vector_of_image_is_vector_times_matrix(w in proptest::collection::vec(0u32..5, 0..40)) {
            let s = subst("221(12)");
            let big = s.incidence_matrix().to_big();
            let lhs = ParikhVector::of(&s.apply(&w), 5);
            let rhs = ParikhVector::of(&w, 5).times(&big);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn image_length_matches_materialization(w in proptest::collection::vec(0u32..5, 0..6), n in 0usize..7) {
            let s = subst("2000(1)");
            let word = s.apply_n(&w, n, 1 << 22).unwrap();
            prop_assert_eq!(BigUint::from(word.len()), s.image_length(&w, n as u64));
        }
    }
}
