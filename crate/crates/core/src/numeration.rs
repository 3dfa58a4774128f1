//! Rényi expansions of unity: parsing, canonical form, the Parry
//! condition, the base β and the gap lengths Δ_k between β-integers.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, ParseError, Result};
use crate::substitution::Substitution;

/// An eventually periodic expansion `t_1⋯t_m (t_{m+1}⋯t_{m+p})^ω`, stored in
/// its canonical form: period primitive, `m` and `p` minimal. An empty period
/// means the expansion ends in `0^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RenyiExpansion {
    preperiod: Vec<u64>,
    period: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ParryKind {
    Simple,
    NonSimple,
}

impl fmt::Display for ParryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParryKind::Simple => "Simple",
            ParryKind::NonSimple => "NonSimple",
        })
    }
}

/// Parses the textual form `coeffs [ "(" coeffs ")" ]`, where a group is a
/// digit string, or a comma-separated integer list when the text contains a comma.
pub fn parse_expansion(text: &str) -> std::result::Result<RenyiExpansion, ParseError> {
    let comma_mode = text.contains(',');
    let (pre_part, per_part) = match text.find('(') {
        None => {
            if let Some(pos) = text.find(')') {
                return Err(syntax(pos, "unmatched ')'"));
            }
            (text, None)
        }
        Some(open) => {
            let close = text[open + 1..]
                .find(')')
                .map(|i| i + open + 1)
                .ok_or_else(|| syntax(text.len(), "missing ')'"))?;
            if let Some(extra) = text[open + 1..close].find('(') {
                return Err(syntax(open + 1 + extra, "nested '('"));
            }
            let rest = &text[close + 1..];
            if let Some(i) = rest.find(|c: char| !c.is_whitespace()) {
                return Err(syntax(close + 1 + i, "trailing input after ')'"));
            }
            (&text[..open], Some((open + 1, &text[open + 1..close])))
        }
    };
    let preperiod = parse_group(pre_part, 0, comma_mode)?;
    let period = match per_part {
        Some((offset, s)) => parse_group(s, offset, comma_mode)?,
        None => Vec::new(),
    };
    RenyiExpansion::from_parts(preperiod, period)
}

fn syntax(position: usize, message: &str) -> ParseError {
    ParseError::Syntax {
        position,
        message: message.to_string(),
    }
}

fn parse_group(
    s: &str,
    offset: usize,
    comma_mode: bool,
) -> std::result::Result<Vec<u64>, ParseError> {
    let leading = s.len() - s.trim_start().len();
    let trimmed = s.trim();
    if trimmed.is_empty() {
        return Err(syntax(offset + leading, "expected a coefficient"));
    }
    let base = offset + leading;
    if comma_mode {
        let mut out = Vec::new();
        let mut pos = base;
        for tok in trimmed.split(',') {
            let lead = tok.len() - tok.trim_start().len();
            let t = tok.trim();
            if t.is_empty() {
                return Err(syntax(pos + lead, "expected an integer"));
            }
            if let Some(i) = t.find(|c: char| !c.is_ascii_digit()) {
                return Err(syntax(pos + lead + i, "expected a digit"));
            }
            let v = t
                .parse::<u64>()
                .map_err(|_| syntax(pos + lead, "coefficient out of range"))?;
            out.push(v);
            pos += tok.len() + 1;
        }
        Ok(out)
    } else {
        trimmed
            .char_indices()
            .map(|(i, c)| {
                c.to_digit(10)
                    .map(u64::from)
                    .ok_or_else(|| syntax(base + i, "expected a digit"))
            })
            .collect()
    }
}

impl FromStr for RenyiExpansion {
    type Err = ParseError;
    fn from_str(s: &str) -> std::result::Result<Self, ParseError> {
        parse_expansion(s)
    }
}

impl RenyiExpansion {
    /// Canonicalizes and validates `preperiod (period)^ω`.
    pub fn from_parts(
        preperiod: Vec<u64>,
        period: Vec<u64>,
    ) -> std::result::Result<Self, ParseError> {
        if preperiod.iter().chain(&period).all(|&t| t == 0) {
            return Err(ParseError::AllZero);
        }
        let (mut pre, mut per) = (preperiod, period);
        if per.iter().all(|&t| t == 0) {
            per.clear();
            while pre.last() == Some(&0) {
                pre.pop();
            }
        } else {
            let root = primitive_root_len(&per);
            per.truncate(root);
            while !pre.is_empty() && pre.last() == per.last() {
                pre.pop();
                per.rotate_right(1);
            }
        }
        if let Some(shift) = first_parry_violation(&pre, &per) {
            return Err(ParseError::ParryViolation { shift });
        }
        if per.is_empty() && pre == [1] {
            return Err(ParseError::DegenerateBase);
        }
        Ok(RenyiExpansion {
            preperiod: pre,
            period: per,
        })
    }

    pub fn preperiod(&self) -> &[u64] {
        &self.preperiod
    }

    pub fn period(&self) -> &[u64] {
        &self.period
    }

    pub fn m(&self) -> usize {
        self.preperiod.len()
    }

    pub fn p(&self) -> usize {
        self.period.len()
    }

    pub fn t1(&self) -> u64 {
        self.preperiod[0]
    }

    pub fn kind(&self) -> ParryKind {
        if self.period.is_empty() {
            ParryKind::Simple
        } else {
            ParryKind::NonSimple
        }
    }

    pub fn is_simple(&self) -> bool {
        self.kind() == ParryKind::Simple
    }

    /// Number of letters of the canonical substitution.
    pub fn alphabet_size(&self) -> usize {
        self.m() + self.p()
    }

    /// Coefficient `t_i` of the infinite sequence, 1-based.
    pub fn coeff(&self, i: usize) -> u64 {
        assert!(i >= 1, "coefficients are indexed from 1");
        coeff_of(&self.preperiod, &self.period, i)
    }

    /// Compares `t_{c+1} t_{c+2} ⋯` against `t_{d+1} t_{d+2} ⋯`.
    pub fn compare_tails(&self, c: usize, d: usize) -> Ordering {
        let horizon = self.m() + 2 * self.p().max(1);
        (1..=horizon)
            .map(|i| self.coeff(c + i).cmp(&self.coeff(d + i)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }

    /// Whether the expansion has the shape `t_1 (0⋯0 (t_1 − 1))^ω`.
    pub fn is_affine_shape(&self) -> bool {
        let t1 = self.t1();
        self.m() == 1
            && t1 >= 1
            && self.period.last() == Some(&(t1 - 1))
            && self.period[..self.p() - 1].iter().all(|&t| t == 0)
            && !self.period.is_empty()
    }

    /// Exact value of `Σ_{i≥1} t_{k+i} x^{-i}` for a rational `x > 1`.
    ///
    /// Every term is nonnegative, so the sum is nonincreasing in `x`.
    pub fn tail_sum(&self, k: usize, x: &BigRational) -> BigRational {
        let inv = x.recip();
        let m = self.m();
        let finite = |from: usize, to: usize| -> BigRational {
            // Σ_{i=1}^{to-from} t_{from+i} inv^i
            let mut acc = BigRational::zero();
            let mut pw = BigRational::one();
            for i in 1..=to.saturating_sub(from) {
                pw = &pw * &inv;
                acc += &pw * BigRational::from_integer(BigInt::from(self.coeff(from + i)));
            }
            acc
        };
        if self.is_simple() {
            return finite(k, m);
        }
        let p = self.p();
        let periodic = |j: usize| -> BigRational {
            let head = finite(j, j + p);
            let inv_p = num_traits::pow(inv.clone(), p);
            head / (BigRational::one() - inv_p)
        };
        if k >= m {
            periodic(k)
        } else {
            finite(k, m) + num_traits::pow(inv.clone(), m - k) * periodic(m)
        }
    }

    /// Integer coefficients (constant term first) of the polynomial whose
    /// unique root above 1 is β, derived directly from `1 = Σ t_i β^{-i}`.
    pub fn parry_polynomial(&self) -> Vec<BigInt> {
        let m = self.m();
        let p = self.p();
        let d = m + p;
        let mut c = vec![BigInt::zero(); d + 1];
        // x^{m+p} − Σ_{i=1}^{m+p} t_i x^{m+p−i}
        c[d] += 1;
        for i in 1..=d {
            c[d - i] -= BigInt::from(self.coeff(i));
        }
        if p > 0 {
            // − (x^m − Σ_{i=1}^{m} t_i x^{m−i})
            c[m] -= 1;
            for i in 1..=m {
                c[m - i] += BigInt::from(self.coeff(i));
            }
        }
        c
    }
}

fn coeff_of(pre: &[u64], per: &[u64], i: usize) -> u64 {
    let m = pre.len();
    if i <= m {
        pre[i - 1]
    } else if per.is_empty() {
        0
    } else {
        per[(i - m - 1) % per.len()]
    }
}

fn primitive_root_len(w: &[u64]) -> usize {
    // smallest q dividing |w| with w = (w[..q])^{|w|/q}
    let n = w.len();
    (1..=n)
        .find(|&q| n.is_multiple_of(q) && (q..n).all(|i| w[i] == w[i - q]))
        .unwrap_or(n)
}

/// First shift `i ≥ 2` with `t_i t_{i+1} ⋯ ⪰ t_1 t_2 ⋯`, if any.
fn first_parry_violation(pre: &[u64], per: &[u64]) -> Option<usize> {
    let m = pre.len();
    let p = per.len().max(1);
    let horizon = m + 2 * p;
    (2..=m + p + 1).find(|&i| {
        let ord = (1..=horizon)
            .map(|k| coeff_of(pre, per, i - 1 + k).cmp(&coeff_of(pre, per, k)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal);
        ord != Ordering::Less
    })
}

impl fmt::Display for RenyiExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let all_digits = self.preperiod.iter().chain(&self.period).all(|&t| t < 10);
        if all_digits {
            let digits = |v: &[u64]| v.iter().map(|t| t.to_string()).collect::<String>();
            write!(f, "{}", digits(&self.preperiod))?;
            if !self.period.is_empty() {
                write!(f, "({})", digits(&self.period))?;
            }
            return Ok(());
        }
        let list = |v: &[u64]| {
            v.iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        // Comma mode is only recognized when some comma appears; pad with a
        // redundant coefficient that canonicalization removes again.
        let needs_pad = self.preperiod.len() < 2 && self.period.len() < 2;
        if self.period.is_empty() {
            write!(f, "{}", list(&self.preperiod))?;
            if needs_pad {
                write!(f, ",0")?;
            }
        } else {
            let per = if needs_pad {
                format!("{0},{0}", self.period[0])
            } else {
                list(&self.period)
            };
            write!(f, "{}({})", list(&self.preperiod), per)?;
        }
        Ok(())
    }
}

pub fn classify(e: &RenyiExpansion) -> ParryKind {
    e.kind()
}

/// β enclosed by an exact rational bracket.
#[derive(Debug, Clone)]
pub struct BetaValue {
    pub value: f64,
    /// Certified bound on `|value − β|`.
    pub error: f64,
    pub precision: f64,
    lower: BigRational,
    upper: BigRational,
}

impl BetaValue {
    pub fn lower(&self) -> &BigRational {
        &self.lower
    }
    pub fn upper(&self) -> &BigRational {
        &self.upper
    }
}

/// Sign of a polynomial (constant term first) at a rational point.
fn poly_sign(coeffs: &[BigInt], x: &BigRational) -> Ordering {
    let mut acc = BigRational::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x + BigRational::from_integer(c.clone());
    }
    acc.numer().sign().cmp_zero()
}

trait SignCmp {
    fn cmp_zero(self) -> Ordering;
}

impl SignCmp for num_bigint::Sign {
    fn cmp_zero(self) -> Ordering {
        match self {
            num_bigint::Sign::Minus => Ordering::Less,
            num_bigint::Sign::NoSign => Ordering::Equal,
            num_bigint::Sign::Plus => Ordering::Greater,
        }
    }
}

/// Computes β as the root in `(1, t_1 + 1]` of the characteristic polynomial
/// of the incidence matrix, by bisection with exact rational signs. A
/// normalized power iteration on the matrix must agree.
pub fn compute_beta(e: &RenyiExpansion, eps: f64) -> Result<BetaValue> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let matrix = Substitution::canonical(e).incidence_matrix();
    let poly = matrix.characteristic_polynomial();
    let mut lo = BigRational::one();
    let mut hi = BigRational::from_integer(BigInt::from(e.t1() + 1));
    if poly_sign(&poly, &lo) != Ordering::Less || poly_sign(&poly, &hi) != Ordering::Greater {
        return Err(Error::NonConvergence(
            "characteristic polynomial does not change sign on (1, t_1 + 1]".into(),
        ));
    }
    let target = rational_from_f64(eps) / BigRational::from_integer(BigInt::from(1u64 << 20));
    let two = BigRational::from_integer(BigInt::from(2));
    let mut iterations = 0;
    while &hi - &lo > target {
        iterations += 1;
        if iterations > 2000 {
            return Err(Error::NonConvergence("bisection iteration cap reached".into()));
        }
        let mid = (&lo + &hi) / &two;
        match poly_sign(&poly, &mid) {
            Ordering::Less => lo = mid,
            Ordering::Greater => hi = mid,
            Ordering::Equal => {
                lo = mid.clone();
                hi = mid;
            }
        }
    }
    let mid = (&lo + &hi) / &two;
    let value = mid.to_f64().expect("beta fits in f64");
    let bound = (&hi - &lo) / &two + (&mid - rational_from_f64(value)).abs();
    let error = next_up(bound.to_f64().unwrap_or(f64::INFINITY));
    if error > eps {
        return Err(Error::PrecisionInsufficient {
            requested: eps,
            achieved: error,
        });
    }
    let estimate = matrix.power_iteration_estimate();
    let tolerance = 2.0 * eps + 64.0 * f64::EPSILON * value;
    if (estimate - value).abs() > tolerance {
        return Err(Error::NonConvergence(format!(
            "power iteration gives {estimate}, bisection gives {value}"
        )));
    }
    Ok(BetaValue {
        value,
        error,
        precision: eps,
        lower: lo,
        upper: hi,
    })
}

pub(crate) fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::MIN_POSITIVE;
    }
    x * (1.0 + 4.0 * f64::EPSILON)
}

/// Gap lengths `Δ_0, …, Δ_{|A|−1}` between consecutive β-integers.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceVector {
    pub deltas: Vec<f64>,
    /// Shared certified bound on `|deltas[k] − Δ_k|`.
    pub error: f64,
}

/// Evaluates `Δ_k = Σ_{i≥1} t_{k+i} β^{-i}` in closed form on both ends of the
/// β bracket. Since each sum decreases in β this yields an enclosure.
pub fn distances(e: &RenyiExpansion, beta: &BetaValue, tol: f64) -> Result<DistanceVector> {
    let mut deltas = Vec::with_capacity(e.alphabet_size());
    let mut error = 0.0f64;
    for k in 0..e.alphabet_size() {
        if k == 0 {
            deltas.push(1.0);
            continue;
        }
        let high = e.tail_sum(k, beta.lower());
        let low = e.tail_sum(k, beta.upper());
        let two = BigRational::from_integer(BigInt::from(2));
        let mid = (&high + &low) / &two;
        let v = mid.to_f64().unwrap_or(f64::NAN);
        let bound = (&high - &low) / &two + (&mid - rational_from_f64(v)).abs();
        error = error.max(next_up(bound.to_f64().unwrap_or(f64::INFINITY)));
        deltas.push(v);
    }
    if error > tol {
        return Err(Error::PrecisionInsufficient {
            requested: tol,
            achieved: error,
        });
    }
    Ok(DistanceVector { deltas, error })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> RenyiExpansion {
        s.parse().unwrap()
    }

    #[test]
    fn parses_worked_examples() {
        let x = e("221(12)");
        assert_eq!(x.preperiod(), &[2, 2, 1]);
        assert_eq!(x.period(), &[1, 2]);
        assert_eq!((x.m(), x.p()), (3, 2));
        assert_eq!(e("2,2,1(1,2)"), x);
        assert_eq!(e(" 2, 2,1 ( 1 ,2 ) "), x);
        let y = e("2000(1)");
        assert_eq!((y.m(), y.p(), y.kind()), (4, 1, ParryKind::NonSimple));
        assert_eq!(e("21").kind(), ParryKind::Simple);
        assert_eq!(classify(&x), ParryKind::NonSimple);
    }

    #[test]
    fn rejects_parry_violation_with_shift() {
        assert_eq!(
            "12(3)".parse::<RenyiExpansion>(),
            Err(ParseError::ParryViolation { shift: 2 })
        );
        // purely periodic sequences equal their own shift by p
        assert_eq!(
            "2(12)".parse::<RenyiExpansion>(),
            Err(ParseError::ParryViolation { shift: 3 })
        );
        assert!(matches!(
            "21(2)".parse::<RenyiExpansion>(),
            Err(ParseError::ParryViolation { shift: 3 })
        ));
        assert_eq!("000".parse::<RenyiExpansion>(), Err(ParseError::AllZero));
        assert_eq!("0(0)".parse::<RenyiExpansion>(), Err(ParseError::AllZero));
        assert_eq!("1".parse::<RenyiExpansion>(), Err(ParseError::DegenerateBase));
        assert!(matches!(
            "01".parse::<RenyiExpansion>(),
            Err(ParseError::ParryViolation { .. })
        ));
    }

    #[test]
    fn syntax_errors_report_positions() {
        let err = |s: &str| match s.parse::<RenyiExpansion>() {
            Err(ParseError::Syntax { position, .. }) => position,
            other => panic!("expected syntax error for {s:?}, got {other:?}"),
        };
        assert_eq!(err(""), 0);
        assert_eq!(err("2a1"), 1);
        assert_eq!(err("(12)"), 0);
        assert_eq!(err("22(01"), 5);
        assert_eq!(err("22(01)3"), 6);
        assert_eq!(err("22()"), 3);
        assert_eq!(err("2,,1"), 2);
    }

    #[test]
    fn canonicalization_minimizes_m_and_p() {
        assert_eq!(e("221(1212)"), e("221(12)"));
        assert_eq!(e("2212(12)"), e("221(21)"));
        assert_eq!(e("22121(21)"), e("221(21)"));
        assert_eq!(e("2100"), e("21"));
        assert_eq!(e("21(0)"), e("21"));
        assert_eq!(e("21(00)").to_string(), "21");
        assert_eq!(e("12,3(1)").to_string(), "12,3(1)");
        assert_eq!(e("12,0").to_string(), "12,0");
        assert_eq!(e("12,0").preperiod(), &[12]);
        assert_eq!(e("12(3,3)").to_string(), "12(3,3)");
        assert_eq!(e("12(3,3)").period(), &[3]);
    }

    #[test]
    fn oplus_style_coefficients_wrap_into_the_period() {
        let x = e("22(01)");
        assert_eq!(x.coeff(5), x.coeff(3));
        assert_eq!(x.coeff(6), x.coeff(4));
        assert_eq!(e("21").coeff(7), 0);
    }

    #[test]
    fn tails_compare_lexicographically() {
        let x = e("221(12)");
        // t_2 t_3 ⋯ = 2 1 1 2 1 2 ⋯ precedes t_1 t_2 ⋯ = 2 2 1 1 2 ⋯
        assert_eq!(x.compare_tails(1, 0), Ordering::Less);
        assert_eq!(x.compare_tails(0, 0), Ordering::Equal);
        assert_eq!(x.compare_tails(4, 2), Ordering::Greater);
    }

    #[test]
    fn parry_polynomial_root_is_beta() {
        // 2(1)^ω: β² = 3β − 1
        assert_eq!(
            e("2(1)").parry_polynomial(),
            vec![BigInt::from(1), BigInt::from(-3), BigInt::from(1)]
        );
        let b = compute_beta(&e("2(1)"), 1e-13).unwrap();
        let golden_sq = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((b.value - golden_sq).abs() < 1e-13);
        assert!(b.error <= 1e-13);
    }

    #[test]
    fn beta_lies_in_range() {
        for s in ["21", "221(12)", "2000(1)", "22(01)", "21(1200)", "33(02)", "41(2)", "11", "101"] {
            let x = e(s);
            let b = compute_beta(&x, 1e-12).unwrap();
            assert!(b.value > 1.0 && b.value <= x.t1() as f64 + 1.0, "{s}");
            assert!(b.value >= x.t1() as f64, "floor(beta) = t_1 for {s}");
        }
        assert!(matches!(
            compute_beta(&e("21"), 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            compute_beta(&e("21"), 1e-30),
            Err(Error::PrecisionInsufficient { .. })
        ));
    }

    #[test]
    fn first_distance_is_beta_minus_t1() {
        for s in ["221(12)", "2000(1)", "41(2)", "3(1)"] {
            let x = e(s);
            let b = compute_beta(&x, 1e-14).unwrap();
            let d = distances(&x, &b, 1e-12).unwrap();
            assert_eq!(d.deltas[0], 1.0);
            assert!((d.deltas[1] - (b.value - x.t1() as f64)).abs() < 1e-12, "{s}");
            assert!(d.deltas.iter().all(|&v| v > 0.0 && v <= 1.0));
        }
    }
}
