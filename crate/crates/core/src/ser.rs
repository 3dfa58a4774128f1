//! Serde helpers: exact rationals are written as `{"num": "..", "den": ".."}`
//! with decimal strings, since numerators outgrow JSON numbers.

use num_rational::BigRational;
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::Serializer;

pub fn rational<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    let mut st = s.serialize_struct("Fraction", 2)?;
    st.serialize_field("num", &r.numer().to_string())?;
    st.serialize_field("den", &r.denom().to_string())?;
    st.end()
}

pub fn rational_vec<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for r in v {
        seq.serialize_element(&Fraction(r))?;
    }
    seq.end()
}

pub fn opt_rational<S: Serializer>(r: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => rational(r, s),
        None => s.serialize_none(),
    }
}

pub fn biguint<S: Serializer>(n: &num_bigint::BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

struct Fraction<'a>(&'a BigRational);

impl serde::Serialize for Fraction<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        rational(self.0, s)
    }
}
