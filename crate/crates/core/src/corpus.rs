//! Named lists of expansions used by the test suites and `parry --corpus`.

/// The five worked examples; the default for `parry --corpus`.
pub const EXAMPLES: &[&str] = &["221(12)", "2000(1)", "22(01)", "21(1200)", "33(02)"];

/// Non-simple expansions covered by the main theorem (`t_1 ≥ 4`, or
/// `t_1 = 3` with `p ∤ z`).
pub const THEOREM: &[&str] = &[
    "41(2)", "52(13)", "4000(31)", "4(1)", "6(5)", "42(03)", "302(110)", "310(21)", "3(10)",
];

/// Expansions outside the main theorem's hypothesis.
pub const SMALL: &[&str] = &["221(12)", "2000(1)", "22(01)", "21(1200)", "33(02)", "2(1)", "310(22)"];

/// Simple expansions, accepted by the numeration and substitution layers.
pub const SIMPLE: &[&str] = &["21", "2", "3", "201", "11", "101"];

pub fn named(name: &str) -> Option<&'static [&'static str]> {
    match name {
        "examples" => Some(EXAMPLES),
        "theorem" => Some(THEOREM),
        "small" => Some(SMALL),
        "simple" => Some(SIMPLE),
        _ => None,
    }
}

pub const NAMES: &[&str] = &["examples", "theorem", "small", "simple"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bispecial::t_and_z;
    use crate::numeration::RenyiExpansion;

    #[test]
    fn every_entry_is_valid() {
        for name in NAMES {
            for s in named(name).unwrap() {
                let e: RenyiExpansion = s.parse().unwrap_or_else(|err| panic!("{s}: {err}"));
                assert_eq!(e.is_simple(), *name == "simple", "{s}");
            }
        }
    }

    #[test]
    fn theorem_entries_satisfy_the_hypothesis() {
        for s in THEOREM {
            let e: RenyiExpansion = s.parse().unwrap();
            let (_, z) = t_and_z(&e).unwrap();
            assert!(e.t1() >= 4 || (e.t1() == 3 && !(z as usize).is_multiple_of(e.p())), "{s}");
        }
    }
}
