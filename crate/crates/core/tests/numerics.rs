use parry_words::corpus;
use parry_words::numeration::{compute_beta, distances, RenyiExpansion};
use parry_words::substitution::build_substitution;

fn all() -> impl Iterator<Item = RenyiExpansion> {
    corpus::THEOREM
        .iter()
        .chain(corpus::SMALL)
        .chain(corpus::SIMPLE)
        .map(|s| s.parse().unwrap())
}

#[test]
fn distances_agree_with_recurrence_and_truncated_series() {
    for e in all() {
        let beta = compute_beta(&e, 1e-14).unwrap();
        let d = distances(&e, &beta, 1e-12).unwrap();
        let b = beta.value;
        let mut rec = 1.0;
        for k in 1..e.alphabet_size() {
            rec = b * rec - e.coeff(k) as f64;
            let series: f64 = (1..=200).map(|i| e.coeff(k + i) as f64 * b.powi(-(i as i32))).sum();
            assert!((rec - d.deltas[k]).abs() < 1e-10, "{e} k = {k}");
            assert!((series - d.deltas[k]).abs() < 1e-10, "{e} k = {k}");
            assert!(d.deltas[k] > 0.0 && d.deltas[k] <= 1.0);
        }
    }
}

#[test]
fn length_ratios_approach_beta() {
    for e in all() {
        let s = build_substitution(&e);
        let beta = compute_beta(&e, 1e-14).unwrap();
        let table = s.length_table(60);
        assert_eq!(s.letter_lengths(60), table[60]);
        let a = table[59][0].to_string().parse::<f64>().unwrap();
        let b = table[60][0].to_string().parse::<f64>().unwrap();
        assert!((b / a - beta.value).abs() < 1e-9, "{e}");
        let est = s.incidence_matrix().power_iteration_estimate();
        assert!((est - beta.value).abs() < 1e-9, "{e}");
    }
}

#[test]
fn beta_is_monotone_in_the_expansion() {
    // lexicographically larger expansions give larger bases
    let pairs = [("21", "2(1)"), ("2(1)", "22(01)"), ("22(01)", "221(12)"), ("3", "33(02)"), ("41(2)", "42(03)")];
    for (x, y) in pairs {
        let bx = compute_beta(&x.parse().unwrap(), 1e-14).unwrap();
        let by = compute_beta(&y.parse().unwrap(), 1e-14).unwrap();
        assert!(bx.upper() < by.lower(), "{x} vs {y}");
    }
}
