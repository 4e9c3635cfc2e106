use cartography::salience::{ProfileKind, SalienceProfile};
use proptest::prelude::*;

fn profiles() -> [SalienceProfile; 3] {
    [SalienceProfile::uniform(), SalienceProfile::u_shaped(), SalienceProfile::recency_dominant()]
}

#[test]
fn weights_normalize_at_the_largest_length() {
    for p in profiles() {
        let sum: f64 = p.weights(8192).iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "{:?}: {sum}", p.kind);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn weights_normalize(n in 1usize..=8192) {
        for p in profiles() {
            let sum: f64 = p.weights(n).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9, "{:?} n={n}: {sum}", p.kind);
        }
    }

    #[test]
    fn ends_beat_the_middle_with_equal_weights(n in 8usize..=8192, w in 0.05f64..4.0) {
        let p = SalienceProfile { kind: ProfileKind::UShaped, a: w, b: w, ..SalienceProfile::u_shaped() };
        let mid = p.salience(n.div_ceil(2), n).unwrap();
        prop_assert!(p.salience(1, n).unwrap() > mid);
        prop_assert!(p.salience(n, n).unwrap() > mid);
    }

    /// Unequal peaks: the weaker end only beats the middle once the
    /// stronger peak has decayed there, i.e. `max(a/b, b/a)·e^{-k·(n−mid)} < 1`.
    #[test]
    fn ends_beat_the_middle_once_peaks_decay(n in 8usize..=8192, a in 0.05f64..4.0, b in 0.05f64..4.0) {
        let p = SalienceProfile { kind: ProfileKind::UShaped, a, b, ..SalienceProfile::u_shaped() };
        let mid = n.div_ceil(2);
        let reach = (a / b).max(b / a) * (-p.k * (n - mid) as f64).exp();
        prop_assume!(reach < 0.9);
        let s_mid = p.salience(mid, n).unwrap();
        prop_assert!(p.salience(1, n).unwrap() > s_mid);
        prop_assert!(p.salience(n, n).unwrap() > s_mid);
    }

    #[test]
    fn single_trough(n in 2usize..=4096) {
        let w = SalienceProfile::u_shaped().weights(n);
        let trough = (0..n).min_by(|x, y| w[*x].total_cmp(&w[*y])).unwrap();
        for i in 1..=trough {
            prop_assert!(w[i] <= w[i - 1] + 1e-15, "rise before trough at {i} of {n}");
        }
        for i in trough + 1..n {
            prop_assert!(w[i] + 1e-15 >= w[i - 1], "fall after trough at {i} of {n}");
        }
    }

    #[test]
    fn added_tokens_dilute_earlier_positions(i in 1usize..2000, extra in 0usize..2000) {
        let p = SalienceProfile::u_shaped();
        let n = i + extra;
        prop_assert!(p.salience(i, n + 1).unwrap() <= p.salience(i, n).unwrap() + 1e-15);
    }
}
