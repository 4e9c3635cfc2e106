use cartography::rubric::{bundled_evidence, score, EvidenceRecord, RubricOp};
use proptest::prelude::*;

fn criterion(r: &mut EvidenceRecord, i: usize) -> &mut bool {
    match i {
        0 => &mut r.present,
        1 => &mut r.explicit,
        2 => &mut r.configurable,
        3 => &mut r.automated,
        _ => &mut r.documented,
    }
}

proptest! {
    #[test]
    fn meeting_more_criteria_never_lowers_a_score(flips in prop::collection::vec((0usize..28, 0usize..5), 1..20)) {
        let base = bundled_evidence();
        let mut raised = base.clone();
        for (row, c) in &flips {
            *criterion(&mut raised[*row], *c) = true;
        }
        let (a, b) = (score(&base).unwrap(), score(&raised).unwrap());
        for (x, y) in a.cells.iter().zip(&b.cells) {
            prop_assert!(y.score >= x.score);
        }
        for (x, y) in a.system_means.iter().zip(&b.system_means) {
            prop_assert!(y >= x);
        }
        for (op, m) in &a.row_means {
            prop_assert!(b.row_means[op] >= *m);
        }
        prop_assert!(b.grand_mean >= a.grand_mean);
    }

    #[test]
    fn record_order_does_not_matter(shuffled in Just(bundled_evidence()).prop_shuffle()) {
        let base = bundled_evidence();
        // Columns follow first appearance, so compare by system name.
        let (a, b) = (score(&base).unwrap(), score(&shuffled).unwrap());
        for sys in &a.systems {
            prop_assert_eq!(a.system_mean(sys), b.system_mean(sys));
            for op in RubricOp::ALL {
                prop_assert_eq!(a.cell(sys, op), b.cell(sys, op));
            }
        }
        prop_assert_eq!(&a.row_means, &b.row_means);
        prop_assert_eq!(a.grand_mean, b.grand_mean);
    }
}
