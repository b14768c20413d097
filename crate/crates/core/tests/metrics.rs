mod support;

use mmsum_core::evaluation::{all_negative_baseline, best_threshold_metrics, pr_auc, ranking_metrics, roc_auc, roc_curve};
use proptest::prelude::*;
use support::oracles;

const TOL: f64 = 1e-12;

/// Score/label sets of size 2..=12 holding both classes. Scores come from a
/// coarse grid (many ties) or a continuous range.
fn labeled() -> impl Strategy<Value = Vec<(f64, bool)>> {
    let tied = prop::collection::vec(((0u8..5).prop_map(|s| f64::from(s) / 4.0), any::<bool>()), 2..=12);
    let smooth = prop::collection::vec((-1.0f64..1.0, any::<bool>()), 2..=12);
    prop_oneof![tied, smooth].prop_filter("both classes", |v| v.iter().any(|x| x.1) && v.iter().any(|x| !x.1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn roc_auc_matches_pairwise_count(s in labeled()) {
        prop_assert!((roc_auc(&s).unwrap() - oracles::roc_auc_pairwise(&s)).abs() < TOL);
    }

    #[test]
    fn pr_auc_matches_recount(s in labeled()) {
        prop_assert!((pr_auc(&s).unwrap() - oracles::pr_auc_exhaustive(&s)).abs() < TOL);
    }

    #[test]
    fn best_threshold_matches_exhaustive_cut(s in labeled()) {
        let got = best_threshold_metrics(&s).unwrap();
        let (c, f1, acc) = oracles::best_cut_exhaustive(&s);
        prop_assert!((got.f1 - f1).abs() < TOL);
        prop_assert!((got.accuracy - acc).abs() < TOL);
        prop_assert_eq!((got.confusion.tp, got.confusion.fp, got.confusion.tn, got.confusion.fn_), c);
        // The reported threshold reproduces the reported confusion.
        prop_assert_eq!(oracles::confusion_at(&s, got.threshold), c);
    }

    #[test]
    fn roc_curve_is_monotone_and_anchored(s in labeled()) {
        let pts = roc_curve(&s).unwrap();
        prop_assert_eq!(pts[0], [0.0, 0.0]);
        prop_assert_eq!(*pts.last().unwrap(), [1.0, 1.0]);
        prop_assert!(pts.windows(2).all(|w| w[0][0] <= w[1][0] && w[0][1] <= w[1][1]));
    }

    #[test]
    fn ranks_count_ties_against_the_positive(groups in prop::collection::vec(
        (0u8..4, prop::collection::vec(0u8..4, 1..8)), 1..6))
    {
        let data: Vec<Vec<(f64, bool)>> = groups
            .iter()
            .map(|(p, negs)| {
                let mut g = vec![(f64::from(*p), true)];
                g.extend(negs.iter().map(|&n| (f64::from(n), false)));
                g
            })
            .collect();
        let got = ranking_metrics(&data, &[1, 3]).unwrap();
        for (g, (p, negs)) in groups.iter().enumerate() {
            let expected = 1 + negs.iter().filter(|&&n| n >= *p).count();
            prop_assert_eq!(got.ranks[g], expected);
        }
        let top1 = groups.iter().filter(|(p, negs)| negs.iter().all(|n| n < p)).count() as f64 / groups.len() as f64;
        prop_assert!((got.top_k_accuracy[&1] - top1).abs() < TOL);
    }
}

#[test]
fn all_negative_floor_at_twenty_to_one() {
    let mut s: Vec<(f64, bool)> = (0..500).map(|i| (f64::from(i) / 500.0, true)).collect();
    s.extend((0..10_000).map(|i| (f64::from(i) / 10_000.0, false)));
    let floor = all_negative_baseline(&s).unwrap();
    assert!((floor.accuracy - 10_000.0 / 10_500.0).abs() < 1e-9);
    assert!((floor.accuracy - 0.952381).abs() < 1e-6);
    assert_eq!(floor.f1, 0.0);
    assert_eq!(floor.recall, 0.0);
}

#[test]
fn worked_examples() {
    let s = [(0.9, true), (0.8, false), (0.7, true), (0.1, false)];
    assert!((roc_auc(&s).unwrap() - 0.75).abs() < TOL);
    assert!((pr_auc(&s).unwrap() - (0.5 + 0.5 * 2.0 / 3.0)).abs() < TOL);
    let flat = [(0.5, true), (0.5, false)];
    assert_eq!(roc_auc(&flat).unwrap(), 0.5);
    assert!(roc_auc(&[(0.1, true)]).is_err());
    assert!(roc_auc(&[(f64::NAN, true), (0.1, false)]).is_err());
}
