use mmdn::metrics::{delta_p, equivalent_evals, gd_p, igd_p, reference_front, BudgetLedger};
use mmdn::problems::make_problem;
use mmdn::{Error, ObjectivePointSet};
use proptest::prelude::*;

fn set(v: &[Vec<f64>]) -> ObjectivePointSet {
    ObjectivePointSet::from_points(v).unwrap()
}

fn brute_gd(a: &[Vec<f64>], b: &[Vec<f64>], p: f64) -> f64 {
    let mut acc = 0.0;
    for x in a {
        let mut best = f64::INFINITY;
        for y in b {
            let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
            if d < best {
                best = d;
            }
        }
        acc += best.powf(p);
    }
    (acc / a.len() as f64).powf(1.0 / p)
}

fn points_strategy(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 2), 1..max)
}

#[test]
fn hand_examples() {
    let front = set(&[vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]);
    assert_eq!(gd_p(&set(&[vec![0.5, 0.5]]), &front, 2.0).unwrap(), 0.0);
    assert_eq!(gd_p(&set(&[vec![1.0, 1.0]]), &set(&[vec![0.0, 0.0]]), 2.0).unwrap(), 2f64.sqrt());
    assert_eq!(igd_p(&set(&[vec![0.0, 0.0]]), &set(&[vec![3.0, 4.0], vec![0.0, 0.0]]), 1.0).unwrap(), 2.5);
    assert_eq!(igd_p(&front, &front, 2.0).unwrap(), 0.0);
    assert_eq!(delta_p(&set(&[vec![0.0, 0.0]]), &set(&[vec![1.0, 0.0], vec![0.0, 1.0]]), 2.0).unwrap(), 1.0);
    assert_eq!(delta_p(&front, &front, 2.0).unwrap(), 0.0);
}

#[test]
fn invalid_inputs_are_contract_violations() {
    let a = set(&[vec![0.0, 0.0]]);
    let empty = ObjectivePointSet::empty(2);
    assert!(matches!(gd_p(&empty, &a, 2.0), Err(Error::Contract(_))));
    assert!(matches!(igd_p(&a, &empty, 2.0), Err(Error::Contract(_))));
    assert!(matches!(delta_p(&a, &a, 0.5), Err(Error::Contract(_))));
}

#[test]
fn budget_examples() {
    assert_eq!(equivalent_evals(&BudgetLedger::new(100, 0, 0)), 100.0);
    assert_eq!(equivalent_evals(&BudgetLedger::new(0, 10, 10)), 33.6);
    let extra = BudgetLedger::new(5 * 40, 5, 5);
    assert!((equivalent_evals(&extra) - (200.0 + 5.0 * 1.47 + 5.0 * 1.89)).abs() <= 1e-12);
}

#[test]
fn reference_front_density() {
    assert_eq!(reference_front(&make_problem("zdt1", None).unwrap()).unwrap().len(), 1000);
    assert_eq!(reference_front(&make_problem("dtlz2", None).unwrap()).unwrap().len(), 5000);
}

proptest! {
    #[test]
    fn gd_matches_brute_force(a in points_strategy(8), b in points_strategy(12), p in prop::sample::select(vec![1.0, 2.0, 3.0])) {
        let v = gd_p(&set(&a), &set(&b), p).unwrap();
        prop_assert!((v - brute_gd(&a, &b, p)).abs() <= 1e-14 * v.max(1.0));
    }

    #[test]
    fn igd_is_swapped_gd(a in points_strategy(8), b in points_strategy(12)) {
        prop_assert_eq!(igd_p(&set(&a), &set(&b), 2.0).unwrap(), gd_p(&set(&b), &set(&a), 2.0).unwrap());
    }

    #[test]
    fn delta_is_symmetric_and_the_larger_component(a in points_strategy(8), b in points_strategy(12)) {
        let (sa, sb) = (set(&a), set(&b));
        let d = delta_p(&sa, &sb, 2.0).unwrap();
        prop_assert_eq!(d, delta_p(&sb, &sa, 2.0).unwrap());
        prop_assert_eq!(d, gd_p(&sa, &sb, 2.0).unwrap().max(igd_p(&sa, &sb, 2.0).unwrap()));
        prop_assert_eq!(delta_p(&sa, &sa, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn delta_is_permutation_invariant(a in points_strategy(8), b in points_strategy(12), shift in 0usize..8) {
        let mut ra = a.clone();
        ra.rotate_left(shift % a.len());
        let mut rb = b.clone();
        rb.reverse();
        let d = delta_p(&set(&a), &set(&b), 2.0).unwrap();
        let e = delta_p(&set(&ra), &set(&rb), 2.0).unwrap();
        prop_assert!((d - e).abs() <= 1e-14 * d.max(1.0));
    }

    #[test]
    fn gd_is_monotone_in_p(a in points_strategy(8), b in points_strategy(12)) {
        let (sa, sb) = (set(&a), set(&b));
        let g1 = gd_p(&sa, &sb, 1.0).unwrap();
        let g2 = gd_p(&sa, &sb, 2.0).unwrap();
        let g4 = gd_p(&sa, &sb, 4.0).unwrap();
        prop_assert!(g1 <= g2 * (1.0 + 1e-12) && g2 <= g4 * (1.0 + 1e-12));
    }

    #[test]
    fn a_far_front_point_never_lowers_delta(a in points_strategy(8), b in points_strategy(12)) {
        let d = delta_p(&set(&a), &set(&b), 2.0).unwrap();
        let mut far = b.clone();
        far.push(vec![100.0, 100.0]);
        prop_assert!(delta_p(&set(&a), &set(&far), 2.0).unwrap() >= d);
    }

    #[test]
    fn ledger_matches_hand_sum(plain in 0u64..100_000, jac in 0u64..1000, hess in 0u64..1000) {
        let v = equivalent_evals(&BudgetLedger::new(plain, jac, hess));
        let hand = plain as f64 + 1.47 * jac as f64 + 1.89 * hess as f64;
        prop_assert!((v - hand).abs() <= 1e-9);
    }
}
