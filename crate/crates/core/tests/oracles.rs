mod common;

use common::{oracle_case, oracle_suite};

#[test]
fn random_instances_match_reference() {
    for case in oracle_suite() {
        println!("{case:?}");
        assert!(case.max_rel <= 1e-10, "{case:?}");
    }
}

#[test]
fn named_instances_match_reference() {
    for (n, d, k) in [(50, 3, 20), (100, 3, 20), (200, 4, 40)] {
        let case = oracle_case(7, n, d, 2, k, 1.0);
        assert!(case.max_rel <= 1e-10, "{case:?}");
    }
}
