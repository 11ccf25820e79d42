//! Optimized computations against brute-force references on a fixed corpus
//! of planted systems.

mod common;

use ergopt::oracle::{check_analysis, OracleOptions};

#[test]
fn corpus_matches_oracles() {
    let options = OracleOptions::default();
    let mut checked = 0;
    for seed in 0..100 {
        let a = common::analyze(&common::planted(seed));
        let (reports, refused) = check_analysis(&a, &format!("seed {seed}"), &options);
        assert!(refused.is_empty(), "seed {seed}: {refused:?}");
        for r in &reports {
            assert!(r.passed(), "{r:?}");
        }
        checked += reports.len();
    }
    assert!(checked > 1000);
}
