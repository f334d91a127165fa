//! Runs every acceptance criterion and prints one line per criterion.

use contraction_core::checks::run_all;

#[test]
fn acceptance() {
    let results = run_all();
    for r in &results {
        println!("{r}");
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
