//! One perfect-matching run on the 2-offer 3-uniform process, checked by
//! the independent verifier.

use semirandom::harness::{run_once, RunSpec, Task};
use semirandom::profile::Profile;
use semirandom::verify::verify_perfect_matching;

fn main() {
    let n = 9999;
    let rec = run_once(&RunSpec::new(Task::Matching, n, 3, 2, 1), &Profile::desk()).expect("run");
    let t = &rec.transcript;
    println!("outcome {}, {} rounds of budget {} ({:.1} rounds/n)", rec.label(), t.rounds_total, t.budget, t.rounds_total as f64 / n as f64);
    for (phase, c) in &t.phase_counts {
        println!("  {phase}: {} offers", c.offers);
    }
    println!("matching edges: {}, verifier: {:?}", t.structure.len(), verify_perfect_matching(n, 3, &t.structure).map(|_| "ok"));
}
