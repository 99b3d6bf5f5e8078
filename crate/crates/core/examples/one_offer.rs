//! Runs both strategies through the 1-offer adapter and compares with the
//! 2-offer process on the same seeds.

use semirandom::harness::{run_once, RunSpec, Task};
use semirandom::profile::Profile;

fn main() {
    let profile = Profile::desk();
    for (task, n) in [(Task::Matching, 3000u32), (Task::Hamilton, 3000)] {
        for r in [2usize, 1] {
            let ok = (1..=10).filter(|&seed| run_once(&RunSpec::new(task, n, 3, r, seed), &profile).unwrap().passed()).count();
            println!("{task:?} n={n} r={r}: {ok}/10 verified");
        }
    }
}
