//! A small multi-threaded sweep written as CSV to stdout. The bytes do not
//! depend on the thread count.

use semirandom::harness::{csv_string, sweep, SweepSpec, Task};
use semirandom::profile::Profile;

fn main() {
    let spec = SweepSpec {
        task: Task::Matching,
        ns: vec![999, 2001],
        s: 3,
        r: 2,
        seeds: (1..=4).collect(),
        profile: Profile::desk(),
        wallclock: false,
    };
    let one = csv_string(&sweep(&spec, Some(1)).unwrap());
    let many = csv_string(&sweep(&spec, Some(4)).unwrap());
    print!("{one}");
    println!("identical at 1 and 4 threads: {}", one == many);
}
