//! One loose Hamilton cycle run. A smaller stream coefficient leaves failed
//! nodes, so the path-joining rounds have work to do.

use semirandom::harness::{run_once, RunSpec, Task};
use semirandom::profile::Profile;
use semirandom::verify::verify_loose_hamilton;

fn main() {
    let n = 10_000;
    let mut profile = Profile::desk().customized();
    profile.c = Some(30.0);
    let rec = run_once(&RunSpec::new(Task::Hamilton, n, 3, 2, 3), &profile).expect("run");
    let t = &rec.transcript;
    println!("outcome {}, {} rounds of budget {}", rec.label(), t.rounds_total, t.budget);
    let m = &t.metrics;
    println!("failed apexes {}, failed bases {}, paths after 2a {}", m["a_x"], m["b_x"], m["paths_after_2a"]);
    for r in m["rounds"].as_array().unwrap() {
        println!(
            "  round ell={} offers {}/{} actions {}/{} -> {} paths ({})",
            r["ell"], r["offers_used"], r["offer_cap"], r["actions_attempted"], r["action_cap"], r["paths_end"], r["outcome"]
        );
    }
    println!("verifier: {:?}", verify_loose_hamilton(n, 3, &t.structure).map(|_| "ok"));
}
