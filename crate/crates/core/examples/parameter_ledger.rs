//! Prints the builder constants for the exact and desk profiles and the
//! expansion bound they imply.

use semirandom::kout::solve_params;
use semirandom::profile::Profile;
use semirandom::verify::eta;

fn main() {
    for (name, eps) in [("paper", 1e-5), ("desk", Profile::desk().eps_d)] {
        let p = solve_params(10, eps);
        let delta_d = 15.0 * eps;
        let k_eta = 10.0 * eta(1.0 / 3.0, 10, delta_d);
        println!("{name}: eps = {eps}, delta = {:.3e}, lambda = {:.4}, C = {:.4}, k*eta = {k_eta:.6}", p.delta, p.lambda, p.c);
    }
    let desk = Profile::desk();
    println!("desk budgets at n = 9999: matching {}, hamilton {}", desk.matching_budget(9999), desk.hamilton_budget(10_000));
}
