//! Builds a k-out auxiliary digraph from a uniform edge stream and reports
//! the failed nodes and out-degree audit.

use rand::Rng;
use semirandom::kout::{build_k_out, solve_params};
use semirandom::process::{stream_rng, Stream};

fn main() {
    let (side, k) = (2000usize, 10usize);
    let params = solve_params(k, 0.01);
    let mut rng = stream_rng(7, Stream::Builder);
    let len = params.stream_len(2 * side);
    let psi: Vec<(u32, u32)> =
        (0..len).map(|_| (rng.random_range(0..side as u32), rng.random_range(0..side as u32))).collect();
    println!("k = {k}, lambda = {:.3}, C = {:.3}, stream length {len}", params.lambda, params.c);
    match build_k_out(&psi, side, side, &params, &mut rng) {
        Ok(out) => {
            let audit = out.graph.audit_outdegrees();
            println!(
                "kept {} apexes and {} bases, failed {}, out-degree min {:?} max {:?}",
                out.apexes.len(),
                out.bases.len(),
                out.failed_count(),
                audit.min,
                audit.max
            );
            println!("initially blocked nodes: {}", out.graph.initial_blocked().len());
        }
        Err(e) => println!("builder failed: {e}"),
    }
}
