//! Double in-edge counts and sampled expansion on uniform k-out graphs.

use semirandom::process::{stream_rng, Stream};
use semirandom::kout::uniform_k_out;
use semirandom::verify::{audit_claim_1vx, expansion_report, sample_expansion};

fn main() {
    let audit = audit_claim_1vx(20_000, 10, &(1..=5).collect::<Vec<_>>());
    println!("{}", serde_json::to_string(&audit.report()).unwrap());
    let mut rng = stream_rng(1, Stream::Builder);
    let g = uniform_k_out(1000, 1000, 10, &mut rng);
    let sample = sample_expansion(&g, 1.0 / 3.0, 10, 0.01, 500, &mut rng);
    println!("{}", serde_json::to_string(&expansion_report(&sample, 2000, 10, 1.0 / 3.0, 0.01)).unwrap());
}
