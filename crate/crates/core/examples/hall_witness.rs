//! Maximum bipartite matching with a Hall-violator certificate when no
//! perfect matching exists.

use semirandom::matching_solver::{max_matching, BipartiteView};

fn main() {
    // Apexes 0, 1 and 2 all point only at bases 0 and 1.
    let edges = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 1), (3, 2), (3, 3)];
    let res = max_matching(&BipartiteView::from_edges(4, 4, &edges));
    println!("matching size {} perfect {}", res.size(), res.perfect);
    for (a, b) in &res.pairs {
        println!("  apex {} - base {}", a.index, b.index);
    }
    if let Some(w) = res.witness {
        let s: Vec<u32> = w.s.iter().map(|v| v.index).collect();
        let t: Vec<u32> = w.t.iter().map(|v| v.index).collect();
        println!("witness on {:?}: S = {s:?}, N(S) within T = {t:?}", w.side);
    }
}
