mod common;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semirandom::aux_graph::{NodeId, Side};
use semirandom::matching_solver::{has_augmenting_path, max_matching, BipartiteView};
use semirandom::verify::{verify_loose_hamilton, verify_perfect_matching, ViolationKind};

use common::*;

fn neighbours(edges: &[(u32, u32)], side: Side, of: &[NodeId]) -> BTreeSet<NodeId> {
    let ids: BTreeSet<u32> = of.iter().map(|v| v.index).collect();
    edges
        .iter()
        .filter_map(|&(l, r)| match side {
            Side::Apex if ids.contains(&l) => Some(NodeId::base(r)),
            Side::Base if ids.contains(&r) => Some(NodeId::apex(l)),
            _ => None,
        })
        .collect()
}

#[test]
fn hopcroft_karp_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..500 {
        let (l, r, edges) = random_bipartite(&mut rng, 10);
        let view = BipartiteView::from_edges(l, r, &edges);
        let res = max_matching(&view);
        assert_eq!(res.size(), brute_matching_size(l, r, &edges), "{l}x{r} {edges:?}");
        assert!(!has_augmenting_path(&view, &res.pairs));
        let mut used = BTreeSet::new();
        for &(a, b) in &res.pairs {
            assert!(edges.contains(&(a.index, b.index)));
            assert!(used.insert(a) && used.insert(b));
        }
        match &res.witness {
            None => assert!(res.perfect && l == r),
            Some(w) => {
                let n_s = neighbours(&edges, w.side, &w.s);
                let t: BTreeSet<NodeId> = w.t.iter().copied().collect();
                assert!(n_s.is_subset(&t));
                assert!(n_s.len() < w.s.len());
            }
        }
    }
}

#[test]
fn loose_cycle_verifier_matches_brute_force() {
    let corpus = loose_cycle_corpus();
    let mut valid = 0;
    for (n, s, edges) in &corpus {
        let verdict = verify_loose_hamilton(*n, *s, &to_hyperedges(edges)).is_ok();
        assert_eq!(verdict, brute_loose_cycle(*n, *s, edges), "n={n} s={s} {edges:?}");
        valid += verdict as usize;
    }
    assert!(valid >= 200 && valid < corpus.len() / 2, "{valid} of {}", corpus.len());
}

#[test]
fn relabelled_cycles_pass_and_single_corruptions_fail() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m in [4usize, 8, 20, 50, 100] {
        for s in [3usize, 4] {
            let (n, edges) = relabelled_cycle(&mut rng, m, s);
            assert!(verify_loose_hamilton(n, s, &to_hyperedges(&edges)).is_ok());
            let mut bad = edges.clone();
            corrupt_single(&mut rng, n, &mut bad);
            assert!(verify_loose_hamilton(n, s, &to_hyperedges(&bad)).is_err());
            let mut short = edges.clone();
            short.pop();
            assert_eq!(
                verify_loose_hamilton(n, s, &to_hyperedges(&short)).unwrap_err().kind,
                ViolationKind::WrongEdgeCount
            );
        }
    }
}

#[test]
fn perfect_matching_verifier_on_shuffled_partitions() {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for s in 2..=5usize {
        let n = (s * 40) as u32;
        let mut pts: Vec<u32> = (1..=n).collect();
        pts.shuffle(&mut rng);
        let edges: Vec<Vec<u32>> = pts.chunks(s).map(<[u32]>::to_vec).collect();
        assert!(verify_perfect_matching(n, s, &to_hyperedges(&edges)).is_ok());
        let mut bad = edges.clone();
        corrupt_single(&mut rng, n, &mut bad);
        assert!(verify_perfect_matching(n, s, &to_hyperedges(&bad)).is_err());
    }
}
