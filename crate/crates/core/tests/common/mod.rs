//! Brute-force oracles and instance generators shared by the integration
//! tests. Nothing here calls into the code under test.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use semirandom::hyperedge::Hyperedge;

/// Maximum matching size by dynamic programming over subsets of the right
/// side (`right <= 16`).
pub fn brute_matching_size(left: usize, right: usize, edges: &[(u32, u32)]) -> usize {
    assert!(right <= 16);
    let mut adj = vec![0u32; left];
    for &(l, r) in edges {
        adj[l as usize] |= 1 << r;
    }
    // best[mask] = largest matching of the processed left prefix using
    // exactly the right nodes in `mask`, or -1.
    let mut best = vec![-1i32; 1 << right];
    best[0] = 0;
    for &a in &adj {
        let mut next = best.clone();
        for mask in 0..1usize << right {
            if best[mask] < 0 {
                continue;
            }
            let mut free = a & !(mask as u32);
            while free != 0 {
                let bit = free & free.wrapping_neg();
                free ^= bit;
                let m2 = mask | bit as usize;
                next[m2] = next[m2].max(best[mask] + 1);
            }
        }
        best = next;
    }
    best.into_iter().max().unwrap() as usize
}

pub fn random_bipartite<R: Rng>(rng: &mut R, max_side: usize) -> (usize, usize, Vec<(u32, u32)>) {
    let l = rng.random_range(1..=max_side);
    let r = rng.random_range(1..=max_side);
    let p: f64 = rng.random_range(0.05..0.6);
    let mut edges = Vec::new();
    for i in 0..l as u32 {
        for j in 0..r as u32 {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    (l, r, edges)
}

/// Searches every cyclic ordering of `edges` for one where consecutive
/// edges share exactly one point, others are disjoint, and `[n]` is covered.
pub fn brute_loose_cycle(n: u32, s: usize, edges: &[Vec<u32>]) -> bool {
    let m = edges.len();
    if s < 2 || n as usize % (s - 1) != 0 || m != n as usize / (s - 1) || m < 3 {
        return false;
    }
    for e in edges {
        let mut e2 = e.clone();
        e2.sort_unstable();
        e2.dedup();
        if e2.len() != s || e2.iter().any(|&p| p == 0 || p > n) {
            return false;
        }
    }
    let mut covered: Vec<u32> = edges.iter().flatten().copied().collect();
    covered.sort_unstable();
    covered.dedup();
    if covered.len() != n as usize {
        return false;
    }
    let shared = |a: &[u32], b: &[u32]| a.iter().filter(|p| b.contains(p)).count();
    let mut order = vec![0usize];
    let mut used = vec![false; m];
    used[0] = true;
    fn extend(
        order: &mut Vec<usize>,
        used: &mut [bool],
        edges: &[Vec<u32>],
        shared: &dyn Fn(&[u32], &[u32]) -> usize,
    ) -> bool {
        let m = edges.len();
        if order.len() == m {
            return shared(&edges[order[m - 1]], &edges[order[0]]) == 1;
        }
        for cand in 0..m {
            if used[cand] {
                continue;
            }
            let k = order.len();
            let ok = order.iter().enumerate().all(|(pos, &e)| {
                let want = if pos == k - 1 || (pos == 0 && k == m - 1) { 1 } else { 0 };
                shared(&edges[e], &edges[cand]) == want
            });
            if ok {
                used[cand] = true;
                order.push(cand);
                if extend(order, used, edges, shared) {
                    return true;
                }
                order.pop();
                used[cand] = false;
            }
        }
        false
    }
    extend(&mut order, &mut used, edges, &shared)
}

/// An ideal loose cycle on `m(s-1)` points with the points relabelled by a
/// random permutation and the edges shuffled.
pub fn relabelled_cycle<R: Rng>(rng: &mut R, m: usize, s: usize) -> (u32, Vec<Vec<u32>>) {
    let n = (m * (s - 1)) as u32;
    let mut label: Vec<u32> = (1..=n).collect();
    label.shuffle(rng);
    let w = s - 1;
    let mut edges: Vec<Vec<u32>> = (0..m)
        .map(|i| (0..=w).map(|j| label[(i * w + j) % n as usize]).collect())
        .collect();
    edges.shuffle(rng);
    (n, edges)
}

/// Replaces a point covered once by some other point, which always leaves
/// a point uncovered.
pub fn corrupt_single<R: Rng>(rng: &mut R, n: u32, edges: &mut [Vec<u32>]) {
    let mut count = vec![0u32; n as usize + 1];
    for p in edges.iter().flatten() {
        count[*p as usize] += 1;
    }
    loop {
        let e = rng.random_range(0..edges.len());
        let i = rng.random_range(0..edges[e].len());
        if count[edges[e][i] as usize] == 1 {
            let old = edges[e][i];
            let mut q = old;
            while q == old {
                q = rng.random_range(1..=n);
            }
            edges[e][i] = q;
            return;
        }
    }
}

/// Replaces any point of any edge by a random point.
pub fn corrupt_any<R: Rng>(rng: &mut R, n: u32, edges: &mut [Vec<u32>]) {
    let e = rng.random_range(0..edges.len());
    let i = rng.random_range(0..edges[e].len());
    edges[e][i] = rng.random_range(1..=n);
}

pub fn to_hyperedges(edges: &[Vec<u32>]) -> Vec<Hyperedge> {
    edges.iter().map(|e| Hyperedge::from_points(e)).collect()
}

/// Deterministic corpus of loose-cycle candidates with at most 8 edges:
/// relabelled ideal cycles, guaranteed corruptions, arbitrary corruptions,
/// dropped and swapped edges, and random edge sets.
pub fn loose_cycle_corpus() -> Vec<(u32, usize, Vec<Vec<u32>>)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();
    for s in 3..=5 {
        for m in 3..=8 {
            for _ in 0..12 {
                let (n, edges) = relabelled_cycle(&mut rng, m, s);
                out.push((n, s, edges.clone()));
                let mut c = edges.clone();
                corrupt_single(&mut rng, n, &mut c);
                out.push((n, s, c));
                let mut c = edges.clone();
                corrupt_any(&mut rng, n, &mut c);
                out.push((n, s, c));
                let mut c = edges.clone();
                c.pop();
                out.push((n, s, c));
                // Random s-sets on the same point count.
                let rand_edges: Vec<Vec<u32>> = (0..m)
                    .map(|_| {
                        let mut pts: Vec<u32> = (1..=n).collect();
                        pts.shuffle(&mut rng);
                        pts.truncate(s);
                        pts
                    })
                    .collect();
                out.push((n, s, rand_edges));
            }
        }
    }
    // Two triangles, and the two-edge case on four points.
    out.push((12, 3, vec![vec![1, 2, 3], vec![3, 4, 5], vec![5, 6, 1], vec![7, 8, 9], vec![9, 10, 11], vec![11, 12, 7]]));
    out.push((4, 3, vec![vec![1, 2, 3], vec![3, 4, 1]]));
    out
}
