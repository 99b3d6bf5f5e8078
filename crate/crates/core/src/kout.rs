//! Extraction of a uniformly random k-out bipartite multigraph from a stream
//! of uniformly random apex-base edges.
//!
//! The construction Poissonizes the stream, orients every edge by a fair
//! coin, caps each node at `k + 3` out-edges, peels the nodes that cannot
//! keep `k` out-edges among survivors, and finally trims every survivor to
//! exactly `k` out-edges chosen uniformly among its remaining ones.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;
use thiserror::Error;

use crate::aux_graph::AuxDigraph;

/// Headroom above `k` that every capped node starts with.
const CAP_EXTRA: usize = 3;

/// Ratio between the stream-size coefficient and the Poisson rate.
pub const C_OVER_LAMBDA: f64 = 2.1;

/// `Pr(Po(λ) < m)`, summed in log space.
pub fn poisson_cdf_below(m: usize, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return if m > 0 { 1.0 } else { 0.0 };
    }
    let ln_l = lambda.ln();
    let mut ln_term = -lambda;
    let mut sum = 0.0;
    for j in 0..m {
        if j > 0 {
            ln_term += ln_l - (j as f64).ln();
        }
        sum += ln_term.exp();
    }
    sum.min(1.0)
}

fn binomial(n: u64, r: u64) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Upper cap on the builder's internal δ: `0.99 · (16 e² · C(k+3, 4))^{-1/2}`.
pub fn delta_cap(k: usize) -> f64 {
    let e2 = std::f64::consts::E.powi(2);
    0.99 / (16.0 * e2 * binomial(k as u64 + CAP_EXTRA as u64, 4)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuilderParams {
    pub k: usize,
    /// Target failed fraction per part.
    pub eps: f64,
    /// Internal δ; `Pr(Po(λ) < k+3) = δ/4` when λ is solved rather than set.
    pub delta: f64,
    pub lambda: f64,
    /// Stream size coefficient: the builder wants at least `c · N` edges.
    pub c: f64,
}

impl BuilderParams {
    /// Uses an explicit stream coefficient instead of solving for it.
    pub fn with_c(k: usize, eps: f64, c: f64) -> Self {
        BuilderParams {
            k,
            eps,
            delta: (eps / 2.0).min(delta_cap(k)),
            lambda: c / C_OVER_LAMBDA,
            c,
        }
    }

    /// Number of stream edges the builder needs for `nodes` total nodes.
    pub fn stream_len(&self, nodes: usize) -> usize {
        (self.c * nodes as f64).ceil() as usize
    }
}

/// Solves for the Poisson rate λ with `Pr(Po(λ) < k+3) = δ/4`, where
/// `δ = min(ε/2, delta_cap(k))`, and sets `C = 2.1 λ`.
pub fn solve_params(k: usize, eps: f64) -> BuilderParams {
    assert!(k >= 1, "k must be positive");
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
    let delta = (eps / 2.0).min(delta_cap(k));
    let target = delta / 4.0;
    let m = k + CAP_EXTRA;
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while poisson_cdf_below(m, hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    // The CDF is strictly decreasing in λ.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if poisson_cdf_below(m, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    let lambda = 0.5 * (lo + hi);
    BuilderParams { k, eps, delta, lambda, c: C_OVER_LAMBDA * lambda }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum BuildFailure {
    #[error("stream has {got} edges, builder needs {needed}")]
    TooFewEdges { needed: usize, got: usize },
    #[error("too many failed nodes: {apex_failed} apexes of {apexes}, {base_failed} bases of {bases}")]
    TooManyFailed {
        apex_failed: usize,
        apexes: usize,
        base_failed: usize,
        bases: usize,
    },
}

/// Output of [`build_k_out`]. The graph is indexed locally: apex `i` of the
/// graph is original apex `apexes[i]`, likewise for bases.
#[derive(Debug, Clone)]
pub struct KOut {
    pub graph: AuxDigraph,
    pub apexes: Vec<u32>,
    pub bases: Vec<u32>,
    pub failed_apexes: Vec<u32>,
    pub failed_bases: Vec<u32>,
    /// For every out-edge slot of `graph` (node-major, apexes first, `k`
    /// per node), the index of the stream edge it came from. Empty when the
    /// graph did not come from a stream.
    pub sources: Vec<u32>,
}

impl KOut {
    /// Wraps a graph that already lives on all nodes (no failures).
    pub fn complete(graph: AuxDigraph) -> Self {
        KOut {
            apexes: (0..graph.apex_count() as u32).collect(),
            bases: (0..graph.base_count() as u32).collect(),
            failed_apexes: Vec::new(),
            failed_bases: Vec::new(),
            sources: Vec::new(),
            graph,
        }
    }

    pub fn failed_count(&self) -> usize {
        self.failed_apexes.len() + self.failed_bases.len()
    }
}

/// The capped graph handed to [`peel_core`]: every node's out-list holds
/// local indices into the opposite side. Nodes `0..apexes` are apexes.
#[derive(Debug, Clone)]
pub struct CappedGraph {
    pub apexes: usize,
    pub bases: usize,
    pub out: Vec<Vec<u32>>,
}

impl CappedGraph {
    fn flat_target(&self, v: usize, t: u32) -> usize {
        if v < self.apexes {
            self.apexes + t as usize
        } else {
            t as usize
        }
    }
}

/// Peels the capped graph to its fixpoint: starting from `x0`, repeatedly
/// removes any node with fewer than `k` out-edges into the remaining nodes.
/// Returns the survivor mask (flat, apexes first). The fixpoint is unique,
/// so the result does not depend on processing order.
pub fn peel_core(g: &CappedGraph, x0: &[bool], k: usize) -> Vec<bool> {
    let total = g.apexes + g.bases;
    assert_eq!(x0.len(), total);
    let mut inn: Vec<Vec<u32>> = vec![Vec::new(); total];
    let mut live = vec![0usize; total];
    for v in 0..total {
        for &t in &g.out[v] {
            let w = g.flat_target(v, t);
            inn[w].push(v as u32);
            if !x0[w] {
                live[v] += 1;
            }
        }
    }
    let mut removed = x0.to_vec();
    let mut queue: Vec<usize> = (0..total).filter(|&v| !removed[v] && live[v] < k).collect();
    for &v in &queue {
        removed[v] = true;
    }
    let mut head = 0;
    // Each peeled node drags down the counts of its in-neighbours.
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        for &u in &inn[v] {
            let u = u as usize;
            if removed[u] {
                continue;
            }
            live[u] -= 1;
            if live[u] < k {
                removed[u] = true;
                queue.push(u);
            }
        }
    }
    removed.iter().map(|&r| !r).collect()
}

/// Builds a uniformly random `k`-out bipartite multigraph on large subsets of
/// the apexes and bases from the stream `psi` of `(apex, base)` edges.
pub fn build_k_out<R: Rng + ?Sized>(
    psi: &[(u32, u32)],
    apexes: usize,
    bases: usize,
    params: &BuilderParams,
    rng: &mut R,
) -> Result<KOut, BuildFailure> {
    let k = params.k;
    let cap = k + CAP_EXTRA;
    let total = apexes + bases;
    let needed = params.stream_len(total);
    if psi.len() < needed || apexes == 0 || bases == 0 {
        return Err(BuildFailure::TooFewEdges { needed, got: psi.len() });
    }
    let mean = 2.0 * params.lambda * total as f64;
    let t = Poisson::new(mean)
        .map(|p| p.sample(rng) as usize)
        .unwrap_or(0);
    if t > psi.len() {
        return Err(BuildFailure::TooFewEdges { needed: t, got: psi.len() });
    }

    // Orient, then bucket out-edges per node (CSR by flat source id).
    let mut from = Vec::with_capacity(t);
    let mut count = vec![0u32; total + 1];
    for &(a, b) in &psi[..t] {
        debug_assert!((a as usize) < apexes && (b as usize) < bases);
        let src = if rng.random::<bool>() { a as usize } else { apexes + b as usize };
        from.push(src as u32);
        count[src + 1] += 1;
    }
    for v in 0..total {
        count[v + 1] += count[v];
    }
    let mut fill = count.clone();
    let mut bucket = vec![0u32; t];
    for (e, &src) in from.iter().enumerate() {
        let slot = &mut fill[src as usize];
        bucket[*slot as usize] = e as u32;
        *slot += 1;
    }

    // Cap each node at k+3 uniformly chosen out-edges.
    let mut x0 = vec![false; total];
    let mut kept: Vec<Vec<u32>> = vec![Vec::new(); total];
    for v in 0..total {
        let list = &mut bucket[count[v] as usize..count[v + 1] as usize];
        if list.len() < cap {
            x0[v] = true;
            continue;
        }
        for i in 0..cap {
            let j = rng.random_range(i..list.len());
            list.swap(i, j);
        }
        kept[v] = list[..cap].to_vec();
    }
    let target_of = |v: usize, e: u32| -> u32 {
        let (a, b) = psi[e as usize];
        if v < apexes {
            b
        } else {
            a
        }
    };
    let capped = CappedGraph {
        apexes,
        bases,
        out: (0..total)
            .map(|v| kept[v].iter().map(|&e| target_of(v, e)).collect())
            .collect(),
    };
    let survivors = peel_core(&capped, &x0, k);

    let mut local = vec![u32::MAX; total];
    let (mut apex_ids, mut base_ids) = (Vec::new(), Vec::new());
    let (mut failed_a, mut failed_b) = (Vec::new(), Vec::new());
    for v in 0..total {
        match (v < apexes, survivors[v]) {
            (true, true) => {
                local[v] = apex_ids.len() as u32;
                apex_ids.push(v as u32);
            }
            (false, true) => {
                local[v] = base_ids.len() as u32;
                base_ids.push((v - apexes) as u32);
            }
            (true, false) => failed_a.push(v as u32),
            (false, false) => failed_b.push((v - apexes) as u32),
        }
    }
    let min_a = ((1.0 - params.eps) * apexes as f64).ceil() as usize;
    let min_b = ((1.0 - params.eps) * bases as f64).ceil() as usize;
    if apex_ids.len() < min_a || base_ids.len() < min_b {
        return Err(BuildFailure::TooManyFailed {
            apex_failed: failed_a.len(),
            apexes,
            base_failed: failed_b.len(),
            bases,
        });
    }

    // Trim every survivor to exactly k out-edges into survivors.
    let order: Vec<usize> = apex_ids
        .iter()
        .map(|&a| a as usize)
        .chain(base_ids.iter().map(|&b| apexes + b as usize))
        .collect();
    let mut targets = Vec::with_capacity(order.len() * k);
    let mut sources = Vec::with_capacity(order.len() * k);
    for &v in &order {
        let list = &mut kept[v];
        list.retain(|&e| survivors[capped.flat_target(v, target_of(v, e))]);
        debug_assert!(list.len() >= k);
        for i in 0..k {
            let j = rng.random_range(i..list.len());
            list.swap(i, j);
        }
        for &e in &list[..k] {
            let w = capped.flat_target(v, target_of(v, e));
            targets.push(local[w]);
            sources.push(e);
        }
    }
    let graph = AuxDigraph::from_local(apex_ids.len(), base_ids.len(), k, targets)
        .expect("trimmed lists are well formed");
    Ok(KOut {
        graph,
        apexes: apex_ids,
        bases: base_ids,
        failed_apexes: failed_a,
        failed_bases: failed_b,
        sources,
    })
}

/// Draws a uniform `k`-out bipartite multigraph directly: every node picks
/// `k` targets uniformly with replacement from the opposite side.
pub fn uniform_k_out<R: Rng + ?Sized>(apexes: usize, bases: usize, k: usize, rng: &mut R) -> AuxDigraph {
    let mut targets = Vec::with_capacity((apexes + bases) * k);
    for v in 0..apexes + bases {
        let other = if v < apexes { bases } else { apexes };
        for _ in 0..k {
            targets.push(rng.random_range(0..other as u32));
        }
    }
    AuxDigraph::from_local(apexes, bases, k, targets).expect("uniform lists are well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{DiscreteCDF, Poisson as StatrsPoisson};

    #[test]
    fn cdf_matches_independent_summation() {
        for &(m, lambda) in &[(13usize, 5.0f64), (13, 27.3), (13, 37.45), (4, 0.5)] {
            let oracle = StatrsPoisson::new(lambda).unwrap().cdf(m as u64 - 1);
            assert!((poisson_cdf_below(m, lambda) - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_cap_closed_form() {
        // C(13, 4) = 715.
        assert_eq!(binomial(13, 4), 715.0);
        let cap = delta_cap(10);
        assert!((cap - 3.405e-3).abs() < 1e-5, "{cap}");
    }

    #[test]
    fn solves_paper_constants() {
        let p = solve_params(10, 1e-5);
        assert_eq!(p.delta, 5e-6);
        assert!(p.lambda > 37.0 && p.lambda < 38.0, "{}", p.lambda);
        assert!(p.c < 80.0);
        let cdf = poisson_cdf_below(13, p.lambda);
        assert!((cdf - 1.25e-6).abs() < 1e-9 * 1.25e-6 + 1e-15);
    }

    #[test]
    fn desk_constants_hit_the_cap() {
        let p = solve_params(10, 0.02);
        assert_eq!(p.delta, delta_cap(10));
        let oracle = StatrsPoisson::new(p.lambda).unwrap().cdf(12);
        assert!((oracle - p.delta / 4.0).abs() < 1e-9);
    }

    #[test]
    fn peel_without_seed_keeps_everyone() {
        let g = CappedGraph { apexes: 2, bases: 2, out: vec![vec![0, 1], vec![1, 0], vec![0, 1], vec![1, 1]] };
        assert_eq!(peel_core(&g, &[false; 4], 2), vec![true; 4]);
    }

    /// k = 1, cap 4 out-edges, X₀ = {b0}. Apex 1 sends everything into b0
    /// and is peeled; b2 points only at apex 1, so it falls next.
    #[test]
    fn peel_cascades() {
        let g = CappedGraph {
            apexes: 3,
            bases: 3,
            out: vec![
                vec![0, 1, 1, 1],
                vec![0, 0, 0, 0],
                vec![1, 2, 2, 1],
                vec![0, 0, 0, 0],
                vec![0, 2, 2, 2],
                vec![1, 1, 1, 1],
            ],
        };
        let mut x0 = vec![false; 6];
        x0[3] = true;
        let s = peel_core(&g, &x0, 1);
        assert_eq!(s, vec![true, false, true, false, true, false]);
    }

    #[test]
    fn builder_output_is_exactly_k_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (na, nb, k) = (50usize, 50usize, 2usize);
        let params = BuilderParams::with_c(k, 0.2, 50.0);
        let psi: Vec<(u32, u32)> = (0..5000)
            .map(|_| (rng.random_range(0..na as u32), rng.random_range(0..nb as u32)))
            .collect();
        let out = build_k_out(&psi, na, nb, &params, &mut rng).unwrap();
        let audit = out.graph.audit_outdegrees();
        assert_eq!((audit.min, audit.max), (Some(k), Some(k)));
        assert_eq!(out.apexes.len() + out.failed_apexes.len(), na);
        assert_eq!(out.sources.len(), (out.apexes.len() + out.bases.len()) * k);
        for (slot, &e) in out.sources.iter().enumerate() {
            let v = slot / k;
            let (a, b) = psi[e as usize];
            if v < out.apexes.len() {
                assert_eq!(out.apexes[v], a);
            } else {
                assert_eq!(out.bases[v - out.apexes.len()], b);
            }
        }
    }

    #[test]
    fn isolated_node_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = BuilderParams::with_c(2, 0.5, 60.0);
        // Apex 9 never appears.
        let psi: Vec<(u32, u32)> = (0..2000)
            .map(|_| (rng.random_range(0..9), rng.random_range(0..10)))
            .collect();
        let out = build_k_out(&psi, 10, 10, &params, &mut rng).unwrap();
        assert!(out.failed_apexes.contains(&9));
    }

    #[test]
    fn short_stream_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = BuilderParams::with_c(2, 0.1, 10.0);
        let err = build_k_out(&[(0, 0); 5], 2, 2, &params, &mut rng).unwrap_err();
        assert_eq!(err, BuildFailure::TooFewEdges { needed: 40, got: 5 });
    }
}
