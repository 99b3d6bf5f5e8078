//! Verifiers that look only at `(n, s, edges)`, plus sampling audits of
//! uniform k-out graphs.

use std::fmt;

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::aux_graph::{AuxDigraph, NodeId};
use crate::hyperedge::Hyperedge;
use crate::kout::uniform_k_out;
use crate::process::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    NotPartition,
    WrongEdgeCount,
    VertexMultiplicity,
    Disconnected,
    DegreeFloor,
    ExpansionBreach,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl Violation {
    fn new(kind: ViolationKind, detail: impl Into<String>) -> Self {
        Violation { kind, detail: detail.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.detail)
    }
}

impl std::error::Error for Violation {}

/// Checks sizes and ranges, then returns how often each point `1..=n` occurs.
fn multiplicities(n: u32, s: usize, edges: &[Hyperedge]) -> Result<Vec<u32>, Violation> {
    let mut count = vec![0u32; n as usize + 1];
    for (i, e) in edges.iter().enumerate() {
        let pts = e.points();
        if pts.len() != s {
            return Err(Violation::new(
                ViolationKind::NotPartition,
                format!("edge {i} has {} points, expected {s}", pts.len()),
            ));
        }
        for (j, &p) in pts.iter().enumerate() {
            if p == 0 || p > n {
                return Err(Violation::new(ViolationKind::NotPartition, format!("edge {i} has point {p} outside 1..={n}")));
            }
            if pts[..j].contains(&p) {
                return Err(Violation::new(ViolationKind::NotPartition, format!("edge {i} repeats point {p}")));
            }
            count[p as usize] += 1;
        }
    }
    Ok(count)
}

/// `edges` is a partition of `[n]` into `n/s` sets of size `s`.
pub fn verify_perfect_matching(n: u32, s: usize, edges: &[Hyperedge]) -> Result<(), Violation> {
    if s == 0 || n as usize % s != 0 || edges.len() != n as usize / s {
        return Err(Violation::new(
            ViolationKind::WrongEdgeCount,
            format!("{} edges for n = {n}, s = {s}", edges.len()),
        ));
    }
    let count = multiplicities(n, s, edges)?;
    if let Some(p) = (1..=n).find(|&p| count[p as usize] != 1) {
        return Err(Violation::new(
            ViolationKind::VertexMultiplicity,
            format!("point {p} covered {} times", count[p as usize]),
        ));
    }
    Ok(())
}

/// `edges` form a loose Hamilton cycle on `[n]`: `n/(s-1) ≥ 3` edges, the
/// link points (in two edges) number `n/(s-1)`, every other point lies in
/// one edge, and the link graph is a single cycle whose neighbours share
/// exactly one point.
pub fn verify_loose_hamilton(n: u32, s: usize, edges: &[Hyperedge]) -> Result<(), Violation> {
    if s < 2 || n as usize % (s - 1) != 0 || edges.len() != n as usize / (s - 1) || edges.len() < 3 {
        return Err(Violation::new(
            ViolationKind::WrongEdgeCount,
            format!("{} edges for n = {n}, s = {s}", edges.len()),
        ));
    }
    let m = edges.len();
    let count = multiplicities(n, s, edges)?;
    if let Some(p) = (1..=n).find(|&p| !(1..=2).contains(&count[p as usize])) {
        return Err(Violation::new(
            ViolationKind::VertexMultiplicity,
            format!("point {p} covered {} times", count[p as usize]),
        ));
    }
    let links = (1..=n).filter(|&p| count[p as usize] == 2).count();
    if links != m {
        return Err(Violation::new(ViolationKind::VertexMultiplicity, format!("{links} link points, expected {m}")));
    }
    // Link graph: each link point joins the two edges containing it.
    let mut holder = vec![u32::MAX; n as usize + 1];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, e) in edges.iter().enumerate() {
        for &p in e.points() {
            if count[p as usize] == 2 {
                let h = &mut holder[p as usize];
                if *h == u32::MAX {
                    *h = i as u32;
                } else {
                    adj[*h as usize].push(i);
                    adj[i].push(*h as usize);
                }
            }
        }
    }
    for (i, a) in adj.iter().enumerate() {
        if a.len() != 2 || a[0] == a[1] {
            return Err(Violation::new(
                ViolationKind::Disconnected,
                format!("edge {i} does not meet two distinct edges in one point each"),
            ));
        }
    }
    let (mut prev, mut cur, mut steps) = (usize::MAX, 0usize, 0usize);
    loop {
        let next = if adj[cur][0] != prev { adj[cur][0] } else { adj[cur][1] };
        prev = cur;
        cur = next;
        steps += 1;
        if cur == 0 {
            break;
        }
    }
    if steps != m {
        return Err(Violation::new(ViolationKind::Disconnected, format!("link cycle through edge 0 has {steps} of {m} edges")));
    }
    Ok(())
}

/// Claims that every node has out-degree at least `floor` counting alive targets.
pub fn verify_degree_floor(g: &AuxDigraph, floor: usize) -> Result<(), Violation> {
    match g.audit_outdegrees().min {
        Some(d) if d < floor => Err(Violation::new(ViolationKind::DegreeFloor, format!("min out-degree {d} below {floor}"))),
        _ => Ok(()),
    }
}

/// `η_{c,k}(δ) = max{ (17/3) δ ln(e/δ), 2 (1-c)/c · k δ }`.
pub fn eta(c: f64, k: usize, delta: f64) -> f64 {
    if delta <= 0.0 {
        return 0.0;
    }
    let a = 17.0 / 3.0 * delta * (std::f64::consts::E / delta).ln();
    let b = 2.0 * (1.0 - c) / c * k as f64 * delta;
    a.max(b)
}

/// One JSON-ready audit line.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub check: String,
    pub params: serde_json::Value,
    pub bound: f64,
    pub observed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionSample {
    pub set_size: usize,
    pub trials: usize,
    pub max_observed_fraction: f64,
    pub eta: f64,
}

/// Volume `Σ_{v∈S} indeg(v)` of a node set, divided by the node count.
pub fn volume_fraction(g: &AuxDigraph, set: &[NodeId]) -> f64 {
    let total = g.apex_count() + g.base_count();
    if total == 0 {
        return 0.0;
    }
    set.iter().map(|&v| g.in_degree(v)).sum::<usize>() as f64 / total as f64
}

fn node_at(g: &AuxDigraph, i: usize) -> NodeId {
    if i < g.apex_count() {
        NodeId::apex(i as u32)
    } else {
        NodeId::base((i - g.apex_count()) as u32)
    }
}

/// Largest volume fraction over `trials` uniform node sets of size
/// `floor(δN)`, against `η_{c,k}(δ)`.
pub fn sample_expansion<R: Rng + ?Sized>(
    g: &AuxDigraph,
    c: f64,
    k: usize,
    delta: f64,
    trials: usize,
    rng: &mut R,
) -> ExpansionSample {
    let total = g.apex_count() + g.base_count();
    let size = (delta * total as f64).floor() as usize;
    let mut max = 0.0f64;
    let mut set = Vec::with_capacity(size);
    for _ in 0..trials {
        set.clear();
        set.extend(sample(rng, total, size).into_iter().map(|i| node_at(g, i)));
        max = max.max(volume_fraction(g, &set));
    }
    ExpansionSample { set_size: size, trials, max_observed_fraction: max, eta: eta(c, k, delta) }
}

pub fn expansion_report(sample: &ExpansionSample, nodes: usize, k: usize, c: f64, delta: f64) -> AuditReport {
    AuditReport {
        check: "expansion".into(),
        params: serde_json::json!({ "N": nodes, "k": k, "c": c, "delta": delta, "trials": sample.trials, "set_size": sample.set_size }),
        bound: sample.eta,
        observed: sample.max_observed_fraction,
        pass: sample.max_observed_fraction <= sample.eta,
    }
}

/// Nodes receiving two or more out-edges from the same in-neighbour.
pub fn double_inedge_nodes(g: &AuxDigraph) -> usize {
    let mut hit = vec![false; g.apex_count() + g.base_count()];
    let flat = |v: NodeId| match v.side {
        crate::aux_graph::Side::Apex => v.index as usize,
        crate::aux_graph::Side::Base => g.apex_count() + v.index as usize,
    };
    let mut list: Vec<NodeId> = Vec::with_capacity(g.k());
    for i in 0..hit.len() {
        list.clear();
        list.extend(g.out_targets(node_at(g, i)));
        list.sort_unstable_by_key(|v| v.index);
        for w in list.windows(2) {
            if w[0] == w[1] {
                hit[flat(w[0])] = true;
            }
        }
    }
    hit.iter().filter(|&&h| h).count()
}

#[derive(Debug, Clone, Serialize)]
pub struct DoubleInedgeAudit {
    pub n_side: usize,
    pub k: usize,
    pub counts: Vec<usize>,
    pub max: usize,
    pub bound: f64,
}

impl DoubleInedgeAudit {
    pub fn mean(&self) -> f64 {
        self.counts.iter().sum::<usize>() as f64 / self.counts.len().max(1) as f64
    }

    pub fn report(&self) -> AuditReport {
        AuditReport {
            check: "double_inedges".into(),
            params: serde_json::json!({ "N": self.n_side, "k": self.k, "seeds": self.counts.len(), "mean": self.mean() }),
            bound: self.bound,
            observed: self.max as f64,
            pass: self.max as f64 <= self.bound,
        }
    }
}

/// Builds a uniform k-out graph with `n_side` nodes per part for every seed
/// and counts nodes with a doubled in-edge, against `N^{2/3}` with `N = n_side`.
pub fn audit_claim_1vx(n_side: usize, k: usize, seeds: &[u64]) -> DoubleInedgeAudit {
    let counts: Vec<usize> = seeds
        .iter()
        .map(|&seed| {
            let mut rng = stream_rng(seed, Stream::Builder);
            double_inedge_nodes(&uniform_k_out(n_side, n_side, k, &mut rng))
        })
        .collect();
    DoubleInedgeAudit {
        n_side,
        k,
        max: counts.iter().copied().max().unwrap_or(0),
        counts,
        bound: (n_side as f64).powf(2.0 / 3.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edges(sets: &[&[u32]]) -> Vec<Hyperedge> {
        sets.iter().map(|s| Hyperedge::from_points(s)).collect()
    }

    #[test]
    fn matching_examples() {
        assert!(verify_perfect_matching(6, 3, &edges(&[&[1, 2, 3], &[4, 5, 6]])).is_ok());
        let v = verify_perfect_matching(6, 3, &edges(&[&[1, 2, 3], &[3, 4, 5]])).unwrap_err();
        assert_eq!(v.kind, ViolationKind::VertexMultiplicity);
        assert!(v.detail.contains("point 3"));
        let v = verify_perfect_matching(6, 3, &edges(&[&[1, 2, 3]])).unwrap_err();
        assert_eq!(v.kind, ViolationKind::WrongEdgeCount);
        let v = verify_perfect_matching(6, 3, &edges(&[&[1, 2, 7], &[3, 4, 5]])).unwrap_err();
        assert_eq!(v.kind, ViolationKind::NotPartition);
    }

    #[test]
    fn loose_cycle_examples() {
        let ok = edges(&[&[1, 2, 3], &[3, 4, 5], &[5, 6, 1]]);
        assert!(verify_loose_hamilton(6, 3, &ok).is_ok());
        let v = verify_loose_hamilton(6, 3, &ok[..2]).unwrap_err();
        assert_eq!(v.kind, ViolationKind::WrongEdgeCount);
        // Two edges on four points share two points: rejected.
        let v = verify_loose_hamilton(4, 3, &edges(&[&[1, 2, 3], &[3, 4, 1]])).unwrap_err();
        assert_eq!(v.kind, ViolationKind::WrongEdgeCount);
        // Two disjoint triangles of edges.
        let two = edges(&[&[1, 2, 3], &[3, 4, 5], &[5, 6, 1], &[7, 8, 9], &[9, 10, 11], &[11, 12, 7]]);
        assert_eq!(verify_loose_hamilton(12, 3, &two).unwrap_err().kind, ViolationKind::Disconnected);
        let s4 = edges(&[&[1, 2, 3, 4], &[4, 5, 6, 7], &[7, 8, 9, 1]]);
        assert!(verify_loose_hamilton(9, 4, &s4).is_ok());
    }

    #[test]
    fn eta_values() {
        let e = eta(1.0 / 3.0, 10, 0.00015);
        let a = 17.0 / 3.0 * 0.00015 * (1.0 - 0.00015f64.ln());
        assert!((e - a).abs() < 1e-12);
        assert!((10.0 * e - 0.0833).abs() < 1e-4 && 10.0 * e <= 0.1);
        assert!((eta(1.0 / 3.0, 10, 0.01) - 0.4).abs() < 1e-12);
        assert_eq!(eta(0.5, 10, 0.0), 0.0);
    }

    #[test]
    fn expansion_and_double_edges() {
        let mut rng = stream_rng(7, Stream::Builder);
        let g = uniform_k_out(50, 50, 10, &mut rng);
        assert_eq!(volume_fraction(&g, &[]), 0.0);
        let s = sample_expansion(&g, 1.0 / 3.0, 10, 0.1, 50, &mut rng);
        assert_eq!(s.set_size, 10);
        assert!(s.max_observed_fraction <= s.eta);
        let one = uniform_k_out(30, 30, 1, &mut rng);
        assert_eq!(double_inedge_nodes(&one), 0);
        let audit = audit_claim_1vx(200, 1, &[1, 2]);
        assert_eq!(audit.max, 0);
    }
}
