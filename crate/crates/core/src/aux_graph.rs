//! Directed bipartite multigraph on apex and base nodes.
//!
//! Every node owns exactly `k` out-edges into the opposite side when the
//! graph is built. Nodes are later deleted (never re-added) and a blocked set
//! `Q` records nodes that must not be deleted, so that no surviving node ever
//! loses more than one of its out-edges.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Side {
    Apex,
    Base,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Apex => Side::Base,
            Side::Base => Side::Apex,
        }
    }
}

/// A node of the auxiliary graph, addressed by side and index within the side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId {
    pub side: Side,
    pub index: u32,
}

impl NodeId {
    pub fn apex(index: u32) -> Self {
        NodeId { side: Side::Apex, index }
    }

    pub fn base(index: u32) -> Self {
        NodeId { side: Side::Base, index }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.side {
            Side::Apex => "A",
            Side::Base => "B",
        };
        write!(f, "{tag}:{}", self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {0} is out of range")]
    OutOfRange(NodeId),
    #[error("out-edge of {from} points to {to} on the same side")]
    SameSide { from: NodeId, to: NodeId },
    #[error("node {node} has {len} out-edges, expected {k}")]
    WrongOutDegree { node: NodeId, len: usize, k: usize },
    #[error("expected {expected} out-lists, got {got}")]
    WrongListCount { expected: usize, got: usize },
    #[error("node {0} is not alive")]
    NotAlive(NodeId),
    #[error("node {0} is blocked")]
    Blocked(NodeId),
    #[error("node {0} has a parallel in-edge")]
    ParallelInEdge(NodeId),
    #[error("nodes {0} and {1} share an in-neighbour")]
    SharedInNeighbour(NodeId, NodeId),
}

/// Effective out-degree summary over alive nodes.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct DegreeAudit {
    pub min: Option<usize>,
    pub max: Option<usize>,
    pub histogram: BTreeMap<usize, usize>,
}

/// Result of [`AuxDigraph::delete_with_blocking`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Deletion {
    /// `N⁺(N⁻(victims))` restricted to alive nodes not already blocked,
    /// computed before the victims were removed.
    pub newly_blocked: Vec<NodeId>,
    /// Alive in-neighbours of the victims; each lost exactly one out-edge.
    pub touched: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct AuxDigraph {
    apex_count: u32,
    base_count: u32,
    k: u32,
    /// `k` targets per node, flat ids, node-major.
    out: Vec<u32>,
    /// Alive in-neighbours (flat ids, with multiplicity).
    inn: Vec<Vec<u32>>,
    alive: Vec<bool>,
    blocked: Vec<bool>,
    blocked_len: usize,
    /// Out-edges into alive targets, maintained on deletion.
    live_out: Vec<u32>,
    alive_apexes: u32,
    alive_bases: u32,
}

impl AuxDigraph {
    /// Builds a graph from one out-list per node: apexes `0..apexes` first,
    /// then bases `0..bases`.
    pub fn new(
        apexes: usize,
        bases: usize,
        k: usize,
        out_lists: &[Vec<NodeId>],
    ) -> Result<Self, GraphError> {
        if out_lists.len() != apexes + bases {
            return Err(GraphError::WrongListCount {
                expected: apexes + bases,
                got: out_lists.len(),
            });
        }
        let mut flat = Vec::with_capacity((apexes + bases) * k);
        for (pos, list) in out_lists.iter().enumerate() {
            let from = if pos < apexes {
                NodeId::apex(pos as u32)
            } else {
                NodeId::base((pos - apexes) as u32)
            };
            if list.len() != k {
                return Err(GraphError::WrongOutDegree { node: from, len: list.len(), k });
            }
            for &to in list {
                if to.side == from.side {
                    return Err(GraphError::SameSide { from, to });
                }
                let limit = match to.side {
                    Side::Apex => apexes,
                    Side::Base => bases,
                };
                if to.index as usize >= limit {
                    return Err(GraphError::OutOfRange(to));
                }
                flat.push(to.index);
            }
        }
        Self::from_local(apexes, bases, k, flat)
    }

    /// Builds a graph from local target indices: node `v`'s out-list is
    /// `targets[v*k..(v+1)*k]`, each an index into the opposite side.
    pub fn from_local(
        apexes: usize,
        bases: usize,
        k: usize,
        targets: Vec<u32>,
    ) -> Result<Self, GraphError> {
        let total = apexes + bases;
        if targets.len() != total * k {
            return Err(GraphError::WrongListCount {
                expected: total * k,
                got: targets.len(),
            });
        }
        let mut out = targets;
        for v in 0..total {
            let (offset, limit, side) = if v < apexes {
                (apexes as u32, bases, Side::Base)
            } else {
                (0, apexes, Side::Apex)
            };
            for t in &mut out[v * k..(v + 1) * k] {
                if *t as usize >= limit {
                    return Err(GraphError::OutOfRange(NodeId { side, index: *t }));
                }
                *t += offset;
            }
        }
        let mut inn = vec![Vec::new(); total];
        for v in 0..total {
            for &t in &out[v * k..(v + 1) * k] {
                inn[t as usize].push(v as u32);
            }
        }
        Ok(AuxDigraph {
            apex_count: apexes as u32,
            base_count: bases as u32,
            k: k as u32,
            out,
            inn,
            alive: vec![true; total],
            blocked: vec![false; total],
            blocked_len: 0,
            live_out: vec![k as u32; total],
            alive_apexes: apexes as u32,
            alive_bases: bases as u32,
        })
    }

    pub fn k(&self) -> usize {
        self.k as usize
    }

    pub fn apex_count(&self) -> usize {
        self.apex_count as usize
    }

    pub fn base_count(&self) -> usize {
        self.base_count as usize
    }

    pub fn alive_count(&self, side: Side) -> usize {
        match side {
            Side::Apex => self.alive_apexes as usize,
            Side::Base => self.alive_bases as usize,
        }
    }

    fn flat(&self, id: NodeId) -> Result<u32, GraphError> {
        match id.side {
            Side::Apex if id.index < self.apex_count => Ok(id.index),
            Side::Base if id.index < self.base_count => Ok(self.apex_count + id.index),
            _ => Err(GraphError::OutOfRange(id)),
        }
    }

    fn id(&self, flat: u32) -> NodeId {
        if flat < self.apex_count {
            NodeId::apex(flat)
        } else {
            NodeId::base(flat - self.apex_count)
        }
    }

    fn slot(&self, flat: u32) -> &[u32] {
        let k = self.k as usize;
        let v = flat as usize;
        &self.out[v * k..(v + 1) * k]
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.flat(id).is_ok()
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        self.flat(id).map(|v| self.alive[v as usize]).unwrap_or(false)
    }

    pub fn is_blocked(&self, id: NodeId) -> bool {
        self.flat(id).map(|v| self.blocked[v as usize]).unwrap_or(false)
    }

    pub fn blocked_len(&self) -> usize {
        self.blocked_len
    }

    pub fn blocked(&self) -> Vec<NodeId> {
        (0..self.alive.len() as u32)
            .filter(|&v| self.blocked[v as usize])
            .map(|v| self.id(v))
            .collect()
    }

    /// Adds nodes to `Q`. `Q` only grows.
    pub fn block(&mut self, nodes: &[NodeId]) {
        for &id in nodes {
            if let Ok(v) = self.flat(id) {
                if !self.blocked[v as usize] {
                    self.blocked[v as usize] = true;
                    self.blocked_len += 1;
                }
            }
        }
    }

    /// All `k` out-targets of a node as built, including deleted ones.
    pub fn out_targets(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let v = self.flat(id).expect("node out of range");
        self.slot(v).iter().map(move |&t| self.id(t))
    }

    /// Alive in-neighbours with multiplicity.
    pub fn in_neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let v = self.flat(id).expect("node out of range");
        self.inn[v as usize].iter().map(move |&u| self.id(u))
    }

    pub fn in_degree(&self, id: NodeId) -> usize {
        self.flat(id).map(|v| self.inn[v as usize].len()).unwrap_or(0)
    }

    pub fn effective_out_degree(&self, id: NodeId) -> usize {
        self.flat(id).map(|v| self.live_out[v as usize] as usize).unwrap_or(0)
    }

    pub fn alive_nodes(&self, side: Side) -> impl Iterator<Item = NodeId> + '_ {
        let range = match side {
            Side::Apex => 0..self.apex_count,
            Side::Base => self.apex_count..self.apex_count + self.base_count,
        };
        range.filter(|&v| self.alive[v as usize]).map(|v| self.id(v))
    }

    fn has_parallel_in_edge(&self, v: u32) -> bool {
        let list = &self.inn[v as usize];
        // In-lists are short (about k), a quadratic scan beats hashing.
        list.iter()
            .enumerate()
            .any(|(i, u)| list[i + 1..].contains(u))
    }

    /// Nodes with at least two parallel in-edges from one in-neighbour.
    /// The caller installs the result as the initial `Q`.
    pub fn initial_blocked(&self) -> Vec<NodeId> {
        (0..self.alive.len() as u32)
            .filter(|&v| self.alive[v as usize] && self.has_parallel_in_edge(v))
            .map(|v| self.id(v))
            .collect()
    }

    /// True iff no alive node has out-edges into two distinct members of
    /// `nodes`.
    pub fn disjoint_in_neighborhoods(&self, nodes: &[NodeId]) -> Result<bool, GraphError> {
        let mut seen: Vec<(u32, u32)> = Vec::new();
        let mut members: Vec<u32> = Vec::with_capacity(nodes.len());
        for &id in nodes {
            let v = self.flat(id)?;
            if !self.alive[v as usize] {
                return Err(GraphError::NotAlive(id));
            }
            if !members.contains(&v) {
                members.push(v);
            }
        }
        for &v in &members {
            for &u in &self.inn[v as usize] {
                if seen.iter().any(|&(w, m)| w == u && m != v) {
                    return Ok(false);
                }
                seen.push((u, v));
            }
        }
        Ok(true)
    }

    fn check_victims(&self, victims: &[NodeId]) -> Result<Vec<u32>, GraphError> {
        let mut flat = Vec::with_capacity(victims.len());
        for &id in victims {
            let v = self.flat(id)?;
            if !self.alive[v as usize] {
                return Err(GraphError::NotAlive(id));
            }
            if self.blocked[v as usize] {
                return Err(GraphError::Blocked(id));
            }
            if self.has_parallel_in_edge(v) {
                return Err(GraphError::ParallelInEdge(id));
            }
            if !flat.contains(&v) {
                flat.push(v);
            }
        }
        for (i, &v) in flat.iter().enumerate() {
            for &w in &flat[i + 1..] {
                if self.inn[v as usize].iter().any(|u| self.inn[w as usize].contains(u)) {
                    return Err(GraphError::SharedInNeighbour(self.id(v), self.id(w)));
                }
            }
        }
        Ok(flat)
    }

    /// Deletes `victims` and reports `N⁺(N⁻(victims))`.
    ///
    /// Preconditions (checked, reported as errors without mutating): every
    /// victim is alive, unblocked, free of parallel in-edges, and no two
    /// victims share an in-neighbour. Under these, every alive in-neighbour
    /// of a victim loses exactly one out-edge.
    pub fn delete_with_blocking(&mut self, victims: &[NodeId]) -> Result<Deletion, GraphError> {
        let flat = self.check_victims(victims)?;
        let mut mark = vec![];
        let mut touched = Vec::new();
        let mut newly = Vec::new();
        for &v in &flat {
            for &u in &self.inn[v as usize] {
                touched.push(u);
                for &w in self.slot(u) {
                    if self.alive[w as usize]
                        && !self.blocked[w as usize]
                        && !flat.contains(&w)
                        && !mark.contains(&w)
                    {
                        mark.push(w);
                        newly.push(w);
                    }
                }
            }
        }
        for &v in &flat {
            self.alive[v as usize] = false;
            if v < self.apex_count {
                self.alive_apexes -= 1;
            } else {
                self.alive_bases -= 1;
            }
            for &u in &self.inn[v as usize] {
                self.live_out[u as usize] -= 1;
            }
            let k = self.k as usize;
            for i in 0..k {
                let t = self.out[v as usize * k + i] as usize;
                if let Some(pos) = self.inn[t].iter().position(|&x| x == v) {
                    self.inn[t].swap_remove(pos);
                }
            }
        }
        for &v in &flat {
            self.inn[v as usize].clear();
        }
        touched.sort_unstable();
        touched.dedup();
        Ok(Deletion {
            newly_blocked: newly.into_iter().map(|w| self.id(w)).collect(),
            touched: touched.into_iter().map(|u| self.id(u)).collect(),
        })
    }

    /// Recomputes effective out-degrees from the out-lists and alive flags.
    pub fn audit_outdegrees(&self) -> DegreeAudit {
        let mut audit = DegreeAudit::default();
        for v in 0..self.alive.len() as u32 {
            if !self.alive[v as usize] {
                continue;
            }
            let d = self.slot(v).iter().filter(|&&t| self.alive[t as usize]).count();
            *audit.histogram.entry(d).or_default() += 1;
        }
        audit.min = audit.histogram.keys().next().copied();
        audit.max = audit.histogram.keys().next_back().copied();
        audit
    }

    /// Full check that the in-index is the transpose of the out-lists
    /// restricted to alive nodes, and that the degree counters agree.
    pub fn check_consistency(&self) -> bool {
        let total = self.alive.len();
        let mut expect: Vec<Vec<u32>> = vec![Vec::new(); total];
        for v in 0..total as u32 {
            if !self.alive[v as usize] {
                continue;
            }
            for &t in self.slot(v) {
                if self.alive[t as usize] {
                    expect[t as usize].push(v);
                }
            }
            let live = self.slot(v).iter().filter(|&&t| self.alive[t as usize]).count();
            if live != self.live_out[v as usize] as usize {
                return false;
            }
        }
        expect.iter_mut().zip(&self.inn).enumerate().all(|(t, (e, got))| {
            if !self.alive[t] {
                return got.is_empty();
            }
            let mut got = got.clone();
            e.sort_unstable();
            got.sort_unstable();
            *e == got
        })
    }

    /// Debug dump: one line per alive node, then the blocked set.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for v in 0..self.alive.len() as u32 {
            if !self.alive[v as usize] {
                continue;
            }
            let targets: Vec<String> = self.slot(v).iter().map(|&t| self.id(t).to_string()).collect();
            let _ = writeln!(s, "{} -> [{}]", self.id(v), targets.join(", "));
        }
        let q: Vec<String> = self.blocked().iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "Q: [{}]", q.join(", "));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(i: u32) -> NodeId {
        NodeId::apex(i)
    }
    fn b(i: u32) -> NodeId {
        NodeId::base(i)
    }

    /// Brute-force `N⁺(N⁻(S))` by scanning every out-list.
    fn brute_out_of_in(g: &AuxDigraph, s: &[NodeId]) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = (0..g.apex_count() as u32).map(a).collect();
        nodes.extend((0..g.base_count() as u32).map(b));
        let ins: Vec<NodeId> = nodes
            .iter()
            .copied()
            .filter(|&u| g.is_alive(u) && g.out_targets(u).any(|t| s.contains(&t)))
            .collect();
        let mut outs: Vec<NodeId> = ins
            .iter()
            .flat_map(|&u| g.out_targets(u).collect::<Vec<_>>())
            .filter(|t| g.is_alive(*t) && !s.contains(t) && !g.is_blocked(*t))
            .collect();
        outs.sort();
        outs.dedup();
        outs
    }

    /// 4 apexes, 4 bases, k = 2.
    fn eight_node() -> AuxDigraph {
        let lists = vec![
            vec![b(0), b(3)],
            vec![b(3), b(1)],
            vec![b(2), b(1)],
            vec![b(0), b(2)],
            vec![a(0), a(1)],
            vec![a(2), a(3)],
            vec![a(1), a(2)],
            vec![a(3), a(0)],
        ];
        AuxDigraph::new(4, 4, 2, &lists).unwrap()
    }

    #[test]
    fn empty_graph() {
        let g = AuxDigraph::new(0, 0, 3, &[]).unwrap();
        assert!(g.initial_blocked().is_empty());
        assert!(g.audit_outdegrees().histogram.is_empty());
        assert_eq!(g.alive_nodes(Side::Apex).count(), 0);
        assert_eq!(g.dump(), "Q: []\n");
    }

    #[test]
    fn transpose_of_small_graph() {
        let lists = vec![vec![b(0)], vec![b(0)], vec![a(0)], vec![a(1)]];
        let g = AuxDigraph::new(2, 2, 1, &lists).unwrap();
        let mut ins: Vec<NodeId> = g.in_neighbors(b(0)).collect();
        ins.sort();
        assert_eq!(ins, vec![a(0), a(1)]);
        assert!(g.check_consistency());
    }

    #[test]
    fn rejects_malformed_lists() {
        let same = vec![vec![a(1)], vec![b(0)], vec![a(0)], vec![a(1)]];
        assert!(matches!(AuxDigraph::new(2, 2, 1, &same), Err(GraphError::SameSide { .. })));
        let range = vec![vec![b(5)], vec![b(0)], vec![a(0)], vec![a(1)]];
        assert!(matches!(AuxDigraph::new(2, 2, 1, &range), Err(GraphError::OutOfRange(_))));
        let short = vec![vec![], vec![b(0)], vec![a(0)], vec![a(1)]];
        assert!(matches!(AuxDigraph::new(2, 2, 1, &short), Err(GraphError::WrongOutDegree { .. })));
    }

    #[test]
    fn multi_edges_and_initial_blocked() {
        let lists = vec![vec![b(0), b(0)], vec![b(0), b(1)], vec![a(0), a(1)], vec![a(1), a(0)]];
        let g = AuxDigraph::new(2, 2, 2, &lists).unwrap();
        assert_eq!(g.in_degree(b(0)), 3);
        assert_eq!(g.initial_blocked(), vec![b(0)]);
        assert!(eight_node().initial_blocked().is_empty());
    }

    #[test]
    fn disjointness_queries() {
        // a1 points at both b3 and b1.
        let g = eight_node();
        assert!(g.disjoint_in_neighborhoods(&[b(1)]).unwrap());
        assert!(!g.disjoint_in_neighborhoods(&[b(1), b(3)]).unwrap());
        // N⁻(b0) = {a0, a3}, N⁻(b1) = {a1, a2}.
        assert!(g.disjoint_in_neighborhoods(&[b(0), b(1)]).unwrap());
    }

    #[test]
    fn deletion_matches_brute_force_and_degrades_once() {
        let mut g = eight_node();
        assert_eq!(g.delete_with_blocking(&[]).unwrap(), Deletion::default());
        let expect = brute_out_of_in(&g, &[b(3)]);
        let del = g.delete_with_blocking(&[b(3)]).unwrap();
        let mut got = del.newly_blocked.clone();
        got.sort();
        assert_eq!(got, expect);
        assert_eq!(del.touched, vec![a(0), a(1)]);
        for u in del.touched {
            assert_eq!(g.effective_out_degree(u), 1);
        }
        assert!(!g.is_alive(b(3)));
        assert!(g.check_consistency());
        assert_eq!(g.audit_outdegrees().min, Some(1));
    }

    #[test]
    fn deletion_contract_errors_leave_graph_untouched() {
        let mut g = eight_node();
        let before = g.dump();
        assert!(matches!(
            g.delete_with_blocking(&[b(1), b(3)]),
            Err(GraphError::SharedInNeighbour(..))
        ));
        g.block(&[b(2)]);
        assert_eq!(g.delete_with_blocking(&[b(2)]), Err(GraphError::Blocked(b(2))));
        g.delete_with_blocking(&[b(0)]).unwrap();
        assert_eq!(g.delete_with_blocking(&[b(0)]), Err(GraphError::NotAlive(b(0))));
        assert_ne!(before, g.dump());
    }

    #[test]
    fn dump_format() {
        let lists = vec![vec![b(0)], vec![a(0)]];
        let mut g = AuxDigraph::new(1, 1, 1, &lists).unwrap();
        g.block(&[a(0)]);
        assert_eq!(g.dump(), "A:0 -> [B:0]\nB:0 -> [A:0]\nQ: [A:0]\n");
    }
}
