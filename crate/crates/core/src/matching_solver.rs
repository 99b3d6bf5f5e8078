//! Maximum bipartite matching (Hopcroft–Karp) on the undirected view of an
//! auxiliary graph, with Hall-violation witnesses when no perfect matching
//! exists.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::aux_graph::{AuxDigraph, NodeId, Side};
use crate::hyperedge::Hyperedge;

const NONE: u32 = u32::MAX;

/// Alive apexes on the left, alive bases on the right, edge directions
/// erased and parallel edges collapsed.
#[derive(Debug, Clone)]
pub struct BipartiteView {
    pub left: Vec<NodeId>,
    pub right: Vec<NodeId>,
    adj: Vec<Vec<u32>>,
}

impl BipartiteView {
    pub fn from_graph(g: &AuxDigraph) -> Self {
        let left: Vec<NodeId> = g.alive_nodes(Side::Apex).collect();
        let right: Vec<NodeId> = g.alive_nodes(Side::Base).collect();
        let mut rpos = vec![NONE; g.base_count()];
        for (i, b) in right.iter().enumerate() {
            rpos[b.index as usize] = i as u32;
        }
        let mut lpos = vec![NONE; g.apex_count()];
        for (i, a) in left.iter().enumerate() {
            lpos[a.index as usize] = i as u32;
        }
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); left.len()];
        for (i, &a) in left.iter().enumerate() {
            for t in g.out_targets(a) {
                let r = rpos[t.index as usize];
                if r != NONE {
                    adj[i].push(r);
                }
            }
        }
        for (j, &b) in right.iter().enumerate() {
            for t in g.out_targets(b) {
                let l = lpos[t.index as usize];
                if l != NONE {
                    adj[l as usize].push(j as u32);
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        BipartiteView { left, right, adj }
    }

    /// A view over plain index pairs; left node `i` is apex `i`, right node
    /// `j` is base `j`.
    pub fn from_edges(left: usize, right: usize, edges: &[(u32, u32)]) -> Self {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); left];
        for &(l, r) in edges {
            assert!((l as usize) < left && (r as usize) < right, "edge out of range");
            adj[l as usize].push(r);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        BipartiteView {
            left: (0..left as u32).map(NodeId::apex).collect(),
            right: (0..right as u32).map(NodeId::base).collect(),
            adj,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn neighbors(&self, l: usize) -> &[u32] {
        &self.adj[l]
    }

    fn reverse(&self) -> Vec<Vec<u32>> {
        let mut rev = vec![Vec::new(); self.right.len()];
        for (l, list) in self.adj.iter().enumerate() {
            for &r in list {
                rev[r as usize].push(l as u32);
            }
        }
        rev
    }
}

/// `N(S) ⊆ T` with `|T| < |S|`. `S` lies on `side`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HallWitness {
    pub side: Side,
    pub s: Vec<NodeId>,
    pub t: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct MatchingResult {
    /// `(apex, base)` pairs.
    pub pairs: Vec<(NodeId, NodeId)>,
    pub perfect: bool,
    pub witness: Option<HallWitness>,
}

impl MatchingResult {
    pub fn size(&self) -> usize {
        self.pairs.len()
    }
}

struct State {
    match_l: Vec<u32>,
    match_r: Vec<u32>,
}

fn hopcroft_karp(view: &BipartiteView) -> State {
    let nl = view.left.len();
    let nr = view.right.len();
    let mut st = State { match_l: vec![NONE; nl], match_r: vec![NONE; nr] };
    let inf = u32::MAX;
    let mut dist = vec![inf; nl];
    let mut it = vec![0usize; nl];
    let mut queue = VecDeque::new();
    let mut stack: Vec<u32> = Vec::new();
    let mut via: Vec<u32> = Vec::new();
    loop {
        queue.clear();
        for l in 0..nl {
            if st.match_l[l] == NONE {
                dist[l] = 0;
                queue.push_back(l as u32);
            } else {
                dist[l] = inf;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &view.adj[l as usize] {
                let m = st.match_r[r as usize];
                if m == NONE {
                    found = true;
                } else if dist[m as usize] == inf {
                    dist[m as usize] = dist[l as usize] + 1;
                    queue.push_back(m);
                }
            }
        }
        if !found {
            break;
        }
        it.iter_mut().for_each(|x| *x = 0);
        for start in 0..nl {
            if st.match_l[start] != NONE {
                continue;
            }
            stack.clear();
            via.clear();
            stack.push(start as u32);
            while let Some(&l) = stack.last() {
                let lu = l as usize;
                if it[lu] == view.adj[lu].len() {
                    dist[lu] = inf;
                    stack.pop();
                    via.pop();
                    continue;
                }
                let r = view.adj[lu][it[lu]];
                it[lu] += 1;
                let m = st.match_r[r as usize];
                if m == NONE {
                    via.push(r);
                    for (&l2, &r2) in stack.iter().zip(&via) {
                        st.match_l[l2 as usize] = r2;
                        st.match_r[r2 as usize] = l2;
                    }
                    break;
                }
                if dist[m as usize] == dist[lu] + 1 {
                    via.push(r);
                    stack.push(m);
                }
            }
        }
    }
    st
}

/// Alternating reachability from the free nodes of one side.
fn alternating_reach(
    adj: &[Vec<u32>],
    own: &[u32],
    other: &[u32],
) -> (Vec<u32>, Vec<u32>) {
    let mut seen_own = vec![false; own.len()];
    let mut seen_other = vec![false; other.len()];
    let mut queue: VecDeque<u32> = (0..own.len() as u32).filter(|&x| own[x as usize] == NONE).collect();
    for &x in &queue {
        seen_own[x as usize] = true;
    }
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x as usize] {
            if seen_other[y as usize] {
                continue;
            }
            seen_other[y as usize] = true;
            let m = other[y as usize];
            if m != NONE && !seen_own[m as usize] {
                seen_own[m as usize] = true;
                queue.push_back(m);
            }
        }
    }
    let s = (0..own.len() as u32).filter(|&x| seen_own[x as usize]).collect();
    let t = (0..other.len() as u32).filter(|&y| seen_other[y as usize]).collect();
    (s, t)
}

pub fn max_matching(view: &BipartiteView) -> MatchingResult {
    let st = hopcroft_karp(view);
    let pairs: Vec<(NodeId, NodeId)> = st
        .match_l
        .iter()
        .enumerate()
        .filter(|&(_, &r)| r != NONE)
        .map(|(l, &r)| (view.left[l], view.right[r as usize]))
        .collect();
    let perfect = pairs.len() == view.left.len() && pairs.len() == view.right.len();
    let witness = if perfect {
        None
    } else if st.match_l.contains(&NONE) {
        let (s, t) = alternating_reach(&view.adj, &st.match_l, &st.match_r);
        Some(HallWitness {
            side: Side::Apex,
            s: s.iter().map(|&l| view.left[l as usize]).collect(),
            t: t.iter().map(|&r| view.right[r as usize]).collect(),
        })
    } else {
        let rev = view.reverse();
        let (s, t) = alternating_reach(&rev, &st.match_r, &st.match_l);
        Some(HallWitness {
            side: Side::Base,
            s: s.iter().map(|&r| view.right[r as usize]).collect(),
            t: t.iter().map(|&l| view.left[l as usize]).collect(),
        })
    };
    MatchingResult { pairs, perfect, witness }
}

/// True iff an augmenting path exists for `pairs` in `view`: one BFS over
/// alternating paths from the free left nodes.
pub fn has_augmenting_path(view: &BipartiteView, pairs: &[(NodeId, NodeId)]) -> bool {
    let lpos: HashMap<NodeId, u32> = view.left.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    let rpos: HashMap<NodeId, u32> = view.right.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    let mut match_l = vec![NONE; view.left.len()];
    let mut match_r = vec![NONE; view.right.len()];
    for (a, b) in pairs {
        let (l, r) = (lpos[a], rpos[b]);
        match_l[l as usize] = r;
        match_r[r as usize] = l;
    }
    let (_, t) = alternating_reach(&view.adj, &match_l, &match_r);
    t.iter().any(|&r| match_r[r as usize] == NONE)
}

/// Maps each auxiliary edge `(apex, base)` to the hyperedge that was created
/// with it; among parallel edges the earliest-created one is kept.
#[derive(Debug, Clone, Default)]
pub struct Provenance {
    map: HashMap<(u32, u32), (u32, Hyperedge)>,
}

impl Provenance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, apex: u32, base: u32, created: u32, edge: Hyperedge) {
        let slot = self.map.entry((apex, base)).or_insert((created, edge.clone()));
        if created < slot.0 {
            *slot = (created, edge);
        }
    }

    pub fn get(&self, apex: u32, base: u32) -> Option<&Hyperedge> {
        self.map.get(&(apex, base)).map(|(_, e)| e)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProvenanceError {
    #[error("no hyperedge recorded for auxiliary edge ({0}, {1})")]
    Missing(NodeId, NodeId),
    #[error("matching is not perfect")]
    NotPerfect,
}

pub fn matching_to_hyperedges(
    result: &MatchingResult,
    provenance: &Provenance,
) -> Result<Vec<Hyperedge>, ProvenanceError> {
    if !result.perfect {
        return Err(ProvenanceError::NotPerfect);
    }
    result
        .pairs
        .iter()
        .map(|&(a, b)| {
            provenance
                .get(a.index, b.index)
                .cloned()
                .ok_or(ProvenanceError::Missing(a, b))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_three_by_three() {
        let edges: Vec<(u32, u32)> = (0..3).flat_map(|l| (0..3).map(move |r| (l, r))).collect();
        let res = max_matching(&BipartiteView::from_edges(3, 3, &edges));
        assert!(res.perfect);
        assert_eq!(res.size(), 3);
        assert!(res.witness.is_none());
    }

    #[test]
    fn forced_hall_violation() {
        let view = BipartiteView::from_edges(2, 2, &[(0, 0), (1, 0)]);
        let res = max_matching(&view);
        assert!(!res.perfect);
        let w = res.witness.unwrap();
        assert_eq!(w.side, Side::Apex);
        assert_eq!(w.s, vec![NodeId::apex(0), NodeId::apex(1)]);
        assert_eq!(w.t, vec![NodeId::base(0)]);
        assert!(!has_augmenting_path(&view, &res.pairs));
    }

    #[test]
    fn witness_on_base_side_when_apexes_are_short() {
        let view = BipartiteView::from_edges(1, 3, &[(0, 0), (0, 1)]);
        let res = max_matching(&view);
        let w = res.witness.unwrap();
        assert_eq!(w.side, Side::Base);
        assert!(w.t.len() < w.s.len());
    }

    #[test]
    fn hyperedges_from_provenance() {
        let mut prov = Provenance::new();
        prov.insert(0, 0, 5, Hyperedge::from_points(&[4, 1, 3]));
        prov.insert(0, 0, 2, Hyperedge::from_points(&[4, 3, 1]));
        let res = max_matching(&BipartiteView::from_edges(1, 1, &[(0, 0)]));
        let edges = matching_to_hyperedges(&res, &prov).unwrap();
        assert_eq!(edges, vec![Hyperedge::from_points(&[1, 3, 4])]);

        let empty = max_matching(&BipartiteView::from_edges(0, 0, &[]));
        assert!(matching_to_hyperedges(&empty, &prov).unwrap().is_empty());

        let res = max_matching(&BipartiteView::from_edges(2, 2, &[(0, 0), (1, 1)]));
        assert_eq!(
            matching_to_hyperedges(&res, &prov),
            Err(ProvenanceError::Missing(NodeId::apex(1), NodeId::base(1)))
        );
    }
}
