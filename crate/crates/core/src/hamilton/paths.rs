//! Vertex-disjoint paths (eventually one cycle) over the base points,
//! indexed `0..m`.

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    /// Smaller endpoint; for a cycle, its smallest vertex.
    pub start: u32,
    /// Larger endpoint; equals `start` for an isolated vertex or a cycle.
    pub terminal: u32,
    pub len: u32,
    pub cycle: bool,
}

#[derive(Debug, Clone)]
pub struct PathSystem {
    nb: Vec<[u32; 2]>,
    comp: Vec<u32>,
    pos: Vec<u32>,
    comps: Vec<Component>,
}

impl PathSystem {
    /// `m` isolated vertices.
    pub fn new(m: usize) -> Self {
        let mut p = PathSystem {
            nb: vec![[NONE; 2]; m],
            comp: Vec::new(),
            pos: Vec::new(),
            comps: Vec::new(),
        };
        p.relayout();
        p
    }

    pub fn len(&self) -> usize {
        self.nb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nb.is_empty()
    }

    pub fn neighbors(&self, u: u32) -> impl Iterator<Item = u32> + '_ {
        self.nb[u as usize].iter().copied().filter(|&v| v != NONE)
    }

    pub fn degree(&self, u: u32) -> usize {
        self.neighbors(u).count()
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.nb[u as usize].contains(&v)
    }

    /// Adds `{u, v}`; panics on a repeated edge, a loop, or a third
    /// neighbour. Call [`relayout`](Self::relayout) after a batch of edits.
    pub fn add_edge(&mut self, u: u32, v: u32) {
        assert!(u != v && !self.has_edge(u, v), "bad edge {u}-{v}");
        for (a, b) in [(u, v), (v, u)] {
            let slot = self.nb[a as usize]
                .iter_mut()
                .find(|x| **x == NONE)
                .unwrap_or_else(|| panic!("vertex {a} already has two neighbours"));
            *slot = b;
        }
    }

    pub fn remove_edge(&mut self, u: u32, v: u32) -> bool {
        if !self.has_edge(u, v) {
            return false;
        }
        for (a, b) in [(u, v), (v, u)] {
            let slot = self.nb[a as usize].iter_mut().find(|x| **x == b).unwrap();
            *slot = NONE;
        }
        true
    }

    /// Recomputes components, endpoints and positions. Paths are walked from
    /// their start, so `pos(start) = 0`.
    pub fn relayout(&mut self) {
        let m = self.nb.len();
        self.comp = vec![NONE; m];
        self.pos = vec![NONE; m];
        self.comps.clear();
        let mut seq = Vec::new();
        for u in 0..m as u32 {
            if self.comp[u as usize] == NONE && self.degree(u) <= 1 {
                self.walk(u, &mut seq);
                let (a, b) = (seq[0], *seq.last().unwrap());
                if b < a {
                    seq.reverse();
                }
                self.register(&seq, false);
            }
        }
        for u in 0..m as u32 {
            if self.comp[u as usize] == NONE {
                self.walk(u, &mut seq);
                self.register(&seq, true);
            }
        }
    }

    fn walk(&self, from: u32, seq: &mut Vec<u32>) {
        seq.clear();
        let (mut prev, mut cur) = (NONE, from);
        loop {
            seq.push(cur);
            let next = self.neighbors(cur).find(|&v| v != prev && v != from);
            match next {
                Some(v) => {
                    prev = cur;
                    cur = v;
                }
                None => break,
            }
        }
    }

    fn register(&mut self, seq: &[u32], cycle: bool) {
        let id = self.comps.len() as u32;
        for (i, &v) in seq.iter().enumerate() {
            self.comp[v as usize] = id;
            self.pos[v as usize] = i as u32;
        }
        let start = seq[0];
        self.comps.push(Component {
            start,
            terminal: if cycle { start } else { *seq.last().unwrap() },
            len: seq.len() as u32,
            cycle,
        });
    }

    pub fn comp_of(&self, u: u32) -> u32 {
        self.comp[u as usize]
    }

    pub fn component(&self, id: u32) -> Component {
        self.comps[id as usize]
    }

    pub fn pos(&self, u: u32) -> u32 {
        self.pos[u as usize]
    }

    pub fn components(&self) -> &[Component] {
        &self.comps
    }

    /// Number of path components (isolated vertices included, cycles not).
    pub fn path_count(&self) -> usize {
        self.comps.iter().filter(|c| !c.cycle).count()
    }

    pub fn is_single_cycle(&self) -> bool {
        self.comps.len() == 1 && self.comps[0].cycle
    }

    /// `(start, terminal)` of every path component.
    pub fn path_ends(&self) -> Vec<(u32, u32)> {
        self.comps.iter().filter(|c| !c.cycle).map(|c| (c.start, c.terminal)).collect()
    }

    /// True iff `u` is currently an endpoint of some path.
    pub fn is_endpoint(&self, u: u32) -> bool {
        let c = self.comps[self.comp[u as usize] as usize];
        !c.cycle && (c.start == u || c.terminal == u)
    }

    /// The neighbour of `u` one step along its path towards `v` (same path).
    pub fn step_towards(&self, u: u32, v: u32) -> Option<u32> {
        let (pu, pv) = (self.pos(u), self.pos(v));
        let want = if pu < pv { pu + 1 } else { pu.checked_sub(1)? };
        self.neighbors(u).find(|&w| self.pos(w) == want)
    }

    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for u in 0..self.nb.len() as u32 {
            for v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Structural check: symmetric adjacency, at most two neighbours, and a
    /// layout consistent with the adjacency.
    pub fn check(&self) -> Result<(), String> {
        for u in 0..self.nb.len() as u32 {
            let [x, y] = self.nb[u as usize];
            if x != NONE && x == y {
                return Err(format!("double edge at {u}"));
            }
            for v in self.neighbors(u) {
                if !self.has_edge(v, u) {
                    return Err(format!("edge {u}-{v} is one-sided"));
                }
                if self.comp_of(u) != self.comp_of(v) {
                    return Err(format!("edge {u}-{v} crosses components"));
                }
            }
        }
        let mut fresh = self.clone();
        fresh.relayout();
        if fresh.comps != self.comps || fresh.comp != self.comp {
            return Err("stale layout".into());
        }
        let covered: u32 = self.comps.iter().map(|c| c.len).sum();
        if covered as usize != self.nb.len() {
            return Err("components do not cover every vertex".into());
        }
        Ok(())
    }
}
