//! Perfect-matching strategy. Points are split into apexes (single points)
//! and bases (disjoint `(s-1)`-tuples). Phase 1 grows a k-out auxiliary
//! graph, Phase 2a absorbs the points of failed nodes, Phase 2b trims apexes
//! until both sides are equal, and Phase 3 matches the rest.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::aux_graph::{AuxDigraph, Deletion, NodeId, Side};
use crate::hyperedge::{Hyperedge, Point};
use crate::kout::{build_k_out, BuilderParams, KOut};
use crate::matching_solver::{has_augmenting_path, matching_to_hyperedges, max_matching, BipartiteView, Provenance};
use crate::process::{stream_rng, Offer, Response, Status, Strategy, StrategyReport, Stream};
use crate::profile::{Profile, ProfileName};

const NONE: u32 = u32::MAX;

/// Largest deleted fraction under which the Hall argument applies.
pub const RHO_MAX: f64 = 0.049;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("n = {n} is not divisible by s = {s}")]
    Divisibility { n: u32, s: usize },
    #[error("s = {0} is below 3")]
    SmallS(usize),
    #[error("no valid apex count for n = {0}")]
    Empty(u32),
}

/// Apexes are points `1..=apexes`; base `j` is the `(s-1)` consecutive
/// points after them starting at `apexes + 1 + j(s-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub n: u32,
    pub s: usize,
    pub apexes: u32,
    pub bases: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Apex(u32),
    Base(u32),
}

/// `|A₀|` is the integer nearest `n/s + 4·surplus·n` with `n − |A₀|`
/// divisible by `s − 1`; ties go to the larger value.
pub fn partition_vertices(n: u32, s: usize, surplus: f64) -> Result<Partition, PartitionError> {
    if s < 3 {
        return Err(PartitionError::SmallS(s));
    }
    if n == 0 || n as usize % s != 0 {
        return Err(PartitionError::Divisibility { n, s });
    }
    let target = n as f64 / s as f64 + 4.0 * surplus * n as f64;
    let step = s as i64 - 1;
    let lo = (target.floor() as i64 - step).max(1);
    let hi = (target.ceil() as i64 + step).min(n as i64 - step);
    let apexes = (lo..=hi)
        .filter(|a| (n as i64 - a) % step == 0)
        .min_by(|&x, &y| {
            let (dx, dy) = ((x as f64 - target).abs(), (y as f64 - target).abs());
            dx.partial_cmp(&dy).unwrap().then(y.cmp(&x))
        })
        .ok_or(PartitionError::Empty(n))?;
    Ok(Partition {
        n,
        s,
        apexes: apexes as u32,
        bases: ((n as i64 - apexes) / step) as u32,
    })
}

impl Partition {
    pub fn role(&self, p: Point) -> Role {
        debug_assert!(p >= 1 && p <= self.n);
        if p <= self.apexes {
            Role::Apex(p - 1)
        } else {
            Role::Base((p - self.apexes - 1) / (self.s as u32 - 1))
        }
    }

    pub fn apex_point(&self, i: u32) -> Point {
        i + 1
    }

    pub fn base_points(&self, j: u32) -> impl Iterator<Item = Point> {
        let w = self.s as u32 - 1;
        let first = self.apexes + 1 + j * w;
        first..first + w
    }

    pub fn hyperedge(&self, apex: u32, base: u32) -> Hyperedge {
        let mut pts: Vec<Point> = self.base_points(base).collect();
        pts.push(self.apex_point(apex));
        Hyperedge::from_points(&pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Phase {
    P1,
    P2a,
    P2b,
    P3,
    Finished,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::P1 => "P1",
            Phase::P2a => "P2a",
            Phase::P2b => "P2b",
            Phase::P3 => "P3",
            Phase::Finished => "done",
        }
    }
}

/// Why a Phase-2 offer produced no action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Discard {
    /// Not two apex points.
    WrongForm,
    /// An apex is failed or already deleted.
    NotAlive,
    Blocked,
    SharedInNeighbour,
    /// Too few unblocked apexes to pad the last Phase-2a hyperedge.
    NoPadding,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Attempt {
    ActionTaken,
    Discarded(Discard),
}

/// A proposed Phase-2 action: the hyperedge and the apex nodes it deletes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposal {
    pub edge: Hyperedge,
    pub victims: Vec<NodeId>,
    /// Number of `X̂` points the hyperedge absorbs.
    pub absorbed: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MatchingMetrics {
    pub apexes0: u32,
    pub bases0: u32,
    pub apexes1: usize,
    pub bases1: usize,
    pub a_x: usize,
    pub b_x: usize,
    pub xhat_points: usize,
    pub builder_attempts: u32,
    pub initial_blocked: usize,
    pub phase2a_actions: u64,
    pub phase2b_actions: u64,
    pub discards: BTreeMap<String, u64>,
    pub blocked_final: usize,
    pub q_fraction: f64,
    pub q_within_eps_q: bool,
    pub rho: f64,
    pub degree_checks: u64,
    pub degree_violations: u64,
    pub degree_min: Option<usize>,
    pub parity_checks: u64,
    pub parity_violations: u64,
    pub phase3_size: usize,
    pub hall_witness: Option<(usize, usize)>,
}

pub struct MatchingStrategy {
    part: Partition,
    k: usize,
    builder: BuilderParams,
    retries: u32,
    eps_q: f64,
    paper: bool,
    full_audit: bool,
    rng: ChaCha8Rng,
    builder_rng: ChaCha8Rng,
    phase: Phase,
    status: Status,
    psi: Vec<(u32, u32)>,
    needed: usize,
    graph: Option<AuxDigraph>,
    /// Original apex index → graph-local index, or `NONE` if failed.
    apex_local: Vec<u32>,
    apex_orig: Vec<u32>,
    base_orig: Vec<u32>,
    provenance: Provenance,
    /// Alive graph-local apexes with positions, for uniform sampling.
    alive_apexes: Vec<u32>,
    alive_pos: Vec<u32>,
    xhat: Vec<Point>,
    xhat_next: usize,
    structure: Vec<Hyperedge>,
    metrics: MatchingMetrics,
}

impl MatchingStrategy {
    pub fn new(part: Partition, profile: &Profile, seed: u64) -> Self {
        let builder = profile.builder();
        let nodes = (part.apexes + part.bases) as usize;
        MatchingStrategy {
            part,
            k: profile.k,
            builder,
            retries: profile.retries,
            eps_q: profile.eps_q,
            paper: profile.name == ProfileName::Paper,
            full_audit: false,
            rng: stream_rng(seed, Stream::Strategy),
            builder_rng: stream_rng(seed, Stream::Builder),
            phase: Phase::P1,
            status: Status::Running,
            psi: Vec::with_capacity(builder.stream_len(nodes)),
            needed: builder.stream_len(nodes),
            graph: None,
            apex_local: Vec::new(),
            apex_orig: Vec::new(),
            base_orig: Vec::new(),
            provenance: Provenance::new(),
            alive_apexes: Vec::new(),
            alive_pos: Vec::new(),
            xhat: Vec::new(),
            xhat_next: 0,
            structure: Vec::new(),
            metrics: MatchingMetrics {
                apexes0: part.apexes,
                bases0: part.bases,
                ..Default::default()
            },
        }
    }

    /// Starts directly after Phase 1 with a given builder output, whose
    /// `apexes`/`bases` lists map graph nodes to partition indices. Used to
    /// set up synthetic states; provenance is derived from the partition.
    pub fn with_phase1(part: Partition, profile: &Profile, seed: u64, kout: KOut) -> Self {
        let mut st = Self::new(part, profile, seed);
        st.install(kout, None);
        st
    }

    /// Recompute the full out-degree audit after every action.
    pub fn set_full_audit(&mut self, on: bool) {
        self.full_audit = on;
    }

    pub fn partition(&self) -> &Partition {
        &self.part
    }

    pub fn current_phase(&self) -> Phase {
        self.phase
    }

    pub fn graph(&self) -> Option<&AuxDigraph> {
        self.graph.as_ref()
    }

    pub fn metrics(&self) -> &MatchingMetrics {
        &self.metrics
    }

    /// Remaining unabsorbed `X̂` points.
    pub fn xhat_remaining(&self) -> &[Point] {
        &self.xhat[self.xhat_next..]
    }

    fn fail(&mut self, reason: String) {
        self.status = Status::Failed(reason);
        self.phase = Phase::Finished;
    }

    fn phase1_offer(&mut self, offer: &Offer) -> Response {
        let [p, q] = offer.vertices() else {
            return Response::Ignore;
        };
        let (a, b) = match (self.part.role(*p), self.part.role(*q)) {
            (Role::Apex(a), Role::Base(b)) | (Role::Base(b), Role::Apex(a)) => (a, b),
            _ => return Response::Ignore,
        };
        self.psi.push((a, b));
        let edge = self.part.hyperedge(a, b);
        if self.psi.len() >= self.needed {
            self.build();
        }
        Response::Accept(edge)
    }

    fn build(&mut self) {
        self.metrics.builder_attempts += 1;
        let result = build_k_out(
            &self.psi,
            self.part.apexes as usize,
            self.part.bases as usize,
            &self.builder,
            &mut self.builder_rng,
        );
        match result {
            Ok(kout) => {
                let psi = std::mem::take(&mut self.psi);
                self.install(kout, Some(&psi));
                self.advance();
            }
            Err(e) if self.metrics.builder_attempts > self.retries => {
                self.fail(format!("Phase1: {e}"));
            }
            Err(_) => self.psi.clear(),
        }
    }

    fn install(&mut self, kout: KOut, psi: Option<&[(u32, u32)]>) {
        let KOut { mut graph, apexes, bases, failed_apexes, failed_bases, sources } = kout;
        let k = graph.k();
        self.k = k;
        self.apex_local = vec![NONE; self.part.apexes as usize];
        for (i, &a) in apexes.iter().enumerate() {
            self.apex_local[a as usize] = i as u32;
        }
        let mut base_local = vec![NONE; self.part.bases as usize];
        for (i, &b) in bases.iter().enumerate() {
            base_local[b as usize] = i as u32;
        }
        let mut prov = Provenance::new();
        let na = apexes.len();
        for v in 0..na + bases.len() {
            let id = if v < na { NodeId::apex(v as u32) } else { NodeId::base((v - na) as u32) };
            for (slot, t) in graph.out_targets(id).enumerate() {
                let (al, bl) = if v < na { (v as u32, t.index) } else { (t.index, (v - na) as u32) };
                let created = match psi {
                    Some(psi) => {
                        let e = sources[v * k + slot];
                        debug_assert_eq!(psi[e as usize], (apexes[al as usize], bases[bl as usize]));
                        e
                    }
                    None => (v * k + slot) as u32,
                };
                prov.insert(al, bl, created, self.part.hyperedge(apexes[al as usize], bases[bl as usize]));
            }
        }
        self.provenance = prov;
        let q0 = graph.initial_blocked();
        graph.block(&q0);
        self.metrics.initial_blocked = q0.len();
        self.alive_apexes = (0..na as u32).collect();
        self.alive_pos = (0..na as u32).collect();
        let mut xhat: Vec<Point> = failed_apexes.iter().map(|&a| self.part.apex_point(a)).collect();
        for &b in &failed_bases {
            xhat.extend(self.part.base_points(b));
        }
        xhat.sort_unstable();
        self.metrics.apexes1 = na;
        self.metrics.bases1 = bases.len();
        self.metrics.a_x = failed_apexes.len();
        self.metrics.b_x = failed_bases.len();
        self.metrics.xhat_points = xhat.len();
        self.xhat = xhat;
        self.xhat_next = 0;
        self.apex_orig = apexes;
        self.base_orig = bases;
        self.graph = Some(graph);
        self.phase = Phase::P2a;
    }

    /// Moves through phases that need no offers.
    fn advance(&mut self) {
        if self.phase == Phase::P2a && self.xhat_next == self.xhat.len() {
            self.phase = Phase::P2b;
            let g = self.graph.as_ref().unwrap();
            let (a, b) = (g.alive_count(Side::Apex), g.alive_count(Side::Base));
            if a < b {
                self.fail(format!("Phase2b: {a} apexes left for {b} bases"));
                return;
            }
            if !self.parity_ok() {
                return;
            }
        }
        if self.phase == Phase::P2b {
            let g = self.graph.as_ref().unwrap();
            if g.alive_count(Side::Apex) == g.alive_count(Side::Base) {
                self.phase = Phase::P3;
                self.phase3();
            }
        }
    }

    fn parity_ok(&mut self) -> bool {
        let g = self.graph.as_ref().unwrap();
        let diff = g.alive_count(Side::Apex) as i64 - g.alive_count(Side::Base) as i64;
        self.metrics.parity_checks += 1;
        if diff.rem_euclid(self.part.s as i64) != 0 {
            self.metrics.parity_violations += 1;
            self.fail(format!("parity: |A| - |B| = {diff} is not divisible by {}", self.part.s));
            return false;
        }
        true
    }

    fn apex_node(&self, p: Point) -> Option<NodeId> {
        match self.part.role(p) {
            Role::Apex(a) => Some(NodeId::apex(self.apex_local[a as usize])).filter(|n| n.index != NONE),
            Role::Base(_) => None,
        }
    }

    /// Both offered points must be apexes in `A ∖ Q`.
    fn offered_apexes(&self, offer: &Offer) -> Result<[NodeId; 2], Discard> {
        let [p, q] = offer.vertices() else {
            return Err(Discard::WrongForm);
        };
        if !matches!((self.part.role(*p), self.part.role(*q)), (Role::Apex(_), Role::Apex(_))) {
            return Err(Discard::WrongForm);
        }
        let g = self.graph.as_ref().expect("graph built");
        let mut out = [NodeId::apex(0); 2];
        for (slot, &pt) in out.iter_mut().zip([p, q]) {
            let node = self.apex_node(pt).filter(|&n| g.is_alive(n)).ok_or(Discard::NotAlive)?;
            if g.is_blocked(node) {
                return Err(Discard::Blocked);
            }
            *slot = node;
        }
        Ok(out)
    }

    fn apex_point_of(&self, node: NodeId) -> Point {
        self.part.apex_point(self.apex_orig[node.index as usize])
    }

    /// Checks the Phase-2a conditions for `offer` without changing state
    /// (the padding draw, if any, uses the strategy's generator).
    pub fn check_phase2a(&mut self, offer: &Offer) -> Result<Proposal, Discard> {
        let [a, a2] = self.offered_apexes(offer)?;
        let want = self.part.s - 2;
        let take: Vec<Point> = self.xhat_remaining().iter().take(want).copied().collect();
        let mut victims = vec![a, a2];
        if take.len() < want {
            let g = self.graph.as_ref().unwrap();
            let pool: Vec<NodeId> = self
                .alive_apexes
                .iter()
                .map(|&i| NodeId::apex(i))
                .filter(|&n| n != a && n != a2 && !g.is_blocked(n))
                .collect();
            let pad: Vec<NodeId> = pool.choose_multiple(&mut self.rng, want - take.len()).copied().collect();
            if pad.len() < want - take.len() {
                return Err(Discard::NoPadding);
            }
            victims.extend(pad);
        }
        let g = self.graph.as_ref().unwrap();
        if !g.disjoint_in_neighborhoods(&victims).expect("victims are alive apexes") {
            return Err(Discard::SharedInNeighbour);
        }
        let mut pts: Vec<Point> = victims.iter().map(|&v| self.apex_point_of(v)).collect();
        pts.extend(&take);
        Ok(Proposal { edge: Hyperedge::from_points(&pts), victims, absorbed: take.len() })
    }

    /// Checks the Phase-2b conditions: the offered apexes plus `s − 2`
    /// uniform extras from `A ∖ {a, a'}` must all be unblocked with pairwise
    /// disjoint in-neighbourhoods.
    pub fn check_phase2b(&mut self, offer: &Offer) -> Result<Proposal, Discard> {
        let [a, a2] = self.offered_apexes(offer)?;
        let mut victims = vec![a, a2];
        let extras = self.part.s - 2;
        if self.alive_apexes.len() < extras + 2 {
            return Err(Discard::NoPadding);
        }
        while victims.len() < extras + 2 {
            let pick = NodeId::apex(self.alive_apexes[self.rng.random_range(0..self.alive_apexes.len())]);
            if !victims.contains(&pick) {
                victims.push(pick);
            }
        }
        let g = self.graph.as_ref().unwrap();
        if victims[2..].iter().any(|&v| g.is_blocked(v)) {
            return Err(Discard::Blocked);
        }
        if !g.disjoint_in_neighborhoods(&victims).expect("victims are alive apexes") {
            return Err(Discard::SharedInNeighbour);
        }
        let pts: Vec<Point> = victims.iter().map(|&v| self.apex_point_of(v)).collect();
        Ok(Proposal { edge: Hyperedge::from_points(&pts), victims, absorbed: 0 })
    }

    pub fn phase2a_try(&mut self, offer: &Offer) -> Attempt {
        self.try_with(offer, Self::check_phase2a).map_or_else(Attempt::Discarded, |_| Attempt::ActionTaken)
    }

    pub fn phase2b_try(&mut self, offer: &Offer) -> Attempt {
        self.try_with(offer, Self::check_phase2b).map_or_else(Attempt::Discarded, |_| Attempt::ActionTaken)
    }

    fn try_with(
        &mut self,
        offer: &Offer,
        check: fn(&mut Self, &Offer) -> Result<Proposal, Discard>,
    ) -> Result<Hyperedge, Discard> {
        match check(self, offer) {
            Ok(p) => {
                let edge = p.edge.clone();
                self.apply(p);
                Ok(edge)
            }
            Err(d) => {
                *self.metrics.discards.entry(format!("{d:?}")).or_default() += 1;
                Err(d)
            }
        }
    }

    fn apply(&mut self, p: Proposal) {
        let g = self.graph.as_mut().unwrap();
        let del = g
            .delete_with_blocking(&p.victims)
            .unwrap_or_else(|e| panic!("checked deletion rejected: {e}"));
        for v in &p.victims {
            let i = v.index;
            let pos = self.alive_pos[i as usize] as usize;
            let last = *self.alive_apexes.last().unwrap();
            self.alive_apexes.swap_remove(pos);
            if last != i {
                self.alive_pos[last as usize] = pos as u32;
            }
            self.alive_pos[i as usize] = NONE;
        }
        self.xhat_next += p.absorbed;
        self.structure.push(p.edge);
        match self.phase {
            Phase::P2a => self.metrics.phase2a_actions += 1,
            _ => self.metrics.phase2b_actions += 1,
        }
        if !self.degree_floor(&del) {
            return;
        }
        if self.full_audit {
            if let Err(e) = self.check_point_partition() {
                self.fail(format!("point partition: {e}"));
                return;
            }
        }
        if self.phase == Phase::P2b && !self.parity_ok() {
            return;
        }
        self.advance();
    }

    /// Installs the newly blocked nodes and checks the `k − 1` floor.
    fn degree_floor(&mut self, del: &Deletion) -> bool {
        let g = self.graph.as_mut().unwrap();
        g.block(&del.newly_blocked);
        self.metrics.degree_checks += 1;
        let floor = self.k - 1;
        let mut min = del
            .touched
            .iter()
            .filter(|&&u| g.is_alive(u))
            .map(|&u| g.effective_out_degree(u))
            .min();
        if self.full_audit {
            min = min.into_iter().chain(g.audit_outdegrees().min).min();
        }
        if let Some(m) = min {
            self.metrics.degree_min = Some(self.metrics.degree_min.map_or(m, |d| d.min(m)));
            if m < floor {
                self.metrics.degree_violations += 1;
                self.fail(format!("degree floor: out-degree {m} below {floor}"));
                return false;
            }
        }
        true
    }

    fn phase3(&mut self) {
        let g = self.graph.as_ref().unwrap();
        let (a, b) = (g.alive_count(Side::Apex), g.alive_count(Side::Base));
        if a != b {
            self.fail(format!("Phase3: |A| = {a} differs from |B| = {b}"));
            return;
        }
        let audit = g.audit_outdegrees();
        if audit.min.is_some_and(|m| m + 1 < self.k) {
            self.metrics.degree_violations += 1;
            self.fail(format!("Phase3: out-degree {:?} below {}", audit.min, self.k - 1));
            return;
        }
        let rho = 1.0 - a as f64 / self.metrics.apexes1.max(1) as f64;
        self.metrics.rho = rho;
        self.metrics.blocked_final = g.blocked_len();
        let nodes = (self.metrics.apexes1 + self.metrics.bases1).max(1);
        self.metrics.q_fraction = g.blocked_len() as f64 / nodes as f64;
        self.metrics.q_within_eps_q = self.metrics.q_fraction <= self.eps_q;
        if self.paper && rho > RHO_MAX {
            self.fail(format!("Phase3: deleted fraction {rho:.4} exceeds {RHO_MAX}"));
            return;
        }
        let view = BipartiteView::from_graph(g);
        let result = max_matching(&view);
        debug_assert!(!has_augmenting_path(&view, &result.pairs));
        if let Some(w) = &result.witness {
            self.metrics.hall_witness = Some((w.s.len(), w.t.len()));
            self.fail(format!("Phase3: Hall witness |S| = {}, |N(S)| = {}", w.s.len(), w.t.len()));
            return;
        }
        match matching_to_hyperedges(&result, &self.provenance) {
            Ok(edges) => {
                self.metrics.phase3_size = edges.len();
                self.structure.extend(edges);
                self.phase = Phase::Finished;
                self.status = Status::Done;
            }
            Err(e) => self.fail(format!("Phase3: {e}")),
        }
    }

    pub fn structure(&self) -> &[Hyperedge] {
        &self.structure
    }

    /// During Phase 2, committed hyperedges, alive apex and base nodes, and
    /// pending `X̂` points partition `[n]`.
    pub fn check_point_partition(&self) -> Result<(), String> {
        let g = self.graph.as_ref().ok_or("no auxiliary graph yet")?;
        let mut count = vec![0u32; self.part.n as usize + 1];
        let mut pts: Vec<Point> = self.structure.iter().flat_map(|e| e.points().iter().copied()).collect();
        pts.extend(g.alive_nodes(Side::Apex).map(|v| self.part.apex_point(self.apex_orig[v.index as usize])));
        for v in g.alive_nodes(Side::Base) {
            pts.extend(self.part.base_points(self.base_orig[v.index as usize]));
        }
        pts.extend_from_slice(&self.xhat[self.xhat_next..]);
        for p in pts {
            count[p as usize] += 1;
        }
        match (1..=self.part.n).find(|&p| count[p as usize] != 1) {
            Some(p) => Err(format!("point {p} appears {} times", count[p as usize])),
            None => Ok(()),
        }
    }
}

impl Strategy for MatchingStrategy {
    fn start(&mut self) {
        if self.graph.is_some() {
            self.advance();
        }
    }

    fn on_offer(&mut self, offer: &Offer) -> Response {
        match self.phase {
            Phase::P1 => self.phase1_offer(offer),
            Phase::P2a | Phase::P2b => {
                let check = if self.phase == Phase::P2a { Self::check_phase2a } else { Self::check_phase2b };
                self.try_with(offer, check).map_or(Response::Ignore, Response::Accept)
            }
            Phase::P3 | Phase::Finished => Response::Ignore,
        }
    }

    fn status(&self) -> Status {
        self.status.clone()
    }

    fn phase(&self) -> &'static str {
        self.phase.label()
    }

    fn report(&self) -> StrategyReport {
        StrategyReport {
            structure: self.structure.clone(),
            phase2_actions: self.metrics.phase2a_actions + self.metrics.phase2b_actions,
            metrics: serde_json::to_value(&self.metrics).expect("metrics serialize"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kout::uniform_k_out;

    #[test]
    fn partition_examples() {
        let p = partition_vertices(300_000, 3, 1e-5).unwrap();
        assert_eq!((p.apexes, p.bases), (100_012, 99_994));
        let p = partition_vertices(9, 3, 0.0).unwrap();
        assert_eq!((p.apexes, p.bases), (3, 3));
        let p = partition_vertices(9999, 3, 0.01).unwrap();
        assert_eq!((p.apexes, p.bases), (3733, 3133));
        assert_eq!(p.apexes + 2 * p.bases, 9999);
        let p = partition_vertices(10_000, 4, 0.001).unwrap();
        assert_eq!(p.apexes + 3 * p.bases, 10_000);
        assert_eq!(partition_vertices(10, 3, 0.0), Err(PartitionError::Divisibility { n: 10, s: 3 }));
    }

    #[test]
    fn roles_and_base_points() {
        let p = partition_vertices(12, 4, 0.0).unwrap();
        assert_eq!((p.apexes, p.bases), (3, 3));
        assert_eq!(p.role(3), Role::Apex(2));
        assert_eq!(p.role(4), Role::Base(0));
        assert_eq!(p.role(12), Role::Base(2));
        assert_eq!(p.base_points(1).collect::<Vec<_>>(), vec![7, 8, 9]);
        assert_eq!(p.hyperedge(0, 2).points(), &[1, 10, 11, 12]);
    }

    /// 12 points: apexes 1..=6, bases {7,8},{9,10},{11,12}. Apex 5 (index 4)
    /// failed, so X̂ = {5}.
    fn twelve_point_state() -> MatchingStrategy {
        let part = Partition { n: 12, s: 3, apexes: 6, bases: 3 };
        // Local apexes 0..5 are original apexes [0,1,2,3,5]; k = 2.
        let lists: Vec<Vec<NodeId>> = vec![
            vec![NodeId::base(0), NodeId::base(1)],
            vec![NodeId::base(1), NodeId::base(2)],
            vec![NodeId::base(2), NodeId::base(0)],
            vec![NodeId::base(0), NodeId::base(1)],
            vec![NodeId::base(1), NodeId::base(2)],
            vec![NodeId::apex(0), NodeId::apex(3)],
            vec![NodeId::apex(1), NodeId::apex(0)],
            vec![NodeId::apex(4), NodeId::apex(2)],
        ];
        let graph = AuxDigraph::new(5, 3, 2, &lists).unwrap();
        let kout = KOut {
            graph,
            apexes: vec![0, 1, 2, 3, 5],
            bases: vec![0, 1, 2],
            failed_apexes: vec![4],
            failed_bases: vec![],
            sources: vec![],
        };
        MatchingStrategy::with_phase1(part, &Profile::desk(), 1, kout)
    }

    #[test]
    fn phase2a_action_on_hand_instance() {
        let mut st = twelve_point_state();
        assert_eq!(st.current_phase(), Phase::P2a);
        assert_eq!(st.xhat_remaining(), &[5]);
        // Apexes 2 and 4 (local 1 and 3) have in-neighbours {b1} and {b0}.
        let before = st.graph().unwrap().alive_count(Side::Apex);
        let attempt = st.phase2a_try(&Offer::new(&[2, 4]));
        assert_eq!(attempt, Attempt::ActionTaken);
        assert_eq!(st.structure()[0].points(), &[2, 4, 5]);
        assert_eq!(st.graph().unwrap().alive_count(Side::Apex), before - 2);
        assert!(st.xhat_remaining().is_empty());
        assert_eq!(st.metrics().degree_violations, 0);
        // |A| = |B| = 3 now, so Phase 3 ran and covered every point.
        assert_eq!(st.status(), Status::Done);
        let mut covered: Vec<Point> = st.structure().iter().flat_map(|e| e.points().to_vec()).collect();
        covered.sort_unstable();
        assert_eq!(covered, (1..=12).collect::<Vec<_>>());
    }

    #[test]
    fn phase2a_rejections() {
        let mut st = twelve_point_state();
        // Apexes 1 and 2 (local 0 and 1) share in-neighbour b1.
        assert_eq!(st.phase2a_try(&Offer::new(&[1, 2])), Attempt::Discarded(Discard::SharedInNeighbour));
        assert_eq!(st.phase2a_try(&Offer::new(&[1, 7])), Attempt::Discarded(Discard::WrongForm));
        assert_eq!(st.phase2a_try(&Offer::new(&[5, 1])), Attempt::Discarded(Discard::NotAlive));
        st.graph.as_mut().unwrap().block(&[NodeId::apex(0)]);
        assert_eq!(st.phase2a_try(&Offer::new(&[1, 4])), Attempt::Discarded(Discard::Blocked));
        assert_eq!(st.structure().len(), 0);
    }

    /// Synthetic post-Phase-1 state at paper-like density: uniform k-out
    /// graph, no failures, and a random third of the apexes blocked.
    fn synthetic(n: u32, s: usize, seed: u64, blocked_frac: f64) -> MatchingStrategy {
        use rand::SeedableRng;
        let part = partition_vertices(n, s, 1e-5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = uniform_k_out(part.apexes as usize, part.bases as usize, 10, &mut rng);
        let mut kout = KOut::complete(graph);
        let blocked: Vec<NodeId> = (0..part.apexes)
            .filter(|_| rng.random_bool(blocked_frac))
            .map(NodeId::apex)
            .collect();
        kout.graph.block(&blocked);
        let mut st = MatchingStrategy::with_phase1(part, &Profile::paper(), seed, kout);
        st.phase = Phase::P2a;
        st.xhat = vec![n];
        st
    }

    #[test]
    fn phase2a_acceptance_rate() {
        let mut st = synthetic(9999, 3, 3, 1.0 / 3.0);
        let mut offers = stream_rng(3, Stream::Offers);
        let trials = 100_000;
        let ok = (0..trials)
            .filter(|_| st.check_phase2a(&crate::process::next_offer(&mut offers, 9999, 2)).is_ok())
            .count();
        assert!(ok as f64 / trials as f64 >= 1.0 / 26.0 - 0.005, "rate {}", ok as f64 / trials as f64);
    }

    #[test]
    fn phase2b_acceptance_rate() {
        let mut st = synthetic(9999, 3, 4, 1.0 / 3.0);
        st.phase = Phase::P2b;
        let mut offers = stream_rng(4, Stream::Offers);
        let trials = 100_000;
        let ok = (0..trials)
            .filter(|_| st.check_phase2b(&crate::process::next_offer(&mut offers, 9999, 2)).is_ok())
            .count();
        assert!(ok as f64 / trials as f64 >= 1.0 / 126.0, "rate {}", ok as f64 / trials as f64);
    }
}
