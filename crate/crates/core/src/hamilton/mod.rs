//! Loose-Hamilton-cycle strategy. Base points `p_j = 1 + j(s-1)` carry the
//! overlapping base pairs `{p_j, p_{j+1}}`; the `s − 2` points after each
//! base point form an apex node. Phase 1 builds the k-out auxiliary graph,
//! Phase 2a salvages failed apexes, Phase 2b merges paths in rounds until the
//! path system is one cycle, and Phase 3 matches the remaining nodes.

mod paths;
mod plan;

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::aux_graph::{AuxDigraph, Deletion, NodeId, Side};
use crate::hyperedge::{Hyperedge, Point};
use crate::kout::{build_k_out, BuilderParams, KOut};
use crate::matching_solver::{matching_to_hyperedges, max_matching, BipartiteView, Provenance};
use crate::process::{stream_rng, Offer, Response, Status, Strategy, StrategyReport, Stream};
use crate::profile::Profile;

pub use paths::{Component, PathSystem};
pub use plan::{planned_phase2b_offers, round_plan, round_schedule, RoundPlan, Target};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HcPartitionError {
    #[error("n = {n} is not divisible by s - 1 = {}", s - 1)]
    Divisibility { n: u32, s: usize },
    #[error("s = {0} is below 3")]
    SmallS(usize),
    #[error("n = {n} is below the smallest loose cycle, {min}")]
    TooSmall { n: u32, min: u32 },
}

/// Base points and apex sets of the ideal cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HcPartition {
    pub n: u32,
    pub s: usize,
    /// Number of base points, base pairs, and apex nodes.
    pub m: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcRole {
    /// Base point `j`.
    Base(u32),
    /// A point of apex node `j`.
    Apex(u32),
}

pub fn partition_hc(n: u32, s: usize) -> Result<HcPartition, HcPartitionError> {
    if s < 3 {
        return Err(HcPartitionError::SmallS(s));
    }
    let w = s as u32 - 1;
    if n % w != 0 {
        return Err(HcPartitionError::Divisibility { n, s });
    }
    if n < 3 * w {
        return Err(HcPartitionError::TooSmall { n, min: 3 * w });
    }
    Ok(HcPartition { n, s, m: n / w })
}

impl HcPartition {
    fn width(&self) -> u32 {
        self.s as u32 - 1
    }

    pub fn base_point(&self, j: u32) -> Point {
        1 + j * self.width()
    }

    /// The two points of base pair `j`.
    pub fn base_pair(&self, j: u32) -> [Point; 2] {
        [self.base_point(j), self.base_point((j + 1) % self.m)]
    }

    pub fn apex_points(&self, j: u32) -> impl Iterator<Item = Point> {
        let first = self.base_point(j) + 1;
        first..first + self.width() - 1
    }

    pub fn role(&self, p: Point) -> HcRole {
        let j = (p - 1) / self.width();
        if (p - 1) % self.width() == 0 {
            HcRole::Base(j)
        } else {
            HcRole::Apex(j)
        }
    }

    /// Base pair index of the pair `{p_u, p_v}`, if they are consecutive.
    pub fn pair_index(&self, u: u32, v: u32) -> Option<u32> {
        if (u + 1) % self.m == v {
            Some(u)
        } else if (v + 1) % self.m == u {
            Some(v)
        } else {
            None
        }
    }

    /// `{p_u, p_v} ∪ apex set`.
    pub fn hyperedge(&self, u: u32, apex: u32, v: u32) -> Hyperedge {
        let mut pts: Vec<Point> = self.apex_points(apex).collect();
        pts.push(self.base_point(u));
        pts.push(self.base_point(v));
        Hyperedge::from_points(&pts)
    }

    pub fn cells(&self) -> u32 {
        self.m / 2
    }

    /// Cell of base point `j`; `None` for the unpaired last point when `m`
    /// is odd.
    pub fn cell_of(&self, j: u32) -> Option<u32> {
        (j / 2 < self.cells()).then_some(j / 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum HcPhase {
    P1,
    P2a,
    P2b,
    P3,
    Finished,
}

impl HcPhase {
    pub fn label(self) -> &'static str {
        match self {
            HcPhase::P1 => "P1",
            HcPhase::P2a => "P2a",
            HcPhase::P2b => "P2b",
            HcPhase::P3 => "P3",
            HcPhase::Finished => "done",
        }
    }
}

/// Why an offer produced no action, named after the condition it failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum HcDiscard {
    WrongForm,
    /// Phase 2a: the offered points are adjacent in the path system.
    AlreadyAdjacent,
    /// Phase 2a: a partner pair is missing from `B` or blocked.
    PairUnavailable,
    SharedInNeighbour,
    /// Phase 2b: the base point was already offered this round.
    Repeat,
    /// Phase 2b: the unpaired base point.
    OddManOut,
    /// Phase 2b: the completion would repeat a point.
    Degenerate,
    /// Phase 2b: the seeded path was merged away.
    PathMerged,
    /// Phase 2b: the cell's pair lies on the seeded path.
    SamePath,
    /// Phase 2b: the cell's pair is not a good base pair.
    PairMissing,
    /// Phase 2b: the apexes are equal, failed, or deleted.
    ApexUnavailable,
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HcAttempt {
    ActionTaken,
    Discarded(HcDiscard),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RoundOutcome {
    Success,
    OfferCap,
    ActionCap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundLog {
    pub round_index: usize,
    pub ell: usize,
    pub f: u64,
    pub offer_cap: u64,
    pub action_cap: u64,
    pub offers_used: u64,
    pub actions_attempted: u64,
    pub actions_taken: u64,
    pub paths_end: usize,
    pub outcome: RoundOutcome,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct HamiltonMetrics {
    pub m: u32,
    pub a_x: usize,
    pub b_x: usize,
    pub builder_attempts: u32,
    pub initial_blocked: usize,
    pub initial_paths: usize,
    pub paths_after_2a: usize,
    pub phase2a_actions: u64,
    pub phase2b_actions: u64,
    pub planned_phase2b_offers: u64,
    pub phase2b_offers: u64,
    pub rounds: Vec<RoundLog>,
    pub discards: BTreeMap<String, u64>,
    pub degree_checks: u64,
    pub degree_violations: u64,
    pub degree_min: Option<usize>,
    pub cap_violations: u64,
    pub blocked_final: usize,
    pub q_fraction: f64,
    pub q_within_eps_q: bool,
    pub apexes_deleted: usize,
    pub bases_deleted: usize,
    pub phase3_size: usize,
    pub hall_witness: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy)]
struct Seed {
    /// Seeding base point and its apex node (original index).
    point: u32,
    apex: u32,
    /// Path end the seeding hyperedge used, and the other end it pairs with.
    end: u32,
    other: u32,
    degenerate: bool,
}

struct Round {
    plan: RoundPlan,
    offers: u64,
    attempts: u64,
    actions: u64,
    seen: Vec<bool>,
    seeds: Vec<Option<Seed>>,
}

pub struct HamiltonStrategy {
    part: HcPartition,
    k: usize,
    builder: BuilderParams,
    retries: u32,
    eps_q: f64,
    full_audit: bool,
    rng: ChaCha8Rng,
    builder_rng: ChaCha8Rng,
    phase: HcPhase,
    status: Status,
    psi: Vec<(u32, u32)>,
    needed: usize,
    graph: Option<AuxDigraph>,
    apex_local: Vec<u32>,
    base_local: Vec<u32>,
    apex_orig: Vec<u32>,
    base_orig: Vec<u32>,
    provenance: Provenance,
    failed_apexes: Vec<u32>,
    failed_next: usize,
    paths: PathSystem,
    /// Path-system edges contributed by committed hyperedges.
    bridges: Vec<(u32, u32)>,
    /// Apex nodes placed in committed hyperedges.
    used_apexes: Vec<u32>,
    round: Option<Round>,
    structure: Vec<Hyperedge>,
    metrics: HamiltonMetrics,
}

impl HamiltonStrategy {
    pub fn new(part: HcPartition, profile: &Profile, seed: u64) -> Self {
        let builder = profile.builder();
        let nodes = 2 * part.m as usize;
        HamiltonStrategy {
            part,
            k: profile.k,
            builder,
            retries: profile.retries,
            eps_q: profile.eps_q,
            full_audit: false,
            rng: stream_rng(seed, Stream::Strategy),
            builder_rng: stream_rng(seed, Stream::Builder),
            phase: HcPhase::P1,
            status: Status::Running,
            psi: Vec::with_capacity(builder.stream_len(nodes)),
            needed: builder.stream_len(nodes),
            graph: None,
            apex_local: Vec::new(),
            base_local: Vec::new(),
            apex_orig: Vec::new(),
            base_orig: Vec::new(),
            provenance: Provenance::new(),
            failed_apexes: Vec::new(),
            failed_next: 0,
            paths: PathSystem::new(part.m as usize),
            bridges: Vec::new(),
            used_apexes: Vec::new(),
            round: None,
            structure: Vec::new(),
            metrics: HamiltonMetrics {
                m: part.m,
                planned_phase2b_offers: planned_phase2b_offers(part.n, profile.eps_d),
                ..Default::default()
            },
        }
    }

    /// Starts directly after Phase 1 with the given builder output, whose
    /// `apexes`/`bases` lists map graph nodes to apex and base-pair indices.
    pub fn with_phase1(part: HcPartition, profile: &Profile, seed: u64, kout: KOut) -> Self {
        let mut st = Self::new(part, profile, seed);
        st.install(kout, None);
        st
    }

    pub fn set_full_audit(&mut self, on: bool) {
        self.full_audit = on;
    }

    pub fn partition(&self) -> &HcPartition {
        &self.part
    }

    pub fn current_phase(&self) -> HcPhase {
        self.phase
    }

    pub fn graph(&self) -> Option<&AuxDigraph> {
        self.graph.as_ref()
    }

    pub fn paths(&self) -> &PathSystem {
        &self.paths
    }

    pub fn metrics(&self) -> &HamiltonMetrics {
        &self.metrics
    }

    pub fn structure(&self) -> &[Hyperedge] {
        &self.structure
    }

    /// Failed apexes not yet placed in a hyperedge.
    pub fn failed_remaining(&self) -> &[u32] {
        &self.failed_apexes[self.failed_next..]
    }

    fn fail(&mut self, reason: String) {
        self.status = Status::Failed(reason);
        self.phase = HcPhase::Finished;
    }

    fn discard(&mut self, d: HcDiscard) -> HcDiscard {
        *self.metrics.discards.entry(format!("{d:?}")).or_default() += 1;
        d
    }

    /// The offer as `(base point, apex node)`, in either order.
    fn base_apex(&self, offer: &Offer) -> Option<(u32, u32)> {
        let [p, q] = offer.vertices() else {
            return None;
        };
        match (self.part.role(*p), self.part.role(*q)) {
            (HcRole::Base(b), HcRole::Apex(a)) | (HcRole::Apex(a), HcRole::Base(b)) => Some((b, a)),
            _ => None,
        }
    }

    fn phase1_offer(&mut self, offer: &Offer) -> Response {
        let Some((b, a)) = self.base_apex(offer) else {
            return Response::Ignore;
        };
        self.psi.push((a, b));
        let edge = self.part.hyperedge(b, a, (b + 1) % self.part.m);
        if self.psi.len() >= self.needed {
            self.build();
        }
        Response::Accept(edge)
    }

    fn build(&mut self) {
        self.metrics.builder_attempts += 1;
        let m = self.part.m as usize;
        match build_k_out(&self.psi, m, m, &self.builder, &mut self.builder_rng) {
            Ok(kout) => {
                let psi = std::mem::take(&mut self.psi);
                self.install(kout, Some(&psi));
                self.advance();
            }
            Err(e) if self.metrics.builder_attempts > self.retries => self.fail(format!("Phase1: {e}")),
            Err(_) => self.psi.clear(),
        }
    }

    fn install(&mut self, kout: KOut, psi: Option<&[(u32, u32)]>) {
        let KOut { mut graph, apexes, bases, failed_apexes, failed_bases, sources } = kout;
        self.k = graph.k();
        let m = self.part.m as usize;
        self.apex_local = vec![NONE; m];
        self.base_local = vec![NONE; m];
        for (i, &a) in apexes.iter().enumerate() {
            self.apex_local[a as usize] = i as u32;
        }
        for (i, &b) in bases.iter().enumerate() {
            self.base_local[b as usize] = i as u32;
        }
        let na = apexes.len();
        let mut prov = Provenance::new();
        for v in 0..na + bases.len() {
            let id = if v < na { NodeId::apex(v as u32) } else { NodeId::base((v - na) as u32) };
            for (slot, t) in graph.out_targets(id).enumerate() {
                let (al, bl) = if v < na { (v as u32, t.index) } else { (t.index, (v - na) as u32) };
                let created = match psi {
                    Some(psi) => {
                        let e = sources[v * self.k + slot];
                        debug_assert_eq!(psi[e as usize], (apexes[al as usize], bases[bl as usize]));
                        e
                    }
                    None => (v * self.k + slot) as u32,
                };
                let b = bases[bl as usize];
                prov.insert(al, bl, created, self.part.hyperedge(b, apexes[al as usize], (b + 1) % self.part.m));
            }
        }
        self.provenance = prov;
        let q0 = graph.initial_blocked();
        graph.block(&q0);
        self.metrics.initial_blocked = q0.len();
        for &b in &bases {
            self.paths.add_edge(b, (b + 1) % self.part.m);
        }
        self.paths.relayout();
        self.metrics.a_x = failed_apexes.len();
        self.metrics.b_x = failed_bases.len();
        self.metrics.initial_paths = self.paths.path_count();
        self.failed_apexes = failed_apexes;
        self.failed_next = 0;
        self.apex_orig = apexes;
        self.base_orig = bases;
        self.graph = Some(graph);
        self.phase = HcPhase::P2a;
    }

    fn advance(&mut self) {
        if self.phase == HcPhase::P2a && self.failed_next == self.failed_apexes.len() {
            self.phase = HcPhase::P2b;
            self.metrics.paths_after_2a = self.paths.path_count();
        }
        if self.phase == HcPhase::P2b && self.round.is_none() {
            if self.paths.is_single_cycle() {
                self.phase = HcPhase::P3;
                self.phase3();
            } else {
                self.start_round();
            }
        }
    }

    fn start_round(&mut self) {
        let plan = round_plan(self.paths.path_count(), self.part.n);
        self.round = Some(Round {
            plan,
            offers: 0,
            attempts: 0,
            actions: 0,
            seen: vec![false; self.part.m as usize],
            seeds: vec![None; self.part.cells() as usize],
        });
    }

    fn apex_node(&self, apex: u32) -> Option<NodeId> {
        let l = self.apex_local[apex as usize];
        (l != NONE).then(|| NodeId::apex(l)).filter(|&n| self.graph.as_ref().unwrap().is_alive(n))
    }

    fn base_node(&self, pair: u32) -> Option<NodeId> {
        let l = self.base_local[pair as usize];
        (l != NONE).then(|| NodeId::base(l)).filter(|&n| self.graph.as_ref().unwrap().is_alive(n))
    }

    /// Phase 2a on an offer of two base points.
    pub fn phase2a_try(&mut self, offer: &Offer) -> HcAttempt {
        match self.check_phase2a(offer) {
            Ok((b1, b2, n1, n2, apex)) => {
                let edge = self.part.hyperedge(b1, apex, b2);
                let before = self.paths.path_count();
                let (p1, p2) = (self.pair_of(n1), self.pair_of(n2));
                let [u1, v1] = [p1, (p1 + 1) % self.part.m];
                let [u2, v2] = [p2, (p2 + 1) % self.part.m];
                assert!(self.paths.remove_edge(u1, v1) && self.paths.remove_edge(u2, v2));
                self.paths.add_edge(b1, b2);
                self.paths.relayout();
                self.bridges.push((b1, b2));
                self.used_apexes.push(apex);
                self.structure.push(edge);
                self.failed_next += 1;
                self.metrics.phase2a_actions += 1;
                if self.paths.path_count() != before + 1 {
                    self.fail(format!("Phase2a: path count {before} -> {}", self.paths.path_count()));
                    return HcAttempt::ActionTaken;
                }
                if self.delete(&[n1, n2]) {
                    self.advance();
                }
                HcAttempt::ActionTaken
            }
            Err(d) => HcAttempt::Discarded(self.discard(d)),
        }
    }

    fn pair_of(&self, node: NodeId) -> u32 {
        self.base_orig[node.index as usize]
    }

    fn check_phase2a(&self, offer: &Offer) -> Result<(u32, u32, NodeId, NodeId, u32), HcDiscard> {
        let [p, q] = offer.vertices() else {
            return Err(HcDiscard::WrongForm);
        };
        let (HcRole::Base(b1), HcRole::Base(b2)) = (self.part.role(*p), self.part.role(*q)) else {
            return Err(HcDiscard::WrongForm);
        };
        let apex = *self.failed_remaining().first().expect("failed apex available");
        let ps = &self.paths;
        if ps.has_edge(b1, b2) {
            return Err(HcDiscard::AlreadyAdjacent);
        }
        let (c1, c2) = (ps.comp_of(b1), ps.comp_of(b2));
        let m = self.part.m;
        let (b1p, b2p) = if c1 != c2 || ps.component(c1).cycle {
            (Some((b1 + 1) % m), Some((b2 + 1) % m))
        } else {
            (ps.step_towards(b1, b2), ps.step_towards(b2, b1))
        };
        let g = self.graph.as_ref().unwrap();
        let node = |b: u32, bp: Option<u32>| {
            bp.and_then(|bp| self.part.pair_index(b, bp))
                .and_then(|j| self.base_node(j))
                .filter(|&n| !g.is_blocked(n))
        };
        let (Some(n1), Some(n2)) = (node(b1, b1p), node(b2, b2p)) else {
            return Err(HcDiscard::PairUnavailable);
        };
        if n1 == n2 {
            return Err(HcDiscard::PairUnavailable);
        }
        if !g.disjoint_in_neighborhoods(&[n1, n2]).expect("alive bases") {
            return Err(HcDiscard::SharedInNeighbour);
        }
        Ok((b1, b2, n1, n2, apex))
    }

    /// Deletes `victims` with blocking and checks the out-degree floor.
    fn delete(&mut self, victims: &[NodeId]) -> bool {
        let g = self.graph.as_mut().unwrap();
        let del: Deletion = g
            .delete_with_blocking(victims)
            .unwrap_or_else(|e| panic!("checked deletion rejected: {e}"));
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
            if let Err(e) = self.correspondence() {
                self.fail(format!("path system: {e}"));
                return false;
            }
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

    /// Path-system edges are exactly the alive base pairs plus the bridges
    /// of committed hyperedges, whose apexes are distinct and out of the graph.
    pub fn correspondence(&self) -> Result<(), String> {
        self.paths.check()?;
        let mut used = self.used_apexes.clone();
        used.sort_unstable();
        if used.windows(2).any(|w| w[0] == w[1]) {
            return Err("an apex is used by two committed hyperedges".into());
        }
        if used.iter().any(|&a| self.apex_node(a).is_some()) {
            return Err("a committed apex is still alive".into());
        }
        let m = self.part.m;
        let mut expected: Vec<(u32, u32)> = self
            .graph
            .as_ref()
            .map(|g| {
                g.alive_nodes(Side::Base)
                    .map(|n| {
                        let b = self.base_orig[n.index as usize];
                        let (x, y) = (b, (b + 1) % m);
                        (x.min(y), x.max(y))
                    })
                    .collect()
            })
            .unwrap_or_default();
        expected.extend(self.bridges.iter().map(|&(x, y)| (x.min(y), x.max(y))));
        expected.sort_unstable();
        let mut actual = self.paths.edges();
        actual.sort_unstable();
        if expected != actual {
            return Err("edges differ from base pairs plus bridges".into());
        }
        Ok(())
    }

    fn phase2b_offer(&mut self, offer: &Offer) -> Response {
        let resp = self.round_step(offer);
        let round = self.round.as_mut().unwrap();
        round.offers += 1;
        self.metrics.phase2b_offers += 1;
        let done = match round.plan.target {
            Target::Cycle => self.paths.is_single_cycle(),
            Target::Components(t) => self.paths.path_count() <= t,
        };
        let outcome = if done {
            Some(RoundOutcome::Success)
        } else if round.offers >= round.plan.offer_cap {
            Some(RoundOutcome::OfferCap)
        } else if round.attempts >= round.plan.action_cap {
            Some(RoundOutcome::ActionCap)
        } else {
            None
        };
        if round.offers > round.plan.offer_cap || round.attempts > round.plan.action_cap {
            self.metrics.cap_violations += 1;
        }
        if let Some(outcome) = outcome {
            let round = self.round.take().unwrap();
            self.metrics.rounds.push(RoundLog {
                round_index: self.metrics.rounds.len(),
                ell: round.plan.ell,
                f: round.plan.f,
                offer_cap: round.plan.offer_cap,
                action_cap: round.plan.action_cap,
                offers_used: round.offers,
                actions_attempted: round.attempts,
                actions_taken: round.actions,
                paths_end: self.paths.path_count(),
                outcome,
            });
            if self.metrics.phase2b_offers > self.metrics.planned_phase2b_offers {
                self.metrics.cap_violations += 1;
            }
            if outcome == RoundOutcome::Success {
                self.advance();
            } else if matches!(self.status, Status::Running) {
                self.fail(format!("Phase2b: round {} stopped at {outcome:?}", self.metrics.rounds.len() - 1));
            }
        }
        resp
    }

    fn round_step(&mut self, offer: &Offer) -> Response {
        let Some((b, apex)) = self.base_apex(offer) else {
            self.discard(HcDiscard::WrongForm);
            return Response::Ignore;
        };
        let Some(cell) = self.part.cell_of(b) else {
            self.discard(HcDiscard::OddManOut);
            return Response::Ignore;
        };
        let round = self.round.as_mut().unwrap();
        if std::mem::replace(&mut round.seen[b as usize], true) {
            self.discard(HcDiscard::Repeat);
            return Response::Ignore;
        }
        let last = matches!(round.plan.target, Target::Cycle);
        match round.seeds[cell as usize] {
            None => {
                let (end, other) = if last {
                    let c = self.paths.component(self.paths.comp_of(b));
                    let partner = b ^ 1;
                    // The member nearer the start pairs with the terminal.
                    if self.paths.pos(b) < self.paths.pos(partner) {
                        (c.terminal, c.start)
                    } else {
                        (c.start, c.terminal)
                    }
                } else {
                    let ends = self.paths.path_ends();
                    let (s, t) = ends[self.rng.random_range(0..ends.len())];
                    (t, s)
                };
                let degenerate = end == b;
                self.round.as_mut().unwrap().seeds[cell as usize] =
                    Some(Seed { point: b, apex, end, other, degenerate });
                if degenerate {
                    self.discard(HcDiscard::Degenerate);
                    return Response::Ignore;
                }
                Response::Accept(self.part.hyperedge(b, apex, end))
            }
            Some(seed) => {
                self.round.as_mut().unwrap().attempts += 1;
                let fill_end = seed.other;
                let resp = if fill_end == b {
                    Response::Ignore
                } else {
                    Response::Accept(self.part.hyperedge(b, apex, fill_end))
                };
                match self.check_fill(b, apex, &seed, last) {
                    Ok(victims) => {
                        self.apply_fill(b, apex, &seed, &victims);
                    }
                    Err(d) => {
                        self.discard(d);
                    }
                }
                resp
            }
        }
    }

    fn check_fill(&self, b: u32, apex: u32, seed: &Seed, last: bool) -> Result<[NodeId; 3], HcDiscard> {
        if seed.degenerate || seed.other == b {
            return Err(HcDiscard::Degenerate);
        }
        let ps = &self.paths;
        let (s_i, t_i) = (seed.other, seed.end);
        let c = ps.comp_of(t_i);
        let comp = ps.component(c);
        let ends_ok = !comp.cycle
            && ps.comp_of(s_i) == c
            && ((comp.start == s_i && comp.terminal == t_i) || (comp.start == t_i && comp.terminal == s_i));
        if !ends_ok {
            return Err(HcDiscard::PathMerged);
        }
        if !last && ps.comp_of(b) == c {
            return Err(HcDiscard::SamePath);
        }
        let pair = b.min(seed.point);
        let Some(base) = self.base_node(pair) else {
            return Err(HcDiscard::PairMissing);
        };
        let (Some(a1), Some(a2)) = (self.apex_node(apex), self.apex_node(seed.apex)) else {
            return Err(HcDiscard::ApexUnavailable);
        };
        if a1 == a2 {
            return Err(HcDiscard::ApexUnavailable);
        }
        let g = self.graph.as_ref().unwrap();
        if g.is_blocked(base) || g.is_blocked(a1) || g.is_blocked(a2) {
            return Err(HcDiscard::Blocked);
        }
        if !g.disjoint_in_neighborhoods(&[a1, a2]).expect("alive apexes") {
            return Err(HcDiscard::SharedInNeighbour);
        }
        Ok([base, a1, a2])
    }

    fn apply_fill(&mut self, b: u32, apex: u32, seed: &Seed, victims: &[NodeId; 3]) {
        let before = self.paths.path_count();
        let last = self.round.as_ref().is_some_and(|r| r.plan.target == Target::Cycle);
        assert!(self.paths.remove_edge(b, seed.point));
        self.paths.add_edge(b, seed.other);
        self.paths.add_edge(seed.point, seed.end);
        self.paths.relayout();
        self.bridges.push((b, seed.other));
        self.bridges.push((seed.point, seed.end));
        self.used_apexes.extend([apex, seed.apex]);
        self.structure.push(self.part.hyperedge(b, apex, seed.other));
        self.structure.push(self.part.hyperedge(seed.point, seed.apex, seed.end));
        self.metrics.phase2b_actions += 1;
        self.round.as_mut().unwrap().actions += 1;
        let ok = if last { self.paths.is_single_cycle() } else { self.paths.path_count() + 1 == before };
        if !ok {
            self.fail(format!("Phase2b: path count {before} -> {}", self.paths.path_count()));
            return;
        }
        self.delete(victims);
    }

    fn phase3(&mut self) {
        let g = self.graph.as_ref().unwrap();
        let m = self.part.m as usize;
        let (a, b) = (g.alive_count(Side::Apex), g.alive_count(Side::Base));
        let (a_x, b_x) = (self.metrics.a_x, self.metrics.b_x);
        self.metrics.apexes_deleted = self.apex_orig.len() - a;
        self.metrics.bases_deleted = self.base_orig.len() - b;
        self.metrics.blocked_final = g.blocked_len();
        self.metrics.q_fraction = g.blocked_len() as f64 / (2 * m).max(1) as f64;
        self.metrics.q_within_eps_q = self.metrics.q_fraction <= self.eps_q;
        let expected = 3 * a_x + 2 * b_x;
        if m - a != expected || m - b != expected {
            self.fail(format!(
                "Phase3: |A0 \\ A| = {}, |B0 \\ B| = {}, expected {expected}",
                m - a,
                m - b
            ));
            return;
        }
        if self.metrics.apexes_deleted != 2 * (a_x + b_x) || self.metrics.bases_deleted != 3 * a_x + b_x {
            self.fail("Phase3: deletion counts disagree with the failed-node counts".into());
            return;
        }
        if let Err(e) = self.correspondence() {
            self.fail(format!("Phase3: {e}"));
            return;
        }
        let audit = g.audit_outdegrees();
        if audit.min.is_some_and(|d| d + 1 < self.k) {
            self.metrics.degree_violations += 1;
            self.fail(format!("Phase3: out-degree {:?} below {}", audit.min, self.k - 1));
            return;
        }
        let result = max_matching(&BipartiteView::from_graph(g));
        if let Some(w) = &result.witness {
            self.metrics.hall_witness = Some((w.s.len(), w.t.len()));
            self.fail(format!("Phase3: Hall witness |S| = {}, |N(S)| = {}", w.s.len(), w.t.len()));
            return;
        }
        match matching_to_hyperedges(&result, &self.provenance) {
            Ok(edges) => {
                self.metrics.phase3_size = edges.len();
                self.structure.extend(edges);
                self.phase = HcPhase::Finished;
                self.status = Status::Done;
            }
            Err(e) => self.fail(format!("Phase3: {e}")),
        }
    }
}

impl Strategy for HamiltonStrategy {
    fn start(&mut self) {
        if self.graph.is_some() {
            self.advance();
        }
    }

    fn on_offer(&mut self, offer: &Offer) -> Response {
        match self.phase {
            HcPhase::P1 => self.phase1_offer(offer),
            HcPhase::P2a => match self.phase2a_try(offer) {
                HcAttempt::ActionTaken => {
                    let edge = self.structure[self.structure.len() - 1 - self.metrics.phase3_size].clone();
                    Response::Accept(edge)
                }
                HcAttempt::Discarded(_) => Response::Ignore,
            },
            HcPhase::P2b => self.phase2b_offer(offer),
            HcPhase::P3 | HcPhase::Finished => Response::Ignore,
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
    use crate::process::{run, RunConfig};

    fn stress() -> Profile {
        let mut p = Profile::desk();
        p.c = Some(30.0);
        p
    }

    #[test]
    fn partition_and_roles() {
        let p = partition_hc(12, 4).unwrap();
        assert_eq!(p.m, 4);
        assert_eq!(p.base_pair(3), [10, 1]);
        assert_eq!(p.apex_points(1).collect::<Vec<_>>(), vec![5, 6]);
        assert_eq!(p.role(4), HcRole::Base(1));
        assert_eq!(p.role(12), HcRole::Apex(3));
        assert_eq!(p.pair_index(0, 3), Some(3));
        assert_eq!(p.pair_index(0, 2), None);
        assert_eq!(p.hyperedge(3, 1, 0).points(), &[1, 5, 6, 10]);
        assert!(matches!(partition_hc(9, 3), Err(HcPartitionError::Divisibility { .. })));
        assert!(matches!(partition_hc(4, 3), Err(HcPartitionError::TooSmall { .. })));
        let odd = partition_hc(10, 3).unwrap();
        assert_eq!((odd.cells(), odd.cell_of(4), odd.cell_of(3)), (2, None, Some(1)));
    }

    #[test]
    fn stress_runs_close_the_cycle() {
        let prof = stress();
        let n = 4000;
        let mut exercised = false;
        for seed in 0..6 {
            let mut st = HamiltonStrategy::new(partition_hc(n, 3).unwrap(), &prof, seed);
            st.set_full_audit(true);
            let cfg = RunConfig {
                seed,
                n,
                s: 3,
                r: 2,
                budget: prof.hamilton_budget(n),
                profile: "custom".into(),
                keep_hypergraph: false,
            };
            let t = run(&mut st, &cfg).unwrap();
            assert!(t.outcome.is_success(), "seed {seed}: {:?}", t.outcome);
            assert!(st.paths().is_single_cycle());
            st.correspondence().unwrap();
            let m = st.metrics();
            assert_eq!(m.cap_violations, 0);
            assert_eq!(m.degree_violations, 0);
            assert_eq!(t.structure.len(), (n / 2) as usize);
            exercised |= m.phase2b_actions > 0;
        }
        assert!(exercised, "no seed reached Phase 2b");
    }
}

#[cfg(test)]
mod synthetic {
    use super::*;
    use crate::kout::uniform_k_out;
    use crate::process::next_offer;
    use rand::seq::index::sample;

    /// Phase-2b state with `ell` failed base pairs and no failed apexes.
    fn state(m: u32, ell: usize, seed: u64) -> HamiltonStrategy {
        let n = 2 * m;
        let mut rng = stream_rng(seed, Stream::Builder);
        let mut failed: Vec<u32> = sample(&mut rng, m as usize, ell).into_iter().map(|i| i as u32).collect();
        failed.sort_unstable();
        let bases: Vec<u32> = (0..m).filter(|b| failed.binary_search(b).is_err()).collect();
        let graph = uniform_k_out(m as usize, bases.len(), 10, &mut rng);
        let kout = KOut {
            graph,
            apexes: (0..m).collect(),
            bases,
            failed_apexes: Vec::new(),
            failed_bases: failed,
            sources: Vec::new(),
        };
        let mut st = HamiltonStrategy::with_phase1(partition_hc(n, 3).unwrap(), &Profile::desk(), seed, kout);
        st.start();
        st
    }

    #[test]
    fn fill_acceptance_in_first_round() {
        let (mut attempts, mut actions) = (0u64, 0u64);
        for seed in 0..20 {
            let mut st = state(5000, 100, seed);
            assert_eq!(st.current_phase(), HcPhase::P2b);
            assert_eq!(st.paths().path_count(), 100);
            assert!(st.graph().unwrap().blocked_len() as f64 <= 0.1 * 10_000.0);
            let mut rng = stream_rng(seed, Stream::Offers);
            while st.metrics().rounds.is_empty() {
                st.on_offer(&next_offer(&mut rng, 10_000, 2));
            }
            let r = &st.metrics().rounds[0];
            assert_eq!(r.outcome, RoundOutcome::Success);
            assert_eq!(r.paths_end, 90);
            attempts += r.actions_attempted;
            actions += r.actions_taken;
        }
        let rate = actions as f64 / attempts as f64;
        assert!(rate >= 0.2 - 0.03, "fill acceptance {rate:.3} ({actions}/{attempts})");
    }
}
