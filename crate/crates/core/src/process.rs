//! The semirandom offer engine. Each round offers `r` uniformly random
//! vertices of `[n]`; the strategy either completes them to an `s`-set or
//! ignores the offer. Ignored rounds still count.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use smallvec::SmallVec;
use thiserror::Error;

use crate::hyperedge::{Hyperedge, HyperedgeError, Point};

/// Independent random sub-streams of one seed. Each consumer owns its own
/// generator so, e.g., the builder's draws do not depend on how many offers
/// the strategy inspected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Offers = 0,
    Strategy = 1,
    Builder = 2,
    Adapter = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// The `r` offered vertices, sorted, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Offer(SmallVec<[Point; 2]>);

impl Offer {
    pub fn new(points: &[Point]) -> Self {
        let mut v: SmallVec<[Point; 2]> = SmallVec::from_slice(points);
        v.sort_unstable();
        Offer(v)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Uniform `r`-subset of `[n]`.
pub fn next_offer<R: Rng + ?Sized>(rng: &mut R, n: u32, r: usize) -> Offer {
    assert!(r as u64 <= n as u64, "offer size exceeds n");
    match r {
        0 => Offer(SmallVec::new()),
        1 => Offer(smallvec::smallvec![rng.random_range(1..=n)]),
        2 => {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            Offer::new(&[a + 1, b + 1])
        }
        _ => {
            let picks: Vec<Point> = index::sample(rng, n as usize, r)
                .into_iter()
                .map(|i| i as Point + 1)
                .collect();
            Offer::new(&picks)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Accept(Hyperedge),
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Status {
    Running,
    Done,
    Failed(String),
}

/// What a finished strategy hands back for the transcript.
#[derive(Debug, Clone, Default, Serialize)]
pub struct StrategyReport {
    /// The constructed structure (the matching or the cycle, in order).
    pub structure: Vec<Hyperedge>,
    /// Actions taken after Phase 1.
    pub phase2_actions: u64,
    pub metrics: serde_json::Value,
}

pub trait Strategy {
    /// Called once before the first offer.
    fn start(&mut self) {}
    fn on_offer(&mut self, offer: &Offer) -> Response;
    fn status(&self) -> Status;
    /// Label for the per-phase round counters.
    fn phase(&self) -> &'static str;
    fn report(&self) -> StrategyReport;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProcessError {
    #[error("round {round}: malformed hyperedge: {source}")]
    Malformed { round: u64, source: HyperedgeError },
    #[error("round {round}: hyperedge {edge:?} omits offered vertex {missing}")]
    MissingOffered { round: u64, edge: Hyperedge, missing: Point },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PhaseCount {
    pub offers: u64,
    pub accepted: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RoundLedger {
    pub rounds_total: u64,
    pub rounds_ignored: u64,
    pub rounds_accepted: u64,
    pub phase_counts: BTreeMap<String, PhaseCount>,
}

impl RoundLedger {
    fn record(&mut self, phase: &str, accepted: bool) {
        self.rounds_total += 1;
        let entry = self.phase_counts.entry(phase.to_string()).or_default();
        entry.offers += 1;
        if accepted {
            self.rounds_accepted += 1;
            entry.accepted += 1;
        } else {
            self.rounds_ignored += 1;
        }
        debug_assert_eq!(self.rounds_total, self.rounds_ignored + self.rounds_accepted);
    }

    pub fn phase_offers(&self, phase: &str) -> u64 {
        self.phase_counts.get(phase).map_or(0, |c| c.offers)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Success,
    BudgetExhausted,
    StrategyFailure(String),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Success => "Success",
            Outcome::BudgetExhausted => "BudgetExhausted",
            Outcome::StrategyFailure(_) => "StrategyFailure",
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Success)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub n: u32,
    pub s: usize,
    pub r: usize,
    pub budget: u64,
    pub profile: String,
    /// Keep every accepted hyperedge (the whole of `H`) in the transcript.
    pub keep_hypergraph: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Transcript {
    pub seed: u64,
    pub n: u32,
    pub s: usize,
    pub r: usize,
    pub profile: String,
    pub outcome: Outcome,
    pub budget: u64,
    pub rounds_total: u64,
    pub rounds_ignored: u64,
    pub rounds_accepted: u64,
    pub phase_counts: BTreeMap<String, PhaseCount>,
    /// All accepted hyperedges, sorted; empty unless kept.
    pub hyperedges: Vec<Hyperedge>,
    pub structure: Vec<Hyperedge>,
    pub phase2_actions: u64,
    pub metrics: serde_json::Value,
}

impl Transcript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }
}

/// Drives offers into `strategy` until it finishes, fails, or the budget is
/// spent.
pub fn run<S: Strategy + ?Sized>(strategy: &mut S, cfg: &RunConfig) -> Result<Transcript, ProcessError> {
    let mut rng = stream_rng(cfg.seed, Stream::Offers);
    let mut ledger = RoundLedger::default();
    let mut hypergraph = Vec::new();
    strategy.start();
    let outcome = loop {
        match strategy.status() {
            Status::Done => break Outcome::Success,
            Status::Failed(reason) => break Outcome::StrategyFailure(reason),
            Status::Running => {}
        }
        if ledger.rounds_total >= cfg.budget {
            break Outcome::BudgetExhausted;
        }
        let offer = next_offer(&mut rng, cfg.n, cfg.r);
        let phase = strategy.phase();
        let round = ledger.rounds_total + 1;
        match strategy.on_offer(&offer) {
            Response::Ignore => ledger.record(phase, false),
            Response::Accept(edge) => {
                let edge = Hyperedge::new(edge.points(), cfg.n, cfg.s)
                    .map_err(|source| ProcessError::Malformed { round, source })?;
                if let Some(&missing) = offer.vertices().iter().find(|&&v| !edge.contains(v)) {
                    return Err(ProcessError::MissingOffered { round, edge, missing });
                }
                ledger.record(phase, true);
                if cfg.keep_hypergraph {
                    hypergraph.push(edge);
                }
            }
        }
    };
    hypergraph.sort_unstable();
    let report = strategy.report();
    Ok(Transcript {
        seed: cfg.seed,
        n: cfg.n,
        s: cfg.s,
        r: cfg.r,
        profile: cfg.profile.clone(),
        outcome,
        budget: cfg.budget,
        rounds_total: ledger.rounds_total,
        rounds_ignored: ledger.rounds_ignored,
        rounds_accepted: ledger.rounds_accepted,
        phase_counts: ledger.phase_counts,
        hyperedges: hypergraph,
        structure: report.structure,
        phase2_actions: report.phase2_actions,
        metrics: report.metrics,
    })
}

/// Runs a strategy written for 2-offers under the 1-offer model: the second
/// vertex is drawn uniformly by the player, resampling on collision.
pub struct OneOfferAdapter<S> {
    inner: S,
    n: u32,
    rng: ChaCha8Rng,
}

impl<S: Strategy> OneOfferAdapter<S> {
    pub fn new(inner: S, n: u32, seed: u64) -> Self {
        assert!(n >= 2, "need at least two vertices");
        OneOfferAdapter { inner, n, rng: stream_rng(seed, Stream::Adapter) }
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    /// The pair forwarded for a 1-offer of `v`.
    pub fn complete(&mut self, v: Point) -> Offer {
        loop {
            let w = self.rng.random_range(1..=self.n);
            if w != v {
                return Offer::new(&[v, w]);
            }
        }
    }
}

impl<S: Strategy> Strategy for OneOfferAdapter<S> {
    fn start(&mut self) {
        self.inner.start();
    }

    fn on_offer(&mut self, offer: &Offer) -> Response {
        assert_eq!(offer.len(), 1, "adapter expects 1-offers");
        let pair = self.complete(offer.vertices()[0]);
        self.inner.on_offer(&pair)
    }

    fn status(&self) -> Status {
        self.inner.status()
    }

    fn phase(&self) -> &'static str {
        self.inner.phase()
    }

    fn report(&self) -> StrategyReport {
        self.inner.report()
    }
}
