//! Seeded single runs, verified against the independent checkers, and
//! parallel sweeps with a fixed CSV schema.

pub mod cli;

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hamilton::{partition_hc, HamiltonStrategy, HcPartitionError};
use crate::matching::{partition_vertices, MatchingStrategy, PartitionError};
use crate::process::{run, OneOfferAdapter, ProcessError, RunConfig, Strategy, Transcript};
use crate::profile::Profile;
use crate::verify::{verify_loose_hamilton, verify_perfect_matching, Violation};

/// Caps sweep parallelism when set.
pub const THREADS_ENV: &str = "SEMIRANDOM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Matching,
    Hamilton,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    HcPartition(#[from] HcPartitionError),
    #[error("r = {0} is not supported (expected 1 or 2)")]
    Offers(usize),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("building thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl HarnessError {
    /// Errors caused by the request itself rather than by a run.
    pub fn is_usage(&self) -> bool {
        matches!(self, HarnessError::Partition(_) | HarnessError::HcPartition(_) | HarnessError::Offers(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSpec {
    pub task: Task,
    pub n: u32,
    pub s: usize,
    pub r: usize,
    pub seed: u64,
    pub keep_hypergraph: bool,
    /// Full out-degree audit and structure checks after every action.
    pub full_audit: bool,
}

impl RunSpec {
    pub fn new(task: Task, n: u32, s: usize, r: usize, seed: u64) -> Self {
        RunSpec { task, n, s, r, seed, keep_hypergraph: false, full_audit: false }
    }
}

/// A transcript plus the verdict of the independent verifier on its
/// structure (checked only for successful runs).
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    #[serde(flatten)]
    pub transcript: Transcript,
    pub verification: Option<Violation>,
}

impl RunRecord {
    /// Success and a valid structure.
    pub fn passed(&self) -> bool {
        self.transcript.outcome.is_success() && self.verification.is_none()
    }

    /// The outcome label, or `InvalidStructure` if the verifier rejected a
    /// successful run.
    pub fn label(&self) -> &'static str {
        if self.verification.is_some() {
            "InvalidStructure"
        } else {
            self.transcript.outcome.label()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

/// Checks the request without running it.
pub fn validate(task: Task, n: u32, s: usize, r: usize, profile: &Profile) -> Result<(), HarnessError> {
    if !(1..=2).contains(&r) {
        return Err(HarnessError::Offers(r));
    }
    match task {
        Task::Matching => partition_vertices(n, s, profile.surplus).map(drop)?,
        Task::Hamilton => partition_hc(n, s).map(drop)?,
    }
    Ok(())
}

fn drive<S: Strategy>(strategy: S, spec: &RunSpec, cfg: &RunConfig) -> Result<Transcript, ProcessError> {
    if spec.r == 1 {
        let mut adapter = OneOfferAdapter::new(strategy, spec.n, spec.seed);
        run(&mut adapter, cfg)
    } else {
        let mut strategy = strategy;
        run(&mut strategy, cfg)
    }
}

pub fn run_once(spec: &RunSpec, profile: &Profile) -> Result<RunRecord, HarnessError> {
    validate(spec.task, spec.n, spec.s, spec.r, profile)?;
    let budget = match spec.task {
        Task::Matching => profile.matching_budget(spec.n),
        Task::Hamilton => profile.hamilton_budget(spec.n),
    };
    let cfg = RunConfig {
        seed: spec.seed,
        n: spec.n,
        s: spec.s,
        r: spec.r,
        budget,
        profile: profile.label().to_string(),
        keep_hypergraph: spec.keep_hypergraph,
    };
    let transcript = match spec.task {
        Task::Matching => {
            let mut st = MatchingStrategy::new(partition_vertices(spec.n, spec.s, profile.surplus)?, profile, spec.seed);
            st.set_full_audit(spec.full_audit);
            drive(st, spec, &cfg)?
        }
        Task::Hamilton => {
            let mut st = HamiltonStrategy::new(partition_hc(spec.n, spec.s)?, profile, spec.seed);
            st.set_full_audit(spec.full_audit);
            drive(st, spec, &cfg)?
        }
    };
    let verification = if transcript.outcome.is_success() {
        let check = match spec.task {
            Task::Matching => verify_perfect_matching,
            Task::Hamilton => verify_loose_hamilton,
        };
        check(spec.n, spec.s, &transcript.structure).err()
    } else {
        None
    };
    Ok(RunRecord { transcript, verification })
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub task: Task,
    pub ns: Vec<u32>,
    pub s: usize,
    pub r: usize,
    pub seeds: Vec<u64>,
    pub profile: Profile,
    /// Fill the `wallclock_ms` column; off by default so output is
    /// reproducible byte for byte.
    pub wallclock: bool,
}

/// One CSV row; the column set is fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub n: u32,
    pub s: usize,
    pub r: usize,
    pub outcome: String,
    pub rounds_total: u64,
    pub rounds_ignored: u64,
    pub phase1_rounds: u64,
    pub phase2_actions: u64,
    pub wallclock_ms: Option<u64>,
}

impl SweepRow {
    pub fn from_record(rec: &RunRecord, wallclock_ms: Option<u64>) -> Self {
        let t = &rec.transcript;
        SweepRow {
            seed: t.seed,
            n: t.n,
            s: t.s,
            r: t.r,
            outcome: rec.label().to_string(),
            rounds_total: t.rounds_total,
            rounds_ignored: t.rounds_ignored,
            phase1_rounds: t.phase_counts.get("P1").map_or(0, |c| c.offers),
            phase2_actions: t.phase2_actions,
            wallclock_ms,
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome == "Success"
    }
}

fn row(spec: &SweepSpec, n: u32, seed: u64) -> SweepRow {
    let t0 = Instant::now();
    let result = run_once(&RunSpec::new(spec.task, n, spec.s, spec.r, seed), &spec.profile);
    let wallclock_ms = spec.wallclock.then(|| t0.elapsed().as_millis() as u64);
    match result {
        Ok(rec) => SweepRow::from_record(&rec, wallclock_ms),
        Err(_) => SweepRow {
            seed,
            n,
            s: spec.s,
            r: spec.r,
            outcome: "Error".into(),
            rounds_total: 0,
            rounds_ignored: 0,
            phase1_rounds: 0,
            phase2_actions: 0,
            wallclock_ms,
        },
    }
}

/// Thread count from [`THREADS_ENV`], if set to a positive integer.
pub fn env_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.parse().ok().filter(|&t| t > 0)
}

/// Runs every `(n, seed)` pair, ordered by `n` then seed as given. Each
/// run is independent, so the rows do not depend on `threads`.
pub fn sweep(spec: &SweepSpec, threads: Option<usize>) -> Result<Vec<SweepRow>, HarnessError> {
    for &n in &spec.ns {
        validate(spec.task, n, spec.s, spec.r, &spec.profile)?;
    }
    let jobs: Vec<(u32, u64)> = spec.ns.iter().flat_map(|&n| spec.seeds.iter().map(move |&s| (n, s))).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads.or_else(env_threads) {
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;
    Ok(pool.install(|| jobs.par_iter().map(|&(n, seed)| row(spec, n, seed)).collect()))
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "seed",
            "n",
            "s",
            "r",
            "outcome",
            "rounds_total",
            "rounds_ignored",
            "phase1_rounds",
            "phase2_actions",
            "wallclock_ms",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("in-memory CSV");
    String::from_utf8(buf).expect("CSV is UTF-8")
}
