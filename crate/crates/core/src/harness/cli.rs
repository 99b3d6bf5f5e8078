//! Command-line front end. Exit codes: 0 on success, 1 if any run or audit
//! fails, 2 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use super::{csv_string, run_once, sweep, RunSpec, SweepRow, SweepSpec, Task};
use crate::kout::solve_params;
use crate::process::{stream_rng, Stream};
use crate::profile::{Profile, ProfileError};
use crate::verify::{audit_claim_1vx, eta, expansion_report, sample_expansion};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "semirandom", version, about = "Semirandom hypergraph process: seeded runs, sweeps, audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One perfect-matching run; prints the transcript.
    RunMatching(RunArgs),
    /// One loose-Hamilton-cycle run; prints the transcript.
    RunHamilton(RunArgs),
    /// Many seeds, one CSV row per run.
    Sweep(SweepArgs),
    /// Double-in-edge count and expansion sampling on uniform k-out graphs.
    Audit(AuditArgs),
    /// Builder constants for a given k and failure tolerance.
    Params(ParamsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    /// `paper`, `desk`, or a TOML profile file.
    #[arg(long, default_value = "desk")]
    profile: String,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long = "eps-d")]
    eps_d: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long = "budget-slack")]
    budget_slack: Option<f64>,
}

impl ProfileArgs {
    fn resolve(&self) -> Result<Profile, ProfileError> {
        let mut p = Profile::resolve(&self.profile)?;
        if self.k.is_none() && self.eps_d.is_none() && self.c.is_none() && self.budget_slack.is_none() {
            return Ok(p);
        }
        p = p.customized();
        if let Some(k) = self.k {
            p.k = k;
        }
        if let Some(e) = self.eps_d {
            p.eps_d = e;
        }
        if self.c.is_some() {
            p.c = self.c;
        }
        if let Some(b) = self.budget_slack {
            p.budget_slack = b;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 3)]
    s: usize,
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include every accepted hyperedge in the transcript.
    #[arg(long)]
    keep_hypergraph: bool,
    /// Audit every out-degree after each action.
    #[arg(long)]
    full_audit: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    task: Task,
    /// Comma-separated n values.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u32>,
    #[arg(long, default_value_t = 3)]
    s: usize,
    #[arg(long, default_value_t = 2)]
    r: usize,
    /// Seeds as `a-b` (inclusive) or a comma-separated list; empty for none.
    #[arg(long, default_value = "1-10")]
    seeds: String,
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record per-run wall-clock time (makes output nondeterministic).
    #[arg(long)]
    wallclock: bool,
}

#[derive(Debug, Args)]
struct AuditArgs {
    /// Nodes per part for the double-in-edge count.
    #[arg(long, default_value_t = 100_000)]
    n_side: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Number of seeds, starting at 1.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Total node count for expansion sampling.
    #[arg(long, default_value_t = 2000)]
    expansion_n: usize,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Part-size ratio in the expansion bound.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    c: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ParamsArgs {
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
}

/// Parses `a-b` or `x,y,z`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((a, b)) = text.split_once('-') {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range {text:?}"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range {text:?}"))?;
        if a > b {
            return Err(format!("empty seed range {text:?}"));
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| format!("bad seed {s:?}"))).collect()
}

fn emit(out: &Option<PathBuf>, text: &str) -> io::Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(text.as_bytes())?;
            w.flush()
        }
        None => {
            let mut w = io::stdout().lock();
            w.write_all(text.as_bytes())?;
            w.flush()
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn cmd_run(task: Task, a: &RunArgs) -> i32 {
    let profile = match a.profile.resolve() {
        Ok(p) => p,
        Err(e) => return usage(e),
    };
    let spec = RunSpec {
        keep_hypergraph: a.keep_hypergraph,
        full_audit: a.full_audit,
        ..RunSpec::new(task, a.n, a.s, a.r, a.seed)
    };
    let rec = match run_once(&spec, &profile) {
        Ok(r) => r,
        Err(e) if e.is_usage() => return usage(e),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAIL;
        }
    };
    let text = match a.format {
        Format::Json => rec.to_json() + "\n",
        Format::Csv => csv_string(&[SweepRow::from_record(&rec, None)]),
    };
    if let Err(e) = emit(&a.out, &text) {
        eprintln!("error: {e}");
        return EXIT_FAIL;
    }
    if rec.passed() {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn cmd_sweep(a: &SweepArgs) -> i32 {
    let profile = match a.profile.resolve() {
        Ok(p) => p,
        Err(e) => return usage(e),
    };
    let seeds = match parse_seeds(&a.seeds) {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    let spec = SweepSpec { task: a.task, ns: a.n.clone(), s: a.s, r: a.r, seeds, profile, wallclock: a.wallclock };
    let rows = match sweep(&spec, None) {
        Ok(r) => r,
        Err(e) if e.is_usage() => return usage(e),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAIL;
        }
    };
    let text = match a.format {
        Format::Csv => csv_string(&rows),
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
    };
    if let Err(e) = emit(&a.out, &text) {
        eprintln!("error: {e}");
        return EXIT_FAIL;
    }
    if rows.iter().all(SweepRow::passed) {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn cmd_audit(a: &AuditArgs) -> i32 {
    if a.k == 0 || a.n_side == 0 || a.expansion_n < 2 || !(a.c > 0.0 && a.c < 1.0) {
        return usage("audit needs k, n-side > 0, expansion-n >= 2 and c in (0, 1)");
    }
    let seeds: Vec<u64> = (1..=a.seeds).collect();
    let double = audit_claim_1vx(a.n_side, a.k, &seeds).report();
    let mut rng = stream_rng(1, Stream::Builder);
    let half = a.expansion_n / 2;
    let g = crate::kout::uniform_k_out(half, a.expansion_n - half, a.k, &mut rng);
    let sample = sample_expansion(&g, a.c, a.k, a.delta, a.trials, &mut rng);
    let expansion = expansion_report(&sample, a.expansion_n, a.k, a.c, a.delta);
    let pass = double.pass && expansion.pass;
    let text = [double, expansion]
        .iter()
        .map(|r| serde_json::to_string(r).expect("report serializes") + "\n")
        .collect::<String>();
    if let Err(e) = emit(&a.out, &text) {
        eprintln!("error: {e}");
        return EXIT_FAIL;
    }
    if pass {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn cmd_params(a: &ParamsArgs) -> i32 {
    if a.k == 0 || !(a.eps > 0.0 && a.eps < 1.0) {
        return usage("params needs k > 0 and eps in (0, 1)");
    }
    let p = solve_params(a.k, a.eps);
    let delta_d = 15.0 * a.eps;
    let e = eta(1.0 / 3.0, a.k, delta_d);
    let out = json!({
        "k": a.k,
        "eps": a.eps,
        "builder_delta": p.delta,
        "lambda": p.lambda,
        "C": p.c,
        "delta_D": delta_d,
        "eta": e,
        "k_eta": a.k as f64 * e,
        "k_eta_at_most_0.1": a.k as f64 * e <= 0.1,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    EXIT_OK
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::RunMatching(a) => cmd_run(Task::Matching, a),
        Command::RunHamilton(a) => cmd_run(Task::Hamilton, a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Params(a) => cmd_params(a),
    }
}
