use serde::Serialize;

/// Where a Phase-2b round stops successfully.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Target {
    /// At most this many path components.
    Components(usize),
    /// The single path is closed into a cycle.
    Cycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RoundPlan {
    pub ell: usize,
    pub f: u64,
    pub offer_cap: u64,
    pub action_cap: u64,
    pub target: Target,
}

/// Exact `floor((n³ ℓ)^{1/4}) = floor(n^{3/4} ℓ^{1/4})`.
fn f_of(ell: usize, n: u32) -> u64 {
    let v = (n as u128).pow(3) * ell as u128;
    let mut x = (v as f64).powf(0.25) as u128;
    while (x + 1).pow(4) <= v {
        x += 1;
    }
    while x > 0 && x.pow(4) > v {
        x -= 1;
    }
    x as u64
}

/// Caps and stopping target of a round that starts with `ell` components.
pub fn round_plan(ell: usize, n: u32) -> RoundPlan {
    assert!(ell >= 1, "a round needs at least one component");
    let f = f_of(ell, n);
    let target = match ell {
        1 => Target::Cycle,
        2..=9 => Target::Components(ell - 1),
        _ => Target::Components(9 * ell / 10),
    };
    RoundPlan {
        ell,
        f,
        offer_cap: 10 * f,
        action_cap: (f * f / n as u64).max(1),
        target,
    }
}

/// Rounds from `ell0` components down to the cycle, assuming every round
/// ends exactly at its target.
pub fn round_schedule(ell0: usize, n: u32) -> Vec<RoundPlan> {
    let mut out = Vec::new();
    let mut ell = ell0.max(1);
    loop {
        let plan = round_plan(ell, n);
        out.push(plan);
        match plan.target {
            Target::Cycle => return out,
            Target::Components(next) => ell = next,
        }
    }
}

/// Offer allowance for Phase 2b: `Σ 10 f(ℓᵢ)` over the schedule that starts
/// from `ℓ₀ = ceil(ε_D n)`, the largest component count Phase 2a can leave.
pub fn planned_phase2b_offers(n: u32, eps_d: f64) -> u64 {
    let ell0 = (eps_d * n as f64).ceil().max(1.0) as usize;
    round_schedule(ell0, n).iter().map(|p| p.offer_cap).sum()
}
