//! Parameter profiles: the exact constants of the analysis, a desk-scale
//! relaxation, or user-supplied values.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamilton::planned_phase2b_offers;
use crate::kout::{solve_params, BuilderParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Paper,
    Desk,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub name: ProfileName,
    pub k: usize,
    /// Failed-node tolerance of the builder.
    pub eps_d: f64,
    /// Blocked-set fraction the run is expected to stay under; reported only.
    pub eps_q: f64,
    /// Stream coefficient; solved from `(k, eps_d)` when absent.
    pub c: Option<f64>,
    /// Apex surplus used for the matching partition.
    pub surplus: f64,
    /// Multiplies the offer budget.
    pub budget_slack: f64,
    /// Phase-1 rebuilds allowed after a builder failure.
    pub retries: u32,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("unknown profile {0:?} (expected paper, desk, or a TOML file)")]
    Unknown(String),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing profile: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid profile: {0}")]
    Invalid(String),
}

impl Profile {
    /// `k = 10`, `ε_D = 10⁻⁵`, `C` solved; 241n matching budget.
    pub fn paper() -> Self {
        Profile {
            name: ProfileName::Paper,
            k: 10,
            eps_d: 1e-5,
            eps_q: 0.1,
            c: None,
            surplus: 1e-5,
            budget_slack: 1.0,
            retries: 0,
        }
    }

    pub fn desk() -> Self {
        Profile {
            name: ProfileName::Desk,
            k: 10,
            eps_d: 0.01,
            eps_q: 0.1,
            c: None,
            surplus: 0.001,
            budget_slack: 2.0,
            retries: 3,
        }
    }

    /// `paper`, `desk`, or a path to a TOML profile.
    pub fn resolve(spec: &str) -> Result<Self, ProfileError> {
        match spec {
            "paper" => Ok(Self::paper()),
            "desk" => Ok(Self::desk()),
            path if Path::new(path).is_file() => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| ProfileError::Io { path: path.to_string(), source })?;
                Self::from_toml(&text)
            }
            other => Err(ProfileError::Unknown(other.to_string())),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ProfileError> {
        let p: Profile = toml::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let bad = |m: &str| Err(ProfileError::Invalid(m.to_string()));
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if !(self.eps_d > 0.0 && self.eps_d < 1.0) {
            return bad("eps_d must lie in (0, 1)");
        }
        if !(self.surplus >= 0.0 && self.surplus < 0.1) {
            return bad("surplus must lie in [0, 0.1)");
        }
        if let Some(c) = self.c {
            if !(c > 0.0 && c.is_finite()) {
                return bad("c must be positive");
            }
        }
        if !(self.budget_slack > 0.0 && self.budget_slack.is_finite()) {
            return bad("budget_slack must be positive");
        }
        Ok(())
    }

    /// Marks the profile as custom, for when flags override its values.
    pub fn customized(mut self) -> Self {
        self.name = ProfileName::Custom;
        self
    }

    pub fn label(&self) -> &'static str {
        match self.name {
            ProfileName::Paper => "paper",
            ProfileName::Desk => "desk",
            ProfileName::Custom => "custom",
        }
    }

    pub fn builder(&self) -> BuilderParams {
        match self.c {
            Some(c) => BuilderParams::with_c(self.k, self.eps_d, c),
            None => solve_params(self.k, self.eps_d),
        }
    }

    /// Phase 1 gets `3Cn` offers, Phase 2a `27·2ε_D n`, Phase 2b
    /// `127·2ε_D n`. The paper profile uses the flat `241n`.
    pub fn matching_budget(&self, n: u32) -> u64 {
        let n = n as f64;
        let raw = match self.name {
            ProfileName::Paper => 241.0 * n,
            _ => 3.0 * self.builder().c * n + (27.0 + 127.0) * 2.0 * self.eps_d * n,
        };
        (self.budget_slack * raw).ceil() as u64
    }

    /// `3Cn` for Phase 1, `27 ε_D n` for Phase 2a, and the planned sum of
    /// per-round offer caps for Phase 2b.
    pub fn hamilton_budget(&self, n: u32) -> u64 {
        let raw = 3.0 * self.builder().c * n as f64
            + 27.0 * self.eps_d * n as f64
            + planned_phase2b_offers(n, self.eps_d) as f64;
        (self.budget_slack * raw).ceil() as u64
    }
}
