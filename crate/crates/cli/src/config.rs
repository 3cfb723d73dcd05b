use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Lemma1,
    Sublemma1,
    Theorem1,
    Maslov,
    Weilrep,
    Reduction,
    Tower,
    Schrodinger,
    Theta,
    All,
}

impl SuiteName {
    pub const EACH: [SuiteName; 9] = [
        SuiteName::Lemma1,
        SuiteName::Sublemma1,
        SuiteName::Theorem1,
        SuiteName::Maslov,
        SuiteName::Weilrep,
        SuiteName::Reduction,
        SuiteName::Tower,
        SuiteName::Schrodinger,
        SuiteName::Theta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Lemma1 => "lemma1",
            SuiteName::Sublemma1 => "sublemma1",
            SuiteName::Theorem1 => "theorem1",
            SuiteName::Maslov => "maslov",
            SuiteName::Weilrep => "weilrep",
            SuiteName::Reduction => "reduction",
            SuiteName::Tower => "tower",
            SuiteName::Schrodinger => "schrodinger",
            SuiteName::Theta => "theta",
            SuiteName::All => "all",
        }
    }
}

impl FromStr for SuiteName {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        SuiteName::EACH
            .into_iter()
            .chain([SuiteName::All])
            .find(|n| n.as_str() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown suite `{s}`")))
    }
}

impl std::fmt::Display for SuiteName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Limits checked before large allocations and between cases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_table_bytes: u64,
    pub max_seconds: Option<f64>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_table_bytes: 1 << 31, max_seconds: None }
    }
}

/// Approximate bytes of one stored ring value.
pub fn value_bytes(p: u32) -> u64 {
    64 + 32 * (p as u64 - 1)
}

/// Tracks elapsed time and rejects oversized tables.
#[derive(Clone, Debug)]
pub struct BudgetClock {
    budget: Budget,
    start: Instant,
}

impl BudgetClock {
    pub fn start(budget: Budget) -> Self {
        BudgetClock { budget, start: Instant::now() }
    }

    pub fn elapsed_seconds(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    pub fn tick(&self) -> CliResult<()> {
        match self.budget.max_seconds {
            Some(max) if self.elapsed_seconds() > max => Err(CliError::Budget(format!("time limit of {max} s"))),
            _ => Ok(()),
        }
    }

    pub fn reserve(&self, bytes: u64, what: &str) -> CliResult<()> {
        if bytes > self.budget.max_table_bytes {
            return Err(CliError::Budget(format!("{what} needs about {bytes} bytes, limit {}", self.budget.max_table_bytes)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub p: u32,
    pub d: usize,
    pub suite: SuiteName,
    /// Sample count for suites that do not run exhaustively.
    pub samples: usize,
    pub seed: u64,
    /// Truncation level for the tower, theta and Schrödinger suites.
    pub level: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub budget: Budget,
}

impl SuiteConfig {
    pub fn new(suite: SuiteName, p: u32, d: usize) -> Self {
        SuiteConfig { p, d, suite, samples: 200, seed: 0, level: 1, out: None, format: Format::Json, budget: Budget::default() }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_level(mut self, level: usize) -> Self {
        self.level = level;
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        weil_core::values::check_prime(self.p).map_err(|e| CliError::Usage(e.to_string()))?;
        if self.d > 4 {
            return Err(CliError::Usage(format!("d = {} is beyond desk scale (max 4)", self.d)));
        }
        Ok(())
    }
}
