use serde::{Deserialize, Serialize};
use weil_core::values::RingValue;

use crate::config::SuiteName;

pub const REPORT_SCHEMA: &str = "weil.suite-report/1";

/// Cases run and failures seen for one named identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckTally {
    pub name: String,
    pub cases: u64,
    pub failures: u64,
}

/// Minimal reproducing data for a failed identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub check: String,
    pub case: String,
    pub lhs: Option<RingValue>,
    pub rhs: Option<RingValue>,
    pub detail: Option<String>,
}

/// Outcome of a suite. Serialization leaves out the wall time, so reports
/// for the same configuration are byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: String,
    pub suite: SuiteName,
    pub p: u32,
    pub d: usize,
    pub level: usize,
    pub seed: u64,
    pub samples: usize,
    pub cases: u64,
    pub passed: bool,
    pub checks: Vec<CheckTally>,
    pub failure: Option<Witness>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl SuiteReport {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn check(&self, name: &str) -> Option<&CheckTally> {
        self.checks.iter().find(|c| c.name == name)
    }
}
