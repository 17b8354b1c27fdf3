//! Seeded randomized verification suites.
//!
//! Each suite exercises one theorem family at scale: many random instances,
//! explicit seeds, one report per named check with case counts and the
//! worst observed slack. The acceptance tests and the command-line `verify`
//! subcommand both run these functions, so a green suite here is the same
//! evidence either way.

mod derivation_suite;
mod evolution_suite;
mod rtl_suite;

pub use derivation_suite::derivation_suite;
pub use evolution_suite::evolution_suite;
pub use rtl_suite::rtl_suite;

use crate::tol::Tolerances;

/// One named check: how many cases ran, whether they all passed, and the
/// worst slack observed (sign convention per check; `detail` says which).
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub cases: usize,
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub(crate) fn new(suite: &str, seed: u64) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            seed,
            pass: true,
            checks: Vec::new(),
        }
    }

    pub(crate) fn push(
        &mut self,
        name: &str,
        pass: bool,
        cases: usize,
        worst: f64,
        detail: impl Into<String>,
    ) {
        self.pass &= pass;
        self.checks.push(CheckReport {
            name: name.to_string(),
            pass,
            cases,
            worst,
            detail: detail.into(),
        });
    }

    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Which suites to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteSelection {
    Rtl,
    Derivation,
    Evolution,
    All,
}

impl std::str::FromStr for SuiteSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rtl" => Ok(SuiteSelection::Rtl),
            "derivation" => Ok(SuiteSelection::Derivation),
            "evolution" => Ok(SuiteSelection::Evolution),
            "all" => Ok(SuiteSelection::All),
            other => Err(format!(
                "unknown suite '{other}' (expected rtl, derivation, evolution or all)"
            )),
        }
    }
}

pub fn run_suites(selection: SuiteSelection, seed: u64, tols: &Tolerances) -> Vec<SuiteReport> {
    match selection {
        SuiteSelection::Rtl => vec![rtl_suite(seed, tols)],
        SuiteSelection::Derivation => vec![derivation_suite(seed, tols)],
        SuiteSelection::Evolution => vec![evolution_suite(seed, tols)],
        SuiteSelection::All => vec![
            rtl_suite(seed, tols),
            derivation_suite(seed, tols),
            evolution_suite(seed, tols),
        ],
    }
}
