//! Scenario runner and randomised invariant suite for the `objectify`
//! library.

pub mod bundled;
pub mod error;
pub mod report;
pub mod scenario;
pub mod suite;

pub use bundled::{bundled, BUNDLED};
pub use error::CliError;
pub use report::{run, RunOptions, RunReport};
pub use scenario::{load_scenario, LoadOptions, Scenario, ScenarioFile};
pub use suite::{suite, SuiteConfig, SuiteSummary};

/// Environment variable overriding the default seed.
pub const SEED_ENV: &str = "OBJECTIFY_SEED";

/// Seed from [`SEED_ENV`], or zero when it is unset.
pub fn default_seed() -> Result<u64, String> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|e| format!("{SEED_ENV}={s:?} is not a seed: {e}")),
        Err(_) => Ok(0),
    }
}
