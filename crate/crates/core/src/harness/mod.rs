//! Experiment harness: configuration, the reproduction studies, row output
//! and the self-check suite.

pub mod check;
pub mod config;
pub mod output;
mod pool;
pub mod studies;

pub use check::{run_check_suite, CheckReport, CheckResult};
pub use config::{ExperimentConfig, Study};
pub use output::{write_rows, Format, Row, SeedField, CSV_HEADER};
pub use pool::parallel_map;
pub use studies::{
    estimate_study, moments_study, optimize_study, EstimateConfig, EstimateResults, MethodSpec,
    MomentRow, MomentsConfig, OptimizeConfig, OptimizeResults,
};

use crate::error::{Error, Result};

/// Run a data-producing study and collect its output rows in canonical order.
pub fn study_rows(study: Study, config: &ExperimentConfig) -> Result<Vec<Row>> {
    let jobs = config.jobs();
    match study {
        Study::Moments => {
            let cfg = config.moments()?;
            Ok(studies::moment_rows(&cfg, &moments_study(&cfg)?))
        }
        Study::Estimate => {
            Ok(estimate_study(&config.estimate()?, jobs)?.rows(config.record_every()))
        }
        Study::Optimize => {
            Ok(optimize_study(&config.optimize()?, jobs)?.rows(config.record_every()))
        }
        Study::Check => Err(Error::Config(
            "the check study produces a report, not rows".into(),
        )),
    }
}
