//! The three reproduction studies.
//!
//! Each study fans out over independent cells (method × noise × seed). A cell
//! owns its random streams, so results do not depend on the worker count.
//! Within a seed, all methods see the same initial point and the same noise
//! stream.

use crate::aggregators::{median_in_place, AggregatorKind, GeoMedianSettings};
use crate::error::{Error, Result};
use crate::estimators::{run_estimation, EstimatorConfig};
use crate::harness::output::{Row, SeedField};
use crate::harness::pool::parallel_map;
use crate::optimizers::{run_online, run_smgd, RunConfig, RunOutcome};
use crate::problems::{
    gaussian_start, FixedVectorOracle, LeastSquaresOracle, LeastSquaresSpec, NoiseSetting,
};
use crate::rng::stream_rng;
use crate::stable_noise::{standard_stable_unchecked, validate_alpha};

// ---------------------------------------------------------------- moments

#[derive(Debug, Clone, PartialEq)]
pub struct MomentsConfig {
    pub alphas: Vec<f64>,
    pub ns: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

/// Empirical moments of the 1-D sample median and sample mean of `n`
/// standard α-stable draws.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub alpha: f64,
    pub n: usize,
    pub median_first: f64,
    pub median_second: f64,
    /// Monte-Carlo standard error of `median_second`.
    pub median_second_se: f64,
    pub mean_first: f64,
    pub mean_second: f64,
    pub mean_second_se: f64,
}

fn moments_of(values: &[f64]) -> (f64, f64, f64) {
    let k = values.len() as f64;
    let first = values.iter().sum::<f64>() / k;
    let second = values.iter().map(|v| v * v).sum::<f64>() / k;
    let var_sq = values.iter().map(|v| (v * v - second).powi(2)).sum::<f64>() / k;
    (first, second, (var_sq / k).sqrt())
}

pub fn moments_study(config: &MomentsConfig) -> Result<Vec<MomentRow>> {
    if config.trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let mut rows = Vec::new();
    for (ai, &alpha) in config.alphas.iter().enumerate() {
        validate_alpha(alpha)?;
        for (ni, &n) in config.ns.iter().enumerate() {
            if n == 0 {
                return Err(Error::Config("sample size must be ≥ 1".into()));
            }
            let mut rng = stream_rng(config.seed, ((ai as u64) << 16) | ni as u64);
            let mut medians = Vec::with_capacity(config.trials);
            let mut means = Vec::with_capacity(config.trials);
            let mut draws = vec![0.0; n];
            for _ in 0..config.trials {
                draws
                    .iter_mut()
                    .for_each(|x| *x = standard_stable_unchecked(alpha, &mut rng));
                means.push(draws.iter().sum::<f64>() / n as f64);
                medians.push(median_in_place(&mut draws));
            }
            let (median_first, median_second, median_second_se) = moments_of(&medians);
            let (mean_first, mean_second, mean_second_se) = moments_of(&means);
            rows.push(MomentRow {
                alpha,
                n,
                median_first,
                median_second,
                median_second_se,
                mean_first,
                mean_second,
                mean_second_se,
            });
        }
    }
    Ok(rows)
}

pub fn moment_rows(config: &MomentsConfig, results: &[MomentRow]) -> Vec<Row> {
    let mut rows = Vec::new();
    for r in results {
        let arms = [
            (
                "median",
                r.median_first,
                r.median_second,
                r.median_second_se,
            ),
            ("mean", r.mean_first, r.mean_second, r.mean_second_se),
        ];
        for (method, first, second, se) in arms {
            for (metric, value) in [
                ("first_moment", first),
                ("second_moment", second),
                ("second_moment_se", se),
            ] {
                rows.push(Row {
                    study: "moments",
                    method: method.into(),
                    setting: format!("n={}", r.n),
                    alpha: r.alpha,
                    seed: SeedField::Seed(config.seed),
                    iter: config.trials,
                    metric,
                    value,
                });
            }
        }
    }
    rows
}

// --------------------------------------------------------------- estimate

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateConfig {
    pub methods: Vec<EstimatorConfig>,
    pub alphas: Vec<f64>,
    pub dim: usize,
    pub iters: usize,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateCell {
    pub method: EstimatorConfig,
    pub alpha: f64,
    pub seed: u64,
    /// Relative error after each update.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResults {
    pub cells: Vec<EstimateCell>,
}

/// Min, median and max of a non-empty sample.
pub fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let median = median_in_place(&mut v.clone());
    (v[0], median, v[v.len() - 1])
}

impl EstimateResults {
    pub fn final_errors(&self, method: &str, alpha: f64) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| c.method.method.name() == method && c.alpha == alpha)
            .map(|c| *c.errors.last().expect("iters ≥ 1"))
            .collect()
    }

    pub fn rows(&self, record_every: usize) -> Vec<Row> {
        let mut rows = Vec::new();
        for c in &self.cells {
            let last = c.errors.len();
            for (i, &e) in c.errors.iter().enumerate() {
                let iter = i + 1;
                if iter % record_every == 0 || iter == last {
                    rows.push(Row {
                        study: "estimate",
                        method: c.method.method.name().into(),
                        setting: "fixed".into(),
                        alpha: c.alpha,
                        seed: SeedField::Seed(c.seed),
                        iter,
                        metric: "rel_error",
                        value: e,
                    });
                }
            }
        }
        let mut keys: Vec<(&'static str, f64, usize)> = Vec::new();
        for c in &self.cells {
            let key = (c.method.method.name(), c.alpha, c.errors.len());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        for (method, alpha, iters) in keys {
            let (lo, mid, hi) = summarize(&self.final_errors(method, alpha));
            for (metric, value) in [
                ("final_error_min", lo),
                ("final_error_median", mid),
                ("final_error_max", hi),
            ] {
                rows.push(Row {
                    study: "estimate",
                    method: method.into(),
                    setting: "fixed".into(),
                    alpha,
                    seed: SeedField::All,
                    iter: iters,
                    metric,
                    value,
                });
            }
        }
        rows
    }
}

/// Fixed-vector estimation: target `ĝ ∈ R^d` with i.i.d. standard Gaussian
/// coordinates (per seed), i.i.d. α-stable observation noise.
pub fn estimate_study(config: &EstimateConfig, jobs: usize) -> Result<EstimateResults> {
    for m in &config.methods {
        m.validate()?;
    }
    let mut cells = Vec::new();
    for m in &config.methods {
        for (ai, &alpha) in config.alphas.iter().enumerate() {
            validate_alpha(alpha)?;
            for &seed in &config.seeds {
                cells.push((m.clone(), ai, alpha, seed));
            }
        }
    }
    let out = parallel_map(
        &cells,
        jobs,
        |(method, ai, alpha, seed)| -> Result<EstimateCell> {
            let mut target_rng = stream_rng(*seed, 0);
            let oracle = FixedVectorOracle::gaussian_target(config.dim, *alpha, &mut target_rng)?;
            let mut noise_rng = stream_rng(*seed, 1 + *ai as u64);
            let errors = run_estimation(method, &oracle, config.iters, &mut noise_rng)?;
            Ok(EstimateCell {
                method: method.clone(),
                alpha: *alpha,
                seed: *seed,
                errors,
            })
        },
    );
    Ok(EstimateResults {
        cells: out.into_iter().collect::<Result<_>>()?,
    })
}

// --------------------------------------------------------------- optimize

#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    /// One sample per iteration through an online estimator.
    Online(EstimatorConfig),
    /// `n` samples per iteration, aggregated.
    Smgd(AggregatorKind),
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Online(c) => c.method.name(),
            MethodSpec::Smgd(k) => k.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub methods: Vec<MethodSpec>,
    pub settings: Vec<NoiseSetting>,
    pub alphas: Vec<f64>,
    pub dim: usize,
    pub eta: f64,
    pub iters: usize,
    /// Samples per iteration for the SMGD arms.
    pub n_samples: usize,
    pub seeds: Vec<u64>,
    pub geo: GeoMedianSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeCell {
    pub method: MethodSpec,
    pub setting: NoiseSetting,
    pub alpha: f64,
    pub seed: u64,
    pub outcome: RunOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResults {
    pub cells: Vec<OptimizeCell>,
}

impl OptimizeResults {
    pub fn select<'a>(
        &'a self,
        method: &'a str,
        setting: NoiseSetting,
    ) -> impl Iterator<Item = &'a OptimizeCell> + 'a {
        self.cells
            .iter()
            .filter(move |c| c.method.name() == method && c.setting == setting)
    }

    pub fn rows(&self, record_every: usize) -> Vec<Row> {
        let mut rows = Vec::new();
        for c in &self.cells {
            let base = Row {
                study: "optimize",
                method: c.method.name().into(),
                setting: c.setting.name().into(),
                alpha: c.alpha,
                seed: SeedField::Seed(c.seed),
                iter: 0,
                metric: "",
                value: 0.0,
            };
            let last = c.outcome.records.len() - 1;
            for r in &c.outcome.records {
                if r.iter % record_every != 0 && r.iter != last {
                    continue;
                }
                let mut push = |metric, value| {
                    rows.push(Row {
                        iter: r.iter,
                        metric,
                        value,
                        ..base.clone()
                    });
                };
                push("loss", r.loss);
                push("grad_norm", r.grad_norm);
                if let Some(e) = r.est_error {
                    push("est_error", e);
                }
                if let Some(res) = r.median_residual {
                    push("median_residual", res);
                }
            }
            let diverged = if c.outcome.diverged { 1.0 } else { 0.0 };
            rows.push(Row {
                iter: last,
                metric: "diverged",
                value: diverged,
                ..base.clone()
            });
            rows.push(Row {
                iter: last,
                metric: "averaged_loss",
                value: c.outcome.averaged_loss,
                ..base
            });
        }
        rows
    }
}

/// Noisy least squares `½‖w‖²` under the configured noise settings.
///
/// `w₀` is standard Gaussian per seed. Online arms take one sample per
/// iteration, SMGD arms take `n_samples`.
pub fn optimize_study(config: &OptimizeConfig, jobs: usize) -> Result<OptimizeResults> {
    let mut cells = Vec::new();
    for method in &config.methods {
        if let MethodSpec::Online(est) = method {
            est.validate()?;
        }
        for (si, &setting) in config.settings.iter().enumerate() {
            for (ai, &alpha) in config.alphas.iter().enumerate() {
                validate_alpha(alpha)?;
                for &seed in &config.seeds {
                    cells.push((method.clone(), si, setting, ai, alpha, seed));
                }
            }
        }
    }
    let out = parallel_map(&cells, jobs, |(method, si, setting, ai, alpha, seed)| {
        let oracle = LeastSquaresOracle::new(LeastSquaresSpec::new(config.dim, *setting, *alpha))?;
        let w0 = gaussian_start(config.dim, &mut stream_rng(*seed, 0));
        let mut noise_rng = stream_rng(*seed, 1 + ((*ai as u64) << 8) + *si as u64);
        let run = RunConfig::new(config.eta, config.iters, *seed);
        let outcome = match method {
            MethodSpec::Online(est) => run_online(&oracle, &run, est, w0, &mut noise_rng)?,
            MethodSpec::Smgd(kind) => {
                let run = run.with_samples(config.n_samples);
                run_smgd(&oracle, &run, *kind, &config.geo, w0, &mut noise_rng)?
            }
        };
        Ok(OptimizeCell {
            method: method.clone(),
            setting: *setting,
            alpha: *alpha,
            seed: *seed,
            outcome,
        })
    });
    Ok(OptimizeResults {
        cells: out.into_iter().collect::<Result<_>>()?,
    })
}
