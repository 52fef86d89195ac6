//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a flat `Float64Array`; the page knows the layout.

use robust_grad::estimators::{run_estimation, EstimatorConfig, DEFAULT_HUBER_MU};
use robust_grad::harness::studies::{moments_study, MomentsConfig};
use robust_grad::harness::{optimize_study, ExperimentConfig};
use robust_grad::problems::{FixedVectorOracle, NoiseSetting};
use robust_grad::rng::stream_rng;
use wasm_bindgen::prelude::*;

pub const ESTIMATORS: [&str; 4] = ["momentum", "vclip", "cclip", "huber"];
pub const MOMENT_NS: [usize; 6] = [1, 3, 5, 9, 17, 33];
pub const ROSTER: [&str; 7] = [
    "l1-median",
    "l2-median",
    "mean",
    "vclip",
    "cclip",
    "huber",
    "clipped-sgd",
];

pub fn estimate_curves_impl(
    alpha: f64,
    tau: f64,
    iters: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let oracle = FixedVectorOracle::gaussian_target(10, alpha, &mut stream_rng(seed, 0))
        .map_err(|e| e.to_string())?;
    let configs = [
        EstimatorConfig::momentum(tau),
        EstimatorConfig::vclip(tau),
        EstimatorConfig::cclip(tau),
        EstimatorConfig::huber(tau, DEFAULT_HUBER_MU),
    ];
    let mut out = Vec::with_capacity(4 * iters);
    for cfg in &configs {
        // same noise for every method
        let mut rng = stream_rng(seed, 1);
        out.extend(run_estimation(cfg, &oracle, iters, &mut rng).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Relative error trajectories of momentum, VClip, CClip and Huber on a
/// 10-dimensional fixed vector, concatenated (`4 × iters` values).
#[wasm_bindgen]
pub fn estimate_curves(alpha: f64, tau: f64, iters: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    estimate_curves_impl(alpha, tau, iters, seed).map_err(|e| JsError::new(&e))
}

pub fn moment_table_impl(alpha: f64, trials: usize, seed: u64) -> Result<Vec<f64>, String> {
    let cfg = MomentsConfig {
        alphas: vec![alpha],
        ns: MOMENT_NS.to_vec(),
        trials,
        seed,
    };
    let rows = moments_study(&cfg).map_err(|e| e.to_string())?;
    Ok(rows
        .iter()
        .flat_map(|r| [r.median_second, r.mean_second])
        .collect())
}

/// Empirical second moments of the sample median and sample mean for
/// `n ∈ {1, 3, 5, 9, 17, 33}`, as `[median, mean]` pairs.
#[wasm_bindgen]
pub fn moment_table(alpha: f64, trials: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    moment_table_impl(alpha, trials, seed).map_err(|e| JsError::new(&e))
}

pub fn least_squares_losses_impl(
    setting: &str,
    alpha: f64,
    iters: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let setting =
        NoiseSetting::from_name(setting).ok_or_else(|| format!("unknown setting `{setting}`"))?;
    let mut cfg = ExperimentConfig::default()
        .optimize()
        .map_err(|e| e.to_string())?;
    cfg.settings = vec![setting];
    cfg.alphas = vec![alpha];
    cfg.iters = iters;
    cfg.seeds = vec![seed];
    let res = optimize_study(&cfg, 1).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(ROSTER.len() * (iters + 1));
    for name in ROSTER {
        let cell = res.select(name, setting).next().ok_or("missing method")?;
        let mut losses: Vec<f64> = cell.outcome.records.iter().map(|r| r.loss).collect();
        // diverged runs stop early: pad so every curve has iters + 1 points
        losses.resize(iters + 1, f64::NAN);
        out.extend(losses);
    }
    Ok(out)
}

/// Loss curves of the seven least-squares methods (`7 × (iters + 1)` values,
/// in `ROSTER` order; `NaN` after divergence).
#[wasm_bindgen]
pub fn least_squares_losses(
    setting: &str,
    alpha: f64,
    iters: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    least_squares_losses_impl(setting, alpha, iters, seed).map_err(|e| JsError::new(&e))
}
