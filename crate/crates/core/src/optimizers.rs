//! Training loops: online estimation-while-training and sample-median
//! gradient descent (SMGD).

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::aggregators::{aggregate, AggregatorKind, GeoMedianSettings, SampleBatch};
use crate::error::{ensure_same_dim, Error, Result};
use crate::estimators::{Estimator, EstimatorConfig};
use crate::linalg::{dist2, norm2};
use crate::problems::GradientOracle;

/// Loss above which a run is declared divergent and truncated.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Constant learning rate η ≥ 0.
    pub eta: f64,
    pub iters: usize,
    /// Oracle calls per iteration: 1 for online runs, `n` for SMGD.
    pub n_samples: usize,
    pub seed: u64,
    pub divergence_threshold: f64,
}

impl RunConfig {
    pub fn new(eta: f64, iters: usize, seed: u64) -> Self {
        Self {
            eta,
            iters,
            n_samples: 1,
            seed,
            divergence_threshold: DIVERGENCE_THRESHOLD,
        }
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::OutOfRange {
                name: "eta",
                reason: format!("{} is not ≥ 0", self.eta),
            });
        }
        if self.iters == 0 {
            return Err(Error::ZeroIterations);
        }
        if self.n_samples == 0 {
            return Err(Error::OutOfRange {
                name: "n_samples",
                reason: "must be ≥ 1".into(),
            });
        }
        Ok(())
    }
}

/// Metrics for one iterate `w_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub iter: usize,
    pub loss: f64,
    pub grad_norm: f64,
    /// `‖m_t − ∇ℓ(w_{t−1})‖`: error of the direction that produced `w_t`.
    pub est_error: Option<f64>,
    /// ℓ2-median solver residual for the step that produced `w_t`.
    pub median_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Records for `t = 0, 1, …`; one more than the completed steps.
    pub records: Vec<TrajectoryRecord>,
    pub diverged: bool,
    pub final_w: Vec<f64>,
    /// Loss of `w̄_T = (1/T) Σ_{t<T} θᵗ w_t` with `θ = T/(T+2)`; NaN if the
    /// run diverged.
    pub averaged_loss: f64,
}

impl RunOutcome {
    pub fn initial_loss(&self) -> f64 {
        self.records[0].loss
    }

    pub fn final_loss(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.loss)
    }
}

struct Loop<'a> {
    problem: &'a dyn GradientOracle,
    config: &'a RunConfig,
    w: Vec<f64>,
    records: Vec<TrajectoryRecord>,
    averaged: Vec<f64>,
    theta_pow: f64,
    theta: f64,
}

impl<'a> Loop<'a> {
    fn new(problem: &'a dyn GradientOracle, config: &'a RunConfig, w0: Vec<f64>) -> Result<Self> {
        config.validate()?;
        ensure_same_dim(problem.dim(), w0.len())?;
        let t = config.iters as f64;
        let mut records = Vec::with_capacity(config.iters + 1);
        records.push(TrajectoryRecord {
            iter: 0,
            loss: problem.loss(&w0),
            grad_norm: norm2(&problem.true_gradient(&w0)),
            est_error: None,
            median_residual: None,
        });
        Ok(Self {
            problem,
            config,
            averaged: vec![0.0; w0.len()],
            w: w0,
            records,
            theta_pow: 1.0,
            theta: t / (t + 2.0),
        })
    }

    /// Apply `w ← w − η·direction`; returns false once the run diverged.
    fn step(&mut self, direction: &[f64], residual: Option<f64>) -> bool {
        let grad = self.problem.true_gradient(&self.w);
        let est_error = dist2(direction, &grad);
        let scale = self.theta_pow / self.config.iters as f64;
        self.averaged
            .iter_mut()
            .zip(&self.w)
            .for_each(|(a, w)| *a += scale * w);
        self.theta_pow *= self.theta;

        let eta = self.config.eta;
        self.w
            .iter_mut()
            .zip(direction)
            .for_each(|(w, d)| *w -= eta * d);
        let loss = self.problem.loss(&self.w);
        self.records.push(TrajectoryRecord {
            iter: self.records.len(),
            loss,
            grad_norm: norm2(&self.problem.true_gradient(&self.w)),
            est_error: Some(est_error),
            median_residual: residual,
        });
        loss.is_finite() && loss <= self.config.divergence_threshold
    }

    fn finish(self, diverged: bool) -> RunOutcome {
        let averaged_loss = if diverged {
            f64::NAN
        } else {
            self.problem.loss(&self.averaged)
        };
        RunOutcome {
            records: self.records,
            diverged,
            final_w: self.w,
            averaged_loss,
        }
    }
}

/// Interleave one estimator update and one weight step per iteration:
/// `m_{t+1} = update(m_t, g_t)`, `w_{t+1} = w_t − η m_{t+1}`, with `m₀ = 0`.
pub fn run_online(
    problem: &dyn GradientOracle,
    config: &RunConfig,
    estimator: &EstimatorConfig,
    w0: Vec<f64>,
    rng: &mut dyn RngCore,
) -> Result<RunOutcome> {
    if config.n_samples != 1 {
        return Err(Error::Config(format!(
            "online runs take one sample per iteration, got n_samples = {}",
            config.n_samples
        )));
    }
    let mut est = Estimator::new(estimator.clone(), problem.dim())?;
    let mut state = Loop::new(problem, config, w0)?;
    for _ in 0..config.iters {
        let g = problem.sample(&state.w, rng);
        let m = est.update(&g)?.to_vec();
        if !state.step(&m, None) {
            return Ok(state.finish(true));
        }
    }
    Ok(state.finish(false))
}

/// `w_{t+1} = w_t − η · aggregate(g_t⁽¹⁾, …, g_t⁽ⁿ⁾)` with `n` fresh oracle
/// samples per iteration.
pub fn run_smgd(
    problem: &dyn GradientOracle,
    config: &RunConfig,
    kind: AggregatorKind,
    settings: &GeoMedianSettings,
    w0: Vec<f64>,
    rng: &mut dyn RngCore,
) -> Result<RunOutcome> {
    settings.validate()?;
    let mut state = Loop::new(problem, config, w0)?;
    for _ in 0..config.iters {
        let samples: Vec<Vec<f64>> = (0..config.n_samples)
            .map(|_| problem.sample(&state.w, rng))
            .collect();
        let batch = SampleBatch::new(samples)?;
        let agg = aggregate(kind, &batch, settings);
        let residual = (kind == AggregatorKind::L2Median).then_some(agg.residual);
        if !state.step(&agg.point, residual) {
            return Ok(state.finish(true));
        }
    }
    Ok(state.finish(false))
}
