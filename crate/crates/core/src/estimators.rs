//! Online gradient estimators.
//!
//! Every estimator keeps a running estimate `m` and folds in one sample `g`
//! per call. The SPP-derived rules (momentum, VClip, CClip, Huber) are written
//! here in their closed forms; [`crate::prox::spp_step`] is the generic route
//! they must agree with.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, ensure_same_dim, Error, Result};
use crate::linalg::{dist2, norm2};
use crate::problems::GradientOracle;
use crate::prox::{cclip, vclip, DistanceKind};

/// Huber threshold used when none is configured.
pub const DEFAULT_HUBER_MU: f64 = 1.345;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Momentum,
    VClip,
    CClip,
    Huber,
    ClippedSgd,
    SignL1,
    NormalizedL2,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Momentum,
        Method::VClip,
        Method::CClip,
        Method::Huber,
        Method::ClippedSgd,
        Method::SignL1,
        Method::NormalizedL2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Momentum => "momentum",
            Method::VClip => "vclip",
            Method::CClip => "cclip",
            Method::Huber => "huber",
            Method::ClippedSgd => "clipped-sgd",
            Method::SignL1 => "sign-l1",
            Method::NormalizedL2 => "normalized-l2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    /// The distance whose SPP step this method is, if any.
    pub fn distance(self, mu: f64) -> Option<DistanceKind> {
        match self {
            Method::Momentum => Some(DistanceKind::HalfSquaredL2),
            Method::VClip => Some(DistanceKind::L2),
            Method::CClip => Some(DistanceKind::L1),
            Method::Huber => Some(DistanceKind::Huber { mu }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    /// SPP step size; the clip threshold for VClip/CClip.
    pub tau: Option<f64>,
    /// Huber threshold; defaults to [`DEFAULT_HUBER_MU`].
    pub mu: Option<f64>,
    /// Momentum coefficient of clipped-SGD.
    pub beta: Option<f64>,
    /// Clip radius of clipped-SGD.
    pub c: Option<f64>,
    /// Reset `m` to zero before every update.
    pub cold_start: bool,
}

impl EstimatorConfig {
    fn with_tau(method: Method, tau: f64) -> Self {
        Self {
            method,
            tau: Some(tau),
            mu: None,
            beta: None,
            c: None,
            cold_start: false,
        }
    }

    pub fn momentum(tau: f64) -> Self {
        Self::with_tau(Method::Momentum, tau)
    }

    pub fn vclip(tau: f64) -> Self {
        Self::with_tau(Method::VClip, tau)
    }

    pub fn cclip(tau: f64) -> Self {
        Self::with_tau(Method::CClip, tau)
    }

    pub fn huber(tau: f64, mu: f64) -> Self {
        Self {
            mu: Some(mu),
            ..Self::with_tau(Method::Huber, tau)
        }
    }

    pub fn sign_l1(tau: f64) -> Self {
        Self::with_tau(Method::SignL1, tau)
    }

    pub fn normalized_l2(tau: f64) -> Self {
        Self::with_tau(Method::NormalizedL2, tau)
    }

    pub fn clipped_sgd(beta: f64, c: f64) -> Self {
        Self {
            method: Method::ClippedSgd,
            tau: None,
            mu: None,
            beta: Some(beta),
            c: Some(c),
            cold_start: false,
        }
    }

    pub fn cold(mut self) -> Self {
        self.cold_start = true;
        self
    }

    fn require(&self, value: Option<f64>, param: &'static str) -> Result<f64> {
        value.ok_or(Error::MissingHyperparameter {
            method: self.method.name(),
            param,
        })
    }

    /// Check that every hyperparameter the method needs is set and in range.
    pub fn validate(&self) -> Result<()> {
        self.rule().map(|_| ())
    }

    pub fn huber_mu(&self) -> f64 {
        self.mu.unwrap_or(DEFAULT_HUBER_MU)
    }

    fn rule(&self) -> Result<Rule> {
        let rule = match self.method {
            Method::ClippedSgd => {
                let beta = self.require(self.beta, "beta")?;
                let c = self.require(self.c, "c")?;
                if !(0.0..1.0).contains(&beta) {
                    return Err(Error::OutOfRange {
                        name: "beta",
                        reason: format!("{beta} not in [0, 1)"),
                    });
                }
                ensure_positive("c", c)?;
                Rule::ClippedSgd { beta, c }
            }
            method => {
                let tau = self.require(self.tau, "tau")?;
                ensure_positive("tau", tau)?;
                match method {
                    Method::Momentum => Rule::Momentum { tau },
                    Method::VClip => Rule::VClip { tau },
                    Method::CClip => Rule::CClip { tau },
                    Method::Huber => {
                        let mu = self.huber_mu();
                        ensure_positive("mu", mu)?;
                        Rule::Huber { tau, mu }
                    }
                    Method::SignL1 => Rule::SignL1 { tau },
                    Method::NormalizedL2 => Rule::NormalizedL2 { tau },
                    Method::ClippedSgd => unreachable!(),
                }
            }
        };
        Ok(rule)
    }
}

#[derive(Debug, Clone, Copy)]
enum Rule {
    Momentum { tau: f64 },
    VClip { tau: f64 },
    CClip { tau: f64 },
    Huber { tau: f64, mu: f64 },
    ClippedSgd { beta: f64, c: f64 },
    SignL1 { tau: f64 },
    NormalizedL2 { tau: f64 },
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Rule {
    fn apply(self, m: &[f64], g: &[f64]) -> Vec<f64> {
        match self {
            Rule::Momentum { tau } => {
                let w = tau / (1.0 + tau);
                m.iter()
                    .zip(g)
                    .map(|(mi, gi)| (1.0 - w) * mi + w * gi)
                    .collect()
            }
            Rule::VClip { tau } => {
                let diff: Vec<f64> = g.iter().zip(m).map(|(gi, mi)| gi - mi).collect();
                m.iter()
                    .zip(vclip(tau, &diff))
                    .map(|(mi, di)| mi + di)
                    .collect()
            }
            Rule::CClip { tau } => {
                let diff: Vec<f64> = g.iter().zip(m).map(|(gi, mi)| gi - mi).collect();
                m.iter()
                    .zip(cclip(tau, &diff))
                    .map(|(mi, di)| mi + di)
                    .collect()
            }
            Rule::Huber { tau, mu } => {
                let beta = 1.0 - mu * tau / dist2(m, g).max(mu * (1.0 + tau));
                m.iter()
                    .zip(g)
                    .map(|(mi, gi)| beta * mi + (1.0 - beta) * gi)
                    .collect()
            }
            Rule::ClippedSgd { beta, c } => {
                let gn = norm2(g);
                let s = if gn > c { c / gn } else { 1.0 };
                m.iter()
                    .zip(g)
                    .map(|(mi, gi)| beta * mi + (1.0 - beta) * s * gi)
                    .collect()
            }
            Rule::SignL1 { tau } => m
                .iter()
                .zip(g)
                .map(|(mi, gi)| mi + tau * sign(gi - mi))
                .collect(),
            Rule::NormalizedL2 { tau } => {
                let gap = dist2(g, m);
                if gap == 0.0 {
                    m.to_vec()
                } else {
                    m.iter()
                        .zip(g)
                        .map(|(mi, gi)| mi + tau * (gi - mi) / gap)
                        .collect()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub m: Vec<f64>,
    pub t: u64,
}

impl EstimatorState {
    pub fn zeros(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            t: 0,
        }
    }
}

/// Pure form of one estimator update.
pub fn estimator_update(
    config: &EstimatorConfig,
    state: &EstimatorState,
    g: &[f64],
) -> Result<EstimatorState> {
    ensure_same_dim(state.m.len(), g.len())?;
    let rule = config.rule()?;
    let m = if config.cold_start {
        rule.apply(&vec![0.0; g.len()], g)
    } else {
        rule.apply(&state.m, g)
    };
    Ok(EstimatorState { m, t: state.t + 1 })
}

/// An estimator with its configuration validated once up front.
#[derive(Debug, Clone)]
pub struct Estimator {
    config: EstimatorConfig,
    rule: Rule,
    state: EstimatorState,
}

impl Estimator {
    pub fn new(config: EstimatorConfig, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let rule = config.rule()?;
        Ok(Self {
            config,
            rule,
            state: EstimatorState::zeros(dim),
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn state(&self) -> &EstimatorState {
        &self.state
    }

    pub fn estimate(&self) -> &[f64] {
        &self.state.m
    }

    pub fn update(&mut self, g: &[f64]) -> Result<&[f64]> {
        ensure_same_dim(self.state.m.len(), g.len())?;
        if self.config.cold_start {
            self.state.m.iter_mut().for_each(|x| *x = 0.0);
        }
        self.state.m = self.rule.apply(&self.state.m, g);
        self.state.t += 1;
        Ok(&self.state.m)
    }
}

/// Estimate the (constant) gradient of a fixed-distribution oracle.
///
/// Returns `‖mₜ - ĝ‖₂ / ‖ĝ‖₂` after each of the `iters` updates, starting
/// from `m₀ = 0`; if `ĝ = 0` the absolute error is reported instead. The
/// oracle is queried at the origin.
pub fn run_estimation(
    config: &EstimatorConfig,
    oracle: &dyn GradientOracle,
    iters: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    if iters == 0 {
        return Err(Error::ZeroIterations);
    }
    let dim = oracle.dim();
    let w = vec![0.0; dim];
    let target = oracle.true_gradient(&w);
    let denom = match norm2(&target) {
        n if n > 0.0 => n,
        _ => 1.0,
    };
    let mut est = Estimator::new(config.clone(), dim)?;
    let mut errors = Vec::with_capacity(iters);
    for _ in 0..iters {
        let g = oracle.sample(&w, rng);
        let m = est.update(&g)?;
        errors.push(dist2(m, &target) / denom);
    }
    Ok(errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{add, norm_inf, sub};
    use crate::problems::FixedVectorOracle;
    use crate::prox::spp_step;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn update(config: &EstimatorConfig, m: &[f64], g: &[f64]) -> Vec<f64> {
        let state = EstimatorState {
            m: m.to_vec(),
            t: 0,
        };
        estimator_update(config, &state, g).unwrap().m
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn all_configs(tau: f64) -> Vec<EstimatorConfig> {
        vec![
            EstimatorConfig::momentum(tau),
            EstimatorConfig::vclip(tau),
            EstimatorConfig::cclip(tau),
            EstimatorConfig::huber(tau, 1.345),
            EstimatorConfig::clipped_sgd(0.9, tau),
            EstimatorConfig::sign_l1(tau),
            EstimatorConfig::normalized_l2(tau),
        ]
    }

    #[test]
    fn worked_examples() {
        let out = update(&EstimatorConfig::vclip(1.0), &[0.0, 0.0], &[3.0, 4.0]);
        assert!(close(&out, &[0.6, 0.8], 1e-15));

        let out = update(
            &EstimatorConfig::clipped_sgd(0.9, 1.0),
            &[1.0, 0.0],
            &[3.0, 4.0],
        );
        assert!(close(&out, &[0.96, 0.08], 1e-15), "{out:?}");

        let out = update(&EstimatorConfig::huber(1.0, 1.0), &[4.0, 0.0], &[0.0, 0.0]);
        assert_eq!(out, vec![3.0, 0.0]);

        let out = update(&EstimatorConfig::sign_l1(0.1), &[0.0, 0.0], &[5.0, -2.0]);
        assert_eq!(out, vec![0.1, -0.1]);
    }

    #[test]
    fn sample_is_a_fixed_point() {
        let g = [0.5, -1.0, 3.0];
        for config in all_configs(0.7) {
            if config.method == Method::ClippedSgd {
                continue; // clips g itself, so m = g is not fixed for ‖g‖ > c
            }
            assert_eq!(update(&config, &g, &g), g.to_vec(), "{:?}", config.method);
        }
        // clipped-SGD with an inactive clip does fix m = g up to rounding
        let out = update(&EstimatorConfig::clipped_sgd(0.9, 100.0), &g, &g);
        assert!(close(&out, &g, 1e-15));
    }

    #[test]
    fn missing_or_invalid_hyperparameters() {
        let mut cfg = EstimatorConfig::vclip(1.0);
        cfg.tau = None;
        assert_eq!(
            cfg.validate(),
            Err(Error::MissingHyperparameter {
                method: "vclip",
                param: "tau"
            })
        );
        let mut cfg = EstimatorConfig::clipped_sgd(0.9, 1.0);
        cfg.c = None;
        assert!(matches!(
            cfg.validate(),
            Err(Error::MissingHyperparameter { param: "c", .. })
        ));
        assert!(EstimatorConfig::clipped_sgd(1.0, 1.0).validate().is_err());
        assert!(EstimatorConfig::momentum(-1.0).validate().is_err());
        // Huber falls back to the default threshold
        let mut cfg = EstimatorConfig::huber(1.0, 2.0);
        cfg.mu = None;
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.huber_mu(), DEFAULT_HUBER_MU);
    }

    #[test]
    fn dimension_mismatch() {
        let state = EstimatorState::zeros(2);
        assert_eq!(
            estimator_update(&EstimatorConfig::momentum(1.0), &state, &[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
        let mut est = Estimator::new(EstimatorConfig::cclip(1.0), 3).unwrap();
        assert!(est.update(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn momentum_coefficient_in_unit_interval() {
        for tau in [1e-6, 0.01, 1.0, 100.0, 1e9] {
            let beta = 1.0 - tau / (1.0 + tau);
            assert!(beta > 0.0 && beta < 1.0 || (beta == 0.0 && tau > 1e15));
        }
    }

    #[test]
    fn cold_start_reductions() {
        let g = [3.0, 4.0];
        let m = [10.0, -10.0];
        let out = update(&EstimatorConfig::vclip(1.0).cold(), &m, &g);
        assert_eq!(out, vclip(1.0, &g));

        let out = update(&EstimatorConfig::clipped_sgd(0.0, 1.0), &m, &g);
        assert!(close(&out, &vclip(1.0, &g), 1e-15));

        let out = update(&EstimatorConfig::momentum(1.0).cold(), &m, &g);
        assert_eq!(out, vec![1.5, 2.0]);
    }

    #[test]
    fn noiseless_momentum_halves_error() {
        let oracle = FixedVectorOracle::noiseless(vec![1.0, -2.0, 0.5]);
        let mut rng = stream_rng(0, 0);
        let errs = run_estimation(&EstimatorConfig::momentum(1.0), &oracle, 20, &mut rng).unwrap();
        let mut expected = 1.0;
        for e in errs {
            expected /= 2.0;
            assert!((e - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn noiseless_vclip_walks_at_speed_tau() {
        let target = vec![3.0, 4.0];
        let oracle = FixedVectorOracle::noiseless(target.clone());
        let mut rng = stream_rng(0, 0);
        let tau = 0.7;
        let errs = run_estimation(&EstimatorConfig::vclip(tau), &oracle, 12, &mut rng).unwrap();
        let mut dist = 5.0f64;
        for e in errs {
            dist = if dist > tau { dist - tau } else { 0.0 };
            assert!((e * 5.0 - dist).abs() < 1e-12, "{e} vs {dist}");
        }
    }

    #[test]
    fn run_estimation_rejects_zero_iters() {
        let oracle = FixedVectorOracle::noiseless(vec![1.0]);
        let mut rng = stream_rng(0, 0);
        assert_eq!(
            run_estimation(&EstimatorConfig::momentum(1.0), &oracle, 0, &mut rng),
            Err(Error::ZeroIterations)
        );
    }

    #[test]
    fn spp_rate_proxy() {
        // averaged VClip iterate on a 3-point empirical law: gap O(1/(τT) + τ)
        use crate::aggregators::{geometric_median, GeoMedianSettings, SampleBatch};
        use rand::Rng;
        let points = vec![vec![0.0, 0.0], vec![4.0, 0.0], vec![1.0, 3.0]];
        let phi = |m: &[f64]| points.iter().map(|p| dist2(m, p)).sum::<f64>() / 3.0;
        let batch = SampleBatch::new(points.clone()).unwrap();
        let opt = geometric_median(&batch, &GeoMedianSettings::default()).point;
        let gap = |tau: f64, iters: usize, seed: u64| {
            let mut rng = stream_rng(seed, 0);
            let mut est = Estimator::new(EstimatorConfig::vclip(tau), 2).unwrap();
            let mut avg = [0.0; 2];
            for _ in 0..iters {
                let g = &points[rng.random_range(0..3)];
                let m = est.update(g).unwrap();
                avg[0] += m[0] / iters as f64;
                avg[1] += m[1] / iters as f64;
            }
            phi(&avg) - phi(&opt)
        };
        let mean_gap = |tau, iters| (0..20).map(|s| gap(tau, iters, s)).sum::<f64>() / 20.0;
        let coarse = mean_gap(0.1, 100);
        let fine = mean_gap(0.01, 10_000);
        assert!(fine < coarse, "fine {fine} coarse {coarse}");
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-50.0f64..50.0, 3)
    }

    proptest! {
        #[test]
        fn agrees_with_spp_step(tau in 1e-3f64..10.0, mu in 0.05f64..5.0, m in vec3(), g in vec3()) {
            let tol = 1e-12 * (1.0 + norm2(&m) + norm2(&g));
            for config in [
                EstimatorConfig::momentum(tau),
                EstimatorConfig::vclip(tau),
                EstimatorConfig::cclip(tau),
                EstimatorConfig::huber(tau, mu),
            ] {
                let kind = config.method.distance(config.huber_mu()).unwrap();
                let via_spp = spp_step(kind, tau, &m, &g).unwrap();
                prop_assert!(close(&update(&config, &m, &g), &via_spp, tol));
            }
        }

        #[test]
        fn step_size_bounds(tau in 1e-3f64..10.0, m in vec3(), g in vec3()) {
            let slack = 1.0 + 1e-12;
            let step = |c: EstimatorConfig| sub(&update(&c, &m, &g), &m);
            prop_assert!(norm2(&step(EstimatorConfig::vclip(tau))) <= tau * slack);
            prop_assert!(norm_inf(&step(EstimatorConfig::cclip(tau))) <= tau * slack);
            prop_assert!(norm_inf(&step(EstimatorConfig::sign_l1(tau))) <= tau * slack);
            prop_assert!(norm2(&step(EstimatorConfig::normalized_l2(tau))) <= tau * slack);
        }

        #[test]
        fn convex_combination(tau in 1e-3f64..10.0, beta in 0.0f64..0.999, c in 0.1f64..100.0,
                              m in vec3(), g in vec3()) {
            let gn = norm2(&g);
            let clipped_g: Vec<f64> = g.iter().map(|x| x * if gn > c { c / gn } else { 1.0 }).collect();
            let cases = [
                (EstimatorConfig::momentum(tau), g.clone()),
                (EstimatorConfig::vclip(tau), g.clone()),
                (EstimatorConfig::huber(tau, 1.345), g.clone()),
                (EstimatorConfig::clipped_sgd(beta, c), clipped_g),
            ];
            for (config, end) in cases {
                let out = update(&config, &m, &g);
                // out = m + λ (end - m) with λ ∈ [0, 1]
                let seg = sub(&end, &m);
                let len2: f64 = seg.iter().map(|x| x * x).sum();
                if len2 < 1e-18 {
                    continue;
                }
                let lambda: f64 = sub(&out, &m).iter().zip(&seg).map(|(a, b)| a * b).sum::<f64>() / len2;
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&lambda));
                let on_line = add(&m, &seg.iter().map(|x| lambda * x).collect::<Vec<_>>());
                prop_assert!(close(&out, &on_line, 1e-9 * (1.0 + norm2(&m) + norm2(&end))));
            }
        }

        #[test]
        fn shift_equivariance(tau in 1e-3f64..5.0, shift in vec3(),
                              gs in prop::collection::vec(vec3(), 1..8)) {
            for config in all_configs(tau) {
                if config.method == Method::ClippedSgd {
                    continue;
                }
                let mut plain = Estimator::new(config.clone(), 3).unwrap();
                let mut shifted = Estimator::new(config.clone(), 3).unwrap();
                // both start at their own origin: shift the start too
                shifted.state.m = shift.clone();
                for g in &gs {
                    let a = plain.update(g).unwrap().to_vec();
                    let b = shifted.update(&add(g, &shift)).unwrap().to_vec();
                    let tol = 1e-9 * (1.0 + norm2(&a) + norm2(&shift));
                    prop_assert!(close(&add(&a, &shift), &b, tol), "{:?}", config.method);
                }
            }
        }
    }
}
