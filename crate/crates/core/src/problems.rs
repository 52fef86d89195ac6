//! Gradient oracles.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::linalg::{dot, norm2};
use crate::stable_noise::{sample_vector, validate_alpha, Dependence, StableNoiseSpec};

/// A stochastic first-order oracle `g = ∇ℓ(w) + ξ(w)`.
pub trait GradientOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn loss(&self, w: &[f64]) -> f64;
    fn true_gradient(&self, w: &[f64]) -> Vec<f64>;
    fn sample(&self, w: &[f64], rng: &mut dyn RngCore) -> Vec<f64>;
}

/// Noisy observations of a fixed vector `ĝ`, i.e. the gradient of the
/// linear loss `⟨ĝ, w⟩`, with i.i.d. symmetric α-stable coordinates located
/// at `ĝ`.
#[derive(Debug, Clone)]
pub struct FixedVectorOracle {
    target: Vec<f64>,
    noise: Option<StableNoiseSpec>,
}

impl FixedVectorOracle {
    pub fn new(target: Vec<f64>, alpha: f64) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(Self {
            target,
            noise: Some(StableNoiseSpec::standard(alpha)?),
        })
    }

    /// Target with i.i.d. standard Gaussian coordinates.
    pub fn gaussian_target<R: Rng + ?Sized>(dim: usize, alpha: f64, rng: &mut R) -> Result<Self> {
        let target = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        Self::new(target, alpha)
    }

    /// Dirac oracle: every sample equals the target.
    pub fn noiseless(target: Vec<f64>) -> Self {
        Self {
            target,
            noise: None,
        }
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }
}

pub fn fixed_vector_oracle(target: Vec<f64>, alpha: f64) -> Result<FixedVectorOracle> {
    FixedVectorOracle::new(target, alpha)
}

impl GradientOracle for FixedVectorOracle {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn loss(&self, w: &[f64]) -> f64 {
        dot(&self.target, w)
    }

    fn true_gradient(&self, _w: &[f64]) -> Vec<f64> {
        self.target.clone()
    }

    fn sample(&self, _w: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        match &self.noise {
            None => self.target.clone(),
            Some(spec) => {
                let xi = sample_vector(spec, self.target.len(), rng)
                    .expect("spec and dimension validated at construction");
                self.target.iter().zip(xi).map(|(t, x)| t + x).collect()
            }
        }
    }
}

/// Noise settings of the least-squares benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseSetting {
    /// i.i.d. standard stable coordinates.
    S1,
    /// S1 scaled by `√(1 + ‖w‖²)` (state dependent).
    S2,
    /// Isotropic elliptically contoured stable vector (dependent coordinates).
    S3,
}

impl NoiseSetting {
    pub const ALL: [NoiseSetting; 3] = [NoiseSetting::S1, NoiseSetting::S2, NoiseSetting::S3];

    pub fn name(self) -> &'static str {
        match self {
            NoiseSetting::S1 => "s1",
            NoiseSetting::S2 => "s2",
            NoiseSetting::S3 => "s3",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name().eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeastSquaresSpec {
    pub dim: usize,
    pub setting: NoiseSetting,
    pub alpha: f64,
    pub scale: f64,
}

impl LeastSquaresSpec {
    pub fn new(dim: usize, setting: NoiseSetting, alpha: f64) -> Self {
        Self {
            dim,
            setting,
            alpha,
            scale: 1.0,
        }
    }
}

/// `ℓ(w) = ½‖w‖²` observed through `g = w + ξ(w)`.
#[derive(Debug, Clone)]
pub struct LeastSquaresOracle {
    spec: LeastSquaresSpec,
    noise: StableNoiseSpec,
}

impl LeastSquaresOracle {
    pub fn new(spec: LeastSquaresSpec) -> Result<Self> {
        if spec.dim == 0 {
            return Err(Error::ZeroDimension);
        }
        validate_alpha(spec.alpha)?;
        ensure_positive("scale", spec.scale)?;
        let dependence = match spec.setting {
            NoiseSetting::S1 | NoiseSetting::S2 => Dependence::IidComponents,
            NoiseSetting::S3 => Dependence::Elliptic,
        };
        let noise = StableNoiseSpec::new(spec.alpha, spec.scale, dependence)?;
        Ok(Self { spec, noise })
    }

    pub fn spec(&self) -> &LeastSquaresSpec {
        &self.spec
    }

    /// Multiplier applied to the base noise at `w`: `√(1 + ‖w‖²)` under S2,
    /// one otherwise. Under S2 the noise is `Σ(w)ζ` with `Σ(w) = factor · I`.
    pub fn noise_factor(&self, w: &[f64]) -> f64 {
        match self.spec.setting {
            NoiseSetting::S2 => (1.0 + w.iter().map(|x| x * x).sum::<f64>()).sqrt(),
            _ => 1.0,
        }
    }

    /// `‖Σ(w)‖_F²` for the state-dependent setting: `d (1 + ‖w‖²)`.
    pub fn noise_matrix_frobenius_sq(&self, w: &[f64]) -> f64 {
        let f = self.noise_factor(w);
        self.spec.dim as f64 * f * f
    }
}

pub fn least_squares_oracle(spec: LeastSquaresSpec) -> Result<LeastSquaresOracle> {
    LeastSquaresOracle::new(spec)
}

impl GradientOracle for LeastSquaresOracle {
    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn loss(&self, w: &[f64]) -> f64 {
        0.5 * dot(w, w)
    }

    fn true_gradient(&self, w: &[f64]) -> Vec<f64> {
        w.to_vec()
    }

    fn sample(&self, w: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let factor = self.noise_factor(w);
        let xi = sample_vector(&self.noise, self.spec.dim, rng)
            .expect("spec and dimension validated at construction");
        w.iter().zip(xi).map(|(wi, x)| wi + factor * x).collect()
    }
}

/// Standard-Gaussian starting point.
pub fn gaussian_start<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn grad_norm(oracle: &dyn GradientOracle, w: &[f64]) -> f64 {
    norm2(&oracle.true_gradient(w))
}
