//! Symmetric α-stable noise.
//!
//! Parametrization follows Nolan's `S(α, β = 0, γ, 0; 0)` convention. For
//! `β = 0` the 0- and 1-parametrizations coincide; `α = 1` is the standard
//! Cauchy law and `α = 2` is a Gaussian with variance `2γ²` (not `γ²`).
//!
//! Draws are produced with the Chambers–Mallows–Stuck transform of a uniform
//! angle `U ~ U(-π/2, π/2)` and an independent `W ~ Exp(1)`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// How the coordinates of a noise vector depend on each other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Dependence {
    /// Independent scaled stable coordinates.
    IidComponents,
    /// Sub-Gaussian (elliptically contoured) stable vector `√A · G` with an
    /// isotropic shape matrix.
    Elliptic,
    /// `Σζ` for a fixed square matrix `Σ` (row-major) and i.i.d. standard `ζ`.
    LinearMix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableNoiseSpec {
    alpha: f64,
    scale: f64,
    dependence: Dependence,
    /// Empty means the zero vector.
    location: Vec<f64>,
}

impl StableNoiseSpec {
    pub fn new(alpha: f64, scale: f64, dependence: Dependence) -> Result<Self> {
        validate_alpha(alpha)?;
        ensure_positive("scale", scale)?;
        if let Dependence::LinearMix(rows) = &dependence {
            check_square(rows)?;
        }
        Ok(Self {
            alpha,
            scale,
            dependence,
            location: Vec::new(),
        })
    }

    /// Standard (unit-scale) i.i.d. noise.
    pub fn standard(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0, Dependence::IidComponents)
    }

    pub fn with_location(mut self, location: Vec<f64>) -> Self {
        self.location = location;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dependence(&self) -> &Dependence {
        &self.dependence
    }

    pub fn location(&self) -> &[f64] {
        &self.location
    }
}

pub fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// The CMS transform for the symmetric case, as a pure function of the angle
/// `u ∈ (-π/2, π/2)` and the exponential variate `w > 0`.
///
/// Odd in `u`: `cms_symmetric(α, -u, w) == -cms_symmetric(α, u, w)` bit for bit.
pub fn cms_symmetric(alpha: f64, u: f64, w: f64) -> f64 {
    if alpha == 1.0 {
        return u.tan();
    }
    let au = alpha * u;
    au.sin() / u.cos().powf(1.0 / alpha) * ((u - au).cos() / w).powf((1.0 - alpha) / alpha)
}

/// The CMS transform for a totally right-skewed (β = 1) law with index
/// `a ∈ (0, 1)`, normalized so that `E exp(-sA) = exp(-s^a)`.
///
/// This is the positive amplitude of the sub-Gaussian construction; it is not
/// exposed as user-facing noise.
fn cms_positive(a: f64, u: f64, w: f64) -> f64 {
    // With β = 1 the CMS shift `B = arctan(tan(πa/2)) / a` is exactly π/2, and
    // the prefactor `(1 + tan²(πa/2))^{1/2a}` cancels against the scale
    // `cos(πa/2)^{1/a}`.
    let shifted = a * (u + FRAC_PI_2);
    shifted.sin() / u.cos().powf(1.0 / a) * ((u - shifted).cos() / w).powf((1.0 - a) / a)
}

fn draw_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let r: f64 = rng.random();
        // Reject the closed endpoint so cos(u) stays strictly positive.
        if r > 0.0 {
            return PI * (r - 0.5);
        }
    }
}

fn draw_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// One draw from the standard symmetric α-stable law.
pub fn sample_standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    validate_alpha(alpha)?;
    Ok(standard_stable_unchecked(alpha, rng))
}

pub(crate) fn standard_stable_unchecked<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = draw_angle(rng);
    let w = draw_exp(rng);
    cms_symmetric(alpha, u, w)
}

/// Positive `(α/2)`-stable amplitude for the elliptic construction; identically
/// one when `α = 2`.
fn elliptic_amplitude<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 2.0 {
        return 1.0;
    }
    let u = draw_angle(rng);
    let w = draw_exp(rng);
    cms_positive(alpha / 2.0, u, w)
}

/// One noise vector of length `dim` drawn according to `spec`.
pub fn sample_vector<R: Rng + ?Sized>(
    spec: &StableNoiseSpec,
    dim: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    if !spec.location.is_empty() && spec.location.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: spec.location.len(),
        });
    }
    let mut out = match &spec.dependence {
        Dependence::IidComponents => (0..dim)
            .map(|_| spec.scale * standard_stable_unchecked(spec.alpha, rng))
            .collect::<Vec<_>>(),
        Dependence::Elliptic => {
            // √A · G with G ~ N(0, 2σ² I) gives standard S(α, 0, σ) marginals.
            let amp = elliptic_amplitude(spec.alpha, rng).sqrt();
            let gauss_scale = spec.scale * std::f64::consts::SQRT_2;
            (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    amp * gauss_scale * z
                })
                .collect()
        }
        Dependence::LinearMix(rows) => {
            if rows.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: rows.len(),
                });
            }
            let mut mixed = mix_unchecked(rows, spec.alpha, rng);
            mixed.iter_mut().for_each(|x| *x *= spec.scale);
            mixed
        }
    };
    if !spec.location.is_empty() {
        out.iter_mut()
            .zip(&spec.location)
            .for_each(|(x, loc)| *x += loc);
    }
    Ok(out)
}

fn check_square(rows: &[Vec<f64>]) -> Result<()> {
    let n = rows.len();
    match rows.iter().find(|r| r.len() != n) {
        Some(bad) => Err(Error::NonSquare {
            rows: n,
            cols: bad.len(),
        }),
        None if n == 0 => Err(Error::ZeroDimension),
        None => Ok(()),
    }
}

/// `Σζ` with `ζ` i.i.d. standard symmetric α-stable; `sigma` is row-major.
pub fn sample_linear_mix<R: Rng + ?Sized>(
    sigma: &[Vec<f64>],
    alpha: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    validate_alpha(alpha)?;
    check_square(sigma)?;
    Ok(mix_unchecked(sigma, alpha, rng))
}

fn mix_unchecked<R: Rng + ?Sized>(sigma: &[Vec<f64>], alpha: f64, rng: &mut R) -> Vec<f64> {
    let zeta: Vec<f64> = (0..sigma.len())
        .map(|_| standard_stable_unchecked(alpha, rng))
        .collect();
    sigma
        .iter()
        .map(|row| row.iter().zip(&zeta).map(|(s, z)| s * z).sum())
        .collect()
}
