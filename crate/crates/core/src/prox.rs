//! Closed-form proximal operators and the generic SPP step.
//!
//! One SPP step for the location problem `min_m E[D(m - g)]` with step `τ` is
//!
//! ```text
//! m⁺ = argmin_m D(m - g) + ‖m - mₜ‖² / (2τ) = g + prox_{τD}(mₜ - g)
//! ```
//!
//! For `D = ‖·‖₂` and `D = ‖·‖₁` the same step is the projection of `g` onto
//! the dual-norm ball of radius `τ` centred at `mₜ`, which is where the clip
//! operators come from.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_dim, Error, Result};
use crate::linalg::norm2;

/// The distance `D` of the location problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DistanceKind {
    /// `½‖·‖²`: mean estimation, SPP step is momentum.
    HalfSquaredL2,
    /// `‖·‖₁`: coordinatewise median, SPP step is componentwise clipping.
    L1,
    /// `‖·‖₂`: geometric median, SPP step is vectorwise clipping.
    L2,
    /// `H_μ(z) = ½‖z‖²` for `‖z‖ ≤ μ`, `μ‖z‖ - μ²/2` otherwise.
    Huber { mu: f64 },
}

/// `τ / max{τ, ‖v‖₂} · v`: the projection onto the ℓ2 ball of radius `τ`.
pub fn vclip(tau: f64, v: &[f64]) -> Vec<f64> {
    debug_assert!(tau > 0.0);
    let factor = tau / tau.max(norm2(v));
    v.iter().map(|x| factor * x).collect()
}

/// Coordinatewise clamp to `[-τ, τ]`: the projection onto the ℓ∞ box.
pub fn cclip(tau: f64, v: &[f64]) -> Vec<f64> {
    debug_assert!(tau > 0.0);
    v.iter().map(|x| x.max(-tau).min(tau)).collect()
}

/// `prox_{τD}(x)` in closed form.
pub fn prox(kind: DistanceKind, tau: f64, x: &[f64]) -> Vec<f64> {
    debug_assert!(tau > 0.0);
    match kind {
        DistanceKind::HalfSquaredL2 => x.iter().map(|xi| xi / (1.0 + tau)).collect(),
        DistanceKind::L2 => {
            let clipped = vclip(tau, x);
            x.iter().zip(&clipped).map(|(a, b)| a - b).collect()
        }
        DistanceKind::L1 => {
            let clipped = cclip(tau, x);
            x.iter().zip(&clipped).map(|(a, b)| a - b).collect()
        }
        DistanceKind::Huber { mu } => {
            // H_μ carries an extra factor μ relative to the textbook Huber
            // function, hence μτ and μ(1+τ) below.
            let factor = 1.0 - mu * tau / norm2(x).max(mu * (1.0 + tau));
            x.iter().map(|xi| factor * xi).collect()
        }
    }
}

/// `g + prox_{τD}(m - g)`.
pub fn spp_step(kind: DistanceKind, tau: f64, m: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    ensure_same_dim(m.len(), g.len())?;
    let diff: Vec<f64> = m.iter().zip(g).map(|(a, b)| a - b).collect();
    let p = prox(kind, tau, &diff);
    Ok(g.iter().zip(&p).map(|(a, b)| a + b).collect())
}

/// Dual exponent `q` of the ball used by the projection view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DualNorm {
    /// `q = 2` (dual of `p = 2`).
    L2,
    /// `q = ∞` (dual of `p = 1`).
    LInf,
}

impl DualNorm {
    pub fn from_exponent(q: f64) -> Result<Self> {
        if q == 2.0 {
            Ok(DualNorm::L2)
        } else if q == f64::INFINITY {
            Ok(DualNorm::LInf)
        } else {
            Err(Error::UnsupportedNorm(q))
        }
    }

    /// The distance whose SPP step projects onto this ball.
    pub fn primal(self) -> DistanceKind {
        match self {
            DualNorm::L2 => DistanceKind::L2,
            DualNorm::LInf => DistanceKind::L1,
        }
    }
}

/// Euclidean projection of `x` onto `{y : ‖y - center‖_q ≤ radius}`.
pub fn project_dual_ball(q: DualNorm, center: &[f64], radius: f64, x: &[f64]) -> Result<Vec<f64>> {
    ensure_same_dim(center.len(), x.len())?;
    crate::error::ensure_positive("radius", radius)?;
    let offset: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
    let clipped = match q {
        DualNorm::L2 => vclip(radius, &offset),
        DualNorm::LInf => cclip(radius, &offset),
    };
    Ok(center.iter().zip(&clipped).map(|(c, d)| c + d).collect())
}
