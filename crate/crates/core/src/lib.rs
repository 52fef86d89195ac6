//! Robust gradient estimation under heavy-tailed noise.
//!
//! Momentum, vectorwise clipping, componentwise clipping and Huber smoothing
//! are all one step of the stochastic proximal point (SPP) method applied to
//! an online location-estimation problem `min_m E[D(m - g)]`. The choice of
//! `D` decides whether the estimator tracks the mean (`½‖·‖²`) or a median
//! (`‖·‖₂`, `‖·‖₁`). This crate provides:
//!
//! * [`stable_noise`]: symmetric α-stable samplers (i.i.d., elliptic, linear mixes),
//! * [`prox`]: closed-form proximal operators, clip primitives and the generic SPP step,
//! * [`estimators`]: stateful online estimators with a uniform `update(g)` contract,
//! * [`aggregators`]: sample mean, coordinatewise median and geometric median,
//! * [`problems`]: gradient oracles for fixed-vector estimation and noisy least squares,
//! * [`optimizers`]: online estimation-while-training and sample-median gradient descent,
//! * [`harness`]: experiment configuration, studies, CSV/JSON-lines output and the check suite.

pub mod aggregators;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod optimizers;
pub mod problems;
pub mod prox;
pub mod rng;
pub mod stable_noise;

pub use error::{Error, Result};
