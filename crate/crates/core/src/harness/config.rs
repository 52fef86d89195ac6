//! Experiment configuration.
//!
//! A config file is a JSON object whose keys mirror the CLI flags
//! (`"n-samples"`, `"setting"`, ...). Flags given on the command line
//! override file values; anything still unset takes the study default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregators::{AggregatorKind, GeoMedianSettings};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, Method, DEFAULT_HUBER_MU};
use crate::harness::output::Format;
use crate::harness::studies::{EstimateConfig, MethodSpec, MomentsConfig, OptimizeConfig};
use crate::problems::NoiseSetting;
use crate::stable_noise::validate_alpha;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    Moments,
    Estimate,
    Optimize,
    Check,
}

impl Study {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "moments" => Some(Study::Moments),
            "estimate" => Some(Study::Estimate),
            "optimize" => Some(Study::Optimize),
            "check" => Some(Study::Check),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> From<OneOrMany<T>> for Vec<T> {
    fn from(v: OneOrMany<T>) -> Self {
        match v {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum SeedsField {
    List(Vec<u64>),
    Spec(String),
}

fn de_one_or_many<'de, D, T>(de: D) -> std::result::Result<Option<Vec<T>>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    Option::<OneOrMany<T>>::deserialize(de).map(|o| o.map(Into::into))
}

fn de_seeds<'de, D>(de: D) -> std::result::Result<Option<Vec<u64>>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    match Option::<SeedsField>::deserialize(de)? {
        None => Ok(None),
        Some(SeedsField::List(xs)) => Ok(Some(xs)),
        Some(SeedsField::Spec(s)) => parse_seeds(&s).map(Some).map_err(serde::de::Error::custom),
    }
}

fn de_settings<'de, D>(de: D) -> std::result::Result<Option<Vec<NoiseSetting>>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let names: Option<Vec<String>> = de_one_or_many(de)?;
    names
        .map(|ns| {
            ns.iter()
                .map(|n| {
                    NoiseSetting::from_name(n)
                        .ok_or_else(|| serde::de::Error::custom(format!("unknown setting `{n}`")))
                })
                .collect()
        })
        .transpose()
}

/// Every knob of every study; `None` means "not given here".
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub study: Option<Study>,
    #[serde(deserialize_with = "de_one_or_many")]
    pub methods: Option<Vec<String>>,
    #[serde(deserialize_with = "de_one_or_many")]
    pub alpha: Option<Vec<f64>>,
    pub dim: Option<usize>,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
    pub mu: Option<f64>,
    pub beta: Option<f64>,
    pub c: Option<f64>,
    pub iters: Option<usize>,
    #[serde(deserialize_with = "de_one_or_many")]
    pub n_samples: Option<Vec<usize>>,
    #[serde(deserialize_with = "de_seeds")]
    pub seeds: Option<Vec<u64>>,
    #[serde(deserialize_with = "de_settings")]
    pub setting: Option<Vec<NoiseSetting>>,
    pub trials: Option<usize>,
    pub cold_start: Option<bool>,
    pub geo_tolerance: Option<f64>,
    pub geo_max_iters: Option<usize>,
    pub record_every: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
}

/// `"0..50"` (half-open range) or a comma-separated list `"1,4,9"`.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("invalid seed list `{spec}`"));
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        if hi <= lo {
            return Err(bad());
        }
        return Ok((lo..hi).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        ExperimentConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Values in `top` win over values in `self`.
    pub fn overridden_by(self, top: ExperimentConfig) -> ExperimentConfig {
        let base = self;
        overlay!(
            base,
            top,
            study,
            methods,
            alpha,
            dim,
            tau,
            eta,
            mu,
            beta,
            c,
            iters,
            n_samples,
            seeds,
            setting,
            trials,
            cold_start,
            geo_tolerance,
            geo_max_iters,
            record_every,
            out,
            format,
            jobs
        )
    }

    pub fn jobs(&self) -> usize {
        self.jobs.unwrap_or(1).max(1)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    pub fn record_every(&self) -> usize {
        self.record_every.unwrap_or(1).max(1)
    }

    fn alphas(&self, default: &[f64]) -> Result<Vec<f64>> {
        let alphas = self.alpha.clone().unwrap_or_else(|| default.to_vec());
        if alphas.is_empty() {
            return Err(Error::Config("empty alpha list".into()));
        }
        for &a in &alphas {
            validate_alpha(a).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(alphas)
    }

    fn seeds(&self) -> Result<Vec<u64>> {
        let seeds = self.seeds.clone().unwrap_or_else(|| (0..50).collect());
        if seeds.is_empty() {
            return Err(Error::Config("empty seed list".into()));
        }
        Ok(seeds)
    }

    fn positive_count(value: Option<usize>, default: usize, name: &str) -> Result<usize> {
        match value.unwrap_or(default) {
            0 => Err(Error::Config(format!("{name} must be at least 1"))),
            v => Ok(v),
        }
    }

    fn estimator(&self, method: Method, tau_default: f64) -> Result<EstimatorConfig> {
        let tau = self.tau.unwrap_or(tau_default);
        let mut config = match method {
            Method::ClippedSgd => {
                EstimatorConfig::clipped_sgd(self.beta.unwrap_or(0.9), self.c.unwrap_or(50.0))
            }
            Method::Huber => EstimatorConfig::huber(tau, self.mu.unwrap_or(DEFAULT_HUBER_MU)),
            Method::Momentum => EstimatorConfig::momentum(tau),
            Method::VClip => EstimatorConfig::vclip(tau),
            Method::CClip => EstimatorConfig::cclip(tau),
            Method::SignL1 => EstimatorConfig::sign_l1(tau),
            Method::NormalizedL2 => EstimatorConfig::normalized_l2(tau),
        };
        config.cold_start = self.cold_start.unwrap_or(false);
        config
            .validate()
            .map_err(|e| Error::Config(format!("{}: {e}", method.name())))?;
        Ok(config)
    }

    pub fn moments(&self) -> Result<MomentsConfig> {
        let ns = self
            .n_samples
            .clone()
            .unwrap_or_else(|| vec![1, 3, 5, 9, 17, 33]);
        if ns.is_empty() || ns.contains(&0) {
            return Err(Error::Config("sample sizes must be ≥ 1".into()));
        }
        Ok(MomentsConfig {
            alphas: self.alphas(&[1.1, 1.5])?,
            ns,
            trials: Self::positive_count(self.trials, 10_000, "trials")?,
            seed: self.seeds()?[0],
        })
    }

    pub fn estimate(&self) -> Result<EstimateConfig> {
        let names = self.methods.clone().unwrap_or_else(|| {
            ["momentum", "vclip", "cclip", "huber"]
                .map(String::from)
                .to_vec()
        });
        let methods = names
            .iter()
            .map(|n| {
                let m = Method::from_name(n)
                    .ok_or_else(|| Error::Config(format!("unknown estimator `{n}`")))?;
                self.estimator(m, 0.01)
            })
            .collect::<Result<Vec<_>>>()?;
        if methods.is_empty() {
            return Err(Error::Config("empty method list".into()));
        }
        Ok(EstimateConfig {
            methods,
            alphas: self.alphas(&[2.0, 1.75, 1.5, 1.25, 1.1, 1.0, 0.9, 0.8, 0.7])?,
            dim: Self::positive_count(self.dim, 10, "dim")?,
            iters: Self::positive_count(self.iters, 1000, "iters")?,
            seeds: self.seeds()?,
        })
    }

    pub fn optimize(&self) -> Result<OptimizeConfig> {
        let names = self.methods.clone().unwrap_or_else(|| {
            [
                "l1-median",
                "l2-median",
                "mean",
                "vclip",
                "cclip",
                "huber",
                "clipped-sgd",
            ]
            .map(String::from)
            .to_vec()
        });
        let methods = names
            .iter()
            .map(|n| {
                if let Some(kind) = AggregatorKind::from_name(n) {
                    return Ok(MethodSpec::Smgd(kind));
                }
                let m = Method::from_name(n)
                    .ok_or_else(|| Error::Config(format!("unknown method `{n}`")))?;
                Ok(MethodSpec::Online(self.estimator(m, 1.0)?))
            })
            .collect::<Result<Vec<_>>>()?;
        if methods.is_empty() {
            return Err(Error::Config("empty method list".into()));
        }
        let n_samples = match self.n_samples.as_deref() {
            None => 5,
            Some([n]) if *n >= 1 => *n,
            Some(other) => {
                return Err(Error::Config(format!(
                    "optimize takes a single sample count ≥ 1, got {other:?}"
                )))
            }
        };
        let eta = self.eta.unwrap_or(0.01);
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!("eta must be ≥ 0, got {eta}")));
        }
        let geo = GeoMedianSettings {
            tolerance: self
                .geo_tolerance
                .unwrap_or(GeoMedianSettings::default().tolerance),
            max_iters: self
                .geo_max_iters
                .unwrap_or(GeoMedianSettings::default().max_iters),
        };
        geo.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(OptimizeConfig {
            methods,
            settings: self
                .setting
                .clone()
                .unwrap_or_else(|| NoiseSetting::ALL.to_vec()),
            alphas: self.alphas(&[1.1])?,
            dim: Self::positive_count(self.dim, 10, "dim")?,
            eta,
            iters: Self::positive_count(self.iters, 1000, "iters")?,
            n_samples,
            seeds: self.seeds()?,
            geo,
        })
    }
}
