//! Regression-based data-mixture search: sample mixtures on the simplex,
//! score them with a proxy, fit a surrogate and search it for the best mix.

mod proxy;
mod search;
mod simplex;
mod surrogate;

pub use proxy::{NgramProxy, ProxyEvaluator};
pub use search::{optimize_mixture, SearchResult};
pub use simplex::{
    dirichlet_draw, dirichlet_from_gammas, domain_names, prune_domains, sample_mixtures, MixtureWeights,
    SIMPLEX_TOLERANCE,
};
pub use surrogate::{fit_loss_model, quadratic_features, LossModel, ProxyEvaluation, DEFAULT_RIDGE};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::derive_seed;

#[derive(Debug, Error)]
pub enum MixtureError {
    #[error("Dirichlet concentration must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("at least one domain is required")]
    NoDomains,
    #[error("not a simplex point: {0}")]
    NotOnSimplex(String),
    #[error("no proxy evaluations to fit")]
    NoEvaluations,
    #[error("ridge penalty must be positive, got {0}")]
    InvalidRidge(f64),
    #[error("evaluations disagree on the domain list")]
    DomainMismatch,
    #[error("proxy loss is not finite")]
    NonFiniteLoss,
    #[error("need n_search >= top_k >= 1 (got {n_search}, {top_k})")]
    InvalidSearch { n_search: usize, top_k: usize },
    #[error("pruning epsilon must be in [0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("every domain weight is below epsilon {0}")]
    AllPruned(f64),
    #[error("proxy: {0}")]
    Proxy(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureConfig {
    /// Proxy evaluations used to fit the surrogate.
    pub samples: usize,
    /// Candidates scored during the surrogate search.
    pub search: usize,
    pub top_k: usize,
    /// Dirichlet concentration for both sampling and search.
    pub alpha: f64,
    pub ridge: f64,
    pub prune_epsilon: f64,
    /// Proxy n-gram order and smoothing.
    pub proxy_order: usize,
    pub proxy_smoothing_k: f64,
    /// Every `holdout_stride`-th document of a domain is held out.
    pub holdout_stride: usize,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig {
            samples: 512,
            search: 100_000,
            top_k: 32,
            alpha: 1.0,
            ridge: DEFAULT_RIDGE,
            prune_epsilon: 1e-3,
            proxy_order: 2,
            proxy_smoothing_k: 1.0,
            holdout_stride: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureOutcome {
    pub domains: Vec<String>,
    pub weights: Vec<f64>,
    pub dropped: Vec<String>,
    pub predicted_loss: f64,
}

/// Full sample -> evaluate -> fit -> search -> prune loop.
pub fn run_mixture_search(
    domains: &[String],
    proxy: &dyn ProxyEvaluator,
    cfg: &MixtureConfig,
    seed: u64,
) -> Result<(MixtureOutcome, LossModel, Vec<ProxyEvaluation>), MixtureError> {
    if domains.is_empty() {
        return Err(MixtureError::NoDomains);
    }
    let k = domains.len();
    let draws = sample_mixtures(cfg.samples, k, cfg.alpha, derive_seed(seed, "mixture/sample"))?;
    let evals: Vec<ProxyEvaluation> = draws
        .into_par_iter()
        .map(|w| {
            let loss = proxy.evaluate(&w);
            MixtureWeights::new(domains.to_vec(), w).map(|weights| ProxyEvaluation { weights, loss })
        })
        .collect::<Result<_, _>>()?;
    let model = fit_loss_model(&evals, cfg.ridge)?;
    let best = optimize_mixture(&model, domains, cfg.search, cfg.top_k, cfg.alpha, derive_seed(seed, "mixture/search"))?;
    let (pruned, dropped) = prune_domains(&best.weights, cfg.prune_epsilon)?;

    let full: Vec<f64> = domains
        .iter()
        .map(|d| pruned.domains.iter().position(|p| p == d).map_or(0.0, |i| pruned.weights[i]))
        .collect();
    let outcome = MixtureOutcome {
        predicted_loss: model.predict(&full),
        domains: pruned.domains,
        weights: pruned.weights,
        dropped,
    };
    Ok((outcome, model, evals))
}
