use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MixtureError;
use crate::numeric::{neumaier_sum, stream_rng};

pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Non-negative domain weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    pub domains: Vec<String>,
    pub weights: Vec<f64>,
}

impl MixtureWeights {
    pub fn new(domains: Vec<String>, weights: Vec<f64>) -> Result<Self, MixtureError> {
        let w = MixtureWeights { domains, weights };
        w.check()?;
        Ok(w)
    }

    /// Normalizes non-negative raw weights onto the simplex.
    pub fn from_unnormalized(domains: Vec<String>, raw: Vec<f64>) -> Result<Self, MixtureError> {
        if raw.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(MixtureError::NotOnSimplex("weights must be finite and non-negative".into()));
        }
        let total = neumaier_sum(raw.iter().copied());
        if total <= 0.0 {
            return Err(MixtureError::NotOnSimplex("weights sum to zero".into()));
        }
        MixtureWeights::new(domains, raw.into_iter().map(|w| w / total).collect())
    }

    pub fn check(&self) -> Result<(), MixtureError> {
        if self.domains.len() != self.weights.len() {
            return Err(MixtureError::NotOnSimplex(format!(
                "{} domains but {} weights",
                self.domains.len(),
                self.weights.len()
            )));
        }
        if self.weights.is_empty() {
            return Err(MixtureError::NotOnSimplex("no domains".into()));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(MixtureError::NotOnSimplex("negative or non-finite weight".into()));
        }
        let sum = neumaier_sum(self.weights.iter().copied());
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(MixtureError::NotOnSimplex(format!("weights sum to {sum}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Default names `d1..dk` for anonymous domains.
pub fn domain_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("d{i}")).collect()
}

/// Turns independent Gamma(alpha, 1) variates into a Dirichlet(alpha) point.
pub fn dirichlet_from_gammas(draws: &[f64]) -> Vec<f64> {
    let total = neumaier_sum(draws.iter().copied());
    draws.iter().map(|g| g / total).collect()
}

/// One symmetric Dirichlet draw from `rng`. For very small alpha all Gamma
/// variates can underflow to zero; the draw then collapses to a vertex chosen
/// uniformly, the limit of the distribution as alpha -> 0.
pub fn dirichlet_draw<R: Rng>(rng: &mut R, k: usize, gamma: &Gamma<f64>) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    if draws.iter().sum::<f64>() > 0.0 {
        dirichlet_from_gammas(&draws)
    } else {
        let mut w = vec![0.0; k];
        w[rng.random_range(0..k)] = 1.0;
        w
    }
}

/// `n` symmetric Dirichlet(alpha) draws over `k` domains. Draw `i` uses its
/// own RNG stream keyed by `(seed, i)`.
pub fn sample_mixtures(n: usize, k: usize, alpha: f64, seed: u64) -> Result<Vec<Vec<f64>>, MixtureError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(MixtureError::InvalidAlpha(alpha));
    }
    if k == 0 {
        return Err(MixtureError::NoDomains);
    }
    let gamma = Gamma::new(alpha, 1.0).map_err(|_| MixtureError::InvalidAlpha(alpha))?;
    Ok((0..n)
        .into_par_iter()
        .map(|i| dirichlet_draw(&mut stream_rng(seed, i as u64), k, &gamma))
        .collect())
}

/// Drops domains with weight below `epsilon` and renormalizes the rest.
pub fn prune_domains(w: &MixtureWeights, epsilon: f64) -> Result<(MixtureWeights, Vec<String>), MixtureError> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(MixtureError::InvalidEpsilon(epsilon));
    }
    w.check()?;
    let mut domains = Vec::new();
    let mut raw = Vec::new();
    let mut dropped = Vec::new();
    for (d, &x) in w.domains.iter().zip(&w.weights) {
        if x < epsilon {
            dropped.push(d.clone());
        } else {
            domains.push(d.clone());
            raw.push(x);
        }
    }
    if domains.is_empty() {
        return Err(MixtureError::AllPruned(epsilon));
    }
    Ok((MixtureWeights::from_unnormalized(domains, raw)?, dropped))
}
