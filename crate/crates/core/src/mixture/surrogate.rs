use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{MixtureError, MixtureWeights};
use crate::numeric::neumaier_sum;

/// Default ridge penalty, applied to the mean squared error.
pub const DEFAULT_RIDGE: f64 = 1e-10;

/// Observed proxy loss for one mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyEvaluation {
    pub weights: MixtureWeights,
    pub loss: f64,
}

/// Quadratic regression surrogate over mixture weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub k: usize,
    pub intercept: f64,
    pub coef: Vec<f64>,
}

/// `[w, w*w, w_i*w_j for i<j]`.
pub fn quadratic_features(w: &[f64]) -> Vec<f64> {
    let k = w.len();
    let mut f = Vec::with_capacity(2 * k + k * (k - 1) / 2);
    f.extend_from_slice(w);
    f.extend(w.iter().map(|x| x * x));
    for i in 0..k {
        for j in i + 1..k {
            f.push(w[i] * w[j]);
        }
    }
    f
}

impl LossModel {
    pub fn predict(&self, w: &[f64]) -> f64 {
        debug_assert_eq!(w.len(), self.k);
        self.intercept + quadratic_features(w).iter().zip(&self.coef).map(|(x, b)| x * b).sum::<f64>()
    }
}

/// Ridge least squares of loss on quadratic features.
///
/// Features and targets are centered so the intercept is unpenalized, and the
/// penalty scales with the number of rows, which makes the fit invariant to
/// repeating the whole evaluation set. Solved through an SVD, so
/// rank-deficient designs (always the case on the simplex) stay well posed.
pub fn fit_loss_model(evals: &[ProxyEvaluation], ridge: f64) -> Result<LossModel, MixtureError> {
    let first = evals.first().ok_or(MixtureError::NoEvaluations)?;
    let k = first.weights.len();
    if !(ridge > 0.0 && ridge.is_finite()) {
        return Err(MixtureError::InvalidRidge(ridge));
    }
    for e in evals {
        e.weights.check()?;
        if e.weights.domains != first.weights.domains {
            return Err(MixtureError::DomainMismatch);
        }
        if !e.loss.is_finite() {
            return Err(MixtureError::NonFiniteLoss);
        }
    }

    let n = evals.len();
    let rows: Vec<Vec<f64>> = evals.iter().map(|e| quadratic_features(&e.weights.weights)).collect();
    let p = rows[0].len();
    let means: Vec<f64> = (0..p).map(|j| neumaier_sum(rows.iter().map(|r| r[j])) / n as f64).collect();
    let y_mean = neumaier_sum(evals.iter().map(|e| e.loss)) / n as f64;

    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j] - means[j]);
    let y = DVector::from_iterator(n, evals.iter().map(|e| e.loss - y_mean));
    let svd = x.svd(true, true);
    let (u, v_t) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let uty = u.transpose() * &y;
    let shrink = DVector::from_iterator(
        svd.singular_values.len(),
        svd.singular_values.iter().zip(uty.iter()).map(|(s, c)| s * c / (s * s + n as f64 * ridge)),
    );
    let beta = v_t.transpose() * shrink;
    let coef: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean - means.iter().zip(&coef).map(|(m, b)| m * b).sum::<f64>();
    Ok(LossModel { k, intercept, coef })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::{domain_names, sample_mixtures};

    fn evals(k: usize, n: usize, seed: u64, f: impl Fn(&[f64]) -> f64) -> Vec<ProxyEvaluation> {
        sample_mixtures(n, k, 1.0, seed)
            .unwrap()
            .into_iter()
            .map(|w| ProxyEvaluation { loss: f(&w), weights: MixtureWeights::new(domain_names(k), w).unwrap() })
            .collect()
    }

    #[test]
    fn recovers_linear_loss_off_sample() {
        let lin = |w: &[f64]| 2.0 * w[0] + 3.0 * w[1];
        let model = fit_loss_model(&evals(2, 40, 1, lin), DEFAULT_RIDGE).unwrap();
        for w in sample_mixtures(200, 2, 1.0, 99).unwrap() {
            assert!((model.predict(&w) - lin(&w)).abs() < 1e-6);
        }
    }

    #[test]
    fn exact_on_quadratic_training_points() {
        let q = |w: &[f64]| (w[0] - 0.6).powi(2) + (w[1] - 0.3).powi(2) + (w[2] - 0.1).powi(2) + 0.5 * w[0] * w[2];
        let data = evals(3, 64, 5, q);
        let model = fit_loss_model(&data, DEFAULT_RIDGE).unwrap();
        for e in &data {
            assert!((model.predict(&e.weights.weights) - e.loss).abs() < 1e-6);
        }
    }

    #[test]
    fn duplicated_evaluations_same_predictions() {
        let f = |w: &[f64]| (3.0 * w[0]).sin() + w[1] * w[2];
        let data = evals(3, 30, 2, f);
        let doubled: Vec<ProxyEvaluation> = data.iter().chain(data.iter()).cloned().collect();
        let a = fit_loss_model(&data, 1e-3).unwrap();
        let b = fit_loss_model(&doubled, 1e-3).unwrap();
        for w in sample_mixtures(50, 3, 1.0, 17).unwrap() {
            assert!((a.predict(&w) - b.predict(&w)).abs() < 1e-9);
        }
    }

    #[test]
    fn single_domain_predicts_mean() {
        let data: Vec<ProxyEvaluation> = [1.0, 2.0, 6.0]
            .iter()
            .map(|&l| ProxyEvaluation { weights: MixtureWeights::new(domain_names(1), vec![1.0]).unwrap(), loss: l })
            .collect();
        let model = fit_loss_model(&data, DEFAULT_RIDGE).unwrap();
        assert!((model.predict(&[1.0]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn underdetermined_still_solvable() {
        let data = evals(4, 3, 8, |w| w[0] + w[3]);
        let model = fit_loss_model(&data, DEFAULT_RIDGE).unwrap();
        assert!(model.coef.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_loss_model(&[], DEFAULT_RIDGE), Err(MixtureError::NoEvaluations)));
        let mut data = evals(2, 5, 1, |w| w[0]);
        data[2].loss = f64::NAN;
        assert!(matches!(fit_loss_model(&data, DEFAULT_RIDGE), Err(MixtureError::NonFiniteLoss)));
    }

    #[test]
    fn feature_layout() {
        assert_eq!(quadratic_features(&[0.5, 0.25, 0.25]), vec![0.5, 0.25, 0.25, 0.25, 0.0625, 0.0625, 0.125, 0.125, 0.0625]);
    }
}
