//! DPO objective with an auxiliary SFT term.

use serde::{Deserialize, Serialize};

use super::PrefError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DpoParams {
    pub beta: f64,
    pub sft_loss_coef: f64,
}

impl Default for DpoParams {
    fn default() -> Self {
        DpoParams { beta: 0.1, sft_loss_coef: 0.3 }
    }
}

impl DpoParams {
    pub fn validate(&self) -> Result<(), PrefError> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(PrefError::InvalidBeta(self.beta));
        }
        if !(self.sft_loss_coef >= 0.0 && self.sft_loss_coef.is_finite()) {
            return Err(PrefError::InvalidCoef(self.sft_loss_coef));
        }
        Ok(())
    }
}

/// `-ln(sigmoid(x))`, stable for large |x|.
pub fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Reward margin `(pc - pr) - (rc - rr)` before scaling by beta.
pub fn margin(policy_chosen: f64, policy_rejected: f64, ref_chosen: f64, ref_rejected: f64) -> f64 {
    (policy_chosen - policy_rejected) - (ref_chosen - ref_rejected)
}

/// `-ln sigmoid(beta * margin)` for one preference pair.
pub fn dpo_loss(
    policy_chosen: f64,
    policy_rejected: f64,
    ref_chosen: f64,
    ref_rejected: f64,
    beta: f64,
) -> Result<f64, PrefError> {
    if ![policy_chosen, policy_rejected, ref_chosen, ref_rejected].iter().all(|v| v.is_finite()) {
        return Err(PrefError::NonFinite);
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(PrefError::InvalidBeta(beta));
    }
    Ok(neg_log_sigmoid(beta * margin(policy_chosen, policy_rejected, ref_chosen, ref_rejected)))
}

/// Derivative of [`dpo_loss`] with respect to `policy_chosen`:
/// `-beta * sigmoid(-beta * margin)`.
pub fn dpo_loss_grad_policy_chosen(
    policy_chosen: f64,
    policy_rejected: f64,
    ref_chosen: f64,
    ref_rejected: f64,
    beta: f64,
) -> f64 {
    let z = beta * margin(policy_chosen, policy_rejected, ref_chosen, ref_rejected);
    -beta / (1.0 + z.exp())
}

/// `dpo + coef * sft_nll`.
pub fn combined_objective(dpo: f64, sft_nll: f64, coef: f64) -> Result<f64, PrefError> {
    if sft_nll.is_nan() || sft_nll < 0.0 {
        return Err(PrefError::NegativeNll(sft_nll));
    }
    if coef.is_nan() || coef < 0.0 {
        return Err(PrefError::InvalidCoef(coef));
    }
    Ok(dpo + coef * sft_nll)
}

/// Log-probabilities of one scored pair, as produced by an external trainer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoredPair {
    pub policy_chosen: f64,
    pub policy_rejected: f64,
    pub ref_chosen: f64,
    pub ref_rejected: f64,
    /// Per-token NLL of the chosen response under the policy.
    #[serde(default)]
    pub sft_nll: f64,
}

impl crate::jsonl::Record for ScoredPair {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchObjective {
    pub n: usize,
    pub beta: f64,
    pub sft_loss_coef: f64,
    pub mean_dpo: f64,
    pub mean_sft_nll: f64,
    pub mean_objective: f64,
}

/// Batch means of the DPO loss, SFT NLL and combined objective.
pub fn batch_objective(pairs: &[ScoredPair], params: DpoParams) -> Result<BatchObjective, PrefError> {
    params.validate()?;
    if pairs.is_empty() {
        return Err(PrefError::EmptyBatch);
    }
    let mut dpo = Vec::with_capacity(pairs.len());
    let mut obj = Vec::with_capacity(pairs.len());
    for p in pairs {
        let l = dpo_loss(p.policy_chosen, p.policy_rejected, p.ref_chosen, p.ref_rejected, params.beta)?;
        obj.push(combined_objective(l, p.sft_nll, params.sft_loss_coef)?);
        dpo.push(l);
    }
    let n = pairs.len() as f64;
    let mean = |v: &[f64]| crate::numeric::neumaier_sum(v.iter().copied()) / n;
    Ok(BatchObjective {
        n: pairs.len(),
        beta: params.beta,
        sft_loss_coef: params.sft_loss_coef,
        mean_dpo: mean(&dpo),
        mean_sft_nll: crate::numeric::neumaier_sum(pairs.iter().map(|p| p.sft_nll)) / n,
        mean_objective: mean(&obj),
    })
}
