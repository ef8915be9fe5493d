//! Preference-pair construction (ordinal, model-error and judge strategies)
//! and the DPO objective.

mod dpo;
mod pairs;

pub use dpo::{
    batch_objective, combined_objective, dpo_loss, dpo_loss_grad_policy_chosen, margin, neg_log_sigmoid,
    BatchObjective, DpoParams, ScoredPair,
};
pub use pairs::{
    error_pairs, judge_gate, judge_pairs, mc_prompt, normalize_ws, ordinal_pairs, CalibrationItem, JudgeCalibration,
    JudgedCandidate, Preference, PredictionLogEntry,
};

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{PreferencePair, TaskSample};

#[derive(Debug, Error)]
pub enum PrefError {
    #[error("ordinal pairs need a multiple-choice sample")]
    NotMultipleChoice,
    #[error("invalid sample: {0}")]
    Sample(String),
    #[error("judge calibration set is empty")]
    EmptyCalibration,
    #[error("log-probabilities must be finite")]
    NonFinite,
    #[error("beta must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("SFT loss coefficient must be non-negative, got {0}")]
    InvalidCoef(f64),
    #[error("SFT NLL must be non-negative, got {0}")]
    NegativeNll(f64),
    #[error("no scored pairs")]
    EmptyBatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrefConfig {
    /// Minimum judge/human agreement for judge-built pairs.
    pub tau: f64,
    pub dpo: DpoParams,
}

impl Default for PrefConfig {
    fn default() -> Self {
        PrefConfig { tau: 0.8, dpo: DpoParams::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyCounts {
    pub ordinal: usize,
    pub error: usize,
    pub judge: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrefReport {
    /// Pairs produced by each strategy before deduplication.
    pub generated: StrategyCounts,
    /// Pairs kept after deduplication, attributed to the first strategy that produced them.
    pub emitted: StrategyCounts,
    pub duplicates_removed: usize,
    pub total_pairs: usize,
    pub judge_agreement: Option<f64>,
    pub judge_admitted: bool,
    /// Multiple-choice inputs that could not be turned into pairs.
    pub skipped_samples: usize,
}

pub struct PrefInputs<'a> {
    pub mc: &'a [(String, TaskSample)],
    pub log: &'a [PredictionLogEntry],
    pub judged: &'a [JudgedCandidate],
    pub calibration: Option<&'a JudgeCalibration>,
}

/// Union of ordinal, error and (if the gate admits) judge pairs,
/// deduplicated on (prompt, chosen, rejected) keeping the first occurrence.
pub fn build_pref_dataset(inputs: &PrefInputs<'_>, cfg: &PrefConfig) -> Result<(Vec<PreferencePair>, PrefReport), PrefError> {
    let mut report = PrefReport::default();

    let ordinal: Vec<Result<Vec<PreferencePair>, PrefError>> =
        inputs.mc.par_iter().map(|(id, s)| ordinal_pairs(s, id)).collect();
    let mut all = Vec::new();
    for r in ordinal {
        match r {
            Ok(p) => all.extend(p),
            Err(_) => report.skipped_samples += 1,
        }
    }
    report.generated.ordinal = all.len();

    let errors = error_pairs(inputs.log);
    report.generated.error = errors.len();
    all.extend(errors);

    match inputs.calibration {
        Some(cal) if !cal.items.is_empty() => {
            report.judge_agreement = Some(cal.agreement);
            report.judge_admitted = judge_gate(cal, cfg.tau)?;
        }
        _ => report.judge_admitted = false,
    }
    if report.judge_admitted {
        let judged = judge_pairs(inputs.judged);
        report.generated.judge = judged.len();
        all.extend(judged);
    }

    let mut seen: HashSet<(String, String, String)> = HashSet::new();
    let mut out = Vec::with_capacity(all.len());
    for p in all {
        if seen.insert((p.prompt.clone(), p.chosen.clone(), p.rejected.clone())) {
            match p.strategy {
                crate::model::Strategy::Ordinal => report.emitted.ordinal += 1,
                crate::model::Strategy::Error => report.emitted.error += 1,
                crate::model::Strategy::Judge => report.emitted.judge += 1,
            }
            out.push(p);
        } else {
            report.duplicates_removed += 1;
        }
    }
    report.total_pairs = out.len();
    Ok((out, report))
}
