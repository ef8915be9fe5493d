use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::PrefError;
use crate::model::{PreferencePair, Strategy, TaskFormat, TaskSample};
use crate::sft::{render_sample, TemplateStyle};

/// A model prediction next to the reference answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionLogEntry {
    pub source_id: String,
    pub prompt: String,
    pub gold: String,
    pub predicted: String,
}

impl crate::jsonl::Record for PredictionLogEntry {
    fn validate(&self) -> Result<(), String> {
        if self.gold.is_empty() {
            Err("gold answer is empty".into())
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preference {
    A,
    B,
}

/// One judge-vs-human comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationItem {
    pub judge: Preference,
    pub human: Preference,
}

impl crate::jsonl::Record for CalibrationItem {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeCalibration {
    pub items: Vec<CalibrationItem>,
    pub agreement: f64,
}

impl JudgeCalibration {
    pub fn new(items: Vec<CalibrationItem>) -> Self {
        let agree = items.iter().filter(|i| i.judge == i.human).count();
        let agreement = if items.is_empty() { 0.0 } else { agree as f64 / items.len() as f64 };
        JudgeCalibration { items, agreement }
    }
}

/// A response pair scored by a judge model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgedCandidate {
    pub source_id: String,
    pub prompt: String,
    pub response_a: String,
    pub response_b: String,
    pub judge_preference: Preference,
}

impl crate::jsonl::Record for JudgedCandidate {}

/// Prompt shown to the policy for a multiple-choice sample.
pub fn mc_prompt(s: &TaskSample) -> Result<String, PrefError> {
    let r = render_sample(s, TemplateStyle::Default).map_err(|e| PrefError::Sample(e.to_string()))?;
    Ok(format!("{}\n\n{}", r.instruction, r.input))
}

/// Correct answer preferred over each distinct distractor, in option order.
pub fn ordinal_pairs(s: &TaskSample, source_id: &str) -> Result<Vec<PreferencePair>, PrefError> {
    if s.format != TaskFormat::MultipleChoice {
        return Err(PrefError::NotMultipleChoice);
    }
    let prompt = mc_prompt(s)?;
    let mut seen = HashSet::new();
    Ok(s.options
        .iter()
        .flatten()
        .filter(|o| **o != s.answer && seen.insert(o.as_str()))
        .map(|o| PreferencePair {
            prompt: prompt.clone(),
            chosen: s.answer.clone(),
            rejected: o.clone(),
            strategy: Strategy::Ordinal,
            source_id: source_id.to_string(),
        })
        .collect())
}

pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Gold preferred over the prediction wherever they differ after
/// whitespace normalization.
pub fn error_pairs(log: &[PredictionLogEntry]) -> Vec<PreferencePair> {
    log.iter()
        .filter(|e| normalize_ws(&e.gold) != normalize_ws(&e.predicted))
        .map(|e| PreferencePair {
            prompt: e.prompt.clone(),
            chosen: e.gold.clone(),
            rejected: e.predicted.clone(),
            strategy: Strategy::Error,
            source_id: e.source_id.clone(),
        })
        .collect()
}

/// Admits the judge for data expansion when its agreement with humans reaches `tau`.
pub fn judge_gate(cal: &JudgeCalibration, tau: f64) -> Result<bool, PrefError> {
    if cal.items.is_empty() {
        return Err(PrefError::EmptyCalibration);
    }
    Ok(cal.agreement >= tau)
}

/// Judge-preferred response as chosen. Candidates with identical responses are skipped.
pub fn judge_pairs(candidates: &[JudgedCandidate]) -> Vec<PreferencePair> {
    candidates
        .iter()
        .filter(|c| c.response_a != c.response_b)
        .map(|c| {
            let (chosen, rejected) = match c.judge_preference {
                Preference::A => (&c.response_a, &c.response_b),
                Preference::B => (&c.response_b, &c.response_a),
            };
            PreferencePair {
                prompt: c.prompt.clone(),
                chosen: chosen.clone(),
                rejected: rejected.clone(),
                strategy: Strategy::Judge,
                source_id: c.source_id.clone(),
            }
        })
        .collect()
}
