//! SFT dataset construction: task validation, instruction rendering,
//! two-step SNS/general mixing and corpus statistics.

mod plan;
mod registry;
mod render;
mod stats;

pub use plan::{plan_two_step_mix, MixRatio, StepManifest, TwoStepPlan};
pub use registry::{format_errors, validate_task_sample, SampleError, TaskRegistry, DEFAULT_TASKS};
pub use render::{option_letter, recover_answer, render_sample, TemplateStyle, MAX_OPTIONS};
pub use stats::{corpus_stats, render_histogram, CorpusStats, HistogramBin, StatsItem, GENERAL_BUCKET, UNLABELED_BUCKET};

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Capability, InstructionRecord, TaskSample};

#[derive(Debug, Error)]
pub enum SftError {
    #[error("bad ratio {0:?}; expected SNS:GENERAL with SNS >= 1")]
    BadRatio(String),
    #[error("step-two ratio {r2} must give SNS a larger share than step-one ratio {r1}")]
    RatioOrder { r1: String, r2: String },
    #[error("general pool has {available} samples but the plan needs {needed}")]
    GeneralPoolTooSmall { needed: usize, available: usize },
    #[error("unknown template style {0:?}")]
    UnknownStyle(String),
    #[error("multiple-choice sample without options")]
    MissingOptions,
    #[error("answer is not one of the options")]
    AnswerNotInOptions,
    #[error("{0} options exceed the 26 available letters")]
    TooManyOptions(usize),
    #[error("generation sample has an empty answer")]
    EmptyAnswer,
    #[error("no samples to summarize")]
    EmptyStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SftConfig {
    pub r1: String,
    pub r2: String,
    pub style: String,
    pub allow_replacement: bool,
    /// Length above which samples are counted as clipped.
    pub max_len: usize,
    /// Extra task name -> capability entries on top of the defaults.
    pub extra_tasks: BTreeMap<String, Capability>,
}

impl Default for SftConfig {
    fn default() -> Self {
        SftConfig {
            r1: "1:3".into(),
            r2: "4:1".into(),
            style: "default".into(),
            allow_replacement: false,
            max_len: 16384,
            extra_tasks: BTreeMap::new(),
        }
    }
}

/// A training row of either step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRow {
    pub id: String,
    pub source: String,
    pub instruction: String,
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvalidSample {
    pub id: String,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SftBuild {
    pub plan: TwoStepPlan,
    pub step1: Vec<SftRow>,
    pub step2: Vec<SftRow>,
    pub stats: CorpusStats,
    pub invalid: Vec<InvalidSample>,
}

/// Validates and renders the SNS samples, plans both steps and computes
/// statistics over the step-one dataset (all SNS plus the larger general
/// draw). Invalid SNS samples are excluded and reported.
pub fn build_sft(
    sns: &[(String, TaskSample)],
    general: &[(String, InstructionRecord)],
    cfg: &SftConfig,
    seed: u64,
) -> Result<SftBuild, SftError> {
    let r1: MixRatio = cfg.r1.parse()?;
    let r2: MixRatio = cfg.r2.parse()?;
    let style: TemplateStyle = cfg.style.parse()?;
    let registry = TaskRegistry::default().with_extra(cfg.extra_tasks.clone());

    let rendered: Vec<Result<(String, &TaskSample, InstructionRecord), InvalidSample>> = sns
        .par_iter()
        .map(|(id, s)| {
            registry
                .validate(s)
                .map_err(|errs| errs.iter().map(ToString::to_string).collect::<Vec<_>>())
                .and_then(|_| render_sample(s, style).map_err(|e| vec![e.to_string()]))
                .map(|r| (id.clone(), s, r))
                .map_err(|errors| InvalidSample { id: id.clone(), errors })
        })
        .collect();
    let mut valid = Vec::new();
    let mut invalid = Vec::new();
    for r in rendered {
        match r {
            Ok(v) => valid.push(v),
            Err(e) => invalid.push(e),
        }
    }

    let sns_ids: Vec<String> = valid.iter().map(|(id, _, _)| id.clone()).collect();
    let general_ids: Vec<String> = general.iter().map(|(id, _)| id.clone()).collect();
    let plan = plan_two_step_mix(&sns_ids, &general_ids, r1, r2, seed, cfg.allow_replacement)?;

    let sns_rows: Vec<SftRow> = valid.iter().map(|(id, _, r)| row(id, "sns", r)).collect();
    let general_by_id: HashMap<&str, &InstructionRecord> = general.iter().map(|(id, r)| (id.as_str(), r)).collect();
    let general_rows =
        |ids: &[String]| -> Vec<SftRow> { ids.iter().map(|id| row(id, "general", general_by_id[id.as_str()])).collect() };
    let step1: Vec<SftRow> = sns_rows.iter().cloned().chain(general_rows(&plan.step1.general)).collect();
    let step2: Vec<SftRow> = sns_rows.iter().cloned().chain(general_rows(&plan.step2.general)).collect();

    let mut items: Vec<StatsItem> = valid
        .iter()
        .map(|(_, s, r)| StatsItem {
            tokens: r.token_count(),
            task: Some(s.task.clone()),
            capability: Some(s.capability),
            labels: s.labels.clone(),
        })
        .collect();
    items.extend(plan.step1.general.iter().map(|id| StatsItem {
        tokens: general_by_id[id.as_str()].token_count(),
        task: None,
        capability: None,
        labels: None,
    }));
    let stats = corpus_stats(&items, cfg.max_len)?;
    Ok(SftBuild { plan, step1, step2, stats, invalid })
}

fn row(id: &str, source: &str, r: &InstructionRecord) -> SftRow {
    SftRow {
        id: id.to_string(),
        source: source.to_string(),
        instruction: r.instruction.clone(),
        input: r.input.clone(),
        output: r.output.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TaskFormat;

    fn sns(n: usize) -> Vec<(String, TaskSample)> {
        (0..n)
            .map(|i| {
                (
                    format!("sns:{i}"),
                    TaskSample {
                        task: "Hashtag Prediction".into(),
                        capability: Capability::InformationExtraction,
                        format: TaskFormat::Extraction,
                        prompt: format!("note {i}"),
                        options: None,
                        answer: format!("#tag{i}"),
                        labels: None,
                    },
                )
            })
            .collect()
    }

    fn general(n: usize) -> Vec<(String, InstructionRecord)> {
        (0..n)
            .map(|i| {
                (
                    format!("general:{i}"),
                    InstructionRecord { instruction: format!("q{i}"), input: String::new(), output: format!("a{i}") },
                )
            })
            .collect()
    }

    #[test]
    fn builds_both_steps() {
        let mut s = sns(8);
        s[3].1.capability = Capability::Dialogue;
        let b = build_sft(&s, &general(40), &SftConfig::default(), 3).unwrap();
        assert_eq!(b.invalid.len(), 1);
        assert_eq!(b.invalid[0].id, "sns:3");
        assert_eq!(b.step1.len(), 7 + 21);
        assert_eq!(b.step2.len(), 7 + 1);
        assert_eq!(b.stats.n_samples, 28);
        assert_eq!(b.stats.per_capability["information_extraction"], 7);
    }

    #[test]
    fn ratio_errors_propagate() {
        let cfg = SftConfig { r2: "1:3".into(), ..Default::default() };
        assert!(matches!(build_sft(&sns(2), &general(10), &cfg, 0), Err(SftError::RatioOrder { .. })));
    }
}
