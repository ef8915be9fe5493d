//! One function per pipeline stage, shared by the subcommands and `run`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use redforge_core::config::TrainingRecipe;
use redforge_core::eval::{aggregate_report, score_task, BenchmarkReport, EvalScore, Metric};
use redforge_core::filter::{run_filter, train_quality_scorer, DocScorer, FilterConfig, FilterError, FilterReport};
use redforge_core::jsonl::Record;
use redforge_core::mixture::{run_mixture_search, MixtureConfig, MixtureOutcome, NgramProxy};
use redforge_core::numeric::derive_seed;
use redforge_core::pack::{pack_corpus, PackReport};
use redforge_core::pref::{
    build_pref_dataset, CalibrationItem, DpoParams, JudgeCalibration, JudgedCandidate, PrefConfig, PrefInputs,
    PrefReport, PredictionLogEntry,
};
use redforge_core::sft::{build_sft, render_histogram, SftBuild, SftConfig};
use redforge_core::{Document, InstructionRecord, TaskSample};
use serde::{Deserialize, Serialize};

use crate::io::{keyed, read_corpus, read_records, write_json, write_jsonl};

/// Seed handed to a stage, derived from the run seed by stage name so each
/// stage can be rerun on its own with the same result.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    derive_seed(seed, stage)
}

/// Scores every text the same; used when there is nothing to train on.
struct FlatScorer;

impl DocScorer for FlatScorer {
    fn score(&self, _: &str) -> Result<f64, FilterError> {
        Ok(0.0)
    }
}

pub struct FilterPaths<'a> {
    pub kept: &'a Path,
    pub rejects: Option<&'a Path>,
    pub report: &'a Path,
    pub verdicts: Option<&'a Path>,
}

/// The quality scorer is trained on `scorer_seed` when given, otherwise on the
/// documents that pass the rule filters.
pub fn filter_stage(cfg: &FilterConfig, input: &Path, scorer_seed: Option<&Path>, out: &FilterPaths) -> Result<FilterReport> {
    cfg.validate()?;
    let corpus = read_corpus(input)?.records;
    let seed_docs: Vec<Document> = match scorer_seed {
        Some(p) => read_corpus(p)?.records,
        None => corpus
            .iter()
            .filter(|d| redforge_core::filter::apply_rule_filters(d, cfg).rule_hits.is_empty())
            .cloned()
            .collect(),
    };
    let result = if seed_docs.is_empty() {
        run_filter(&corpus, cfg, &FlatScorer)?
    } else {
        let scorer = train_quality_scorer(&seed_docs, cfg.scorer_order, cfg.smoothing_k)?;
        run_filter(&corpus, cfg, &scorer)?
    };
    write_jsonl(out.kept, &result.kept)?;
    if let Some(p) = out.rejects {
        write_jsonl(p, &result.rejected)?;
    }
    if let Some(p) = out.verdicts {
        write_jsonl(p, &result.verdicts)?;
    }
    write_json(out.report, &result.report)?;
    Ok(result.report)
}

pub fn pack_stage(threshold: usize, input: &Path, packed: &Path, units: Option<&Path>, report: Option<&Path>) -> Result<PackReport> {
    let docs = read_corpus(input)?.records;
    let out = pack_corpus(&docs, threshold)?;
    write_jsonl(packed, &out.sequences)?;
    if let Some(p) = units {
        write_jsonl(p, &out.units)?;
    }
    if let Some(p) = report {
        write_json(p, &out.report)?;
    }
    Ok(out.report)
}

/// Texts grouped by the documents' `domain` field, domains in name order.
pub fn domains_by_field(docs: &[Document]) -> Vec<(String, Vec<String>)> {
    let mut m: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for d in docs {
        m.entry(d.domain.clone()).or_default().push(d.text.clone());
    }
    m.into_iter().collect()
}

pub fn mix_stage(domains: &[(String, Vec<String>)], cfg: &MixtureConfig, seed: u64, out: &Path) -> Result<MixtureOutcome> {
    let names: Vec<String> = domains.iter().map(|(n, _)| n.clone()).collect();
    let texts: Vec<Vec<String>> = domains.iter().map(|(_, t)| t.clone()).collect();
    let proxy = NgramProxy::new(&texts, cfg.proxy_order, cfg.proxy_smoothing_k, cfg.holdout_stride)?;
    let (outcome, _, _) = run_mixture_search(&names, &proxy, cfg, seed)?;
    write_json(out, &outcome)?;
    Ok(outcome)
}

pub struct SftPaths<'a> {
    pub step1: &'a Path,
    pub step2: &'a Path,
    pub stats: &'a Path,
    pub recipe: &'a Path,
    pub invalid: Option<&'a Path>,
    pub plan: Option<&'a Path>,
    pub histogram: Option<&'a Path>,
}

/// Training hyperparameters handed to an external trainer.
#[derive(Debug, Serialize)]
pub struct RecipeManifest<'a> {
    pub recipe: &'a TrainingRecipe,
    pub dpo: DpoParams,
    pub sft_mix: BTreeMap<&'static str, &'a str>,
}

pub fn sft_stage(
    sns: &Path,
    general: &Path,
    cfg: &SftConfig,
    recipe: &TrainingRecipe,
    dpo: DpoParams,
    seed: u64,
    out: &SftPaths,
) -> Result<SftBuild> {
    let sns = keyed("sns", read_records::<TaskSample>(sns)?);
    let general = keyed("general", read_records::<InstructionRecord>(general)?);
    let built = build_sft(&sns, &general, cfg, seed)?;
    for bad in &built.invalid {
        eprintln!("warning: excluded {}: {}", bad.id, bad.errors.join("; "));
    }
    write_jsonl(out.step1, &built.step1)?;
    write_jsonl(out.step2, &built.step2)?;
    write_json(out.stats, &built.stats)?;
    let manifest = RecipeManifest {
        recipe,
        dpo,
        sft_mix: BTreeMap::from([("r1", cfg.r1.as_str()), ("r2", cfg.r2.as_str())]),
    };
    write_json(out.recipe, &manifest)?;
    if let Some(p) = out.invalid {
        write_jsonl(p, &built.invalid)?;
    }
    if let Some(p) = out.plan {
        write_json(p, &built.plan)?;
    }
    if let Some(p) = out.histogram {
        std::fs::write(p, render_histogram(&built.stats))?;
    }
    Ok(built)
}

#[derive(Debug, Default, Clone)]
pub struct PrefPaths {
    pub mc: Option<PathBuf>,
    pub pred_log: Option<PathBuf>,
    pub judged: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
}

fn read_opt<T: Record>(p: &Option<PathBuf>) -> Result<Vec<T>> {
    Ok(match p {
        Some(p) => read_records::<T>(p)?.records,
        None => Vec::new(),
    })
}

pub fn pref_stage(inputs: &PrefPaths, cfg: &PrefConfig, out: &Path, report: &Path) -> Result<PrefReport> {
    let mc = match &inputs.mc {
        Some(p) => keyed("mc", read_records::<TaskSample>(p)?),
        None => Vec::new(),
    };
    let log: Vec<PredictionLogEntry> = read_opt(&inputs.pred_log)?;
    let judged: Vec<JudgedCandidate> = read_opt(&inputs.judged)?;
    let calibration = inputs.calibration.as_ref().map(|_| read_opt::<CalibrationItem>(&inputs.calibration)).transpose()?;
    let calibration = calibration.map(JudgeCalibration::new);
    if !judged.is_empty() && calibration.as_ref().is_none_or(|c| c.items.is_empty()) {
        eprintln!("warning: judged candidates ignored: no calibration set");
    }
    let pref_inputs = PrefInputs { mc: &mc, log: &log, judged: &judged, calibration: calibration.as_ref() };
    let (pairs, rep) = build_pref_dataset(&pref_inputs, cfg)?;
    write_jsonl(out, &pairs)?;
    write_json(report, &rep)?;
    Ok(rep)
}

/// One line of a prediction or reference file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalItem {
    pub id: String,
    pub answer: String,
}

impl Record for EvalItem {}

/// Scores predictions against references, aligned by id in reference order.
pub fn eval_stage(task: &str, metric: Metric, pred: &Path, gold: &Path) -> Result<EvalScore> {
    let preds = read_records::<EvalItem>(pred)?;
    let golds = read_records::<EvalItem>(gold)?;
    if !golds.errors.is_empty() {
        bail!("{} has {} invalid lines", gold.display(), golds.errors.len());
    }
    let mut by_id: HashMap<&str, &str> = HashMap::new();
    for p in &preds.records {
        if by_id.insert(&p.id, &p.answer).is_some() {
            bail!("duplicate prediction id {:?} in {}", p.id, pred.display());
        }
    }
    let mut seen = HashSet::new();
    let mut hyps = Vec::with_capacity(golds.records.len());
    let mut refs = Vec::with_capacity(golds.records.len());
    let mut missing = Vec::new();
    for g in &golds.records {
        if !seen.insert(g.id.as_str()) {
            bail!("duplicate reference id {:?} in {}", g.id, gold.display());
        }
        match by_id.get(g.id.as_str()) {
            Some(p) => hyps.push(*p),
            None => missing.push(g.id.clone()),
        }
        refs.push(g.answer.as_str());
    }
    if !missing.is_empty() {
        bail!("{} references have no prediction (first: {:?})", missing.len(), missing[0]);
    }
    Ok(score_task(task, metric, &hyps, &refs)?)
}

/// File name for a task's score: lowercase alphanumerics joined by '_'.
pub fn score_file_name(task: &str) -> String {
    let slug: Vec<String> = task
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect();
    format!("{}.json", slug.join("_"))
}

/// Aggregates every `*.json` score file in `dir`, in file-name order.
pub fn aggregate_dir(dir: &Path) -> Result<BenchmarkReport> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json"));
    files.sort();
    let scores: Vec<EvalScore> = files.iter().map(|p| crate::io::read_json(p)).collect::<Result<_>>()?;
    Ok(aggregate_report(&scores)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_file_names() {
        assert_eq!(score_file_name("Note Taxonomy"), "note_taxonomy.json");
        assert_eq!(score_file_name("Query-Note Relevance"), "query_note_relevance.json");
    }
}
