//! End-to-end pipeline with per-stage staging directories and manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use redforge_core::config::PipelineConfig;
use serde::Serialize;

use crate::io::{digest, digest_tree, sha256_file, write_json, FileDigest, StagingDir};
use crate::stages::{self, stage_seed, FilterPaths, PrefPaths, SftPaths};

pub const EXIT_CONFIG: i32 = 2;

/// Stage names in execution order with their exit codes.
pub const STAGES: [(&str, i32); 6] = [("filter", 10), ("pack", 20), ("mix", 30), ("sft", 40), ("pref", 50), ("eval", 60)];

pub const RUN_MANIFEST: &str = "run_manifest.json";

#[derive(Debug, Serialize)]
pub struct StageManifest {
    pub stage: String,
    pub command: Vec<String>,
    pub config_sha256: String,
    pub seed: u64,
    pub stage_seed: u64,
    pub tool_version: String,
    pub inputs: Vec<FileDigest>,
    /// Every file in the stage directory except this manifest.
    pub outputs: Vec<FileDigest>,
    pub duration_ms: u128,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: String,
    pub config_sha256: String,
    pub seed: u64,
    pub tool_version: String,
    pub completed_stages: Vec<String>,
    pub failed_stage: Option<String>,
    pub exit_code: i32,
    pub duration_ms: u128,
}

pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub command: Vec<String>,
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    out: &'a Path,
    config_sha256: &'a str,
    command: &'a [String],
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| anyhow!("[run] {key} is not set"))
}

fn external(p: &Path) -> Result<FileDigest> {
    digest(p, &p.display().to_string())
}

/// Inputs of a stage and the work that fills its staging directory.
fn stage_inputs(ctx: &Ctx, stage: &str) -> Result<Vec<FileDigest>> {
    let r = &ctx.cfg.run;
    let earlier = |rel: &str| digest(&ctx.out.join(rel), rel);
    Ok(match stage {
        "filter" => {
            let mut v = vec![external(required(&r.corpus, "corpus")?)?];
            if let Some(p) = &r.scorer_seed {
                v.push(external(p)?);
            }
            v
        }
        "pack" | "mix" => vec![earlier("filter/kept.jsonl")?],
        "sft" => vec![external(required(&r.sft_sns, "sft_sns")?)?, external(required(&r.sft_general, "sft_general")?)?],
        "pref" => [&r.pref_mc, &r.pred_log, &r.judged, &r.calibration]
            .into_iter()
            .flatten()
            .map(|p| external(p))
            .collect::<Result<_>>()?,
        "eval" => {
            let mut v = Vec::new();
            for t in &ctx.cfg.eval.tasks {
                v.push(external(&t.pred)?);
                v.push(external(&t.gold)?);
            }
            v
        }
        _ => unreachable!("unknown stage {stage}"),
    })
}

fn stage_work(ctx: &Ctx, stage: &str, dir: &Path, seed: u64) -> Result<()> {
    let cfg = ctx.cfg;
    let r = &cfg.run;
    match stage {
        "filter" => {
            stages::filter_stage(
                &cfg.filter,
                required(&r.corpus, "corpus")?,
                r.scorer_seed.as_deref(),
                &FilterPaths {
                    kept: &dir.join("kept.jsonl"),
                    rejects: Some(&dir.join("rejected.jsonl")),
                    report: &dir.join("report.json"),
                    verdicts: Some(&dir.join("verdicts.jsonl")),
                },
            )?;
        }
        "pack" => {
            stages::pack_stage(
                cfg.pack.threshold,
                &ctx.out.join("filter/kept.jsonl"),
                &dir.join("packed.jsonl"),
                Some(&dir.join("units.jsonl")),
                Some(&dir.join("report.json")),
            )?;
        }
        "mix" => {
            let docs = crate::io::read_corpus(&ctx.out.join("filter/kept.jsonl"))?.records;
            let domains = stages::domains_by_field(&docs);
            stages::mix_stage(&domains, &cfg.mixture, seed, &dir.join("mixture.json"))?;
        }
        "sft" => {
            stages::sft_stage(
                required(&r.sft_sns, "sft_sns")?,
                required(&r.sft_general, "sft_general")?,
                &cfg.sft,
                &cfg.recipe,
                cfg.pref.dpo,
                seed,
                &SftPaths {
                    step1: &dir.join("step1.jsonl"),
                    step2: &dir.join("step2.jsonl"),
                    stats: &dir.join("stats.json"),
                    recipe: &dir.join("recipe.json"),
                    invalid: Some(&dir.join("invalid.jsonl")),
                    plan: Some(&dir.join("plan.json")),
                    histogram: Some(&dir.join("histogram.txt")),
                },
            )?;
        }
        "pref" => {
            let paths = PrefPaths {
                mc: r.pref_mc.clone(),
                pred_log: r.pred_log.clone(),
                judged: r.judged.clone(),
                calibration: r.calibration.clone(),
            };
            stages::pref_stage(&paths, &cfg.pref, &dir.join("pairs.jsonl"), &dir.join("pref_report.json"))?;
        }
        "eval" => {
            let scores_dir = dir.join("scores");
            fs::create_dir_all(&scores_dir)?;
            for t in &cfg.eval.tasks {
                let score = stages::eval_stage(&t.task, t.metric, &t.pred, &t.gold)
                    .with_context(|| format!("task {:?}", t.task))?;
                write_json(&scores_dir.join(stages::score_file_name(&t.task)), &score)?;
            }
            let report = stages::aggregate_dir(&scores_dir)?;
            write_json(&dir.join("report.json"), &report)?;
            fs::write(dir.join("report.txt"), report.render_table())?;
        }
        _ => unreachable!("unknown stage {stage}"),
    }
    Ok(())
}

fn run_stage(ctx: &Ctx, stage: &str) -> Result<()> {
    let started = Instant::now();
    let seed = stage_seed(ctx.cfg.seed, stage);
    let staging = StagingDir::new(&ctx.out.join(stage))?;
    let inputs = stage_inputs(ctx, stage)?;
    stage_work(ctx, stage, staging.path(), seed)?;
    let manifest = StageManifest {
        stage: stage.to_string(),
        command: ctx.command.to_vec(),
        config_sha256: ctx.config_sha256.to_string(),
        seed: ctx.cfg.seed,
        stage_seed: seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        inputs,
        outputs: digest_tree(staging.path())?,
        duration_ms: started.elapsed().as_millis(),
    };
    write_json(&staging.path().join("manifest.json"), &manifest)?;
    staging.promote()?;
    Ok(())
}

fn write_atomic_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    write_json(&tmp, value)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs every stage in order and returns the process exit code.
pub fn run_pipeline(opts: &RunOptions) -> i32 {
    let started = Instant::now();
    let mut cfg = match PipelineConfig::load(&opts.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", opts.config.display());
            return EXIT_CONFIG;
        }
    };
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    let config_sha256 = match sha256_file(&opts.config) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = prepare_out_dir(&opts.out) {
        eprintln!("error: {e:#}");
        return 1;
    }

    let ctx = Ctx { cfg: &cfg, out: &opts.out, config_sha256: &config_sha256, command: &opts.command };
    let mut completed = Vec::new();
    let mut failed = None;
    let mut code = 0;
    for (stage, stage_code) in STAGES {
        eprintln!("stage {stage} ...");
        match run_stage(&ctx, stage) {
            Ok(()) => completed.push(stage.to_string()),
            Err(e) => {
                eprintln!("error: stage {stage} failed: {e:#}");
                failed = Some(stage.to_string());
                code = stage_code;
                break;
            }
        }
    }
    let manifest = RunManifest {
        command: opts.command.clone(),
        config: opts.config.display().to_string(),
        config_sha256,
        seed: cfg.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        completed_stages: completed,
        failed_stage: failed,
        exit_code: code,
        duration_ms: started.elapsed().as_millis(),
    };
    if let Err(e) = write_atomic_json(&opts.out.join(RUN_MANIFEST), &manifest) {
        eprintln!("error: cannot write run manifest: {e:#}");
        if code == 0 {
            return 1;
        }
    }
    code
}

/// Creates the output directory and clears stage outputs of an earlier run,
/// so a failed run never leaves stale later-stage results behind.
fn prepare_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    for (stage, _) in STAGES {
        let d = out.join(stage);
        if d.is_dir() {
            fs::remove_dir_all(&d)?;
        }
    }
    let m = out.join(RUN_MANIFEST);
    if m.is_file() {
        fs::remove_file(m)?;
    }
    Ok(())
}
