mod io;
mod run;
mod stages;
mod summary;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use redforge_core::config::{ConfigError, PipelineConfig};
use redforge_core::eval::Metric;
use redforge_core::pref::{batch_objective, DpoParams, ScoredPair};
use redforge_core::sft::render_histogram;

use crate::stages::{stage_seed, FilterPaths, PrefPaths, SftPaths};

#[derive(Parser)]
#[command(name = "redforge", version, about = "Deterministic training-data pipeline: filter, pack, mix, build SFT and preference data, evaluate")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true, env = "REDFORGE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Pipeline config (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Rule filters plus quality-score retention cut.
    Filter {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rejects: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Per-document decisions with reasons.
        #[arg(long)]
        verdicts: Option<PathBuf>,
        /// Corpus to train the quality scorer on (default: rule survivors).
        #[arg(long)]
        scorer_seed: Option<PathBuf>,
        #[arg(long)]
        retention: Option<f64>,
    },
    /// Group interactions, segment and pack into fixed-budget sequences.
    Pack {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        threshold: Option<usize>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Packing units the segment offsets refer to.
        #[arg(long)]
        units: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Search domain mixture weights with a fitted surrogate.
    Mix {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated name=corpus.jsonl pairs.
        #[arg(long, value_delimiter = ',', required = true)]
        domains: Vec<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        search: Option<usize>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the two-step SFT datasets, statistics and training recipe.
    BuildSft {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        sns: PathBuf,
        #[arg(long)]
        general: PathBuf,
        #[arg(long)]
        r1: Option<String>,
        #[arg(long)]
        r2: Option<String>,
        /// Instruction template: default or compact.
        #[arg(long)]
        style: Option<String>,
        #[arg(long)]
        allow_replacement: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_step1: PathBuf,
        #[arg(long)]
        out_step2: PathBuf,
        #[arg(long)]
        stats: PathBuf,
        /// Training recipe manifest (default: recipe.json next to --stats).
        #[arg(long)]
        recipe: Option<PathBuf>,
        /// Rejected SNS samples with reasons.
        #[arg(long)]
        invalid: Option<PathBuf>,
    },
    /// Build preference pairs from MC samples, prediction logs and judge output.
    BuildPref {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        mc: Option<PathBuf>,
        #[arg(long)]
        pred_log: Option<PathBuf>,
        #[arg(long)]
        judged: Option<PathBuf>,
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Batch DPO + SFT objective over externally scored log-probabilities.
    DpoEval {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        coef: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score one task's predictions.
    Eval {
        #[arg(long)]
        task: String,
        /// accuracy, span_f1, bleu or chrf_pp.
        #[arg(long)]
        metric: String,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate score files into a table, or summarize a run directory.
    Report {
        /// Directory of score files written by `eval`.
        #[arg(long, conflicts_with = "run_dir", required_unless_present = "run_dir")]
        scores: Option<PathBuf>,
        #[arg(long, requires = "scores")]
        out: Option<PathBuf>,
        /// SFT stats file whose length histogram is printed under the table.
        #[arg(long, requires = "scores")]
        stats: Option<PathBuf>,
        /// Output directory of `run`.
        #[arg(long)]
        run_dir: Option<PathBuf>,
        #[arg(long, requires = "run_dir")]
        csv: Option<PathBuf>,
    },
    /// Run filter, pack, mix, build-sft, build-pref and eval in order.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(arg: &ConfigArg) -> Result<PipelineConfig> {
    Ok(match &arg.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    })
}

fn parse_domains(specs: &[String]) -> Result<Vec<(String, Vec<String>)>> {
    let mut out = Vec::new();
    for spec in specs {
        let (name, path) = spec.split_once('=').with_context(|| format!("expected name=path, got {spec:?}"))?;
        if name.is_empty() || out.iter().any(|(n, _): &(String, _)| n == name) {
            bail!("domain names must be non-empty and distinct: {name:?}");
        }
        let docs = io::read_corpus(Path::new(path))?.records;
        out.push((name.to_string(), docs.into_iter().map(|d| d.text).collect()));
    }
    Ok(out)
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Filter { config, input, out, rejects, report, verdicts, scorer_seed, retention } => {
            let mut cfg = load_config(&config)?;
            if let Some(r) = retention {
                cfg.filter.retention_target = r;
            }
            let rep = stages::filter_stage(
                &cfg.filter,
                &input,
                scorer_seed.as_deref(),
                &FilterPaths { kept: &out, rejects: rejects.as_deref(), report: &report, verdicts: verdicts.as_deref() },
            )?;
            eprintln!(
                "kept {}/{} docs, {}/{} tokens (retention {:.4})",
                rep.kept_docs, rep.input_docs, rep.kept_tokens, rep.input_tokens, rep.retention
            );
        }
        Command::Pack { config, threshold, input, out, units, report } => {
            let cfg = load_config(&config)?;
            let rep = stages::pack_stage(threshold.unwrap_or(cfg.pack.threshold), &input, &out, units.as_deref(), report.as_deref())?;
            eprintln!("{} segments in {} sequences, fill {:.4}", rep.segments, rep.sequences, rep.fill_ratio);
        }
        Command::Mix { config, domains, samples, search, top_k, seed, out } => {
            let mut cfg = load_config(&config)?;
            let m = &mut cfg.mixture;
            m.samples = samples.unwrap_or(m.samples);
            m.search = search.unwrap_or(m.search);
            m.top_k = top_k.unwrap_or(m.top_k);
            cfg.validate()?;
            let domains = parse_domains(&domains)?;
            let seed = stage_seed(seed.unwrap_or(cfg.seed), "mix");
            let outcome = stages::mix_stage(&domains, &cfg.mixture, seed, &out)?;
            for (d, w) in outcome.domains.iter().zip(&outcome.weights) {
                println!("{d}\t{w:.6}");
            }
        }
        Command::BuildSft {
            config,
            sns,
            general,
            r1,
            r2,
            style,
            allow_replacement,
            seed,
            out_step1,
            out_step2,
            stats,
            recipe,
            invalid,
        } => {
            let mut cfg = load_config(&config)?;
            let s = &mut cfg.sft;
            s.r1 = r1.unwrap_or(s.r1.clone());
            s.r2 = r2.unwrap_or(s.r2.clone());
            s.style = style.unwrap_or(s.style.clone());
            s.allow_replacement |= allow_replacement;
            let recipe = recipe.unwrap_or_else(|| stats.with_file_name("recipe.json"));
            let seed = stage_seed(seed.unwrap_or(cfg.seed), "sft");
            let built = stages::sft_stage(
                &sns,
                &general,
                &cfg.sft,
                &cfg.recipe,
                cfg.pref.dpo,
                seed,
                &SftPaths {
                    step1: &out_step1,
                    step2: &out_step2,
                    stats: &stats,
                    recipe: &recipe,
                    invalid: invalid.as_deref(),
                    plan: None,
                    histogram: None,
                },
            )?;
            eprintln!("step one {} rows, step two {} rows, {} invalid", built.step1.len(), built.step2.len(), built.invalid.len());
            print!("{}", render_histogram(&built.stats));
        }
        Command::BuildPref { config, mc, pred_log, judged, calibration, tau, out, report } => {
            let mut cfg = load_config(&config)?;
            if let Some(t) = tau {
                cfg.pref.tau = t;
            }
            cfg.validate()?;
            let rep = stages::pref_stage(&PrefPaths { mc, pred_log, judged, calibration }, &cfg.pref, &out, &report)?;
            eprintln!(
                "{} pairs (ordinal {}, error {}, judge {}), {} duplicates removed",
                rep.total_pairs, rep.emitted.ordinal, rep.emitted.error, rep.emitted.judge, rep.duplicates_removed
            );
        }
        Command::DpoEval { config, pairs, beta, coef, out } => {
            let cfg = load_config(&config)?;
            let params = DpoParams {
                beta: beta.unwrap_or(cfg.pref.dpo.beta),
                sft_loss_coef: coef.unwrap_or(cfg.pref.dpo.sft_loss_coef),
            };
            let parsed = io::read_records::<ScoredPair>(&pairs)?;
            let obj = batch_objective(&parsed.records, params)?;
            println!("{}", serde_json::to_string_pretty(&obj)?);
            if let Some(p) = out {
                io::write_json(&p, &obj)?;
            }
        }
        Command::Eval { task, metric, pred, gold, out } => {
            let metric: Metric = metric.parse()?;
            let score = stages::eval_stage(&task, metric, &pred, &gold)?;
            io::write_json(&out, &score)?;
            println!("{}\t{}\t{:.4}", score.task, score.metric, score.value);
        }
        Command::Report { scores, out, stats, run_dir, csv } => {
            if let Some(dir) = run_dir {
                let s = summary::summarize(&dir)?;
                print!("{}", s.text);
                if let Some(p) = csv {
                    std::fs::write(&p, s.to_csv()).with_context(|| format!("cannot write {}", p.display()))?;
                }
            } else if let Some(dir) = scores {
                let report = stages::aggregate_dir(&dir)?;
                print!("{}", report.render_table());
                if let Some(p) = stats {
                    let st: redforge_core::sft::CorpusStats = io::read_json(&p)?;
                    print!("\n{}", render_histogram(&st));
                }
                if let Some(p) = out {
                    io::write_json(&p, &report)?;
                }
            }
        }
        Command::Run { .. } => unreachable!("handled before dispatch"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set thread count: {e}");
            return ExitCode::from(1);
        }
    }
    if let Command::Run { config, out, seed } = cli.command {
        let opts = run::RunOptions { config, out, seed, command: std::env::args().collect() };
        return ExitCode::from(run::run_pipeline(&opts) as u8);
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(run::EXIT_CONFIG as u8)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
