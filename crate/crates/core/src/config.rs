//! Pipeline configuration loaded from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::Metric;
use crate::filter::FilterConfig;
use crate::mixture::MixtureConfig;
use crate::pack::PackConfig;
use crate::pref::PrefConfig;
use crate::sft::SftConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid TOML: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid [{section}]: {message}")]
    Invalid { section: &'static str, message: String },
}

fn invalid(section: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { section, message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CptRecipe {
    pub seq_len: usize,
    pub learning_rate: f64,
    pub epochs: u32,
}

impl Default for CptRecipe {
    fn default() -> Self {
        CptRecipe { seq_len: 4096, learning_rate: 1e-5, epochs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SftRecipe {
    pub seq_len: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub warmup_ratio: f64,
    pub epochs_step1: u32,
    pub epochs_step2: u32,
}

impl Default for SftRecipe {
    fn default() -> Self {
        SftRecipe { seq_len: 16384, learning_rate: 3e-6, batch_size: 128, warmup_ratio: 0.1, epochs_step1: 3, epochs_step2: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoRecipe {
    pub seq_len: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: u32,
}

impl Default for PoRecipe {
    fn default() -> Self {
        PoRecipe { seq_len: 4096, learning_rate: 1e-7, batch_size: 64, epochs: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerRecipe {
    pub name: String,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerRecipe {
    fn default() -> Self {
        OptimizerRecipe { name: "adamw".into(), beta1: 0.9, beta2: 0.95, epsilon: 1e-8 }
    }
}

/// Training hyperparameters, emitted as a manifest for an external trainer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingRecipe {
    pub cpt: CptRecipe,
    pub sft: SftRecipe,
    pub po: PoRecipe,
    pub optimizer: OptimizerRecipe,
}

impl TrainingRecipe {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, len) in [("cpt", self.cpt.seq_len), ("sft", self.sft.seq_len), ("po", self.po.seq_len)] {
            if len == 0 {
                return Err(invalid("recipe", format!("{name}.seq_len must be positive")));
            }
        }
        for (name, lr) in [("cpt", self.cpt.learning_rate), ("sft", self.sft.learning_rate), ("po", self.po.learning_rate)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(invalid("recipe", format!("{name}.learning_rate must be positive, got {lr}")));
            }
        }
        if !(0.0..1.0).contains(&self.sft.warmup_ratio) {
            return Err(invalid("recipe", format!("sft.warmup_ratio must be in [0, 1), got {}", self.sft.warmup_ratio)));
        }
        let o = &self.optimizer;
        if !((0.0..1.0).contains(&o.beta1) && (0.0..1.0).contains(&o.beta2) && o.epsilon > 0.0) {
            return Err(invalid("recipe", "optimizer betas must be in [0, 1) and epsilon positive"));
        }
        Ok(())
    }
}

/// One benchmark task scored during a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalTask {
    pub task: String,
    pub metric: Metric,
    pub pred: PathBuf,
    pub gold: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub tasks: Vec<EvalTask>,
}

/// Input files for `run`. Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunInputs {
    pub corpus: Option<PathBuf>,
    /// Optional separate corpus for training the quality scorer.
    pub scorer_seed: Option<PathBuf>,
    pub sft_sns: Option<PathBuf>,
    pub sft_general: Option<PathBuf>,
    pub pref_mc: Option<PathBuf>,
    pub pred_log: Option<PathBuf>,
    pub judged: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub filter: FilterConfig,
    pub pack: PackConfig,
    pub mixture: MixtureConfig,
    pub sft: SftConfig,
    pub pref: PrefConfig,
    pub eval: EvalConfig,
    pub recipe: TrainingRecipe,
    pub run: RunInputs,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            filter: FilterConfig::default(),
            pack: PackConfig::default(),
            mixture: MixtureConfig::default(),
            sft: SftConfig::default(),
            pref: PrefConfig::default(),
            eval: EvalConfig::default(),
            recipe: TrainingRecipe::default(),
            run: RunInputs::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a config file, resolving relative input paths
    /// against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let r = &mut self.run;
        for p in [
            &mut r.corpus,
            &mut r.scorer_seed,
            &mut r.sft_sns,
            &mut r.sft_general,
            &mut r.pref_mc,
            &mut r.pred_log,
            &mut r.judged,
            &mut r.calibration,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        for t in &mut self.eval.tasks {
            fix(&mut t.pred);
            fix(&mut t.gold);
        }
    }

    pub fn dpo_beta(&self) -> f64 {
        self.pref.dpo.beta
    }

    pub fn sft_loss_coef(&self) -> f64 {
        self.pref.dpo.sft_loss_coef
    }

    /// Checks parameters that can be validated without reading any data.
    /// SFT mixing ratios are checked by the SFT stage itself.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.filter.validate().map_err(|e| invalid("filter", e.to_string()))?;
        if self.pack.threshold == 0 {
            return Err(invalid("pack", "threshold must be positive"));
        }
        let m = &self.mixture;
        if !(m.alpha > 0.0 && m.alpha.is_finite()) {
            return Err(invalid("mixture", format!("alpha must be positive, got {}", m.alpha)));
        }
        if !(m.ridge > 0.0 && m.ridge.is_finite()) {
            return Err(invalid("mixture", format!("ridge must be positive, got {}", m.ridge)));
        }
        if m.samples == 0 || m.top_k == 0 || m.top_k > m.search {
            return Err(invalid("mixture", "need samples >= 1 and search >= top_k >= 1"));
        }
        if !(0.0..1.0).contains(&m.prune_epsilon) {
            return Err(invalid("mixture", format!("prune_epsilon must be in [0, 1), got {}", m.prune_epsilon)));
        }
        if m.proxy_order == 0 || m.holdout_stride < 2 || m.proxy_smoothing_k.is_nan() || m.proxy_smoothing_k <= 0.0 {
            return Err(invalid("mixture", "proxy_order >= 1, holdout_stride >= 2 and proxy_smoothing_k > 0 required"));
        }
        if !(0.0..=1.0).contains(&self.pref.tau) {
            return Err(invalid("pref", format!("tau must be in [0, 1], got {}", self.pref.tau)));
        }
        self.pref.dpo.validate().map_err(|e| invalid("pref", e.to_string()))?;
        if self.sft.max_len == 0 {
            return Err(invalid("sft", "max_len must be positive"));
        }
        self.recipe.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_recipe() {
        let c = PipelineConfig::default();
        assert_eq!(c.recipe.cpt.seq_len, 4096);
        assert_eq!(c.recipe.sft.seq_len, 16384);
        assert_eq!(c.recipe.po.seq_len, 4096);
        assert_eq!(c.dpo_beta(), 0.1);
        assert_eq!(c.sft_loss_coef(), 0.3);
        assert_eq!((c.recipe.cpt.epochs, c.recipe.sft.epochs_step1, c.recipe.sft.epochs_step2, c.recipe.po.epochs), (1, 3, 2, 2));
        assert_eq!((c.recipe.sft.batch_size, c.recipe.po.batch_size), (128, 64));
        assert_eq!(c.recipe.sft.warmup_ratio, 0.1);
        assert_eq!((c.recipe.cpt.learning_rate, c.recipe.sft.learning_rate, c.recipe.po.learning_rate), (1e-5, 3e-6, 1e-7));
        assert_eq!((c.recipe.optimizer.beta1, c.recipe.optimizer.beta2, c.recipe.optimizer.epsilon), (0.9, 0.95, 1e-8));
        c.validate().unwrap();
    }

    #[test]
    fn empty_toml_is_default() {
        assert_eq!(PipelineConfig::from_toml_str("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn partial_sections() {
        let c = PipelineConfig::from_toml_str(
            "seed = 11\n[filter]\nretention_target = 0.5\n[sft]\nr1 = \"1:2\"\n[pref.dpo]\nbeta = 0.2\n",
        )
        .unwrap();
        assert_eq!(c.seed, 11);
        assert_eq!(c.filter.retention_target, 0.5);
        assert_eq!(c.filter.min_tokens, 10);
        assert_eq!(c.sft.r1, "1:2");
        assert_eq!(c.dpo_beta(), 0.2);
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            "[mixture]\nalpha = 0.0",
            "[mixture]\ntop_k = 10\nsearch = 5",
            "[pack]\nthreshold = 0",
            "[pref]\ntau = 1.5",
            "[pref.dpo]\nbeta = -1.0",
            "[recipe.cpt]\nseq_len = 0",
            "[filter]\nretention_target = 0.0",
            "[unknown]\nx = 1",
            "[filter]\nbogus = 1",
        ] {
            assert!(PipelineConfig::from_toml_str(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn eval_tasks_and_paths() {
        let c = PipelineConfig::from_toml_str(
            "[run]\ncorpus = \"docs.jsonl\"\n[[eval.tasks]]\ntask = \"Note Taxonomy\"\nmetric = \"accuracy\"\npred = \"p.jsonl\"\ngold = \"/abs/g.jsonl\"\n",
        )
        .unwrap();
        let mut c2 = c.clone();
        c2.resolve_paths(Path::new("/base"));
        assert_eq!(c2.run.corpus.unwrap(), Path::new("/base/docs.jsonl"));
        assert_eq!(c2.eval.tasks[0].pred, Path::new("/base/p.jsonl"));
        assert_eq!(c2.eval.tasks[0].gold, Path::new("/abs/g.jsonl"));
        assert_eq!(c.eval.tasks[0].metric, Metric::Accuracy);
    }
}
