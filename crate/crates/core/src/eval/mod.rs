//! Benchmark metrics and table-style report aggregation.

mod metrics;
mod report;

pub use metrics::{
    bleu, chrf_pp, corpus_chrf_pp, corpus_span_f1, mc_accuracy, span_f1, BleuStats, BLEU_MAX_ORDER,
    BLEU_SMOOTHING_EPSILON, CHRF_BETA, CHRF_CHAR_ORDER, CHRF_WORD_ORDER,
};
pub use report::{aggregate_report, round2, score_task, BenchmarkReport, EvalScore, Metric, Suite};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions ({preds}) and references ({golds}) differ in length")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("nothing to score")]
    Empty,
    #[error("task {0:?} appears more than once")]
    DuplicateTask(String),
    #[error("score {value} for task {task:?} is outside [0, 100]")]
    OutOfRange { task: String, value: f64 },
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}
