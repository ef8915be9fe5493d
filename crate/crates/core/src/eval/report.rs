use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{bleu, corpus_chrf_pp, corpus_span_f1, mc_accuracy};
use super::EvalError;
use crate::numeric::mean;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    SpanF1,
    Bleu,
    ChrfPp,
}

/// Which averaged column a score belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Sns,
    Trans,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::SpanF1 => "span_f1",
            Metric::Bleu => "bleu",
            Metric::ChrfPp => "chrf_pp",
        }
    }

    /// Translation metrics feed the translation average; the rest the SNS average.
    pub fn suite(self) -> Suite {
        match self {
            Metric::Bleu | Metric::ChrfPp => Suite::Trans,
            Metric::Accuracy | Metric::SpanF1 => Suite::Sns,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accuracy" => Ok(Metric::Accuracy),
            "span_f1" => Ok(Metric::SpanF1),
            "bleu" => Ok(Metric::Bleu),
            "chrf_pp" | "chrf++" => Ok(Metric::ChrfPp),
            other => Err(EvalError::UnknownMetric(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalScore {
    pub task: String,
    pub metric: Metric,
    pub value: f64,
}

impl EvalScore {
    pub fn new(task: impl Into<String>, metric: Metric, value: f64) -> Result<Self, EvalError> {
        let s = EvalScore { task: task.into(), metric, value };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<(), EvalError> {
        if (0.0..=100.0).contains(&self.value) {
            Ok(())
        } else {
            Err(EvalError::OutOfRange { task: self.task.clone(), value: self.value })
        }
    }
}

impl crate::jsonl::Record for EvalScore {
    fn validate(&self) -> Result<(), String> {
        self.check().map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub scores: Vec<EvalScore>,
    /// Unweighted mean of the SNS task scores, `None` when there are none.
    pub sns_avg: Option<f64>,
    /// Unweighted mean of the translation scores, `None` when there are none.
    pub trans_avg: Option<f64>,
}

/// Rounds to two decimals for display.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn fmt_avg(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.2}", round2(x)))
}

impl BenchmarkReport {
    /// Plain-text table: one row per task followed by the two averages.
    pub fn render_table(&self) -> String {
        let width = self.scores.iter().map(|s| s.task.chars().count()).max().unwrap_or(4).max(8);
        let mut out = format!("{:<width$}  {:<8}  {:>6}\n", "task", "metric", "score");
        for s in &self.scores {
            out.push_str(&format!("{:<width$}  {:<8}  {:>6.2}\n", s.task, s.metric.as_str(), round2(s.value)));
        }
        out.push_str(&format!("{:<width$}  {:<8}  {:>6}\n", "SNS avg", "", fmt_avg(self.sns_avg)));
        out.push_str(&format!("{:<width$}  {:<8}  {:>6}\n", "Trans avg", "", fmt_avg(self.trans_avg)));
        out
    }
}

/// Groups scores into the SNS and translation columns and averages each.
/// Averages are kept at full precision with compensated summation.
pub fn aggregate_report(scores: &[EvalScore]) -> Result<BenchmarkReport, EvalError> {
    let mut seen = HashSet::new();
    for s in scores {
        s.check()?;
        if !seen.insert(s.task.as_str()) {
            return Err(EvalError::DuplicateTask(s.task.clone()));
        }
    }
    let column = |suite: Suite| -> Vec<f64> {
        scores.iter().filter(|s| s.metric.suite() == suite).map(|s| s.value).collect()
    };
    Ok(BenchmarkReport {
        scores: scores.to_vec(),
        sns_avg: mean(&column(Suite::Sns)),
        trans_avg: mean(&column(Suite::Trans)),
    })
}

/// Scores aligned predictions against references with the given metric.
pub fn score_task<S: AsRef<str> + Sync>(
    task: &str,
    metric: Metric,
    preds: &[S],
    golds: &[S],
) -> Result<EvalScore, EvalError> {
    let value = match metric {
        Metric::Accuracy => mc_accuracy(preds, golds)?,
        Metric::SpanF1 => corpus_span_f1(preds, golds)?,
        Metric::Bleu => bleu(preds, golds)?,
        Metric::ChrfPp => corpus_chrf_pp(preds, golds)?,
    };
    EvalScore::new(task, metric, value)
}
