//! Human-readable summary of a run directory.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use redforge_core::eval::{round2, BenchmarkReport};
use redforge_core::filter::FilterReport;
use redforge_core::mixture::MixtureOutcome;
use redforge_core::pack::PackReport;
use redforge_core::pref::PrefReport;
use redforge_core::sft::{render_histogram, CorpusStats};

use crate::io::read_json;

/// Files read by the summary, relative to the run directory.
pub const SUMMARY_FILES: [&str; 6] = [
    "filter/report.json",
    "pack/report.json",
    "mix/mixture.json",
    "sft/stats.json",
    "pref/pref_report.json",
    "eval/report.json",
];

pub struct Summary {
    pub text: String,
    /// (section, key, value) rows for CSV output.
    pub rows: Vec<(String, String, String)>,
}

impl Summary {
    fn section(&mut self, title: &str) {
        if !self.text.is_empty() {
            self.text.push('\n');
        }
        let _ = writeln!(self.text, "== {title} ==");
    }

    fn kv(&mut self, section: &str, key: &str, value: impl ToString) {
        let value = value.to_string();
        let _ = writeln!(self.text, "{key:<22} {value}");
        self.rows.push((section.to_string(), key.to_string(), value));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,key,value\n");
        for (s, k, v) in &self.rows {
            let _ = writeln!(out, "{},{},{}", csv_field(s), csv_field(k), csv_field(v));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{:.2}", round2(x)))
}

pub fn summarize(run_dir: &Path) -> Result<Summary> {
    let missing: Vec<&str> = SUMMARY_FILES.iter().copied().filter(|f| !run_dir.join(f).is_file()).collect();
    if !missing.is_empty() {
        bail!("missing {} of {} summary files in {}:\n  {}", missing.len(), SUMMARY_FILES.len(), run_dir.display(), missing.join("\n  "));
    }
    let filter: FilterReport = read_json(&run_dir.join(SUMMARY_FILES[0]))?;
    let pack: PackReport = read_json(&run_dir.join(SUMMARY_FILES[1]))?;
    let mix: MixtureOutcome = read_json(&run_dir.join(SUMMARY_FILES[2]))?;
    let stats: CorpusStats = read_json(&run_dir.join(SUMMARY_FILES[3]))?;
    let pref: PrefReport = read_json(&run_dir.join(SUMMARY_FILES[4]))?;
    let bench: BenchmarkReport = read_json(&run_dir.join(SUMMARY_FILES[5]))?;

    let mut s = Summary { text: String::new(), rows: Vec::new() };

    s.section("Filter retention");
    s.kv("filter", "input_docs", filter.input_docs);
    s.kv("filter", "input_tokens", filter.input_tokens);
    s.kv("filter", "kept_docs", filter.kept_docs);
    s.kv("filter", "kept_tokens", filter.kept_tokens);
    s.kv("filter", "retention", format!("{:.4}", filter.retention));
    let h = &filter.rule_hits;
    s.kv("filter", "rule_hits", format!("html={} repetition={} too_short={} too_long={}", h.html, h.repetition, h.too_short, h.too_long));

    s.section("Packing");
    s.kv("pack", "threshold", pack.threshold);
    s.kv("pack", "groups", pack.groups);
    s.kv("pack", "orphans", pack.orphans);
    s.kv("pack", "segments", pack.segments);
    s.kv("pack", "sequences", pack.sequences);
    s.kv("pack", "total_tokens", pack.total_tokens);
    s.kv("pack", "fill_ratio", format!("{:.4}", pack.fill_ratio));

    s.section("Mixture weights");
    for (d, w) in mix.domains.iter().zip(&mix.weights) {
        s.kv("mixture", d, format!("{w:.4}"));
    }
    if !mix.dropped.is_empty() {
        s.kv("mixture", "dropped", mix.dropped.join(" "));
    }
    s.kv("mixture", "predicted_loss", format!("{:.6}", mix.predicted_loss));

    s.section("SFT token lengths");
    s.kv("sft", "samples", stats.n_samples);
    s.kv("sft", "median_tokens", stats.median_tokens);
    s.kv("sft", "p95_tokens", stats.p95_tokens);
    s.kv("sft", "max_tokens", stats.max_tokens);
    s.kv("sft", "clipped", format!("{} (max_len {})", stats.clipped, stats.max_len));
    s.text.push_str(&render_histogram(&stats));

    s.section("Preference pairs");
    s.kv("pref", "ordinal", pref.emitted.ordinal);
    s.kv("pref", "error", pref.emitted.error);
    s.kv("pref", "judge", pref.emitted.judge);
    s.kv("pref", "total", pref.total_pairs);
    s.kv("pref", "duplicates_removed", pref.duplicates_removed);
    s.kv("pref", "judge_agreement", pref.judge_agreement.map_or_else(|| "-".into(), |a| format!("{a:.4}")));
    s.kv("pref", "judge_admitted", pref.judge_admitted);

    s.section("Benchmark averages");
    s.kv("benchmark", "tasks", bench.scores.len());
    s.kv("benchmark", "sns_avg", opt(bench.sns_avg));
    s.kv("benchmark", "trans_avg", opt(bench.trans_avg));
    Ok(s)
}
