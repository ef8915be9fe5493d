use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

fn redforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_redforge")).args(args).output().unwrap()
}

fn toy(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/toy").join(rel)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_lines(path: &Path, rows: &[Value]) {
    fs::write(path, rows.iter().map(|r| format!("{r}\n")).collect::<String>()).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Toy config with its input paths made absolute, plus extra TOML appended.
fn toy_config_with(dir: &Path, extra: &str) -> PathBuf {
    let text = fs::read_to_string(toy("config.toml")).unwrap();
    let base = toy("");
    let mut out = String::new();
    for line in text.lines() {
        match line.split_once(" = \"") {
            Some((k, v)) if v.ends_with(".jsonl\"") => out.push_str(&format!("{k} = \"{}{}\n", s(&base), v)),
            _ => {
                out.push_str(line);
                out.push('\n');
            }
        }
    }
    let mut replaced = out;
    for l in extra.lines() {
        if let Some((k, _)) = l.split_once(" = ") {
            replaced = replaced.lines().filter(|x| !x.starts_with(&format!("{k} = "))).collect::<Vec<_>>().join("\n") + "\n";
        }
    }
    let path = dir.join("config.toml");
    fs::write(&path, replaced.replacen("[sft]\n", &format!("[sft]\n{extra}\n"), 1)).unwrap();
    path
}

#[test]
fn filter_counts_html_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let rows: Vec<Value> = (0..10)
        .map(|i| {
            let body = format!("document {i} talks about rivers and bridges. It has a second sentence about lanterns {i}.");
            let text = if i < 3 { format!("<b>{body}</b>") } else { body };
            json!({"id": format!("d{i}"), "source": "general", "domain": "web", "text": text})
        })
        .collect();
    write_lines(&corpus, &rows);
    let (kept, rejects, report) = (dir.path().join("kept.jsonl"), dir.path().join("rej.jsonl"), dir.path().join("report.json"));
    let out = redforge(&["filter", "--in", s(&corpus), "--out", s(&kept), "--rejects", s(&rejects), "--report", s(&report), "--retention", "1.0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&report);
    assert_eq!(r["rule_hits"]["html"], 3);
    assert_eq!(r["kept_docs"], 7);
    assert_eq!(r["input_docs"], 10);
    let kept_lines = fs::read_to_string(&kept).unwrap().lines().count();
    let rej_lines = fs::read_to_string(&rejects).unwrap().lines().count();
    assert_eq!(kept_lines + rej_lines, 10);
}

#[test]
fn equal_ratios_fail_at_sft_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config_with(dir.path(), "r1 = \"2:1\"\nr2 = \"2:1\"");
    let out_dir = dir.path().join("out");
    let out = redforge(&["run", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(40), "{}", String::from_utf8_lossy(&out.stderr));
    for stage in ["filter", "pack", "mix"] {
        assert!(out_dir.join(stage).join("manifest.json").is_file(), "{stage} missing");
    }
    for stage in ["sft", "pref", "eval"] {
        assert!(!out_dir.join(stage).exists(), "{stage} should not be promoted");
    }
    assert!(!out_dir.join(".sft.tmp").exists());
    let m = read_json(&out_dir.join("run_manifest.json"));
    assert_eq!(m["failed_stage"], "sft");
    assert_eq!(m["exit_code"], 40);
}

#[test]
fn missing_corpus_fails_at_filter_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    fs::write(&cfg, "[run]\ncorpus = \"nope.jsonl\"\n").unwrap();
    let out = redforge(&["run", "--config", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(10));
    assert!(!dir.path().join("out/filter").exists());
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    fs::write(&cfg, "[mixture]\nalpha = -1.0\n").unwrap();
    let out = redforge(&["run", "--config", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = redforge(&["pack", "--config", s(&cfg), "--in", "x.jsonl", "--out", "y.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn toy_run_manifests_are_sound() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_redforge"))
        .env("REDFORGE_THREADS", "2")
        .args(["run", "--config", s(&toy("config.toml")), "--out", s(&out_dir)])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for stage in ["filter", "pack", "mix", "sft", "pref", "eval"] {
        let m = read_json(&out_dir.join(stage).join("manifest.json"));
        assert_eq!(m["stage"], stage);
        assert_eq!(m["seed"], 7);
        let outputs = m["outputs"].as_array().unwrap();
        assert!(!outputs.is_empty());
        for o in outputs {
            let bytes = fs::read(out_dir.join(stage).join(o["path"].as_str().unwrap())).unwrap();
            assert_eq!(hex::encode(Sha256::digest(&bytes)), o["sha256"].as_str().unwrap());
        }
    }
    let recipe = read_json(&out_dir.join("sft/recipe.json"));
    assert_eq!(recipe["recipe"]["sft"]["epochs_step1"], 3);
    assert_eq!(recipe["recipe"]["sft"]["learning_rate"], 3e-6);
    assert_eq!(recipe["dpo"]["sft_loss_coef"], 0.3);

    let csv = dir.path().join("summary.csv");
    let out = redforge(&["report", "--run-dir", s(&out_dir), "--csv", s(&csv)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for section in ["Filter retention", "Packing", "Mixture weights", "SFT token lengths", "Preference pairs", "Benchmark averages"] {
        assert!(text.contains(section), "missing {section}");
    }
    assert!(fs::read_to_string(&csv).unwrap().starts_with("section,key,value\n"));
}

fn fixture_run_dir(dir: &Path) {
    for d in ["filter", "pack", "mix", "sft", "pref", "eval"] {
        fs::create_dir_all(dir.join(d)).unwrap();
    }
    let w = |rel: &str, v: Value| fs::write(dir.join(rel), v.to_string()).unwrap();
    w("filter/report.json", json!({"input_docs": 10, "input_tokens": 1000, "kept_docs": 2, "kept_tokens": 200, "retention": 0.2,
        "rule_hits": {"html": 1, "repetition": 0, "too_short": 0, "too_long": 0}}));
    w("pack/report.json", json!({"threshold": 4096, "input_docs": 2, "groups": 2, "orphans": 0, "segments": 2, "sequences": 1,
        "total_tokens": 200, "fill_ratio": 0.05}));
    w("mix/mixture.json", json!({"domains": ["sns", "general"], "weights": [0.7, 0.3], "dropped": [], "predicted_loss": 1.5}));
    w("sft/stats.json", json!({"n_samples": 1000, "median_tokens": 345, "p95_tokens": 2342, "max_tokens": 9000, "max_len": 16384,
        "clipped": 0, "per_capability": {}, "per_task": {}, "primary_labels": {}, "secondary_labels": {},
        "histogram": [{"lo": 256, "hi": 512, "count": 600}, {"lo": 512, "hi": 1024, "count": 400}]}));
    w("pref/pref_report.json", json!({"generated": {"ordinal": 3, "error": 1, "judge": 0}, "emitted": {"ordinal": 3, "error": 1, "judge": 0},
        "duplicates_removed": 0, "total_pairs": 4, "judge_agreement": null, "judge_admitted": false, "skipped_samples": 0}));
    w("eval/report.json", json!({"scores": [{"task": "t", "metric": "accuracy", "value": 52.86}], "sns_avg": 52.86, "trans_avg": null}));
}

#[test]
fn summary_renders_length_statistics() {
    let dir = tempfile::tempdir().unwrap();
    fixture_run_dir(dir.path());
    let out = redforge(&["report", "--run-dir", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("median_tokens          345\n"), "{text}");
    assert!(text.contains("p95_tokens             2342\n"), "{text}");
    assert!(text.contains("sns_avg                52.86"));
    assert!(text.contains("retention              0.2000"));
}

#[test]
fn summary_of_empty_dir_lists_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = redforge(&["report", "--run-dir", s(dir.path())]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("missing 6 of 6"));
    for f in ["filter/report.json", "pack/report.json", "mix/mixture.json", "sft/stats.json", "pref/pref_report.json", "eval/report.json"] {
        assert!(err.contains(f), "{f} not listed");
    }
}

#[test]
fn eval_and_report_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores");
    fs::create_dir(&scores).unwrap();
    let pred = dir.path().join("p.jsonl");
    let gold = dir.path().join("g.jsonl");
    write_lines(&pred, &[json!({"id": "2", "answer": "B"}), json!({"id": "1", "answer": "A"}), json!({"id": "3", "answer": "C"}), json!({"id": "4", "answer": "A"})]);
    write_lines(&gold, &[json!({"id": "1", "answer": "A"}), json!({"id": "2", "answer": "B"}), json!({"id": "3", "answer": "C"}), json!({"id": "4", "answer": "D"})]);
    let out = redforge(&["eval", "--task", "Note Taxonomy", "--metric", "accuracy", "--pred", s(&pred), "--gold", s(&gold), "--out", s(&scores.join("a.json"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(&scores.join("a.json"))["value"], 75.0);

    let tp = dir.path().join("tp.jsonl");
    let tg = dir.path().join("tg.jsonl");
    write_lines(&tp, &[json!({"id": "x", "answer": "the cat sat on"})]);
    write_lines(&tg, &[json!({"id": "x", "answer": "the cat sat on mat"})]);
    let out = redforge(&["eval", "--task", "Trans", "--metric", "bleu", "--pred", s(&tp), "--gold", s(&tg), "--out", s(&scores.join("b.json"))]);
    assert!(out.status.success());

    let report = dir.path().join("report.json");
    let out = redforge(&["report", "--scores", s(&scores), "--out", s(&report)]);
    assert!(out.status.success());
    let r = read_json(&report);
    assert_eq!(r["sns_avg"], 75.0);
    assert!((r["trans_avg"].as_f64().unwrap() - 77.88).abs() < 0.01);
    assert!(String::from_utf8(out.stdout).unwrap().contains("SNS avg"));

    let out = redforge(&["eval", "--task", "x", "--metric", "rouge", "--pred", s(&tp), "--gold", s(&tg), "--out", s(&scores.join("c.json"))]);
    assert!(!out.status.success());
    write_lines(&tp, &[json!({"id": "y", "answer": "a"})]);
    let out = redforge(&["eval", "--task", "x", "--metric", "bleu", "--pred", s(&tp), "--gold", s(&tg), "--out", s(&scores.join("c.json"))]);
    assert!(!out.status.success());
}

#[test]
fn dpo_eval_batch_objective() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("logps.jsonl");
    write_lines(&pairs, &[
        json!({"policy_chosen": -1.0, "policy_rejected": -1.0, "ref_chosen": -1.0, "ref_rejected": -1.0, "sft_nll": 2.0}),
        json!({"policy_chosen": -3.0, "policy_rejected": -3.0, "ref_chosen": -2.0, "ref_rejected": -2.0}),
    ]);
    let out = redforge(&["dpo-eval", "--pairs", s(&pairs), "--beta", "0.1", "--coef", "0.3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["mean_dpo"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    assert!((v["mean_objective"].as_f64().unwrap() - (std::f64::consts::LN_2 + 0.3)).abs() < 1e-12);
}

#[test]
fn build_pref_and_build_sft_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.jsonl");
    let report = dir.path().join("pref.json");
    let out = redforge(&[
        "build-pref", "--mc", s(&toy("pref_mc.jsonl")), "--pred-log", s(&toy("pred_log.jsonl")), "--judged", s(&toy("judged.jsonl")),
        "--calibration", s(&toy("calibration.jsonl")), "--tau", "0.9", "--out", s(&pairs), "--report", s(&report),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&report);
    assert_eq!(r["judge_admitted"], false);
    assert_eq!(r["emitted"]["judge"], 0);
    assert_eq!(r["total_pairs"].as_u64().unwrap() as usize, fs::read_to_string(&pairs).unwrap().lines().count());

    let (s1, s2, stats) = (dir.path().join("s1.jsonl"), dir.path().join("s2.jsonl"), dir.path().join("stats.json"));
    let (sns, general) = (toy("sft_sns.jsonl"), toy("sft_general.jsonl"));
    let args = ["build-sft", "--sns", s(&sns), "--general", s(&general), "--seed", "7",
        "--out-step1", s(&s1), "--out-step2", s(&s2), "--stats", s(&stats)];
    let out = redforge(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("recipe.json").is_file());
    let first = fs::read(&s1).unwrap();
    assert!(redforge(&args).status.success());
    assert_eq!(first, fs::read(&s1).unwrap());
    let n1 = fs::read_to_string(&s1).unwrap().lines().count();
    let n2 = fs::read_to_string(&s2).unwrap().lines().count();
    assert!(n1 > n2);
}

#[test]
fn mix_and_pack_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fs::read_to_string(toy("corpus.jsonl")).unwrap();
    let (mut a, mut b) = (String::new(), String::new());
    for line in corpus.lines() {
        if line.contains("\"source\":\"sns\"") { a.push_str(line) } else { b.push_str(line) }
        if line.contains("\"source\":\"sns\"") { a.push('\n') } else { b.push('\n') }
    }
    let (pa, pb) = (dir.path().join("sns.jsonl"), dir.path().join("general.jsonl"));
    fs::write(&pa, a).unwrap();
    fs::write(&pb, b).unwrap();
    let mix = dir.path().join("mixture.json");
    let domains = format!("sns={},general={}", s(&pa), s(&pb));
    let out = redforge(&["mix", "--domains", &domains, "--samples", "64", "--search", "2000", "--top-k", "8", "--seed", "7", "--out", s(&mix)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_json(&mix);
    let sum: f64 = m["weights"].as_array().unwrap().iter().map(|w| w.as_f64().unwrap()).sum();
    assert!((sum - 1.0).abs() < 1e-9);

    let packed = dir.path().join("packed.jsonl");
    let out = redforge(&["--threads", "1", "pack", "--threshold", "256", "--in", s(&pa), "--out", s(&packed)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for line in fs::read_to_string(&packed).unwrap().lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["token_count"].as_u64().unwrap() <= 256);
    }
}
