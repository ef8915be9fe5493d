use std::fs;

use redforge_core::jsonl::{parse_corpus, parse_jsonl, write_jsonl, JsonlError};
use redforge_core::{Document, PreferencePair, TaskSample};

const DOCS: &str = r#"{"id":"a","source":"sns","domain":"notes","text":"hello world","interactions":{"parent_id":null,"likes":1}}
{"id":"b","source":"sns","domain":"notes","text":"a reply","interactions":{"parent_id":"a","likes":0}}
{"id":"c","source":"general","domain":"web","text":"你好 world","interactions":null}
"#;

#[test]
fn valid_file_round_trips_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("docs.jsonl");
    fs::write(&path, DOCS).unwrap();
    let parsed = parse_corpus(&path).unwrap();
    assert_eq!(parsed.records.len(), 3);
    assert!(parsed.is_clean());
    assert_eq!(parsed.records[2].token_count(), 3);

    let out = dir.path().join("out.jsonl");
    write_jsonl(&out, &parsed.records).unwrap();
    assert_eq!(fs::read_to_string(&out).unwrap(), DOCS);
}

#[test]
fn bad_lines_are_reported_with_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("docs.jsonl");
    let text = format!(
        "{}{}\n{}\n{}\n",
        DOCS,
        r#"{"source":"sns","domain":"x","text":"no id"}"#,
        r#"{"id":"e","source":"forum","domain":"x","text":"bad enum"}"#,
        r#"{"id":"a","source":"general","domain":"x","text":"duplicate id"}"#,
    );
    fs::write(&path, text).unwrap();
    let parsed = parse_corpus(&path).unwrap();
    assert_eq!(parsed.records.len(), 3);
    let lines: Vec<usize> = parsed.errors.iter().map(|e| e.line).collect();
    assert_eq!(lines, [4, 5, 6]);
    assert!(parsed.errors[2].message.contains("duplicate"));
}

#[test]
fn empty_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let parsed = parse_jsonl::<TaskSample>(&empty).unwrap();
    assert!(parsed.records.is_empty() && parsed.errors.is_empty());
    assert!(matches!(parse_jsonl::<Document>(&dir.path().join("missing.jsonl")), Err(JsonlError::Read { .. })));
}

#[test]
fn schema_invariants_enforced_per_line() {
    let text = concat!(
        r#"{"id":"g","source":"general","domain":"web","text":"t","interactions":{"parent_id":null,"likes":2}}"#,
        "\n",
        r#"{"task":"Note Taxonomy","capability":"content_understanding","format":"multiple_choice","prompt":"p","options":["a"],"answer":"a"}"#,
        "\n",
        r#"{"prompt":"p","chosen":"x","rejected":"x","strategy":"ordinal","source_id":"s"}"#,
        "\n",
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mixed.jsonl");
    fs::write(&path, text).unwrap();
    assert_eq!(parse_jsonl::<Document>(&path).unwrap().errors.iter().filter(|e| e.line == 1).count(), 1);
    let pairs = parse_jsonl::<PreferencePair>(&path).unwrap();
    assert!(pairs.records.is_empty());
    assert_eq!(pairs.errors.len(), 3);
}
