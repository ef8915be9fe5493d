//! Regenerates the bundled toy inputs under `assets/toy/`.
//!
//!     cargo run -p redforge-cli --example gen_toy

use std::fs;
use std::path::Path;

use redforge_core::numeric::splitmix64;
use serde_json::{json, Value};

struct Rng(u64);

impl Rng {
    fn next(&mut self) -> u64 {
        self.0 = splitmix64(self.0);
        self.0
    }
    fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }
    fn chance(&mut self, p: f64) -> bool {
        ((self.next() >> 11) as f64 / (1u64 << 53) as f64) < p
    }
    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs[self.below(xs.len())]
    }
}

const NOTES: &[&str] = &[
    "skincare", "routine", "serum", "sunscreen", "outfit", "vintage", "jacket", "cafe", "latte", "brunch", "hike",
    "trail", "sunset", "camera", "lens", "recipe", "noodles", "spicy", "weekend", "market", "pottery", "studio",
    "haul", "review", "budget", "travel", "itinerary", "hotel", "beach", "city", "flowers", "plants", "desk", "setup",
];
const COMMENTS: &[&str] = &[
    "love", "this", "so", "cute", "where", "did", "you", "buy", "it", "thanks", "for", "sharing", "saved", "tried",
    "same", "wow", "need", "link", "please", "amazing", "great", "tips", "bookmarked", "agree", "totally",
];
const QA: &[&str] = &[
    "how", "should", "choose", "best", "size", "price", "shipping", "store", "color", "match", "long", "last", "wash",
    "return", "policy", "material", "cotton", "leather", "daily", "wear", "beginner", "advice", "compare", "brand",
];
const NEWS: &[&str] = &[
    "government", "announced", "policy", "economy", "growth", "quarter", "report", "market", "shares", "energy",
    "climate", "agreement", "officials", "said", "region", "infrastructure", "investment", "results", "annual",
    "committee", "election", "budget", "sector", "exports",
];
const WIKI: &[&str] = &[
    "river", "mountain", "century", "species", "located", "population", "known", "history", "founded", "architecture",
    "language", "museum", "province", "ancient", "dynasty", "composer", "painting", "island", "climate", "region",
    "university", "theory", "element", "temperature",
];
const ZH: &[&str] = &["今天", "分享", "好物", "真的", "推荐", "咖啡", "周末", "旅行", "穿搭", "护肤", "日常", "喜欢", "城市", "风景"];

fn sentence(rng: &mut Rng, vocab: &[&str], lo: usize, hi: usize) -> String {
    let n = lo + rng.below(hi - lo + 1);
    let words: Vec<&str> = (0..n).map(|_| rng.pick(vocab)).collect();
    let mut s = words.join(" ");
    if let Some(first) = s.get(..1) {
        s = first.to_uppercase() + &s[1..];
    }
    s.push(['.', '.', '!', '?'][rng.below(4)]);
    s
}

fn paragraph(rng: &mut Rng, vocab: &[&str], lo: usize, hi: usize) -> String {
    let sentences = lo + rng.below(hi - lo + 1);
    (0..sentences).map(|_| sentence(rng, vocab, 6, 12)).collect::<Vec<_>>().join(" ")
}

fn zh_paragraph(rng: &mut Rng) -> String {
    (0..3 + rng.below(3))
        .map(|_| (0..4 + rng.below(4)).map(|_| rng.pick(ZH)).collect::<String>() + "。")
        .collect()
}

fn write_lines(path: &Path, rows: &[Value]) {
    let text: String = rows.iter().map(|r| format!("{r}\n")).collect();
    fs::write(path, text).unwrap();
}

fn corpus(rng: &mut Rng) -> Vec<Value> {
    let mut docs = Vec::new();
    let mut note_ids = Vec::new();
    for i in 0..2000 {
        let kind = i % 5;
        let (id, source, domain, mut text, inter) = match kind {
            0 => {
                let id = format!("note-{i:04}");
                note_ids.push(id.clone());
                let text = if rng.chance(0.15) { zh_paragraph(rng) } else { paragraph(rng, NOTES, 3, 6) };
                (id, "sns", "notes", text, Some(json!({"parent_id": null, "likes": rng.below(500)})))
            }
            1 => {
                let parent = if note_ids.is_empty() || rng.chance(0.05) {
                    format!("note-missing-{i}")
                } else {
                    note_ids[rng.below(note_ids.len())].clone()
                };
                let vocab: Vec<&str> = COMMENTS.iter().chain(NOTES).copied().collect();
                let text = paragraph(rng, &vocab, 2, 4);
                (format!("comment-{i:04}"), "sns", "comments", text, Some(json!({"parent_id": parent, "likes": rng.below(80)})))
            }
            2 => (format!("qa-{i:04}"), "sns", "qa", paragraph(rng, QA, 2, 5), None),
            3 => (format!("news-{i:04}"), "general", "news", paragraph(rng, NEWS, 4, 8), None),
            _ => (format!("wiki-{i:04}"), "general", "wiki", paragraph(rng, WIKI, 4, 9), None),
        };
        match rng.below(40) {
            0 | 1 => text = format!("<div class=\"post\">{text}</div>"),
            2 | 3 => {
                let s = sentence(rng, NOTES, 6, 10);
                text = vec![s; 4].join(" ");
            }
            4 => text = "ok thanks".to_string(),
            _ => {}
        }
        let mut doc = json!({"id": id, "source": source, "domain": domain, "text": text});
        if let Some(m) = inter {
            doc["interactions"] = m;
        }
        docs.push(doc);
    }
    docs
}

const LABELS: &[&str] = &["food", "travel", "beauty", "fashion", "home", "tech"];

fn sns_sample(rng: &mut Rng, task: &str, capability: &str) -> Value {
    let note = paragraph(rng, NOTES, 1, 3);
    match capability {
        "content_understanding" | "semantic_matching" | "user_behavior_modeling" => {
            let mut options: Vec<String> = LABELS.iter().map(|s| s.to_string()).collect();
            options.truncate(4 + rng.below(3));
            let answer = options[rng.below(options.len())].clone();
            let mut s = json!({"task": task, "capability": capability, "format": "multiple_choice",
                "prompt": format!("Which category fits this note? {note}"), "options": options, "answer": answer});
            if rng.chance(0.6) {
                s["labels"] = json!({"primary": LABELS[rng.below(LABELS.len())], "secondary": null});
            }
            s
        }
        "information_extraction" => {
            let words: Vec<&str> = note.split_whitespace().collect();
            let answer = words[rng.below(words.len())].trim_matches(|c: char| !c.is_alphanumeric()).to_string();
            json!({"task": task, "capability": capability, "format": "extraction",
                "prompt": format!("Extract the key term. {note}"), "answer": if answer.is_empty() { "note".into() } else { answer }})
        }
        "translation" => json!({"task": task, "capability": capability, "format": "generation",
            "prompt": format!("Translate into English: {}", zh_paragraph(rng)), "answer": paragraph(rng, NOTES, 2, 2)}),
        _ => json!({"task": task, "capability": capability, "format": "generation",
            "prompt": format!("Reply to the user. {}", paragraph(rng, COMMENTS, 2, 2)),
            "answer": paragraph(rng, COMMENTS, 1, 8)}),
    }
}

const TASKS: [(&str, &str); 12] = [
    ("Note Taxonomy", "content_understanding"),
    ("Query Classification", "content_understanding"),
    ("Query Intent Recognition", "content_understanding"),
    ("Hashtag Prediction", "information_extraction"),
    ("Machine Reading Comprehension", "information_extraction"),
    ("Highlight Word Detection", "information_extraction"),
    ("Query-Note Relevance", "semantic_matching"),
    ("Query-Note Retrieval", "semantic_matching"),
    ("Post-View Search", "user_behavior_modeling"),
    ("Emotional Companion Dialogue", "dialogue"),
    ("Role-playing Dialogue", "dialogue"),
    ("SNS Domain Translation", "translation"),
];

fn eval_pair(rng: &mut Rng, n: usize, make: impl Fn(&mut Rng) -> (String, String)) -> (Vec<Value>, Vec<Value>) {
    let mut preds = Vec::new();
    let mut golds = Vec::new();
    for i in 0..n {
        let (p, g) = make(rng);
        preds.push(json!({"id": format!("{i}"), "answer": p}));
        golds.push(json!({"id": format!("{i}"), "answer": g}));
    }
    (preds, golds)
}

fn perturb(rng: &mut Rng, text: &str, vocab: &[&str], p: f64) -> String {
    text.split_whitespace().map(|w| if rng.chance(p) { rng.pick(vocab) } else { w }).collect::<Vec<_>>().join(" ")
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/toy");
    fs::create_dir_all(dir.join("eval")).unwrap();
    let mut rng = Rng(0x7ed_f0e6e);

    write_lines(&dir.join("corpus.jsonl"), &corpus(&mut rng));

    // Reference text for the quality scorer: clean SNS-style posts and replies.
    let reply_vocab: Vec<&str> = COMMENTS.iter().chain(NOTES).copied().collect();
    let seed: Vec<Value> = (0..300)
        .map(|i| {
            let text = if i % 2 == 0 { paragraph(&mut rng, NOTES, 2, 5) } else { paragraph(&mut rng, &reply_vocab, 1, 3) };
            json!({"id": format!("seed-{i:03}"), "source": "sns", "domain": "seed", "text": text})
        })
        .collect();
    write_lines(&dir.join("scorer_seed.jsonl"), &seed);

    let mut sns = Vec::new();
    for i in 0..360 {
        let (task, cap) = TASKS[i % 12];
        sns.push(sns_sample(&mut rng, task, cap));
    }
    // A few samples that fail validation and are reported, not trained on.
    sns[5]["capability"] = json!("dialogue");
    sns[12]["answer"] = json!("not an option");
    sns[29]["task"] = json!("Unlisted Task");
    write_lines(&dir.join("sft_sns.jsonl"), &sns);

    let general: Vec<Value> = (0..1500)
        .map(|_| {
            let vocab = if rng.chance(0.5) { NEWS } else { WIKI };
            json!({"instruction": sentence(&mut rng, vocab, 5, 10), "input": if rng.chance(0.3) { paragraph(&mut rng, vocab, 2, 2) } else { String::new() },
                "output": paragraph(&mut rng, vocab, 1, 12)})
        })
        .collect();
    write_lines(&dir.join("sft_general.jsonl"), &general);

    let mc: Vec<Value> = (0..100).map(|i| sns_sample(&mut rng, TASKS[i % 3].0, "content_understanding")).collect();
    write_lines(&dir.join("pref_mc.jsonl"), &mc);

    let log: Vec<Value> = (0..200)
        .map(|i| {
            let gold = LABELS[rng.below(LABELS.len())];
            let predicted = if rng.chance(0.3) { LABELS[rng.below(LABELS.len())] } else { gold };
            json!({"source_id": format!("log-{i}"), "prompt": format!("Classify: {}", sentence(&mut rng, NOTES, 6, 10)), "gold": gold, "predicted": predicted})
        })
        .collect();
    write_lines(&dir.join("pred_log.jsonl"), &log);

    let judged: Vec<Value> = (0..60)
        .map(|i| json!({"source_id": format!("judge-{i}"), "prompt": sentence(&mut rng, COMMENTS, 5, 9),
            "response_a": paragraph(&mut rng, COMMENTS, 2, 2), "response_b": paragraph(&mut rng, COMMENTS, 2, 2),
            "judge_preference": if rng.chance(0.5) { "A" } else { "B" }}))
        .collect();
    write_lines(&dir.join("judged.jsonl"), &judged);

    let calibration: Vec<Value> = (0..20)
        .map(|i| {
            let judge = if rng.chance(0.5) { "A" } else { "B" };
            let human = if i < 17 { judge } else if judge == "A" { "B" } else { "A" };
            json!({"judge": judge, "human": human})
        })
        .collect();
    write_lines(&dir.join("calibration.jsonl"), &calibration);

    let (p, g) = eval_pair(&mut rng, 50, |r| {
        let g = ["A", "B", "C", "D"][r.below(4)];
        let p = if r.chance(0.35) { ["A", "B", "C", "D"][r.below(4)] } else { g };
        (p.into(), g.into())
    });
    write_lines(&dir.join("eval/taxonomy_pred.jsonl"), &p);
    write_lines(&dir.join("eval/taxonomy_gold.jsonl"), &g);

    let (p, g) = eval_pair(&mut rng, 40, |r| {
        let g = sentence(r, NOTES, 2, 5);
        (perturb(r, &g, NOTES, 0.3), g)
    });
    write_lines(&dir.join("eval/mrc_pred.jsonl"), &p);
    write_lines(&dir.join("eval/mrc_gold.jsonl"), &g);

    let (p, g) = eval_pair(&mut rng, 40, |r| {
        let g = paragraph(r, NOTES, 2, 2);
        (perturb(r, &g, NOTES, 0.25), g)
    });
    write_lines(&dir.join("eval/trans_pred.jsonl"), &p);
    write_lines(&dir.join("eval/trans_gold.jsonl"), &g);
}
