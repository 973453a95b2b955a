//! The dataset directory and embedding store as an external trainer sees
//! them: plain JSON, no crate types on the reading side.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde_json::Value;
use sha2::{Digest, Sha256};

use proofrank_core::synth::synthetic_sources;
use proofrank_core::*;

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn exported() -> (tempfile::TempDir, Corpus, PairSet) {
    let mut corpus = Corpus::from_sources(&synthetic_sources(5, 6, 21)).unwrap();
    corpus.mine(MiningMode::Subproofs, None).unwrap();
    let config = MiningConfig {
        seed: 9,
        ..Default::default()
    };
    let pairs = mine_pairs(&corpus, &config).unwrap();
    let (splits, _) = split_by_file(&corpus, &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_dataset(&corpus, &pairs, &splits, &config, dir.path()).unwrap();
    (dir, corpus, pairs)
}

#[test]
fn corpus_files_follow_the_record_schema() {
    let (dir, corpus, _) = exported();
    let mut n = 0;
    let mut ids = BTreeSet::new();
    for entry in fs::read_dir(dir.path().join("corpus")).unwrap() {
        let records = read_json(&entry.unwrap().path());
        for r in records.as_array().unwrap() {
            let keys: BTreeSet<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
            assert_eq!(
                keys,
                BTreeSet::from([
                    "id",
                    "file",
                    "name",
                    "kind",
                    "statement",
                    "proof",
                    "origin",
                    "has_goal_selectors"
                ])
            );
            assert!(r["proof"].as_array().unwrap().iter().all(Value::is_string));
            ids.insert(r["id"].as_str().unwrap().to_string());
            n += 1;
        }
    }
    assert_eq!(n, corpus.len());
    assert_eq!(ids.len(), n);
}

#[test]
fn pairs_adjacency_and_splits_agree() {
    let (dir, corpus, pairs) = exported();
    let text = fs::read_to_string(dir.path().join("pairs.jsonl")).unwrap();
    let mut by_anchor: BTreeMap<String, BTreeMap<String, BTreeSet<String>>> = BTreeMap::new();
    let mut n = 0;
    for line in text.lines() {
        let p: Value = serde_json::from_str(line).unwrap();
        let (l, r) = (p["left"].as_str().unwrap(), p["right"].as_str().unwrap());
        assert!(l < r, "{l} / {r}");
        assert!(corpus.get(l).is_some() && corpus.get(r).is_some());
        let d = p["distance"].as_f64().unwrap();
        let label = p["label"].as_str().unwrap();
        match label {
            "positive" => assert!(d < 0.3),
            "negative" => assert!(d > 0.65),
            "hard_negative" => assert!((0.45..=0.65).contains(&d)),
            other => panic!("unexpected label {other}"),
        }
        for (a, b) in [(l, r), (r, l)] {
            by_anchor
                .entry(a.to_string())
                .or_default()
                .entry(label.to_string())
                .or_default()
                .insert(b.to_string());
        }
        n += 1;
    }
    assert_eq!(n, pairs.labeled.len());

    let adjacency = read_json(&dir.path().join("adjacency.json"));
    for (anchor, groups) in adjacency.as_object().unwrap() {
        for (label, members) in groups.as_object().unwrap() {
            let got: BTreeSet<String> = members
                .as_array()
                .unwrap()
                .iter()
                .map(|m| m.as_str().unwrap().to_string())
                .collect();
            let want = by_anchor
                .get(anchor)
                .and_then(|g| g.get(label))
                .cloned()
                .unwrap_or_default();
            assert_eq!(got, want, "{anchor} {label}");
        }
    }

    let splits = read_json(&dir.path().join("splits.json"));
    let mut files = BTreeSet::new();
    for key in ["train", "val", "test"] {
        for f in splits[key].as_array().unwrap() {
            assert!(files.insert(f.as_str().unwrap().to_string()));
        }
    }
    let corpus_files: BTreeSet<String> = corpus.files().into_iter().map(str::to_string).collect();
    assert_eq!(files, corpus_files);
}

#[test]
fn manifest_hash_is_recomputable() {
    let (dir, corpus, pairs) = exported();
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["n_records"], corpus.len());
    assert_eq!(manifest["n_pairs"], pairs.n_pairs);
    assert_eq!(manifest["config"]["seed"], 9);

    let mut names = Vec::new();
    for entry in walk(dir.path()) {
        let rel = entry
            .strip_prefix(dir.path())
            .unwrap()
            .to_str()
            .unwrap()
            .replace('\\', "/");
        if rel != "manifest.json" {
            names.push(rel);
        }
    }
    names.sort();
    let mut h = Sha256::new();
    for name in &names {
        h.update(name.as_bytes());
        h.update([0]);
        h.update(fs::read(dir.path().join(name)).unwrap());
        h.update([0]);
    }
    assert_eq!(manifest["hash"], hex::encode(h.finalize()));
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

#[test]
fn externally_written_store_drives_the_ranker() {
    let (_dir, corpus, _) = exported();
    let dim = 3;
    let mut lines = vec![format!(
        "{{\"dim\": {dim}, \"count\": {}}}",
        corpus.len() + 1
    )];
    for (i, r) in corpus.records().iter().enumerate() {
        let mut v = [0.0; 3];
        v[i % 3] = 1.0;
        lines.push(serde_json::json!({"id": r.id, "vector": v}).to_string());
    }
    let query = "forall n m, le n m";
    lines.push(
        serde_json::json!({"id": statement_key(query), "vector": [0.0, 0.6, 0.8]}).to_string(),
    );
    let file = tempfile::NamedTempFile::new().unwrap();
    fs::write(file.path(), lines.join("\n") + "\n").unwrap();

    let store = Arc::new(load_embeddings(file.path()).unwrap());
    assert_eq!(store.len(), corpus.len() + 1);
    let scorer = EmbeddingScorer::new(store);
    let pool: Vec<&TheoremRecord> = corpus.records().iter().collect();
    let ranked = top_k(&scorer, &Target::from_statement(query), &pool, 5).unwrap();
    assert!((ranked[0].score - 0.8).abs() < 1e-12);
    let top = corpus.position(&ranked[0].record_id).unwrap();
    assert_eq!(top % 3, 2);
}
