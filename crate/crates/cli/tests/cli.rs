use std::path::Path;
use std::process::{Command, Output};

const SPLIT_THM: &str = "Theorem test : forall n : nat, n = 0 \\/ n <> 0.
Proof.
    intros n.
    destruct n.
    - left; auto.
    - right; auto.
Qed.

Lemma eq_trans (A : Type) : forall (x y z : A), x = y -> y = z -> x = z.
Proof.
    intros x y z Hxy Hyz.
    rewrite Hxy.
    rewrite Hyz.
    reflexivity.
Qed.
";

const EQ_SYM: &str = "Lemma eq_sym (A : Type) : forall (x y : A), x = y -> y = x.
Proof.
    intros x y H.
    rewrite H.
    reflexivity.
Qed.

Lemma zero_plus : forall n, 0 + n = n.
Proof.
    intros n.
    reflexivity.
Qed.
";

const LISTS: &str = "Lemma app_nil : forall (l : list nat), l ++ nil = l.
Proof.
    induction l.
    - reflexivity.
    - simpl. rewrite IHl. reflexivity.
Qed.
";

fn proofrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proofrank"))
        .args(args)
        .env_remove("PROOFRANK_CORPUS")
        .env("PROOFRANK_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn sources(dir: &Path) {
    std::fs::create_dir_all(dir.join("sub")).unwrap();
    std::fs::write(dir.join("branching.v"), SPLIT_THM).unwrap();
    std::fs::write(dir.join("eq.v"), EQ_SYM).unwrap();
    std::fs::write(dir.join("sub/lists.v"), LISTS).unwrap();
    std::fs::write(dir.join("notes.txt"), "ignored").unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn parse_mine_pairs_correlate_rank() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    sources(&src);
    let corpus = tmp.path().join("corpus");

    let v = json(&proofrank(&["parse", s(&src), "--out", s(&corpus)]));
    assert_eq!(v["files"], 3);
    assert_eq!(v["records"], 5);
    assert!(corpus.join("sub__lists.v.json").exists());

    let mined = tmp.path().join("mined");
    let v = json(&proofrank(&[
        "mine",
        "--corpus",
        s(&corpus),
        "--out",
        s(&mined),
    ]));
    assert_eq!(v["n_theorems"], 5);
    let n_mined = v["n_mined"].as_u64().unwrap();
    assert!(n_mined >= 5);

    let v = json(&proofrank(&[
        "mine",
        "--corpus",
        s(&corpus),
        "--mode",
        "after-k",
        "--k",
        "2",
    ]));
    assert_eq!(v["n_theorems"], 5);

    let dataset = tmp.path().join("dataset");
    let v = json(&proofrank(&[
        "pairs",
        "--corpus",
        s(&mined),
        "--out",
        s(&dataset),
        "--seed",
        "4",
    ]));
    let n = 5 + n_mined;
    assert_eq!(v["n_pairs"].as_u64().unwrap(), n * (n - 1) / 2);
    for f in [
        "pairs.jsonl",
        "splits.json",
        "adjacency.json",
        "manifest.json",
    ] {
        assert!(dataset.join(f).exists(), "{f} missing");
    }

    let v = json(&proofrank(&["correlate", "--corpus", s(&mined), "--json"]));
    assert_eq!(v["statement_metric_name"], "jaccard");
    let table = proofrank(&["correlate", "--corpus", s(&src), "--scorer", "bm25"]);
    assert!(table.status.success());
    assert!(String::from_utf8_lossy(&table.stdout).contains("pearson r"));

    let v = json(&proofrank(&[
        "rank",
        "--corpus",
        s(&corpus),
        "--statement",
        "forall (x y : A), x = y -> y = x",
        "--k",
        "2",
    ]));
    assert_eq!(v[0]["name"], "eq_sym");
    assert_eq!(v.as_array().unwrap().len(), 2);

    let v = json(&proofrank(&[
        "rank",
        "--corpus",
        s(&mined),
        "--evaluate",
        "--scorer",
        "bm25",
    ]));
    assert_eq!(v["k"], 7);
    assert_eq!(v["scorer"], "bm25");
}

#[test]
fn environment_aliases_supply_flags() {
    let tmp = tempfile::tempdir().unwrap();
    sources(tmp.path());
    let out = Command::new(env!("CARGO_BIN_EXE_proofrank"))
        .args(["rank", "--statement", "0 + n = n"])
        .env("PROOFRANK_CORPUS", tmp.path())
        .env("PROOFRANK_K", "1")
        .env("PROOFRANK_SCORER", "bm25")
        .output()
        .unwrap();
    let v = json(&out);
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["name"], "zero_plus");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(proofrank(&[]).status.code(), Some(2));
    assert_eq!(proofrank(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        proofrank(&["parse", "/no/such/path"]).status.code(),
        Some(2)
    );
    assert_eq!(
        proofrank(&["mine", "--corpus", s(tmp.path()), "--mode", "after-k"])
            .status
            .code(),
        Some(2)
    );

    // A directory without theorems is a data error.
    std::fs::write(tmp.path().join("empty.v"), "(* nothing here *)").unwrap();
    assert_eq!(proofrank(&["parse", s(tmp.path())]).status.code(), Some(3));
    assert_eq!(
        proofrank(&["correlate", "--corpus", s(tmp.path())])
            .status
            .code(),
        Some(3)
    );

    let src = tmp.path().join("src");
    sources(&src);
    let bad = tmp.path().join("bad.jsonl");
    std::fs::write(
        &bad,
        "{\"dim\": 2, \"count\": 1}\n{\"id\": \"x\", \"vector\": [2.0, 0.0]}\n",
    )
    .unwrap();
    let out = proofrank(&[
        "rank",
        "--corpus",
        s(&src),
        "--statement",
        "x",
        "--scorer",
        "embedding",
        "--embeddings",
        s(&bad),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = proofrank(&[
        "rank",
        "--corpus",
        s(&src),
        "--statement",
        "x",
        "--scorer",
        "embedding",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = proofrank(&[
        "rank",
        "--corpus",
        s(&src),
        "--statement",
        "x",
        "--file",
        "nope.v",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn pairs_rejects_invalid_config() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    sources(&src);
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"tau_pos": 0.8}"#).unwrap();
    let out = proofrank(&[
        "pairs",
        "--corpus",
        s(&src),
        "--out",
        s(&tmp.path().join("o")),
        "--config",
        s(&cfg),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
