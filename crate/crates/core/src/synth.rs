//! Seeded synthetic corpora for tests, benchmarks and demos.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::parser::{Origin, SourceFile, Tactic, TacticSequence, TheoremKind, TheoremRecord};
use crate::ranker::EmbeddingStore;

const TACTIC_HEADS: &[&str] = &[
    "intros",
    "apply",
    "rewrite",
    "destruct",
    "induction",
    "unfold",
    "simpl in",
    "exists",
    "eapply",
    "specialize",
    "inversion",
    "subst; apply",
];
const CLOSERS: &[&str] = &[
    "auto.",
    "lia.",
    "reflexivity.",
    "eauto.",
    "congruence.",
    "trivial.",
    "easy.",
];
const STATEMENT_WORDS: &[&str] = &[
    "forall",
    "n",
    "m",
    "x",
    "y",
    "l",
    "nat",
    "list",
    "le",
    "lt",
    "plus",
    "mult",
    "app",
    "length",
    "rev",
    "map",
    "In",
    "NoDup",
    "sorted",
    "Permutation",
    "transitive",
    "reflexive",
    "acyclic",
    "irreflexive",
    "sb",
    "rf",
    "co",
    "hb",
    "eqv_rel",
    "restr_rel",
];
const ARGS: &[&str] = &[
    "H", "H0", "H1", "IHn", "x", "y", "n", "l", "Hxy", "lemma_a", "lemma_b",
];

fn tactic<R: Rng>(rng: &mut R) -> String {
    if rng.random_bool(0.35) {
        return CLOSERS.choose(rng).unwrap().to_string();
    }
    format!(
        "{} {}.",
        TACTIC_HEADS.choose(rng).unwrap(),
        ARGS.choose(rng).unwrap()
    )
}

fn statement<R: Rng>(rng: &mut R) -> String {
    let len = rng.random_range(3..=8);
    (0..len)
        .map(|_| *STATEMENT_WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// A plain tactic list of length uniform in `3..=7` (mean 5).
pub fn linear_proof<R: Rng>(rng: &mut R) -> TacticSequence {
    let len = rng.random_range(3..=7);
    TacticSequence::new((0..len).map(|_| Tactic::plain(tactic(rng))).collect())
}

/// `n_records` records spread round-robin over `n_files` files, linear
/// proofs of mean length 5.
pub fn synthetic_corpus(n_records: usize, n_files: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n_records)
        .map(|i| {
            let file = format!("synth/f{:03}.v", i % n_files.max(1));
            let name = format!("thm_{i}");
            TheoremRecord::new(
                format!("{file}#{name}"),
                file,
                name,
                TheoremKind::Lemma,
                statement(&mut rng),
                linear_proof(&mut rng),
                Origin::Original,
            )
        })
        .collect();
    Corpus::new(records).expect("synthetic ids are unique")
}

/// Rocq source text: `per_file` lemmas per file, about a third of them with
/// a bulleted case split.
pub fn synthetic_sources(n_files: usize, per_file: usize, seed: u64) -> Vec<SourceFile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_files)
        .map(|f| {
            let mut text = format!("(* synthetic file {f} *)\nRequire Import Arith.\n\n");
            for t in 0..per_file {
                text.push_str(&format!(
                    "Lemma l{f}_{t} : {}.\nProof.\n",
                    statement(&mut rng)
                ));
                let head = rng.random_range(1..=3);
                for _ in 0..head {
                    text.push_str(&format!("  {}\n", tactic(&mut rng)));
                }
                if rng.random_bool(0.35) {
                    text.push_str("  destruct n.\n");
                    for _ in 0..2 {
                        text.push_str(&format!("  - {}\n", tactic(&mut rng)));
                        text.push_str(&format!("    {}\n", CLOSERS.choose(&mut rng).unwrap()));
                    }
                } else {
                    text.push_str(&format!("  {}\n", CLOSERS.choose(&mut rng).unwrap()));
                }
                text.push_str("Qed.\n\n");
            }
            SourceFile::new(format!("synth/s{f:02}.v"), text)
        })
        .collect()
}

fn random_word<R: Rng>(rng: &mut R, len: usize) -> String {
    (0..len)
        .map(|_| rng.random_range(b'a'..=b'z') as char)
        .collect()
}

/// Corpus whose statement similarity is decorrelated from proof similarity.
///
/// Every file holds `clusters_per_file` two-member proof clusters. The two
/// members share all but one tactic, and that tactic differs in one
/// character. Proofs of different clusters share nothing. Statements carry
/// a topic and three filler words. Member 0 of cluster `c` gets topic `c`
/// and member 1 gets topic `c + 1`, and member 1 draws its fillers from the
/// words member 0 did not use. Cluster partners therefore share no
/// statement token, and the lexically closest statement always belongs to
/// another cluster.
///
/// Also returns the one-hot cluster embedding of every record.
pub fn clustered_corpus(
    n_files: usize,
    clusters_per_file: usize,
    seed: u64,
) -> (Corpus, EmbeddingStore) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fillers: Vec<String> = (0..12).map(|_| random_word(&mut rng, 5)).collect();
    let dim = n_files * clusters_per_file;
    let mut records = Vec::new();
    let mut vectors = Vec::new();
    for f in 0..n_files {
        let file = format!("clustered/f{f:02}.v");
        let topics: Vec<Vec<String>> = (0..clusters_per_file)
            .map(|_| (0..3).map(|_| random_word(&mut rng, 6)).collect())
            .collect();
        for c in 0..clusters_per_file {
            let base: Vec<String> = (0..5)
                .map(|_| format!("apply {}.", random_word(&mut rng, 8)))
                .collect();
            let cluster = f * clusters_per_file + c;
            let mut used: Vec<&str> = Vec::new();
            for member in 0..2 {
                let mut proof = base.clone();
                if member == 1 {
                    let last = proof.last_mut().unwrap();
                    last.replace_range(6..7, "Z");
                }
                let topic = &topics[(c + member) % clusters_per_file];
                let mut words: Vec<&str> = topic.iter().map(String::as_str).collect();
                let free: Vec<&str> = fillers
                    .iter()
                    .map(String::as_str)
                    .filter(|w| !used.contains(w))
                    .collect();
                let picked: Vec<&str> = free.choose_multiple(&mut rng, 3).copied().collect();
                used.extend(&picked);
                words.extend(picked);
                let name = format!("c{c:02}_m{member}");
                let id = format!("{file}#{name}");
                let mut one_hot = vec![0.0; dim];
                one_hot[cluster] = 1.0;
                vectors.push((id.clone(), one_hot));
                records.push(TheoremRecord::new(
                    id,
                    file.clone(),
                    name,
                    TheoremKind::Lemma,
                    words.join(" "),
                    TacticSequence::from_texts(&proof),
                    Origin::Original,
                ));
            }
        }
    }
    let corpus = Corpus::new(records).expect("unique ids");
    let store = EmbeddingStore::new(dim, vectors).expect("one-hot vectors are unit");
    (corpus, store)
}
