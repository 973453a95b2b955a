//! Contrastive dataset construction: all-pairs proof distances, labels,
//! file-disjoint splits and the on-disk export.
//!
//! Distances are streamed row by row (row `i` holds the pairs `(i, j > i)`);
//! each row draws its noise from its own ChaCha stream so output does not
//! depend on scheduling.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::metrics::{
    blend, draw_noise, text_substitution_cost, weighted_levenshtein, DistanceParams, MetricsError,
};
use crate::parser::{Diagnostic, Severity, TacticSequence};

#[derive(Debug, Error)]
pub enum PairsError {
    #[error("invalid mining config: {0}")]
    InvalidConfig(String),
    #[error("splitting needs at least 3 files, found {found}")]
    TooFewFiles { found: usize },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Positive,
    Negative,
    HardNegative,
    Unlabeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

/// Labeling thresholds, split ratios and the seed of every random draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningConfig {
    pub tau_pos: f64,
    pub tau_neg: f64,
    pub tau_hardneg: f64,
    pub hard_prob: f64,
    pub distance_params: DistanceParams,
    pub split_ratios: [f64; 3],
    pub seed: u64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            tau_pos: 0.3,
            tau_neg: 0.65,
            tau_hardneg: 0.45,
            hard_prob: 0.3,
            distance_params: DistanceParams::default(),
            split_ratios: [0.7, 0.2, 0.1],
            seed: 0,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<(), PairsError> {
        let bad = |m: String| Err(PairsError::InvalidConfig(m));
        if !(0.0 < self.tau_pos
            && self.tau_pos < self.tau_hardneg
            && self.tau_hardneg < self.tau_neg
            && self.tau_neg < 1.0)
        {
            return bad(format!(
                "need 0 < tau_pos < tau_hardneg < tau_neg < 1, got {} / {} / {}",
                self.tau_pos, self.tau_hardneg, self.tau_neg
            ));
        }
        if !(0.0..=1.0).contains(&self.hard_prob) {
            return bad(format!(
                "hard_prob must lie in [0, 1], got {}",
                self.hard_prob
            ));
        }
        if self.split_ratios.iter().any(|r| r.is_nan() || *r <= 0.0)
            || (self.split_ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad(format!(
                "split ratios must be positive and sum to 1, got {:?}",
                self.split_ratios
            ));
        }
        self.distance_params
            .validate()
            .map_err(|e| PairsError::InvalidConfig(e.to_string()))
    }
}

/// One unordered pair by corpus index; `left` has the smaller record id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDistance {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    #[serde(rename = "left")]
    pub left_id: String,
    #[serde(rename = "right")]
    pub right_id: String,
    pub distance: f64,
    pub label: Label,
}

/// Label from a distance and a uniform draw in `[0, 1)` that is only
/// consulted inside the hard-negative window.
pub fn label_with_draw(distance: f64, config: &MiningConfig, draw: f64) -> Label {
    if distance < config.tau_pos {
        Label::Positive
    } else if distance > config.tau_neg {
        Label::Negative
    } else if distance >= config.tau_hardneg {
        if draw < config.hard_prob {
            Label::HardNegative
        } else {
            Label::Unlabeled
        }
    } else {
        Label::Unlabeled
    }
}

/// Label a distance; `rng` is advanced only for window distances.
pub fn label_pair<R: Rng + ?Sized>(distance: f64, config: &MiningConfig, rng: &mut R) -> Label {
    let in_window = distance >= config.tau_hardneg && distance <= config.tau_neg;
    let draw = if in_window { rng.random::<f64>() } else { 0.0 };
    label_with_draw(distance, config, draw)
}

/// Noise stream of distance row `row`.
pub fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    rng
}

fn label_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    rng
}

const DENSE_CACHE_MAX_VOCAB: usize = 2048;
const UNSET: u64 = u64::MAX;

/// Proofs interned to tactic ids with a lazily filled substitution-cost
/// table. Produces the same bits as the reference metric functions.
pub struct DistanceEngine {
    seqs: Vec<Vec<u32>>,
    sets: Vec<Vec<u32>>,
    vocab: Vec<String>,
    cache: Option<Vec<AtomicU64>>,
    params: DistanceParams,
}

impl DistanceEngine {
    pub fn new<'a>(
        proofs: impl IntoIterator<Item = &'a TacticSequence>,
        params: DistanceParams,
    ) -> Result<Self, MetricsError> {
        params.validate()?;
        let mut ids: HashMap<&'a str, u32> = HashMap::new();
        let mut vocab = Vec::new();
        let mut seqs = Vec::new();
        for proof in proofs {
            let seq: Vec<u32> = proof
                .texts()
                .map(|t| {
                    *ids.entry(t).or_insert_with(|| {
                        vocab.push(t.to_string());
                        (vocab.len() - 1) as u32
                    })
                })
                .collect();
            seqs.push(seq);
        }
        let sets = seqs
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        let cache = (vocab.len() <= DENSE_CACHE_MAX_VOCAB).then(|| {
            (0..vocab.len() * vocab.len())
                .map(|_| AtomicU64::new(UNSET))
                .collect()
        });
        Ok(Self {
            seqs,
            sets,
            vocab,
            cache,
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }

    pub fn params(&self) -> &DistanceParams {
        &self.params
    }

    fn sub_cost(&self, x: u32, y: u32) -> f64 {
        if x == y {
            return 0.0;
        }
        let compute = || text_substitution_cost(&self.vocab[x as usize], &self.vocab[y as usize]);
        match &self.cache {
            Some(cache) => {
                let (lo, hi) = if x < y { (x, y) } else { (y, x) };
                let slot = &cache[lo as usize * self.vocab.len() + hi as usize];
                match slot.load(Ordering::Relaxed) {
                    UNSET => {
                        let c = compute();
                        slot.store(c.to_bits(), Ordering::Relaxed);
                        c
                    }
                    bits => f64::from_bits(bits),
                }
            }
            None => compute(),
        }
    }

    pub fn levenshtein(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (&self.seqs[a], &self.seqs[b]);
        let longest = p.len().max(q.len());
        if longest == 0 {
            return 0.0;
        }
        weighted_levenshtein(p, q, |&x, &y| self.sub_cost(x, y)) / longest as f64
    }

    pub fn jaccard(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (&self.sets[a], &self.sets[b]);
        let (mut i, mut j, mut common) = (0, 0, 0usize);
        while i < p.len() && j < q.len() {
            match p[i].cmp(&q[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    common += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        let union = p.len() + q.len() - common;
        if union == 0 {
            return 0.0;
        }
        1.0 - common as f64 / union as f64
    }

    pub fn noise_free(&self, a: usize, b: usize) -> f64 {
        blend(
            self.levenshtein(a, b),
            self.jaccard(a, b),
            self.params.alpha,
            0.0,
        )
    }

    pub fn distance<R: Rng + ?Sized>(&self, a: usize, b: usize, rng: &mut R) -> f64 {
        let gamma = draw_noise(self.params.noise_amplitude, rng);
        blend(
            self.levenshtein(a, b),
            self.jaccard(a, b),
            self.params.alpha,
            gamma,
        )
    }

    /// Distances `(i, j)` for every `j > i`, noise from [`row_rng`].
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        let mut rng = row_rng(self.params.rng_seed, i);
        (i + 1..self.len())
            .map(|j| (j, self.distance(i, j, &mut rng)))
            .collect()
    }
}

const BATCH_PAIRS: usize = 1 << 17;

/// Streaming iterator over all unordered pairs of a corpus, computed in
/// parallel batches of rows.
pub struct PairStream<'a> {
    corpus: &'a Corpus,
    engine: DistanceEngine,
    next_row: usize,
    buffer: std::vec::IntoIter<PairDistance>,
    remaining: usize,
}

impl<'a> PairStream<'a> {
    pub fn engine(&self) -> &DistanceEngine {
        &self.engine
    }

    fn refill(&mut self) {
        let n = self.engine.len();
        let start = self.next_row;
        let mut end = start;
        let mut count = 0;
        while end < n && count < BATCH_PAIRS {
            count += n - end - 1;
            end += 1;
        }
        self.next_row = end;
        let records = self.corpus.records();
        let engine = &self.engine;
        let rows: Vec<Vec<PairDistance>> = (start..end)
            .into_par_iter()
            .map(|i| {
                engine
                    .row(i)
                    .into_iter()
                    .map(|(j, distance)| {
                        let (left, right) = if records[i].id <= records[j].id {
                            (i, j)
                        } else {
                            (j, i)
                        };
                        PairDistance {
                            left,
                            right,
                            distance,
                        }
                    })
                    .collect()
            })
            .collect();
        self.buffer = rows.into_iter().flatten().collect::<Vec<_>>().into_iter();
    }
}

impl Iterator for PairStream<'_> {
    type Item = PairDistance;

    fn next(&mut self) -> Option<PairDistance> {
        loop {
            if let Some(p) = self.buffer.next() {
                self.remaining -= 1;
                return Some(p);
            }
            if self.next_row >= self.engine.len() {
                return None;
            }
            self.refill();
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for PairStream<'_> {}

/// All `n(n-1)/2` unordered pairs with their proof distance.
pub fn all_pair_distances<'a>(
    corpus: &'a Corpus,
    params: &DistanceParams,
) -> Result<PairStream<'a>, PairsError> {
    let engine = DistanceEngine::new(corpus.records().iter().map(|r| &r.proof), *params)?;
    let n = engine.len();
    Ok(PairStream {
        corpus,
        engine,
        next_row: 0,
        buffer: Vec::new().into_iter(),
        remaining: n * n.saturating_sub(1) / 2,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub positive: usize,
    pub negative: usize,
    pub hard_negative: usize,
    pub unlabeled: usize,
}

impl LabelCounts {
    pub fn add(&mut self, label: Label) {
        match label {
            Label::Positive => self.positive += 1,
            Label::Negative => self.negative += 1,
            Label::HardNegative => self.hard_negative += 1,
            Label::Unlabeled => self.unlabeled += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.positive + self.negative + self.hard_negative + self.unlabeled
    }
}

/// Labeled output of a pair-mining run. Unlabeled pairs are counted but not
/// kept.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairSet {
    pub n_pairs: usize,
    pub counts: LabelCounts,
    pub labeled: Vec<LabeledPair>,
}

/// Stream every pair, label it, keep the labeled ones.
pub fn mine_pairs(corpus: &Corpus, config: &MiningConfig) -> Result<PairSet, PairsError> {
    config.validate()?;
    let mut params = config.distance_params;
    params.rng_seed = config.seed;
    let mut rng = label_rng(config.seed);
    let records = corpus.records();
    let mut out = PairSet::default();
    for pair in all_pair_distances(corpus, &params)? {
        let label = label_pair(pair.distance, config, &mut rng);
        out.n_pairs += 1;
        out.counts.add(label);
        if label != Label::Unlabeled {
            out.labeled.push(LabeledPair {
                left_id: records[pair.left].id.clone(),
                right_id: records[pair.right].id.clone(),
                distance: pair.distance,
                label,
            });
        }
    }
    Ok(out)
}

/// File → split. Serializes as `{"train": [...], "val": [...], "test": [...]}`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitAssignment {
    pub files: BTreeMap<String, Split>,
}

impl SplitAssignment {
    pub fn split_of(&self, file: &str) -> Option<Split> {
        self.files.get(file).copied()
    }

    pub fn files_in(&self, split: Split) -> Vec<&str> {
        self.files
            .iter()
            .filter(|(_, s)| **s == split)
            .map(|(f, _)| f.as_str())
            .collect()
    }

    /// Realized theorem-count fraction of each split, in train/val/test order.
    pub fn fractions(&self, corpus: &Corpus) -> [f64; 3] {
        let mut counts = [0usize; 3];
        for r in corpus.records() {
            if let Some(s) = self.split_of(&r.file) {
                counts[s as usize] += 1;
            }
        }
        let total = counts.iter().sum::<usize>().max(1) as f64;
        counts.map(|c| c as f64 / total)
    }
}

#[derive(Serialize, Deserialize)]
struct SplitFiles {
    train: Vec<String>,
    val: Vec<String>,
    test: Vec<String>,
}

impl Serialize for SplitAssignment {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let owned = |s| self.files_in(s).into_iter().map(str::to_string).collect();
        SplitFiles {
            train: owned(Split::Train),
            val: owned(Split::Val),
            test: owned(Split::Test),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SplitAssignment {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = SplitFiles::deserialize(deserializer)?;
        let mut files = BTreeMap::new();
        for (list, split) in [
            (raw.train, Split::Train),
            (raw.val, Split::Val),
            (raw.test, Split::Test),
        ] {
            for f in list {
                if files.insert(f.clone(), split).is_some() {
                    return Err(serde::de::Error::custom(format!("file {f} assigned twice")));
                }
            }
        }
        Ok(Self { files })
    }
}

/// Greedy file-disjoint split. Files go, largest first, to the split with
/// the largest relative shortfall against its target theorem count; the
/// seed orders equal-size files.
pub fn split_by_file(
    corpus: &Corpus,
    config: &MiningConfig,
) -> Result<(SplitAssignment, Vec<Diagnostic>), PairsError> {
    config.validate()?;
    let pools = corpus.pools_by_file();
    if pools.len() < 3 {
        return Err(PairsError::TooFewFiles { found: pools.len() });
    }
    let mut files: Vec<(&str, usize)> = pools.iter().map(|(f, idx)| (*f, idx.len())).collect();
    files.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    files.sort_by_key(|f| std::cmp::Reverse(f.1));

    let total = corpus.len() as f64;
    let targets = config.split_ratios.map(|r| r * total);
    let mut filled = [0.0f64; 3];
    let mut assignment = SplitAssignment::default();
    for (file, count) in files {
        let mut best = 0;
        let mut best_gap = f64::NEG_INFINITY;
        for (k, (&target, &have)) in targets.iter().zip(&filled).enumerate() {
            let gap = (target - have) / target;
            if gap > best_gap {
                best = k;
                best_gap = gap;
            }
        }
        filled[best] += count as f64;
        assignment.files.insert(file.to_string(), Split::ALL[best]);
    }

    let mut diags = Vec::new();
    let realized = assignment.fractions(corpus);
    for ((split, want), got) in Split::ALL.iter().zip(config.split_ratios).zip(realized) {
        if (want - got).abs() > 0.05 {
            diags.push(Diagnostic {
                file: String::new(),
                line: 0,
                severity: Severity::Warning,
                message: format!(
                    "{split:?} split holds {:.1}% of theorems, target {:.1}%",
                    got * 100.0,
                    want * 100.0
                ),
            });
        }
    }
    Ok((assignment, diags))
}

/// Summary written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n_records: usize,
    pub n_files: usize,
    pub n_pairs: usize,
    pub n_labeled: usize,
    pub label_counts: LabelCounts,
    pub config: MiningConfig,
    pub hash: String,
}

#[derive(Serialize)]
struct Adjacency<'a> {
    positive: Vec<&'a str>,
    negative: Vec<&'a str>,
    hard_negative: Vec<&'a str>,
}

/// The export files (relative path → contents) and their manifest, without
/// touching the filesystem. `manifest.json` is included.
pub fn render_dataset(
    corpus: &Corpus,
    pairs: &PairSet,
    splits: &SplitAssignment,
    config: &MiningConfig,
) -> (BTreeMap<String, String>, Manifest) {
    let mut files: BTreeMap<String, String> = corpus
        .schema_files()
        .into_iter()
        .map(|(name, json)| (format!("corpus/{name}"), json))
        .collect();

    let mut jsonl = String::new();
    for p in &pairs.labeled {
        jsonl.push_str(&serde_json::to_string(p).expect("pair serializes"));
        jsonl.push('\n');
    }
    files.insert("pairs.jsonl".into(), jsonl);
    files.insert(
        "splits.json".into(),
        serde_json::to_string_pretty(splits).expect("splits serialize") + "\n",
    );

    let mut adjacency: BTreeMap<&str, Adjacency> = BTreeMap::new();
    for p in &pairs.labeled {
        for (anchor, other) in [(&p.left_id, &p.right_id), (&p.right_id, &p.left_id)] {
            let entry = adjacency.entry(anchor).or_insert_with(|| Adjacency {
                positive: Vec::new(),
                negative: Vec::new(),
                hard_negative: Vec::new(),
            });
            match p.label {
                Label::Positive => entry.positive.push(other),
                Label::Negative => entry.negative.push(other),
                Label::HardNegative => entry.hard_negative.push(other),
                Label::Unlabeled => {}
            }
        }
    }
    for entry in adjacency.values_mut() {
        entry.positive.sort_unstable();
        entry.negative.sort_unstable();
        entry.hard_negative.sort_unstable();
    }
    files.insert(
        "adjacency.json".into(),
        serde_json::to_string_pretty(&adjacency).expect("adjacency serializes") + "\n",
    );

    let mut hasher = Sha256::new();
    for (name, content) in &files {
        hasher.update(name.as_bytes());
        hasher.update([0]);
        hasher.update(content.as_bytes());
        hasher.update([0]);
    }
    let manifest = Manifest {
        n_records: corpus.len(),
        n_files: corpus.pools_by_file().len(),
        n_pairs: pairs.n_pairs,
        n_labeled: pairs.labeled.len(),
        label_counts: pairs.counts,
        config: *config,
        hash: hex::encode(hasher.finalize()),
    };
    files.insert(
        "manifest.json".into(),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    );
    (files, manifest)
}

/// Write the dataset directory: `corpus/*.json`, `pairs.jsonl`,
/// `splits.json`, `adjacency.json` and `manifest.json`.
pub fn export_dataset(
    corpus: &Corpus,
    pairs: &PairSet,
    splits: &SplitAssignment,
    config: &MiningConfig,
    out_dir: &Path,
) -> Result<Manifest, PairsError> {
    let (files, manifest) = render_dataset(corpus, pairs, splits, config);
    for (name, content) in files {
        let path = out_dir.join(&name);
        let io = |source| PairsError::Io {
            path: path.clone(),
            source,
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io)?;
        }
        fs::write(&path, content).map_err(io)?;
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{proof_distance, proof_distance_noise_free};
    use crate::parser::{Origin, SourceFile, TheoremKind, TheoremRecord};
    use crate::tree::MiningMode;
    use proptest::prelude::*;

    fn record(file: &str, name: &str, tactics: &[&str]) -> TheoremRecord {
        TheoremRecord::new(
            format!("{file}#{name}"),
            file,
            name,
            TheoremKind::Lemma,
            format!("stmt {name}"),
            TacticSequence::from_texts(tactics),
            Origin::Original,
        )
    }

    fn five() -> Corpus {
        Corpus::new(vec![
            record("a.v", "e", &["intros.", "auto."]),
            record("a.v", "d", &["intros.", "lia."]),
            record("b.v", "c", &["induction n.", "simpl.", "auto.", "auto."]),
            record("b.v", "b", &["reflexivity."]),
            record("c.v", "a", &["intros x y.", "apply H.", "lia."]),
        ])
        .unwrap()
    }

    #[test]
    fn five_records_match_direct_calls() {
        let c = five();
        let params = DistanceParams {
            rng_seed: 42,
            ..Default::default()
        };
        let got: Vec<PairDistance> = all_pair_distances(&c, &params).unwrap().collect();
        assert_eq!(got.len(), 10);
        let r = c.records();
        let mut expected = Vec::new();
        for i in 0..5 {
            let mut rng = row_rng(42, i);
            for j in i + 1..5 {
                expected.push(proof_distance(&r[i].proof, &r[j].proof, &params, &mut rng));
            }
        }
        for (p, e) in got.iter().zip(&expected) {
            assert_eq!(p.distance.to_bits(), e.to_bits());
            assert!(r[p.left].id < r[p.right].id);
        }
        let quiet = params.noise_free();
        for p in all_pair_distances(&c, &quiet).unwrap() {
            let e = proof_distance_noise_free(&r[p.left].proof, &r[p.right].proof, 0.7);
            assert_eq!(p.distance.to_bits(), e.to_bits());
        }
    }

    #[test]
    fn tiny_corpora() {
        let one = Corpus::new(vec![record("a.v", "x", &["auto."])]).unwrap();
        assert_eq!(
            all_pair_distances(&one, &DistanceParams::default())
                .unwrap()
                .count(),
            0
        );
        let none = Corpus::default();
        assert_eq!(
            all_pair_distances(&none, &DistanceParams::default())
                .unwrap()
                .len(),
            0
        );
    }

    #[test]
    fn label_examples() {
        let cfg = MiningConfig::default();
        assert_eq!(label_with_draw(0.2, &cfg, 0.5), Label::Positive);
        assert_eq!(label_with_draw(0.7, &cfg, 0.5), Label::Negative);
        assert_eq!(label_with_draw(0.5, &cfg, 0.1), Label::HardNegative);
        assert_eq!(label_with_draw(0.5, &cfg, 0.9), Label::Unlabeled);
        assert_eq!(label_with_draw(0.3, &cfg, 0.0), Label::Unlabeled);
        assert_eq!(label_with_draw(0.4, &cfg, 0.0), Label::Unlabeled);
        assert_eq!(label_with_draw(0.65, &cfg, 0.0), Label::HardNegative);
        assert_eq!(label_with_draw(0.65, &cfg, 0.99), Label::Unlabeled);
        assert_eq!(label_with_draw(0.45, &cfg, 0.0), Label::HardNegative);
    }

    #[test]
    fn config_validation() {
        assert!(MiningConfig::default().validate().is_ok());
        let bad = MiningConfig {
            tau_pos: 0.7,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(PairsError::InvalidConfig(_))));
        let bad = MiningConfig {
            split_ratios: [0.5, 0.2, 0.1],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let partial: MiningConfig =
            serde_json::from_str(r#"{"tau_pos": 0.25, "seed": 9}"#).unwrap();
        assert_eq!(partial.tau_pos, 0.25);
        assert_eq!(partial.tau_neg, 0.65);
        assert_eq!(partial.seed, 9);
    }

    fn sized_corpus(sizes: &[usize]) -> Corpus {
        let mut records = Vec::new();
        for (f, &n) in sizes.iter().enumerate() {
            for t in 0..n {
                records.push(record(&format!("f{f:02}.v"), &format!("t{t}"), &["auto."]));
            }
        }
        Corpus::new(records).unwrap()
    }

    #[test]
    fn ten_equal_files_split_seven_two_one() {
        let c = sized_corpus(&[3; 10]);
        let (s, diags) = split_by_file(&c, &MiningConfig::default()).unwrap();
        assert_eq!(Split::ALL.map(|x| s.files_in(x).len()), [7, 2, 1]);
        assert!(diags.is_empty());
    }

    #[test]
    fn uneven_files() {
        let c = sized_corpus(&[50, 30, 10, 10]);
        let (s, _) = split_by_file(&c, &MiningConfig::default()).unwrap();
        assert_eq!(s.files.len(), 4);
        let train: usize = s
            .files_in(Split::Train)
            .iter()
            .map(|f| c.pools_by_file()[f].len())
            .sum();
        assert!((50..=80).contains(&train), "train holds {train}");
    }

    #[test]
    fn giant_file_warns() {
        let c = sized_corpus(&[100, 1, 1]);
        let (s, diags) = split_by_file(&c, &MiningConfig::default()).unwrap();
        assert_eq!(s.split_of("f00.v"), Some(Split::Train));
        assert!(!diags.is_empty());
        assert!(matches!(
            split_by_file(&sized_corpus(&[3, 3]), &MiningConfig::default()),
            Err(PairsError::TooFewFiles { found: 2 })
        ));
    }

    #[test]
    fn export_split_and_determinism() {
        let split_src = "Theorem test : forall n : nat, n = 0 \\/ n > 0.\nProof.\n  intros n. destruct n.\n  - left; auto.\n  - right; auto.\nQed.\n";
        let mut c = Corpus::from_sources(&[SourceFile::new("split.v", split_src)]).unwrap();
        c.mine(MiningMode::Subproofs, None).unwrap();
        let cfg = MiningConfig::default();
        let pairs = mine_pairs(&c, &cfg).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(pairs.n_pairs, 6);
        let splits = SplitAssignment::default();
        let dir = tempfile::tempdir().unwrap();
        let m1 = export_dataset(&c, &pairs, &splits, &cfg, dir.path()).unwrap();
        assert_eq!(m1.n_records, 4);
        assert_eq!(m1.n_pairs, 6);
        for f in [
            "pairs.jsonl",
            "splits.json",
            "adjacency.json",
            "manifest.json",
            "corpus/split.v.json",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let first = fs::read(dir.path().join("pairs.jsonl")).unwrap();
        let m2 = export_dataset(
            &c,
            &mine_pairs(&c, &cfg).unwrap(),
            &splits,
            &cfg,
            dir.path(),
        )
        .unwrap();
        assert_eq!(m1.hash, m2.hash);
        assert_eq!(first, fs::read(dir.path().join("pairs.jsonl")).unwrap());
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        for key in ["n_records", "n_pairs", "config", "hash"] {
            assert!(manifest.get(key).is_some());
        }
    }

    #[test]
    fn empty_pairs_export() {
        let c = five();
        let dir = tempfile::tempdir().unwrap();
        let m = export_dataset(
            &c,
            &PairSet::default(),
            &SplitAssignment::default(),
            &MiningConfig::default(),
            dir.path(),
        )
        .unwrap();
        assert_eq!(m.n_pairs, 0);
        assert_eq!(
            fs::read_to_string(dir.path().join("pairs.jsonl")).unwrap(),
            ""
        );
    }

    #[test]
    fn labeled_pairs_respect_thresholds() {
        let c = five();
        let cfg = MiningConfig {
            seed: 3,
            ..Default::default()
        };
        let set = mine_pairs(&c, &cfg).unwrap();
        assert_eq!(set.counts.total(), 10);
        for p in &set.labeled {
            assert!(p.left_id < p.right_id);
            match p.label {
                Label::Positive => assert!(p.distance < cfg.tau_pos),
                Label::Negative => assert!(p.distance > cfg.tau_neg),
                Label::HardNegative => {
                    assert!(p.distance >= cfg.tau_hardneg && p.distance <= cfg.tau_neg)
                }
                Label::Unlabeled => unreachable!(),
            }
        }
        assert_eq!(set, mine_pairs(&c, &cfg).unwrap());
    }

    proptest! {
        #[test]
        fn split_covers_and_is_disjoint(sizes in prop::collection::vec(1usize..20, 3..25), seed in any::<u64>()) {
            let c = sized_corpus(&sizes);
            let cfg = MiningConfig { seed, ..Default::default() };
            let (s, _) = split_by_file(&c, &cfg).unwrap();
            prop_assert_eq!(s.files.len(), sizes.len());
            for r in c.records() {
                prop_assert!(s.split_of(&r.file).is_some());
            }
            let json = serde_json::to_string(&s).unwrap();
            let back: SplitAssignment = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn pair_count_is_binomial(n in 0usize..30) {
            let records: Vec<_> = (0..n).map(|i| record("a.v", &format!("t{i}"), &["auto.", if i % 2 == 0 { "lia." } else { "simpl." }])).collect();
            let c = Corpus::new(records).unwrap();
            let pairs: Vec<_> = all_pair_distances(&c, &DistanceParams::default()).unwrap().collect();
            prop_assert_eq!(pairs.len(), n * n.saturating_sub(1) / 2);
            let mut seen = std::collections::HashSet::new();
            for p in &pairs {
                prop_assert!(p.left != p.right);
                prop_assert!(seen.insert((p.left.min(p.right), p.left.max(p.right))));
                prop_assert!((0.0..=1.0).contains(&p.distance));
            }
        }
    }
}
