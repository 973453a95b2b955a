//! Proof-corpus engine for Rocq developments.
//!
//! The crate turns `.v` sources into theorem records, splits linear proofs
//! into proof-state trees and mines a sub-theorem for every intermediate
//! state, measures how close two proofs are, builds contrastive pair
//! datasets, and ranks premises for a target statement.
//!
//! Module map:
//!
//! * [`parser`]: sentence segmentation, theorem records, statement tokens
//! * [`tree`]: proof-state trees and sub-proof mining
//! * [`metrics`]: Levenshtein/Jaccard proof distances, statement Jaccard, BM25
//! * [`pairs`]: all-pairs distances, contrastive labels, file-disjoint splits, export
//! * [`analysis`]: Pearson/Spearman and the statement-vs-proof correlation report
//! * [`ranker`]: scorers, `top_k`, embedding stores and ranker evaluation
//! * [`corpus`]: the shared corpus container and its JSON schema
//! * [`synth`]: seeded synthetic corpora for tests and benchmarks

pub mod analysis;
pub mod corpus;
pub mod metrics;
pub mod pairs;
pub mod parser;
pub mod ranker;
pub mod synth;
pub mod tree;

pub use analysis::{
    correlation_experiment, histogram, pearson, spearman, AnalysisError, CorrelationReport,
    HistogramBin,
};
pub use corpus::{Corpus, CorpusError};
pub use metrics::{
    bm25_scores, char_levenshtein, jaccard_proof_distance, jaccard_statement_similarity,
    proof_distance, proof_distance_noise_free, proof_levenshtein, tactic_substitution_cost,
    weighted_levenshtein, Bm25Index, Bm25Params, DistanceParams, MetricsError,
};
pub use pairs::{
    all_pair_distances, export_dataset, label_pair, label_with_draw, mine_pairs, render_dataset,
    split_by_file, DistanceEngine, Label, LabelCounts, LabeledPair, Manifest, MiningConfig,
    PairDistance, PairSet, PairsError, Split, SplitAssignment,
};
pub use parser::{
    detect_goal_selectors, parse_file, split_tactics, tokenize_statement, BulletKind, Diagnostic,
    Marker, Origin, Severity, SourceFile, Tactic, TacticSequence, TheoremKind, TheoremRecord,
};
pub use ranker::{
    evaluate_ranker, load_embeddings, statement_key, top_k, Bm25Scorer, EmbeddingScorer,
    EmbeddingStore, EvaluationReport, JaccardScorer, MockGenerator, RankError, RankedResult,
    Scorer, Target, DEFAULT_EVAL_K,
};
pub use tree::{
    build_tree, linearize, mine_after_k, mine_corpus, mine_subproofs, GoalEntry, GoalOracle,
    MinedRecord, MiningMode, MiningStats, NodeId, ProofNode, ProofTree, TreeError,
};
