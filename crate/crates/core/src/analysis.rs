//! Statement-similarity vs proof-distance correlation and the distribution
//! of pair distances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::metrics::DistanceParams;
use crate::pairs::{all_pair_distances, PairDistance, PairsError};
use crate::ranker::{RankError, Scorer, Target};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Pairs(#[from] PairsError),
}

pub const HISTOGRAM_BINS: usize = 20;

/// Summation with a fixed binary tree shape; the result depends only on the
/// input order.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(AnalysisError::DegenerateInput(
            "need at least 2 points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let dx: Vec<f64> = xs.iter().map(|x| x - mx).collect();
    let dy: Vec<f64> = ys.iter().map(|y| y - my).collect();
    let sxx = pairwise_sum(&dx.iter().map(|d| d * d).collect::<Vec<_>>());
    let syy = pairwise_sum(&dy.iter().map(|d| d * d).collect::<Vec<_>>());
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::DegenerateInput("zero variance".into()));
    }
    let sxy = pairwise_sum(&dx.iter().zip(&dy).map(|(a, b)| a * b).collect::<Vec<_>>());
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their rank range.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of the average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch(xs.len(), ys.len()));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_lower: f64,
    pub count: usize,
}

/// Equal-width bins over `[0, 1]`; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = ((v * bins as f64).floor() as isize).clamp(0, bins as isize - 1) as usize;
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            bin_lower: i as f64 / bins as f64,
            count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub pearson_r: f64,
    pub spearman_rho: f64,
    pub n_pairs: usize,
    pub statement_metric_name: String,
    pub histogram: Vec<HistogramBin>,
}

impl CorrelationReport {
    /// Plain-text rendering for terminals.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "statement metric  {}\npairs             {}\npearson r         {:.4}\nspearman rho      {:.4}\n\nproof distance histogram\n",
            self.statement_metric_name, self.n_pairs, self.pearson_r, self.spearman_rho
        );
        let max = self
            .histogram
            .iter()
            .map(|b| b.count)
            .max()
            .unwrap_or(0)
            .max(1);
        let width = 1.0 / self.histogram.len().max(1) as f64;
        for b in &self.histogram {
            let bar = "#".repeat(b.count * 40 / max);
            out.push_str(&format!(
                "[{:.2}, {:.2}) {:>10}  {}\n",
                b.bin_lower,
                b.bin_lower + width,
                b.count,
                bar
            ));
        }
        out
    }
}

/// Correlate statement similarity (left record as target) with noise-free
/// proof distance over every unordered pair.
pub fn correlation_experiment(
    corpus: &Corpus,
    scorer: &dyn Scorer,
    distance_params: &DistanceParams,
) -> Result<CorrelationReport, AnalysisError> {
    if corpus.len() < 3 {
        return Err(AnalysisError::DegenerateInput(format!(
            "need at least 3 records, got {}",
            corpus.len()
        )));
    }
    let pairs: Vec<PairDistance> =
        all_pair_distances(corpus, &distance_params.noise_free())?.collect();
    let records = corpus.records();
    let targets: Vec<Target> = records.par_iter().map(Target::from_record).collect();
    let xs: Vec<f64> = pairs
        .par_iter()
        .map(|p| scorer.score(&targets[p.left], &records[p.right]))
        .collect::<Result<_, RankError>>()?;
    let ys: Vec<f64> = pairs.iter().map(|p| p.distance).collect();
    Ok(CorrelationReport {
        pearson_r: pearson(&xs, &ys)?,
        spearman_rho: spearman(&xs, &ys)?,
        n_pairs: pairs.len(),
        statement_metric_name: scorer.name().to_string(),
        histogram: histogram(&ys, HISTOGRAM_BINS),
    })
}
