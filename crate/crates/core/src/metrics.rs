//! Output-set statistics (S, |S|), distinct-n diversity, and ROUGE
//! overlap metrics with oracle / mean / top reductions.
//!
//! All metrics tokenize identically: lowercase, whitespace split. Ratios
//! are reported in [0, 1]; multiply by 100 at presentation time.

use std::collections::{HashMap, HashSet};

/// The tokenization rule every metric uses, recorded in reports.
pub const TOKENIZATION: &str = "lowercase_whitespace";

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// One generated output of an example.
#[derive(Debug, Clone)]
pub struct Output {
    pub tokens: Vec<String>,
    /// Force-terminated at the length cap, not a true completion.
    pub truncated: bool,
}

/// Everything the aggregator needs about one example.
#[derive(Debug, Clone, Default)]
pub struct ExampleOutputs {
    /// Outputs in rank order (best first).
    pub outputs: Vec<Output>,
    pub references: Vec<Vec<String>>,
    pub wall_time_s: f64,
}

/// ROUGE-1/2/L F1 triple.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RougeTriple {
    pub r1: f64,
    pub r2: f64,
    pub rl: f64,
}

/// Aggregated metrics over a dataset.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub tokenization: &'static str,
    pub examples: usize,
    /// Mean outputs per example (the S column).
    pub s_mean: f64,
    /// Mean unique outputs per example (the |S| column).
    pub unique_s_mean: f64,
    /// Distinct-1/2/3, computed within each example then averaged.
    pub distinct: [f64; 3],
    /// Per example the max over outputs, then the dataset mean.
    pub rouge_oracle: RougeTriple,
    /// Per example the mean over outputs, then the dataset mean.
    pub rouge_mean: RougeTriple,
    /// The rank-0 output only, then the dataset mean.
    pub rouge_top: RougeTriple,
    /// Fraction of examples with at least one non-truncated completion.
    pub completion_rate: f64,
    pub mean_wall_time_s: f64,
}

/// Unique n-grams across all outputs divided by total words across all
/// outputs. An empty output set scores 0.
pub fn distinct_n(outputs: &[Vec<String>], n: usize) -> f64 {
    assert!(n >= 1, "distinct-n needs n >= 1");
    let total_words: usize = outputs.iter().map(Vec::len).sum();
    if total_words == 0 {
        return 0.0;
    }
    let mut grams: HashSet<&[String]> = HashSet::new();
    for output in outputs {
        for gram in output.windows(n) {
            grams.insert(gram);
        }
    }
    grams.len() as f64 / total_words as f64
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Clipped n-gram overlap F1, maxed over references.
pub fn rouge_n(candidate: &[String], references: &[Vec<String>], n: usize) -> f64 {
    assert!(n >= 1, "rouge-n needs n >= 1");
    if candidate.len() < n {
        return 0.0;
    }
    let cand_counts = ngram_counts(candidate, n);
    let cand_total = candidate.len() + 1 - n;
    references
        .iter()
        .map(|reference| {
            if reference.len() < n {
                return 0.0;
            }
            let ref_counts = ngram_counts(reference, n);
            let ref_total = reference.len() + 1 - n;
            let matched: usize = cand_counts
                .iter()
                .map(|(gram, count)| (*count).min(ref_counts.get(gram).copied().unwrap_or(0)))
                .sum();
            f1(
                matched as f64 / cand_total as f64,
                matched as f64 / ref_total as f64,
            )
        })
        .fold(0.0, f64::max)
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut previous = vec![0usize; b.len() + 1];
    let mut current = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            current[j + 1] = if x == y {
                previous[j] + 1
            } else {
                previous[j + 1].max(current[j])
            };
        }
        std::mem::swap(&mut previous, &mut current);
    }
    previous[b.len()]
}

/// Longest-common-subsequence F1, maxed over references.
pub fn rouge_l(candidate: &[String], references: &[Vec<String>]) -> f64 {
    if candidate.is_empty() {
        return 0.0;
    }
    references
        .iter()
        .map(|reference| {
            if reference.is_empty() {
                return 0.0;
            }
            let lcs = lcs_len(candidate, reference) as f64;
            f1(lcs / candidate.len() as f64, lcs / reference.len() as f64)
        })
        .fold(0.0, f64::max)
}

fn rouge_all(candidate: &[String], references: &[Vec<String>]) -> RougeTriple {
    RougeTriple {
        r1: rouge_n(candidate, references, 1),
        r2: rouge_n(candidate, references, 2),
        rl: rouge_l(candidate, references),
    }
}

/// Folds per-example output sets into a [`MetricsReport`].
///
/// Empty output sets contribute zeros everywhere and count the example
/// as incomplete.
pub fn aggregate(examples: &[ExampleOutputs]) -> MetricsReport {
    let count = examples.len();
    let mut report = MetricsReport {
        tokenization: TOKENIZATION,
        examples: count,
        s_mean: 0.0,
        unique_s_mean: 0.0,
        distinct: [0.0; 3],
        rouge_oracle: RougeTriple::default(),
        rouge_mean: RougeTriple::default(),
        rouge_top: RougeTriple::default(),
        completion_rate: 0.0,
        mean_wall_time_s: 0.0,
    };
    if count == 0 {
        return report;
    }

    for example in examples {
        let outputs = &example.outputs;
        report.s_mean += outputs.len() as f64;
        let unique: HashSet<&Vec<String>> = outputs.iter().map(|o| &o.tokens).collect();
        report.unique_s_mean += unique.len() as f64;
        if outputs.iter().any(|o| !o.truncated) {
            report.completion_rate += 1.0;
        }
        report.mean_wall_time_s += example.wall_time_s;

        let token_sets: Vec<Vec<String>> = outputs.iter().map(|o| o.tokens.clone()).collect();
        for (slot, n) in (1..=3).enumerate() {
            report.distinct[slot] += distinct_n(&token_sets, n);
        }

        let scores: Vec<RougeTriple> = outputs
            .iter()
            .map(|o| rouge_all(&o.tokens, &example.references))
            .collect();
        if let Some(first) = scores.first() {
            report.rouge_top.r1 += first.r1;
            report.rouge_top.r2 += first.r2;
            report.rouge_top.rl += first.rl;
        }
        if !scores.is_empty() {
            let m = scores.len() as f64;
            report.rouge_oracle.r1 += scores.iter().map(|s| s.r1).fold(0.0, f64::max);
            report.rouge_oracle.r2 += scores.iter().map(|s| s.r2).fold(0.0, f64::max);
            report.rouge_oracle.rl += scores.iter().map(|s| s.rl).fold(0.0, f64::max);
            report.rouge_mean.r1 += scores.iter().map(|s| s.r1).sum::<f64>() / m;
            report.rouge_mean.r2 += scores.iter().map(|s| s.r2).sum::<f64>() / m;
            report.rouge_mean.rl += scores.iter().map(|s| s.rl).sum::<f64>() / m;
        }
    }

    let denom = count as f64;
    report.s_mean /= denom;
    report.unique_s_mean /= denom;
    for slot in &mut report.distinct {
        *slot /= denom;
    }
    for triple in [
        &mut report.rouge_oracle,
        &mut report.rouge_mean,
        &mut report.rouge_top,
    ] {
        triple.r1 /= denom;
        triple.r2 /= denom;
        triple.rl /= denom;
    }
    report.completion_rate /= denom;
    report.mean_wall_time_s /= denom;
    report
}
