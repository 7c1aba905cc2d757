//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! Preprocessing: lowercase, trim leading/trailing non-alphanumeric
//! characters, drop stopwords and empties, keep tokens whose document
//! frequency is at least `vocab_min_doc_freq`, then keep the
//! `vocab_max_size` most frequent (document frequency descending, token
//! ascending). The vocabulary is stored sorted.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::stopwords::is_stopword;
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModelConfig {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    pub vocab_min_doc_freq: usize,
    pub vocab_max_size: usize,
    /// Sweeps used when inferring held-out documents.
    pub infer_sweeps: usize,
}

impl Default for TopicModelConfig {
    fn default() -> Self {
        Self::with_topics(20)
    }
}

impl TopicModelConfig {
    /// Conventional defaults: alpha = 50/K, beta = 0.01, 1000 sweeps.
    pub fn with_topics(topics: usize) -> Self {
        Self {
            topics,
            alpha: 50.0 / topics.max(1) as f64,
            beta: 0.01,
            iterations: 1000,
            seed: 0,
            vocab_min_doc_freq: 5,
            vocab_max_size: 20_000,
            infer_sweeps: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.topics == 0 {
            return Err(Error::Invalid("topic count must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Invalid("alpha and beta must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Invalid("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Lowercased, punctuation-trimmed, stopword-free tokens.
pub fn lda_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|t| {
            let w = t
                .to_lowercase()
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_string();
            (!w.is_empty() && !is_stopword(&w)).then_some(w)
        })
        .collect()
}

fn build_vocabulary(docs: &[Vec<String>], min_df: usize, max_size: usize) -> Vec<String> {
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let unique: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for w in unique {
            *df.entry(w).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = df.into_iter().filter(|&(_, n)| n >= min_df).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    kept.truncate(max_size);
    let mut vocab: Vec<String> = kept.into_iter().map(|(w, _)| w.to_string()).collect();
    vocab.sort();
    vocab
}

/// Count state of a collapsed Gibbs sampler.
///
/// Exposed so callers can audit count consistency between sweeps.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    topics: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    doc_topic: Vec<Vec<u32>>,
    topic_word: Vec<Vec<u32>>,
    topic_total: Vec<u32>,
    rng: SplitMix64,
    weights: Vec<f64>,
}

impl GibbsSampler {
    /// Random initial assignments, one draw per token in document order.
    pub fn new(docs: Vec<Vec<usize>>, vocab_size: usize, config: &TopicModelConfig) -> Self {
        let k = config.topics;
        let mut rng = SplitMix64::new(config.seed);
        let mut doc_topic = vec![vec![0u32; k]; docs.len()];
        let mut topic_word = vec![vec![0u32; vocab_size]; k];
        let mut topic_total = vec![0u32; k];
        let assignments = docs
            .iter()
            .enumerate()
            .map(|(d, words)| {
                words
                    .iter()
                    .map(|&w| {
                        let z = rng.below(k);
                        doc_topic[d][z] += 1;
                        topic_word[z][w] += 1;
                        topic_total[z] += 1;
                        z
                    })
                    .collect()
            })
            .collect();
        Self {
            topics: k,
            vocab_size,
            alpha: config.alpha,
            beta: config.beta,
            docs,
            assignments,
            doc_topic,
            topic_word,
            topic_total,
            rng,
            weights: vec![0.0; k],
        }
    }

    /// One full pass resampling every token's topic.
    pub fn sweep(&mut self) {
        let v_beta = self.vocab_size as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.assignments[d][i];
                self.doc_topic[d][old] -= 1;
                self.topic_word[old][w] -= 1;
                self.topic_total[old] -= 1;

                for k in 0..self.topics {
                    self.weights[k] = (self.doc_topic[d][k] as f64 + self.alpha)
                        * (self.topic_word[k][w] as f64 + self.beta)
                        / (self.topic_total[k] as f64 + v_beta);
                }
                let new = self.rng.weighted(&self.weights);

                self.assignments[d][i] = new;
                self.doc_topic[d][new] += 1;
                self.topic_word[new][w] += 1;
                self.topic_total[new] += 1;
            }
        }
    }

    /// Recount every table from the assignment array and compare.
    pub fn audit(&self) -> Result<()> {
        let k = self.topics;
        let mut doc_topic = vec![vec![0u32; k]; self.docs.len()];
        let mut topic_word = vec![vec![0u32; self.vocab_size]; k];
        let mut topic_total = vec![0u32; k];
        for (d, words) in self.docs.iter().enumerate() {
            for (&w, &z) in words.iter().zip(&self.assignments[d]) {
                doc_topic[d][z] += 1;
                topic_word[z][w] += 1;
                topic_total[z] += 1;
            }
        }
        if doc_topic != self.doc_topic
            || topic_word != self.topic_word
            || topic_total != self.topic_total
        {
            return Err(Error::Invalid("Gibbs count tables disagree with assignments".into()));
        }
        Ok(())
    }

    pub fn phi(&self) -> Vec<Vec<f64>> {
        let v_beta = self.vocab_size as f64 * self.beta;
        (0..self.topics)
            .map(|k| {
                let denom = self.topic_total[k] as f64 + v_beta;
                self.topic_word[k]
                    .iter()
                    .map(|&n| (n as f64 + self.beta) / denom)
                    .collect()
            })
            .collect()
    }

    pub fn theta(&self) -> Vec<Vec<f64>> {
        let k_alpha = self.topics as f64 * self.alpha;
        self.doc_topic
            .iter()
            .zip(&self.docs)
            .map(|(counts, words)| {
                let denom = words.len() as f64 + k_alpha;
                counts
                    .iter()
                    .map(|&n| (n as f64 + self.alpha) / denom)
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    /// `topics × vocabulary.len()` topic-word probabilities.
    pub phi: Vec<Vec<f64>>,
    pub vocabulary: Vec<String>,
    pub config: TopicModelConfig,
    /// Per fitted document, in input order.
    pub doc_theta: Vec<Vec<f64>>,
}

impl TopicModel {
    pub fn topics(&self) -> usize {
        self.phi.len()
    }

    fn word_index(&self) -> HashMap<&str, usize> {
        self.vocabulary
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), i))
            .collect()
    }

    /// Highest-probability words per topic.
    pub fn top_words(&self, n: usize) -> Vec<Vec<(String, f64)>> {
        self.phi
            .iter()
            .map(|row| {
                let mut idx: Vec<usize> = (0..row.len()).collect();
                idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
                idx.into_iter()
                    .take(n)
                    .map(|i| (self.vocabulary[i].clone(), row[i]))
                    .collect()
            })
            .collect()
    }
}

/// Fit on raw texts. Shared by [`lda_fit`] and corpus comparison.
pub fn fit_texts<'a>(
    texts: impl IntoIterator<Item = &'a str>,
    config: &TopicModelConfig,
) -> Result<TopicModel> {
    config.validate()?;
    let tokens: Vec<Vec<String>> = texts.into_iter().map(lda_tokens).collect();
    if tokens.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let vocabulary = build_vocabulary(&tokens, config.vocab_min_doc_freq, config.vocab_max_size);
    if vocabulary.is_empty() {
        return Err(Error::Empty("vocabulary after filtering"));
    }
    let index: HashMap<&str, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let docs: Vec<Vec<usize>> = tokens
        .iter()
        .map(|doc| doc.iter().filter_map(|w| index.get(w.as_str()).copied()).collect())
        .collect();

    let mut sampler = GibbsSampler::new(docs, vocabulary.len(), config);
    for _ in 0..config.iterations {
        sampler.sweep();
    }
    Ok(TopicModel {
        phi: sampler.phi(),
        doc_theta: sampler.theta(),
        vocabulary,
        config: config.clone(),
    })
}

/// Fit a topic model over every document of the corpus. Labels are ignored.
pub fn lda_fit(corpus: &crate::corpus::LabeledCorpus, config: &TopicModelConfig) -> Result<TopicModel> {
    fit_texts(corpus.iter().map(|d| d.text.as_str()), config)
}

/// Document-topic proportions for an unseen text with `phi` held fixed.
///
/// Returns the average of the per-sweep estimates over the second half of
/// the run; uniform when no token is in the vocabulary.
pub fn infer_text(model: &TopicModel, text: &str, sweeps: usize, seed: u64) -> Vec<f64> {
    let k = model.topics();
    let alpha = model.config.alpha;
    let index = model.word_index();
    let words: Vec<usize> = lda_tokens(text)
        .iter()
        .filter_map(|w| index.get(w.as_str()).copied())
        .collect();
    if words.is_empty() || sweeps == 0 {
        return vec![1.0 / k as f64; k];
    }
    if k == 1 {
        return vec![1.0];
    }

    let mut rng = SplitMix64::new(seed);
    let mut counts = vec![0u32; k];
    let mut z: Vec<usize> = words
        .iter()
        .map(|_| {
            let t = rng.below(k);
            counts[t] += 1;
            t
        })
        .collect();

    let denom = words.len() as f64 + k as f64 * alpha;
    let burn_in = sweeps / 2;
    let mut acc = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for s in 0..sweeps {
        for (i, &w) in words.iter().enumerate() {
            counts[z[i]] -= 1;
            for t in 0..k {
                weights[t] = (counts[t] as f64 + alpha) * model.phi[t][w];
            }
            z[i] = rng.weighted(&weights);
            counts[z[i]] += 1;
        }
        if s >= burn_in {
            for t in 0..k {
                acc[t] += (counts[t] as f64 + alpha) / denom;
            }
        }
    }
    let total: f64 = acc.iter().sum();
    acc.iter().map(|a| a / total).collect()
}

pub fn lda_infer(model: &TopicModel, doc: &Document, sweeps: usize, seed: u64) -> Vec<f64> {
    infer_text(model, &doc.text, sweeps, seed)
}

/// Mean of several probability vectors.
pub(crate) fn mean_vector(rows: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    let n = rows.len().max(1) as f64;
    mean.iter().map(|m| m / n).collect()
}

/// Top words per topic index.
pub fn topic_summary(model: &TopicModel, top_n: usize) -> BTreeMap<usize, Vec<String>> {
    model
        .top_words(top_n)
        .into_iter()
        .enumerate()
        .map(|(k, ws)| (k, ws.into_iter().map(|(w, _)| w).collect()))
        .collect()
}
