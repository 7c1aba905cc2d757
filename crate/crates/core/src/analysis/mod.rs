//! Dataset divergence analyses: document length, topic mixture and
//! part-of-speech profiles, plus a Jensen-Shannon score between corpora.

pub mod lda;
pub mod pos;
mod stopwords;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabeledCorpus};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

pub use lda::{lda_fit, lda_infer, GibbsSampler, TopicModel, TopicModelConfig};
pub use pos::{pos_distribution, HeuristicTagger, PosDistribution, PosTag};

/// Whitespace token count; the word-length rule used everywhere.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassLength {
    pub mean_words: f64,
    pub documents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub human: ClassLength,
    pub llm: ClassLength,
}

impl LengthStats {
    pub fn get(&self, label: Label) -> ClassLength {
        match label {
            Label::Human => self.human,
            Label::Llm => self.llm,
        }
    }

    /// Mean over all documents regardless of label.
    pub fn overall_mean(&self) -> f64 {
        let n = self.human.documents + self.llm.documents;
        if n == 0 {
            return 0.0;
        }
        (self.human.mean_words * self.human.documents as f64
            + self.llm.mean_words * self.llm.documents as f64)
            / n as f64
    }
}

pub fn average_word_length(corpus: &LabeledCorpus) -> Result<LengthStats> {
    let mut sums = [0usize; 2];
    let mut counts = [0usize; 2];
    for doc in corpus {
        let i = doc.require_label()?.index();
        sums[i] += word_count(&doc.text);
        counts[i] += 1;
    }
    let class = |i: usize| ClassLength {
        mean_words: if counts[i] == 0 {
            0.0
        } else {
            sums[i] as f64 / counts[i] as f64
        },
        documents: counts[i],
    };
    Ok(LengthStats {
        human: class(0),
        llm: class(1),
    })
}

/// Jensen-Shannon divergence in nats.
pub fn distribution_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension {
            expected: p.len(),
            got: q.len(),
        });
    }
    for v in [p, q] {
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > 1e-6 || v.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::Invalid(format!(
                "not a probability vector (sum {sum})"
            )));
        }
    }
    let kl_to_mid = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .filter(|(&x, _)| x > 0.0)
            .map(|(&x, &y)| x * (x / (0.5 * (x + y))).ln())
            .sum()
    };
    let js = 0.5 * kl_to_mid(p, q) + 0.5 * kl_to_mid(q, p);
    Ok(js.clamp(0.0, std::f64::consts::LN_2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusComparison {
    pub length_delta: f64,
    pub topic_js: f64,
    pub pos_js: f64,
}

/// Mean inferred topic mixture of each corpus under one shared model.
fn mean_thetas(model: &TopicModel, corpus: &LabeledCorpus, seed: u64) -> Vec<f64> {
    use rayon::prelude::*;
    let sweeps = model.config.infer_sweeps;
    let thetas: Vec<Vec<f64>> = corpus
        .documents()
        .par_iter()
        .enumerate()
        .map(|(i, d)| lda_infer(model, d, sweeps, derive_seed(seed, i as u64)))
        .collect();
    lda::mean_vector(&thetas, model.topics())
}

pub fn compare_with_model(
    a: &LabeledCorpus,
    b: &LabeledCorpus,
    model: &TopicModel,
) -> Result<CorpusComparison> {
    let la = average_word_length(a)?;
    let lb = average_word_length(b)?;
    let seed = model.config.seed;
    let topic_js = distribution_divergence(
        &mean_thetas(model, a, seed),
        &mean_thetas(model, b, seed),
    )?;
    let pos_js = distribution_divergence(&pos::pooled_pos(a), &pos::pooled_pos(b))?;
    Ok(CorpusComparison {
        length_delta: (la.overall_mean() - lb.overall_mean()).abs(),
        topic_js,
        pos_js,
    })
}

/// Length, topic and POS divergence between two labeled corpora. The topic
/// model is fitted on the union of both.
pub fn compare_corpora(
    a: &LabeledCorpus,
    b: &LabeledCorpus,
    config: &TopicModelConfig,
) -> Result<CorpusComparison> {
    a.ensure_labeled()?;
    b.ensure_labeled()?;
    let model = lda::fit_texts(
        a.iter().chain(b.iter()).map(|d| d.text.as_str()),
        config,
    )?;
    compare_with_model(a, b, &model)
}

/// Per-corpus section of an analysis report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusProfile {
    pub name: String,
    pub length: LengthStats,
    pub pos: PosDistribution,
    pub mean_topic_mixture: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub corpora: Vec<CorpusProfile>,
    pub topics: BTreeMap<usize, Vec<String>>,
    /// Comparison of the first corpus against each later one.
    pub comparisons: Vec<(String, String, CorpusComparison)>,
}

/// Fit one topic model over all corpora and profile each of them.
pub fn analyze(corpora: &[&LabeledCorpus], config: &TopicModelConfig) -> Result<AnalysisReport> {
    if corpora.is_empty() {
        return Err(Error::Empty("corpora"));
    }
    for c in corpora {
        c.ensure_labeled()?;
    }
    let model = lda::fit_texts(
        corpora.iter().flat_map(|c| c.iter()).map(|d| d.text.as_str()),
        config,
    )?;
    let profiles = corpora
        .iter()
        .map(|c| {
            Ok(CorpusProfile {
                name: c.name.clone(),
                length: average_word_length(c)?,
                pos: pos_distribution(c)?,
                mean_topic_mixture: mean_thetas(&model, c, config.seed),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let comparisons = corpora[1..]
        .iter()
        .map(|b| {
            let cmp = compare_with_model(corpora[0], b, &model)?;
            Ok((corpora[0].name.clone(), b.name.clone(), cmp))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalysisReport {
        corpora: profiles,
        topics: lda::topic_summary(&model, 8),
        comparisons,
    })
}

impl AnalysisReport {
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        s.push_str("## Average word length\n\n");
        s.push_str("| Dataset | Human-written | Machine-generated |\n|---|---|---|\n");
        for c in &self.corpora {
            let _ = writeln!(
                s,
                "| {} | {:.2} (n={}) | {:.2} (n={}) |",
                c.name,
                c.length.human.mean_words,
                c.length.human.documents,
                c.length.llm.mean_words,
                c.length.llm.documents
            );
        }

        s.push_str("\n## Part-of-speech distribution\n\n| Dataset | Label |");
        for t in PosTag::ALL {
            let _ = write!(s, " {} |", t.as_str());
        }
        s.push_str("\n|---|---|");
        s.push_str(&"---|".repeat(PosTag::ALL.len()));
        s.push('\n');
        for c in &self.corpora {
            for (label, freqs) in &c.pos.per_label {
                let _ = write!(s, "| {} | {} |", c.name, label);
                for f in freqs {
                    let _ = write!(s, " {f:.3} |");
                }
                s.push('\n');
            }
        }

        s.push_str("\n## Topic mixture\n\n| Topic | Top words |");
        for c in &self.corpora {
            let _ = write!(s, " {} |", c.name);
        }
        s.push_str("\n|---|---|");
        s.push_str(&"---|".repeat(self.corpora.len()));
        s.push('\n');
        for (k, words) in &self.topics {
            let _ = write!(s, "| {k} | {} |", words.join(", "));
            for c in &self.corpora {
                let _ = write!(s, " {:.3} |", c.mean_topic_mixture[*k]);
            }
            s.push('\n');
        }

        if !self.comparisons.is_empty() {
            s.push_str("\n## Divergence\n\n| A | B | Length delta | Topic JS | POS JS |\n|---|---|---|---|---|\n");
            for (a, b, c) in &self.comparisons {
                let _ = writeln!(
                    s,
                    "| {a} | {b} | {:.2} | {:.4} | {:.4} |",
                    c.length_delta, c.topic_js, c.pos_js
                );
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn labeled(texts: &[(&str, Label)]) -> LabeledCorpus {
        let docs = texts
            .iter()
            .enumerate()
            .map(|(i, (t, l))| Document::new(format!("d{i}"), *t, Some(*l)))
            .collect();
        LabeledCorpus::new("c", docs).unwrap()
    }

    #[test]
    fn length_means() {
        let s = average_word_length(&labeled(&[
            ("a b c", Label::Human),
            ("d e", Label::Human),
            ("", Label::Llm),
        ]))
        .unwrap();
        assert_eq!(s.human.mean_words, 2.5);
        assert_eq!(s.human.documents, 2);
        assert_eq!(s.llm.mean_words, 0.0);
        assert_eq!(s.llm.documents, 1);
    }

    #[test]
    fn js_examples() {
        assert_eq!(distribution_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let ln2 = std::f64::consts::LN_2;
        assert!((distribution_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - ln2).abs() < 1e-12);
        // Direct evaluation: m = (0.75, 0.25);
        // 0.5*[0.5 ln(0.5/0.75) + 0.5 ln(0.5/0.25)] + 0.5*[ln(1/0.75)]
        let oracle = 0.5 * (0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln())
            + 0.5 * (1.0f64 / 0.75).ln();
        let js = distribution_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((js - oracle).abs() < 1e-12);
        assert!((js - 0.2157).abs() < 1e-4);
    }

    #[test]
    fn js_rejects_bad_input() {
        assert!(distribution_divergence(&[1.0], &[0.5, 0.5]).is_err());
        assert!(distribution_divergence(&[0.6, 0.6], &[0.5, 0.5]).is_err());
    }

    fn topic_corpus(prefix: &str, n: usize, seed: u64, vocab: &[&str]) -> LabeledCorpus {
        let mut rng = SplitMix64::new(seed);
        let docs = (0..n)
            .map(|i| {
                let text: Vec<&str> = (0..30).map(|_| vocab[rng.below(vocab.len())]).collect();
                let label = if i % 3 == 0 { Label::Llm } else { Label::Human };
                Document::new(format!("{prefix}{i}"), text.join(" "), Some(label))
            })
            .collect();
        LabeledCorpus::new(prefix, docs).unwrap()
    }

    fn cfg() -> TopicModelConfig {
        TopicModelConfig {
            iterations: 60,
            vocab_min_doc_freq: 2,
            alpha: 0.5,
            infer_sweeps: 30,
            ..TopicModelConfig::with_topics(2)
        }
    }

    #[test]
    fn self_comparison_is_zero() {
        let a = topic_corpus("a", 30, 1, &["river", "boat", "water", "fish", "bank"]);
        let c = compare_corpora(&a, &a, &cfg()).unwrap();
        assert_eq!(c.topic_js, 0.0);
        assert_eq!(c.pos_js, 0.0);
        assert_eq!(c.length_delta, 0.0);
    }

    #[test]
    fn disjoint_topics_diverge() {
        let a = topic_corpus("a", 40, 1, &["river", "boat", "water", "fish", "bank"]);
        let b = topic_corpus("b", 40, 2, &["vote", "senate", "law", "court", "judge"]);
        let c = compare_corpora(&a, &b, &cfg()).unwrap();
        assert!(c.topic_js >= 0.3, "topic_js = {}", c.topic_js);
    }

    #[test]
    fn labels_do_not_affect_pooled_pos() {
        let a = labeled(&[("the cat sat quickly", Label::Human), ("42 dogs ran", Label::Llm)]);
        let b = labeled(&[("the cat sat quickly", Label::Llm), ("42 dogs ran", Label::Llm)]);
        assert_eq!(
            distribution_divergence(&pos::pooled_pos(&a), &pos::pooled_pos(&b)).unwrap(),
            0.0
        );
    }

    #[test]
    fn report_renders() {
        let a = topic_corpus("a", 20, 1, &["river", "boat", "water", "fish", "bank"]);
        let b = topic_corpus("b", 20, 2, &["vote", "senate", "law", "court", "judge"]);
        let r = analyze(&[&a, &b], &cfg()).unwrap();
        assert_eq!(r.corpora.len(), 2);
        assert_eq!(r.comparisons.len(), 1);
        let md = r.to_markdown();
        assert!(md.contains("| a |"));
        assert!(md.contains("Topic JS"));
    }

    fn prob_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum::<f64>() + 1e-9;
            v.iter().map(|x| (x + 1e-9 / v.len() as f64) / s).collect()
        })
    }

    proptest! {
        #[test]
        fn js_symmetric_and_bounded((p, q) in (2usize..8).prop_flat_map(|n| (prob_vec(n), prob_vec(n)))) {
            let pq = distribution_divergence(&p, &q).unwrap();
            let qp = distribution_divergence(&q, &p).unwrap();
            prop_assert!((pq - qp).abs() < 1e-12);
            prop_assert!((0.0..=std::f64::consts::LN_2).contains(&pq));
            prop_assert!(distribution_divergence(&p, &p).unwrap().abs() < 1e-12);
        }
    }
}
