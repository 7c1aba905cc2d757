//! Base classifiers behind one probability interface.
//!
//! Two kinds exist: [`NgramHeadClassifier`], a fixed hashed n-gram feature
//! extractor with a trained softmax head, and [`ScoreFileClassifier`], which
//! serves probabilities exported by an external model.
//!
//! # Feature hashing
//!
//! [`featurize`] lowercases the text, keeps the first `max_tokens`
//! whitespace tokens and joins them with single spaces. Char n-grams are
//! taken over that string padded with one space on each side; word n-grams
//! over the token list (joined with a space). Each n-gram key is hashed as
//!
//! ```text
//! h = 0xcbf29ce484222325 ^ mix64(hash_seed)
//! for byte in tag ++ key:          // tag = b'c' (char) or b'w' (word)
//!     h = (h ^ byte) * 0x100000001b3
//! bucket = mix64(h) & (hash_dim - 1)
//! ```
//!
//! with `mix64` the SplitMix64 finalizer. Bucket counts are L2-normalized.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Label, LabeledCorpus};
use crate::error::{Error, Result};
use crate::mlp::{self, Activation, LayerSpec, MlpModel, SparseVector, TrainConfig};
use crate::rng::{derive_seed, mix64};

/// Class probabilities for one document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbVector {
    pub p_human: f64,
    pub p_llm: f64,
}

impl ProbVector {
    pub fn new(p_human: f64, p_llm: f64) -> Result<Self> {
        let pv = Self { p_human, p_llm };
        pv.validate()?;
        Ok(pv)
    }

    /// `(1 - p, p)`.
    pub fn from_llm(p_llm: f64) -> Self {
        Self {
            p_human: 1.0 - p_llm,
            p_llm,
        }
    }

    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        match probs {
            [h, l] => Self::new(*h, *l),
            _ => Err(Error::Dimension {
                expected: 2,
                got: probs.len(),
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.p_human)
            && (0.0..=1.0).contains(&self.p_llm)
            && (self.p_human + self.p_llm - 1.0).abs() <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "invalid probability pair ({}, {})",
                self.p_human, self.p_llm
            )))
        }
    }

    pub fn get(&self, label: Label) -> f64 {
        match label {
            Label::Human => self.p_human,
            Label::Llm => self.p_llm,
        }
    }

    /// Argmax with an exact tie going to LLM.
    pub fn argmax(&self) -> Label {
        if self.p_human > self.p_llm {
            Label::Human
        } else {
            Label::Llm
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramRange {
    pub lo: usize,
    pub hi: usize,
}

impl NgramRange {
    pub fn new(lo: usize, hi: usize) -> Self {
        Self { lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub hash_dim: usize,
    pub char_ngrams: Option<NgramRange>,
    pub word_ngrams: Option<NgramRange>,
    pub hash_seed: u64,
    pub max_tokens: usize,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            hash_dim: 1 << 18,
            char_ngrams: Some(NgramRange::new(3, 5)),
            word_ngrams: Some(NgramRange::new(1, 2)),
            hash_seed: 0,
            max_tokens: 256,
        }
    }
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hash_dim < 2 || !self.hash_dim.is_power_of_two() || self.hash_dim > u32::MAX as usize {
            return Err(Error::Invalid(format!(
                "hash_dim must be a power of two >= 2, got {}",
                self.hash_dim
            )));
        }
        if self.max_tokens == 0 {
            return Err(Error::Invalid("max_tokens must be at least 1".into()));
        }
        if self.char_ngrams.is_none() && self.word_ngrams.is_none() {
            return Err(Error::Invalid("at least one n-gram range is required".into()));
        }
        for r in [self.char_ngrams, self.word_ngrams].into_iter().flatten() {
            if r.lo == 0 || r.lo > r.hi {
                return Err(Error::Invalid(format!(
                    "n-gram range {}..={} is empty",
                    r.lo, r.hi
                )));
            }
        }
        Ok(())
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn bucket(tag: u8, key: &[u8], seed_state: u64, mask: u64) -> u32 {
    let mut h = seed_state;
    for &b in std::iter::once(&tag).chain(key) {
        h = (h ^ b as u64).wrapping_mul(FNV_PRIME);
    }
    (mix64(h) & mask) as u32
}

/// Hashed, L2-normalized n-gram counts.
pub fn featurize(text: &str, spec: &FeatureSpec) -> SparseVector {
    let lower = text.to_lowercase();
    let tokens: Vec<&str> = lower.split_whitespace().take(spec.max_tokens).collect();
    if tokens.is_empty() {
        return SparseVector::zeros(spec.hash_dim);
    }
    let seed_state = FNV_OFFSET ^ mix64(spec.hash_seed);
    let mask = spec.hash_dim as u64 - 1;
    let mut buckets: Vec<u32> = Vec::new();

    if let Some(r) = spec.char_ngrams {
        let padded = format!(" {} ", tokens.join(" "));
        let chars: Vec<char> = padded.chars().collect();
        let mut key = String::new();
        for n in r.lo..=r.hi {
            for w in chars.windows(n) {
                key.clear();
                key.extend(w);
                buckets.push(bucket(b'c', key.as_bytes(), seed_state, mask));
            }
        }
    }
    if let Some(r) = spec.word_ngrams {
        for n in r.lo..=r.hi {
            for w in tokens.windows(n) {
                buckets.push(bucket(b'w', w.join(" ").as_bytes(), seed_state, mask));
            }
        }
    }

    buckets.sort_unstable();
    let mut indices = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for b in buckets {
        if indices.last() == Some(&b) {
            *values.last_mut().unwrap() += 1.0;
        } else {
            indices.push(b);
            values.push(1.0);
        }
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut values {
        *v /= norm;
    }
    SparseVector {
        dim: spec.hash_dim,
        indices,
        values,
    }
}

/// Uniform probability interface over native and imported classifiers.
pub trait BaseClassifier: Send + Sync {
    fn name(&self) -> &str;
    fn predict_proba(&self, doc: &Document) -> Result<ProbVector>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub train: TrainConfig,
    /// Dropout on the hashed features ahead of the dense layer.
    pub feature_dropout: f64,
}

impl Default for HeadConfig {
    /// Adam at 5e-4, batch 4, a single pass over the training data.
    fn default() -> Self {
        Self {
            train: TrainConfig {
                learning_rate: 5e-4,
                batch_size: 4,
                epochs: 1,
                max_steps: None,
                seed: 0,
                shuffle: true,
            },
            feature_dropout: 0.1,
        }
    }
}

/// Frozen hashed n-gram features plus a trained `hash_dim → 2` softmax head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramHeadClassifier {
    pub name: String,
    pub spec: FeatureSpec,
    pub head: MlpModel,
}

/// Train only the head; the feature spec is never modified.
pub fn train_head(
    name: &str,
    train: &LabeledCorpus,
    spec: &FeatureSpec,
    config: &HeadConfig,
) -> Result<NgramHeadClassifier> {
    spec.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training corpus"));
    }
    let labels = train.labels()?;
    let data: Vec<(SparseVector, usize)> = train
        .documents()
        .par_iter()
        .map(|d| featurize(&d.text, spec))
        .zip(labels.par_iter().map(|l| l.index()))
        .collect();
    let mut head = MlpModel::new(
        spec.hash_dim,
        config.feature_dropout,
        &[LayerSpec::new(2, Activation::Softmax, 0.0)],
        derive_seed(config.train.seed, 2),
    )?;
    mlp::train(&mut head, &data, &config.train)?;
    Ok(NgramHeadClassifier {
        name: name.to_string(),
        spec: spec.clone(),
        head,
    })
}

impl NgramHeadClassifier {
    pub fn predict_text(&self, text: &str) -> Result<ProbVector> {
        let x = featurize(text, &self.spec);
        ProbVector::from_probs(&self.head.predict(&x)?)
    }
}

impl BaseClassifier for NgramHeadClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict_proba(&self, doc: &Document) -> Result<ProbVector> {
        self.predict_text(&doc.text)
    }
}

/// Probabilities exported by an external model, keyed by document id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFileClassifier {
    pub name: String,
    pub scores: BTreeMap<String, ProbVector>,
}

impl BaseClassifier for ScoreFileClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict_proba(&self, doc: &Document) -> Result<ProbVector> {
        self.scores
            .get(&doc.id)
            .copied()
            .ok_or_else(|| Error::MissingScore {
                doc: doc.id.clone(),
                classifier: self.name.clone(),
            })
    }
}

pub const SCORE_HEADER: [&str; 4] = ["doc_id", "classifier", "p_human", "p_llm"];

/// Parse a score CSV with header `doc_id,classifier,p_human,p_llm`.
///
/// Pairs must sum to 1 within 1e-6 and are then renormalized so they sum
/// to exactly 1. Row numbers in errors are file line numbers.
pub fn read_scores(reader: impl Read) -> Result<ScoreFileClassifier> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != SCORE_HEADER {
        return Err(Error::ScoreRow {
            row: 1,
            message: format!("expected header `{}`", SCORE_HEADER.join(",")),
        });
    }
    let mut name: Option<String> = None;
    let mut scores = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let err = |message: String| Error::ScoreRow { row, message };
        if record.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", record.len())));
        }
        let doc_id = record[0].trim().to_string();
        let classifier = record[1].trim();
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| err(format!("`{s}` is not a number")))
        };
        let (h, l) = (parse(&record[2])?, parse(&record[3])?);
        if !(h.is_finite() && l.is_finite()) || h < 0.0 || l < 0.0 {
            return Err(err("probabilities must be finite and non-negative".into()));
        }
        let sum = h + l;
        if (sum - 1.0).abs() > 1e-6 {
            return Err(err(format!("probabilities sum to {sum}, not 1")));
        }
        match &name {
            None => name = Some(classifier.to_string()),
            Some(n) if n != classifier => {
                return Err(err(format!(
                    "mixed classifier names `{n}` and `{classifier}`"
                )))
            }
            _ => {}
        }
        let pv = if sum == 1.0 {
            ProbVector { p_human: h, p_llm: l }
        } else {
            ProbVector::from_llm(l / sum)
        };
        if scores.insert(doc_id.clone(), pv).is_some() {
            return Err(err(format!("duplicate doc_id `{doc_id}`")));
        }
    }
    let name = name.ok_or(Error::Empty("score file"))?;
    Ok(ScoreFileClassifier { name, scores })
}

pub fn load_scores(path: &Path) -> Result<ScoreFileClassifier> {
    read_scores(std::fs::File::open(path)?)
}

/// Checkpointable union of the classifier kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Ngram(NgramHeadClassifier),
    ScoreFile(ScoreFileClassifier),
}

impl BaseClassifier for Classifier {
    fn name(&self) -> &str {
        match self {
            Classifier::Ngram(c) => c.name(),
            Classifier::ScoreFile(c) => c.name(),
        }
    }

    fn predict_proba(&self, doc: &Document) -> Result<ProbVector> {
        match self {
            Classifier::Ngram(c) => c.predict_proba(doc),
            Classifier::ScoreFile(c) => c.predict_proba(doc),
        }
    }
}

/// Documents × classifiers grid of probability outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub doc_ids: Vec<String>,
    pub classifier_names: Vec<String>,
    /// One row per document, one cell per classifier.
    pub values: Vec<Vec<ProbVector>>,
    pub labels: Option<Vec<Label>>,
}

impl ScoreMatrix {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn width(&self) -> usize {
        self.classifier_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.doc_ids.len() {
            return Err(Error::Dimension {
                expected: self.doc_ids.len(),
                got: self.values.len(),
            });
        }
        if let Some(l) = &self.labels {
            if l.len() != self.doc_ids.len() {
                return Err(Error::Dimension {
                    expected: self.doc_ids.len(),
                    got: l.len(),
                });
            }
        }
        for row in &self.values {
            if row.len() != self.width() {
                return Err(Error::Dimension {
                    expected: self.width(),
                    got: row.len(),
                });
            }
            for pv in row {
                pv.validate()?;
            }
        }
        Ok(())
    }

    /// Column `j` as its own single-classifier matrix.
    pub fn column(&self, j: usize) -> Vec<ProbVector> {
        self.values.iter().map(|row| row[j]).collect()
    }
}

/// Score every document with every classifier, in corpus × classifier order.
pub fn score_matrix(
    classifiers: &[&dyn BaseClassifier],
    corpus: &LabeledCorpus,
) -> Result<ScoreMatrix> {
    let values = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            classifiers
                .iter()
                .map(|c| {
                    c.predict_proba(doc).map_err(|e| match e {
                        e @ Error::MissingScore { .. } => e,
                        other => Error::Invalid(format!(
                            "scoring document `{}` with `{}` failed: {other}",
                            doc.id,
                            c.name()
                        )),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = corpus
        .iter()
        .map(|d| d.label)
        .collect::<Option<Vec<_>>>();
    Ok(ScoreMatrix {
        doc_ids: corpus.iter().map(|d| d.id.clone()).collect(),
        classifier_names: classifiers.iter().map(|c| c.name().to_string()).collect(),
        values,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn small_spec(seed: u64) -> FeatureSpec {
        FeatureSpec {
            hash_dim: 1 << 12,
            hash_seed: seed,
            ..FeatureSpec::default()
        }
    }

    #[test]
    fn featurize_basics() {
        let spec = small_spec(1);
        let empty = featurize("", &spec);
        assert_eq!(empty.nnz(), 0);
        assert_eq!(empty.dim, 1 << 12);
        let a = featurize("The quick brown fox", &spec);
        assert_eq!(a, featurize("the QUICK brown fox", &spec));
        assert!((a.norm() - 1.0).abs() < 1e-9);
        assert!(a.indices.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn featurize_truncates_tokens() {
        let spec = FeatureSpec {
            max_tokens: 2,
            ..small_spec(1)
        };
        assert_eq!(featurize("a b c d", &spec), featurize("a b", &spec));
    }

    #[test]
    fn hash_is_pinned() {
        // Regression values for the documented hash; changing them breaks
        // every saved checkpoint.
        let spec = FeatureSpec {
            hash_dim: 1 << 18,
            char_ngrams: None,
            word_ngrams: Some(NgramRange::new(1, 1)),
            hash_seed: 7,
            max_tokens: 256,
        };
        let v = featurize("hello", &spec);
        assert_eq!(v.values, vec![1.0]);
        let seed_state = FNV_OFFSET ^ mix64(7);
        assert_eq!(v.indices, vec![bucket(b'w', b"hello", seed_state, (1 << 18) - 1)]);
        let mut h = seed_state;
        for b in b"whello" {
            h = (h ^ *b as u64).wrapping_mul(FNV_PRIME);
        }
        assert_eq!(v.indices[0] as u64, mix64(h) & ((1 << 18) - 1));
    }

    #[test]
    fn spec_validation() {
        assert!(FeatureSpec { hash_dim: 1000, ..small_spec(0) }.validate().is_err());
        assert!(FeatureSpec { max_tokens: 0, ..small_spec(0) }.validate().is_err());
        assert!(FeatureSpec {
            char_ngrams: Some(NgramRange::new(4, 2)),
            ..small_spec(0)
        }
        .validate()
        .is_err());
    }

    fn separable_corpus(n: usize, seed: u64) -> LabeledCorpus {
        let human = ["river", "garden", "bread", "kitchen", "autumn", "letter", "bicycle"];
        let llm = ["paradigm", "leverage", "synergy", "framework", "robust", "holistic", "pivotal"];
        let mut rng = SplitMix64::new(seed);
        let docs = (0..n)
            .map(|i| {
                let (words, label) = if i % 2 == 0 {
                    (&human, Label::Human)
                } else {
                    (&llm, Label::Llm)
                };
                let text: Vec<&str> = (0..12).map(|_| words[rng.below(words.len())]).collect();
                Document::new(format!("d{i}"), text.join(" "), Some(label))
            })
            .collect();
        LabeledCorpus::new("sep", docs).unwrap()
    }

    #[test]
    fn head_learns_disjoint_vocabularies() {
        let corpus = separable_corpus(200, 1);
        let spec = small_spec(3);
        let before = serde_json::to_vec(&spec).unwrap();
        let clf = train_head("h", &corpus, &spec, &HeadConfig::default()).unwrap();
        assert_eq!(serde_json::to_vec(&clf.spec).unwrap(), before);
        let correct = corpus
            .iter()
            .filter(|d| clf.predict_proba(d).unwrap().argmax() == d.label.unwrap())
            .count();
        assert!(correct as f64 / corpus.len() as f64 >= 0.99, "correct {correct}");

        let other = train_head("h2", &corpus, &small_spec(4), &HeadConfig::default()).unwrap();
        assert_ne!(clf.head.layers[0].weights, other.head.layers[0].weights);
    }

    #[test]
    fn empty_text_gives_bias_softmax() {
        let corpus = separable_corpus(20, 2);
        let clf = train_head("h", &corpus, &small_spec(3), &HeadConfig::default()).unwrap();
        let pv = clf.predict_text("").unwrap();
        let expected = mlp::softmax(&clf.head.layers[0].bias);
        assert_eq!([pv.p_human, pv.p_llm], [expected[0], expected[1]]);
        assert!((pv.p_human + pv.p_llm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_training_set_rejected() {
        let empty = LabeledCorpus::default();
        assert!(train_head("h", &empty, &small_spec(0), &HeadConfig::default()).is_err());
    }

    #[test]
    fn score_csv_parsing() {
        let clf = read_scores("doc_id,classifier,p_human,p_llm\nd1,deberta,0.3,0.7\n".as_bytes()).unwrap();
        assert_eq!(clf.name, "deberta");
        assert_eq!(clf.scores["d1"], ProbVector { p_human: 0.3, p_llm: 0.7 });

        let clf = read_scores("doc_id,classifier,p_human,p_llm\nd1,x,0.5000004,0.4999996\n".as_bytes()).unwrap();
        let pv = clf.scores["d1"];
        assert_eq!(pv.p_human + pv.p_llm, 1.0);

        let doc = Document::new("d7", "", None);
        let clf = read_scores("doc_id,classifier,p_human,p_llm\nd7,x,0.2,0.8\n".as_bytes()).unwrap();
        assert_eq!(clf.predict_proba(&doc).unwrap(), ProbVector { p_human: 0.2, p_llm: 0.8 });
        assert!(matches!(
            clf.predict_proba(&Document::new("nope", "", None)),
            Err(Error::MissingScore { doc, .. }) if doc == "nope"
        ));
    }

    #[test]
    fn score_csv_errors_cite_rows() {
        let cases = [
            "doc_id,classifier,p_human,p_llm\nd0,x,0.5,0.5\nd1,x,0.5,0.52\n",
            "doc_id,classifier,p_human,p_llm\nd0,x,0.5,0.5\nd1,x,-0.1,1.1\n",
            "doc_id,classifier,p_human,p_llm\nd0,x,0.5,0.5\nd0,x,0.4,0.6\n",
            "doc_id,classifier,p_human,p_llm\nd0,x,0.5,0.5\nd1,y,0.4,0.6\n",
            "doc_id,classifier,p_human,p_llm\nd0,x,0.5,0.5\nd1,x,abc,0.6\n",
        ];
        for src in cases {
            match read_scores(src.as_bytes()) {
                Err(Error::ScoreRow { row, .. }) => assert_eq!(row, 3, "{src}"),
                other => panic!("unexpected {other:?} for {src}"),
            }
        }
        assert!(matches!(
            read_scores("id,classifier,p_human,p_llm\n".as_bytes()),
            Err(Error::ScoreRow { row: 1, .. })
        ));
    }

    #[test]
    fn score_matrix_shapes() {
        let corpus = separable_corpus(3, 5);
        let native = train_head("n", &corpus, &small_spec(1), &HeadConfig::default()).unwrap();
        let file = ScoreFileClassifier {
            name: "ext".into(),
            scores: corpus
                .iter()
                .map(|d| (d.id.clone(), ProbVector::from_llm(0.25)))
                .collect(),
        };
        let list: Vec<&dyn BaseClassifier> = vec![&native, &file, &native, &file, &file];
        let m = score_matrix(&list, &corpus).unwrap();
        assert_eq!((m.rows(), m.width()), (3, 5));
        m.validate().unwrap();
        assert_eq!(m.labels.as_ref().unwrap().len(), 3);

        let one = score_matrix(&[&native as &dyn BaseClassifier], &corpus).unwrap();
        assert_eq!(one.values[0][0], native.predict_proba(&corpus.documents()[0]).unwrap());

        let partial = ScoreFileClassifier {
            name: "partial".into(),
            scores: BTreeMap::new(),
        };
        assert!(matches!(
            score_matrix(&[&partial as &dyn BaseClassifier], &corpus),
            Err(Error::MissingScore { classifier, .. }) if classifier == "partial"
        ));
    }

    #[test]
    fn prob_vector_rules() {
        assert_eq!(ProbVector::from_llm(0.5).argmax(), Label::Llm);
        assert_eq!(ProbVector::from_llm(0.2).argmax(), Label::Human);
        assert!(ProbVector::new(0.6, 0.6).is_err());
        assert!(ProbVector::new(-0.1, 1.1).is_err());
    }
}
