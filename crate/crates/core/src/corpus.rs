//! Labeled text corpora: JSONL ingestion, class counts and seeded
//! stratified train/test splits.
//!
//! Corpus files hold one JSON object per line:
//!
//! ```text
//! {"id": "d1", "text": "...", "label": "human" | "llm", "source": "..."}
//! ```
//!
//! `label` and `source` are optional. Blank lines are skipped.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Human,
    Llm,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Human, Label::Llm];

    /// Class index used by every model: Human = 0, LLM = 1.
    pub fn index(self) -> usize {
        match self {
            Label::Human => 0,
            Label::Llm => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::Human),
            1 => Some(Label::Llm),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Human => "human",
            Label::Llm => "llm",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "human" => Some(Label::Human),
            "llm" => Some(Label::Llm),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Human => "Human",
            Label::Llm => "LLM",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<Label>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            label,
            source: None,
        }
    }

    pub fn require_label(&self) -> Result<Label> {
        self.label.ok_or_else(|| Error::Unlabeled(self.id.clone()))
    }
}

/// Ordered collection of documents with unique, non-empty ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledCorpus {
    pub name: String,
    documents: Vec<Document>,
}

impl LabeledCorpus {
    pub fn new(name: impl Into<String>, documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if doc.id.is_empty() {
                return Err(Error::Invalid("document id must be non-empty".into()));
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
        }
        Ok(Self {
            name: name.into(),
            documents,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.documents.iter()
    }

    /// Labels in document order; fails on the first unlabeled document.
    pub fn labels(&self) -> Result<Vec<Label>> {
        self.documents.iter().map(Document::require_label).collect()
    }

    pub fn ensure_labeled(&self) -> Result<()> {
        self.labels().map(|_| ())
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for doc in &self.documents {
            serde_json::to_writer(&mut out, doc)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

impl<'a> IntoIterator for &'a LabeledCorpus {
    type Item = &'a Document;
    type IntoIter = std::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.documents.iter()
    }
}

#[derive(Deserialize)]
struct RawDocument {
    id: String,
    text: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    source: Option<String>,
}

/// Parse one JSONL corpus line. `line_no` is 1-based and only used for errors.
fn parse_line(line: &str, line_no: usize) -> Result<Document> {
    let raw: RawDocument = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    let label = match raw.label.as_deref() {
        None => None,
        Some(s) => Some(Label::parse(s).ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("unknown label `{s}` (expected \"human\" or \"llm\")"),
        })?),
    };
    Ok(Document {
        id: raw.id,
        text: raw.text,
        label,
        source: raw.source,
    })
}

pub fn read_jsonl(reader: impl BufRead, name: impl Into<String>) -> Result<LabeledCorpus> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_line(line, i + 1)?;
        if doc.id.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: "empty id".into(),
            });
        }
        if !seen.insert(doc.id.clone()) {
            return Err(Error::DuplicateId(doc.id));
        }
        docs.push(doc);
    }
    LabeledCorpus::new(name, docs)
}

/// Load a JSONL corpus. The corpus name is the file stem.
pub fn ingest_jsonl(path: &Path) -> Result<LabeledCorpus> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_jsonl(BufReader::new(File::open(path)?), name)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Invalid(format!(
                "train_fraction must lie strictly in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Split into (train, test).
///
/// Within each group (each class when stratified, the whole corpus otherwise)
/// document indices are sorted by id, shuffled with a [`SplitMix64`] stream
/// seeded by `spec.seed` (one fresh stream per group, Human first), and the
/// first `floor(train_fraction * n)` go to train. Both outputs keep the
/// original corpus order.
pub fn stratified_split(
    corpus: &LabeledCorpus,
    spec: &SplitSpec,
) -> Result<(LabeledCorpus, LabeledCorpus)> {
    spec.validate()?;
    let labels = corpus.labels()?;

    let groups: Vec<Vec<usize>> = if spec.stratified {
        Label::ALL
            .iter()
            .map(|&l| (0..labels.len()).filter(|&i| labels[i] == l).collect())
            .collect()
    } else {
        vec![(0..labels.len()).collect()]
    };

    let mut in_train = vec![false; corpus.len()];
    for (g, mut members) in groups.into_iter().enumerate() {
        if spec.stratified && members.len() < 2 {
            return Err(Error::EmptyClass(if g == 0 { "Human" } else { "LLM" }));
        }
        members.sort_by(|&a, &b| corpus.documents[a].id.cmp(&corpus.documents[b].id));
        let mut rng = SplitMix64::new(spec.seed);
        rng.shuffle(&mut members);
        let n_train = (spec.train_fraction * members.len() as f64).floor() as usize;
        for &i in &members[..n_train] {
            in_train[i] = true;
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (doc, &t) in corpus.documents.iter().zip(&in_train) {
        if t {
            train.push(doc.clone());
        } else {
            test.push(doc.clone());
        }
    }
    Ok((
        LabeledCorpus {
            name: format!("{}-train", corpus.name),
            documents: train,
        },
        LabeledCorpus {
            name: format!("{}-test", corpus.name),
            documents: test,
        },
    ))
}

/// Exact (human, llm) counts.
pub fn class_balance(corpus: &LabeledCorpus) -> Result<(usize, usize)> {
    let mut counts = (0, 0);
    for doc in corpus {
        match doc.require_label()? {
            Label::Human => counts.0 += 1,
            Label::Llm => counts.1 += 1,
        }
    }
    Ok(counts)
}
