//! Run configuration, read from a TOML file.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Every random seed in a run derives from the master `seed`:
//!
//! | consumer                  | seed                                   |
//! |---------------------------|----------------------------------------|
//! | train/test split          | `derive_seed(seed, 1)`                 |
//! | topic model               | `derive_seed(seed, 2)`                 |
//! | base classifier `i` head  | `derive_seed(derive_seed(seed, 3), i)` |
//! | meta-learners             | `MetaConfig::seeded(derive_seed(seed, 4))` |
//! | synthetic corpus          | `derive_seed(seed, 5)`                 |
//! | synthetic OOD corpus      | `derive_seed(seed, 6)`                 |

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stackdetect_core::analysis::TopicModelConfig;
use stackdetect_core::base::{FeatureSpec, HeadConfig, NgramRange};
use stackdetect_core::corpus::SplitSpec;
use stackdetect_core::ensemble::{EnsembleKind, MetaConfig};
use stackdetect_core::rng::derive_seed;
use stackdetect_core::trees::{FeatureSubsample, GbdtConfig, RfConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub data: DataConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSection>,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    pub base: Vec<BaseSpec>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    /// Directory relative paths resolve against; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Labeled JSONL corpus, split into train and in-distribution test.
    pub corpus: PathBuf,
    /// Report name of the in-distribution test set; defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Additional labeled test sets, evaluated as-is.
    #[serde(default)]
    pub ood: Vec<NamedPath>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPath {
    pub name: String,
    pub path: PathBuf,
}

/// When present, `run` first writes synthetic corpora to `data.corpus` and
/// the first `data.ood` path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub size: usize,
    #[serde(default)]
    pub ood_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub train_fraction: f64,
    pub stratified: bool,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub topics: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub infer_sweeps: usize,
    pub vocab_min_doc_freq: usize,
    pub vocab_max_size: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let t = TopicModelConfig::with_topics(10);
        Self {
            topics: t.topics,
            alpha: None,
            beta: t.beta,
            iterations: t.iterations,
            infer_sweeps: t.infer_sweeps,
            vocab_min_doc_freq: t.vocab_min_doc_freq,
            vocab_max_size: t.vocab_max_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    Ngram {
        name: String,
        #[serde(default = "default_hash_dim")]
        hash_dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        char_ngrams: Option<[usize; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        word_ngrams: Option<[usize; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hash_seed: Option<u64>,
        #[serde(default = "default_max_tokens")]
        max_tokens: usize,
        #[serde(default = "default_head_lr")]
        learning_rate: f64,
        #[serde(default = "default_head_batch")]
        batch_size: usize,
        #[serde(default = "default_head_epochs")]
        epochs: usize,
        #[serde(default = "default_feature_dropout")]
        feature_dropout: f64,
    },
    ScoreFile {
        name: String,
        path: PathBuf,
    },
}

fn default_hash_dim() -> usize {
    FeatureSpec::default().hash_dim
}
fn default_max_tokens() -> usize {
    FeatureSpec::default().max_tokens
}
fn default_head_lr() -> f64 {
    HeadConfig::default().train.learning_rate
}
fn default_head_batch() -> usize {
    HeadConfig::default().train.batch_size
}
fn default_head_epochs() -> usize {
    HeadConfig::default().train.epochs
}
fn default_feature_dropout() -> f64 {
    HeadConfig::default().feature_dropout
}

impl BaseSpec {
    pub fn name(&self) -> &str {
        match self {
            BaseSpec::Ngram { name, .. } | BaseSpec::ScoreFile { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub kinds: Vec<String>,
    pub neural_network: NnSection,
    pub random_forest: RfSection,
    pub gbdt: GbdtSection,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            kinds: EnsembleKind::ALL.iter().map(|k| k.slug().to_string()).collect(),
            neural_network: NnSection::default(),
            random_forest: RfSection::default(),
            gbdt: GbdtSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NnSection {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for NnSection {
    fn default() -> Self {
        let t = MetaConfig::default().neural_network;
        Self {
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            epochs: t.epochs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfSection {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
}

impl Default for RfSection {
    fn default() -> Self {
        let r = RfConfig::default();
        Self {
            n_estimators: r.n_estimators,
            max_depth: r.max_depth,
            min_samples_leaf: r.min_samples_leaf,
            bootstrap: r.bootstrap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbdtSection {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbdtSection {
    fn default() -> Self {
        let g = GbdtConfig::default();
        Self {
            n_estimators: g.n_estimators,
            learning_rate: g.learning_rate,
            max_depth: g.max_depth,
            min_samples_leaf: g.min_samples_leaf,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> CliResult<Self> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::invalid(format!("config: {e}")))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::invalid(format!("cannot read config {}: {e}", path.display()))
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, dir)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out)
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.resolve(&self.data.corpus)
    }

    /// Report name of the in-distribution test set.
    pub fn in_dist_name(&self) -> String {
        self.data.name.clone().unwrap_or_else(|| {
            self.data
                .corpus
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "in-distribution".into())
        })
    }

    /// SHA-256 over the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.split.train_fraction,
            seed: derive_seed(self.seed, 1),
            stratified: self.split.stratified,
        }
    }

    pub fn topic_config(&self) -> TopicModelConfig {
        let a = &self.analysis;
        let mut t = TopicModelConfig::with_topics(a.topics);
        if let Some(alpha) = a.alpha {
            t.alpha = alpha;
        }
        t.beta = a.beta;
        t.iterations = a.iterations;
        t.infer_sweeps = a.infer_sweeps;
        t.vocab_min_doc_freq = a.vocab_min_doc_freq;
        t.vocab_max_size = a.vocab_max_size;
        t.seed = derive_seed(self.seed, 2);
        t
    }

    pub fn synth_seeds(&self) -> (u64, u64) {
        (derive_seed(self.seed, 5), derive_seed(self.seed, 6))
    }

    /// Feature spec and head settings of native base classifier `i`.
    pub fn head_settings(&self, i: usize) -> Option<(FeatureSpec, HeadConfig)> {
        match &self.base[i] {
            BaseSpec::Ngram {
                hash_dim,
                char_ngrams,
                word_ngrams,
                hash_seed,
                max_tokens,
                learning_rate,
                batch_size,
                epochs,
                feature_dropout,
                ..
            } => {
                let spec = FeatureSpec {
                    hash_dim: *hash_dim,
                    char_ngrams: char_ngrams.map(|[a, b]| NgramRange::new(a, b)),
                    word_ngrams: word_ngrams.map(|[a, b]| NgramRange::new(a, b)),
                    hash_seed: hash_seed.unwrap_or(i as u64),
                    max_tokens: *max_tokens,
                };
                let mut head = HeadConfig::default();
                head.train.learning_rate = *learning_rate;
                head.train.batch_size = *batch_size;
                head.train.epochs = *epochs;
                head.train.seed = derive_seed(derive_seed(self.seed, 3), i as u64);
                head.feature_dropout = *feature_dropout;
                Some((spec, head))
            }
            BaseSpec::ScoreFile { .. } => None,
        }
    }

    pub fn ensemble_kinds(&self) -> Vec<EnsembleKind> {
        self.ensemble
            .kinds
            .iter()
            .filter_map(|k| EnsembleKind::parse(k))
            .collect()
    }

    pub fn meta_config(&self) -> MetaConfig {
        let e = &self.ensemble;
        let mut m = MetaConfig::default();
        m.neural_network.learning_rate = e.neural_network.learning_rate;
        m.neural_network.batch_size = e.neural_network.batch_size;
        m.neural_network.epochs = e.neural_network.epochs;
        m.random_forest = RfConfig {
            n_estimators: e.random_forest.n_estimators,
            max_depth: e.random_forest.max_depth,
            min_samples_leaf: e.random_forest.min_samples_leaf,
            feature_subsample: FeatureSubsample::Sqrt,
            bootstrap: e.random_forest.bootstrap,
            seed: 0,
        };
        m.gbdt = GbdtConfig {
            n_estimators: e.gbdt.n_estimators,
            learning_rate: e.gbdt.learning_rate,
            max_depth: e.gbdt.max_depth,
            min_samples_leaf: e.gbdt.min_samples_leaf,
        };
        m.seeded(derive_seed(self.seed, 4))
    }

    /// Check everything that can be checked up front and report all
    /// problems together. With `check_inputs`, referenced input files must
    /// exist (synthetic corpora count as present when `synth` is set).
    pub fn validate(&self, check_inputs: bool) -> CliResult<()> {
        let mut problems = Vec::new();
        let s = &self.split;
        if !(s.train_fraction > 0.0 && s.train_fraction < 1.0) {
            problems.push(format!(
                "split.train_fraction must lie strictly between 0 and 1, got {}",
                s.train_fraction
            ));
        }
        if let Err(e) = self.topic_config().validate() {
            problems.push(format!("analysis: {e}"));
        }
        if self.analysis.infer_sweeps == 0 {
            problems.push("analysis.infer_sweeps must be at least 1".into());
        }
        if let Some(sy) = &self.synth {
            if sy.size < 10 {
                problems.push(format!("synth.size must be at least 10, got {}", sy.size));
            }
            if self.data.ood.is_empty() && sy.ood_size > 0 {
                problems.push("synth.ood_size is set but data.ood names no output path".into());
            }
            if !self.data.ood.is_empty() && sy.ood_size < 10 {
                problems.push(format!("synth.ood_size must be at least 10, got {}", sy.ood_size));
            }
            if self.data.ood.len() > 1 {
                problems.push("synth can generate only one OOD corpus; list one data.ood entry".into());
            }
        }
        let mut dataset_names = BTreeSet::from([self.in_dist_name()]);
        for o in &self.data.ood {
            if o.name.trim().is_empty() {
                problems.push("data.ood entries need a non-empty name".into());
            } else if !dataset_names.insert(o.name.clone()) {
                problems.push(format!("dataset name `{}` is used twice", o.name));
            }
        }
        if check_inputs && self.synth.is_none() {
            let mut paths = vec![self.data.corpus.clone()];
            paths.extend(self.data.ood.iter().map(|o| o.path.clone()));
            for p in paths {
                if !self.resolve(&p).is_file() {
                    problems.push(format!("input file {} does not exist", self.resolve(&p).display()));
                }
            }
        }

        if self.base.is_empty() {
            problems.push("at least one [[base]] classifier is required".into());
        }
        let mut names = BTreeSet::new();
        for (i, b) in self.base.iter().enumerate() {
            let name = b.name();
            if name.trim().is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                problems.push(format!(
                    "base[{i}]: name `{name}` must be non-empty and use only letters, digits, `-`, `_` or `.`"
                ));
            }
            if !names.insert(name.to_string()) {
                problems.push(format!("base[{i}]: duplicate classifier name `{name}`"));
            }
            match b {
                BaseSpec::Ngram {
                    batch_size,
                    epochs,
                    learning_rate,
                    feature_dropout,
                    ..
                } => {
                    let (spec, _) = self.head_settings(i).expect("ngram");
                    if let Err(e) = spec.validate() {
                        problems.push(format!("base[{i}] `{name}`: {e}"));
                    }
                    if *batch_size == 0 || *epochs == 0 || !(*learning_rate > 0.0) {
                        problems.push(format!(
                            "base[{i}] `{name}`: batch_size, epochs and learning_rate must be positive"
                        ));
                    }
                    if !(0.0..1.0).contains(feature_dropout) {
                        problems.push(format!("base[{i}] `{name}`: feature_dropout must lie in [0, 1)"));
                    }
                }
                BaseSpec::ScoreFile { path, .. } => {
                    if check_inputs && !self.resolve(path).is_file() {
                        problems.push(format!(
                            "base[{i}] `{name}`: score file {} does not exist",
                            self.resolve(path).display()
                        ));
                    }
                }
            }
        }

        let mut kinds = BTreeSet::new();
        for k in &self.ensemble.kinds {
            match EnsembleKind::parse(k) {
                Some(kind) => {
                    if !kinds.insert(kind) {
                        problems.push(format!("ensemble.kinds lists `{k}` twice"));
                    }
                }
                None => problems.push(format!(
                    "ensemble.kinds: unknown kind `{k}` (expected hard_voting, neural_network, random_forest or gbdt)"
                )),
            }
        }
        let e = &self.ensemble;
        if e.neural_network.batch_size == 0 || e.neural_network.epochs == 0 || !(e.neural_network.learning_rate > 0.0) {
            problems.push("ensemble.neural_network: batch_size, epochs and learning_rate must be positive".into());
        }
        if e.random_forest.n_estimators == 0 || e.random_forest.min_samples_leaf == 0 {
            problems.push("ensemble.random_forest: n_estimators and min_samples_leaf must be positive".into());
        }
        if e.gbdt.n_estimators == 0 || e.gbdt.min_samples_leaf == 0 || !(e.gbdt.learning_rate > 0.0) {
            problems.push("ensemble.gbdt: n_estimators, min_samples_leaf and learning_rate must be positive".into());
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(problems))
        }
    }
}
