//! Ensembles over frozen base-classifier outputs: hard voting, and
//! neural-network, random-forest and GBDT meta-learners trained on the
//! stacked probabilities.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::base::{ProbVector, ScoreMatrix};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::mlp::{self, Activation, LayerSpec, MlpModel, TrainConfig};
use crate::rng::derive_seed;
use crate::trees::{self, GbdtConfig, GbdtModel, RandomForestModel, RfConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    HardVoting,
    NeuralNetwork,
    RandomForest,
    Gbdt,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 4] = [
        EnsembleKind::HardVoting,
        EnsembleKind::NeuralNetwork,
        EnsembleKind::RandomForest,
        EnsembleKind::Gbdt,
    ];

    pub fn is_adaptive(self) -> bool {
        self != EnsembleKind::HardVoting
    }

    pub fn slug(self) -> &'static str {
        match self {
            EnsembleKind::HardVoting => "hard_voting",
            EnsembleKind::NeuralNetwork => "neural_network",
            EnsembleKind::RandomForest => "random_forest",
            EnsembleKind::Gbdt => "gbdt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.slug() == s)
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleKind::HardVoting => "Hard Voting",
            EnsembleKind::NeuralNetwork => "Neural Network",
            EnsembleKind::RandomForest => "Random Forest",
            EnsembleKind::Gbdt => "GBDT",
        })
    }
}

/// `[p_human_1, p_llm_1, ..., p_human_N, p_llm_N]`.
pub fn meta_features(row: &[ProbVector]) -> Vec<f64> {
    row.iter().flat_map(|p| [p.p_human, p.p_llm]).collect()
}

/// Majority vote of per-classifier argmaxes.
///
/// A classifier at exactly 0.5/0.5 votes LLM. A tied vote goes to the
/// class with the larger summed probability, and to LLM if those tie too.
pub fn hard_vote(probs: &[ProbVector]) -> Result<Label> {
    if probs.is_empty() {
        return Err(Error::Empty("vote"));
    }
    let llm_votes = probs.iter().filter(|p| p.argmax() == Label::Llm).count();
    let human_votes = probs.len() - llm_votes;
    Ok(match llm_votes.cmp(&human_votes) {
        std::cmp::Ordering::Greater => Label::Llm,
        std::cmp::Ordering::Less => Label::Human,
        std::cmp::Ordering::Equal => {
            let sum_h: f64 = probs.iter().map(|p| p.p_human).sum();
            let sum_l: f64 = probs.iter().map(|p| p.p_llm).sum();
            if sum_h > sum_l {
                Label::Human
            } else {
                Label::Llm
            }
        }
    })
}

fn mean_prob(probs: &[ProbVector]) -> ProbVector {
    ProbVector::from_llm(probs.iter().map(|p| p.p_llm).sum::<f64>() / probs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    None,
    Mlp(MlpModel),
    Forest(RandomForestModel),
    Gbdt(GbdtModel),
}

/// Checkpoint layout: `{kind, classifier_order, payload}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub kind: EnsembleKind,
    pub classifier_order: Vec<String>,
    pub payload: Payload,
}

impl EnsembleModel {
    pub fn hard_voting(classifier_order: Vec<String>) -> Result<Self> {
        let m = Self {
            kind: EnsembleKind::HardVoting,
            classifier_order,
            payload: Payload::None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classifier_order.is_empty() {
            return Err(Error::Invalid("ensemble has no base classifiers".into()));
        }
        let matches = matches!(
            (self.kind, &self.payload),
            (EnsembleKind::HardVoting, Payload::None)
                | (EnsembleKind::NeuralNetwork, Payload::Mlp(_))
                | (EnsembleKind::RandomForest, Payload::Forest(_))
                | (EnsembleKind::Gbdt, Payload::Gbdt(_))
        );
        if !matches {
            return Err(Error::Invalid(format!(
                "payload does not match ensemble kind {}",
                self.kind.slug()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaConfig {
    pub neural_network: TrainConfig,
    pub random_forest: RfConfig,
    pub gbdt: GbdtConfig,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            neural_network: TrainConfig {
                learning_rate: 1e-2,
                batch_size: 128,
                epochs: 10,
                max_steps: None,
                seed: 0,
                shuffle: true,
            },
            random_forest: RfConfig::default(),
            gbdt: GbdtConfig::default(),
        }
    }
}

impl MetaConfig {
    /// Same hyperparameters with every seed derived from `seed`.
    pub fn seeded(mut self, seed: u64) -> Self {
        self.neural_network.seed = derive_seed(seed, 0);
        self.random_forest.seed = derive_seed(seed, 1);
        self
    }
}

/// `2N → 32 (ReLU, dropout 0.5) → 16 (ReLU, dropout 0.5) → 2 (softmax)`.
pub fn meta_network(n_classifiers: usize, seed: u64) -> Result<MlpModel> {
    MlpModel::new(
        2 * n_classifiers,
        0.0,
        &[
            LayerSpec::new(32, Activation::Relu, 0.5),
            LayerSpec::new(16, Activation::Relu, 0.5),
            LayerSpec::new(2, Activation::Softmax, 0.0),
        ],
        seed,
    )
}

/// Fit a meta-learner on a labeled score matrix. The matrix itself is only
/// read; base classifiers are not involved.
pub fn train_meta(kind: EnsembleKind, scores: &ScoreMatrix, config: &MetaConfig) -> Result<EnsembleModel> {
    scores.validate()?;
    let labels = scores
        .labels
        .as_ref()
        .ok_or_else(|| Error::Invalid("meta-learner training needs labeled scores".into()))?;
    if scores.rows() == 0 || scores.width() == 0 {
        return Err(Error::Empty("score matrix"));
    }
    let x: Vec<Vec<f64>> = scores.values.iter().map(|r| meta_features(r)).collect();
    let payload = match kind {
        EnsembleKind::HardVoting => {
            return Err(Error::Invalid(
                "hard voting has no parameters; build it with EnsembleModel::hard_voting".into(),
            ))
        }
        EnsembleKind::NeuralNetwork => {
            let cfg = &config.neural_network;
            let mut net = meta_network(scores.width(), derive_seed(cfg.seed, 2))?;
            let data: Vec<(Vec<f64>, usize)> = x
                .into_iter()
                .zip(labels.iter().map(|l| l.index()))
                .collect();
            mlp::train(&mut net, &data, cfg)?;
            Payload::Mlp(net)
        }
        EnsembleKind::RandomForest => Payload::Forest(trees::rf_fit(&x, labels, &config.random_forest)?),
        EnsembleKind::Gbdt => Payload::Gbdt(trees::gbdt_fit(&x, labels, &config.gbdt)?),
    };
    Ok(EnsembleModel {
        kind,
        classifier_order: scores.classifier_names.clone(),
        payload,
    })
}

/// Predict one row whose cells follow `names`.
pub fn ensemble_predict(
    model: &EnsembleModel,
    names: &[String],
    row: &[ProbVector],
) -> Result<(Label, ProbVector)> {
    if names != model.classifier_order.as_slice() {
        return Err(Error::ClassifierOrder {
            expected: model.classifier_order.clone(),
            got: names.to_vec(),
        });
    }
    if row.len() != names.len() {
        return Err(Error::Dimension {
            expected: names.len(),
            got: row.len(),
        });
    }
    let pv = match &model.payload {
        Payload::None => return Ok((hard_vote(row)?, mean_prob(row))),
        Payload::Mlp(net) => ProbVector::from_probs(&net.predict(&meta_features(row))?)?,
        Payload::Forest(f) => trees::rf_predict_proba(f, &meta_features(row))?,
        Payload::Gbdt(g) => trees::gbdt_predict_proba(g, &meta_features(row))?,
    };
    let label = if pv.p_llm >= 0.5 { Label::Llm } else { Label::Human };
    Ok((label, pv))
}

/// Predictions for every row of a score matrix.
pub fn predict_matrix(model: &EnsembleModel, scores: &ScoreMatrix) -> Result<Vec<(Label, ProbVector)>> {
    scores
        .values
        .iter()
        .map(|row| ensemble_predict(model, &scores.classifier_names, row))
        .collect()
}
