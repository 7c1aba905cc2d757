//! Decision trees, random forests and gradient-boosted trees for small
//! dense feature vectors (the stacked probability outputs).
//!
//! Splits are chosen greedily. Candidate thresholds are midpoints between
//! consecutive distinct sorted values; a sample goes left when
//! `x[feature] <= threshold`. Ties between equally good splits go to the
//! lowest feature index, then the lowest threshold. Classification trees
//! compare Gini scores as exact integer fractions so ties are detected
//! exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::ProbVector;
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// `[p_human, p_llm]` for classification trees, `[score]` for
    /// regression trees.
    Leaf { value: Vec<f64> },
}

/// Nodes stored in preorder; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf_value<'a>(&'a self, x: &[f64]) -> &'a [f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<ProbVector> {
        self.check_dim(x)?;
        ProbVector::from_probs(self.leaf_value(x))
    }

    pub fn predict_value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.leaf_value(x)[0])
    }

    /// The root split, if the tree has one.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            Node::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    All,
    /// `ceil(sqrt(d))` features per node.
    Sqrt,
    Count(usize),
}

impl FeatureSubsample {
    pub fn size(self, d: usize) -> usize {
        match self {
            FeatureSubsample::All => d,
            FeatureSubsample::Sqrt => ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1)),
            FeatureSubsample::Count(k) => k.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub feature_subsample: FeatureSubsample,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
            feature_subsample: FeatureSubsample::All,
        }
    }
}

enum Target<'a> {
    Class(&'a [Label]),
    Value(&'a [f64]),
}

/// Ordering key for a candidate split; larger is better.
#[derive(Clone, Copy)]
enum Score {
    /// `num / den` where the fraction is sum over children of
    /// `(c_human^2 + c_llm^2) / n_child`, which is minus the weighted Gini
    /// up to a constant.
    Gini { num: u128, den: u128 },
    /// Sum over children of `(sum y)^2 / n_child`.
    Sse(f64),
}

impl Score {
    fn beats(&self, other: &Score) -> bool {
        match (self, other) {
            (Score::Gini { num: a, den: b }, Score::Gini { num: c, den: d }) => a * d > c * b,
            (Score::Sse(a), Score::Sse(b)) => a > b,
            _ => unreachable!("scores of one tree share a criterion"),
        }
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    target: Target<'a>,
    config: TreeConfig,
    rng: Option<SplitMix64>,
    nodes: Vec<Node>,
    /// Sample indices reaching each leaf, keyed by node index.
    leaf_members: Vec<(usize, Vec<usize>)>,
}

impl Builder<'_> {
    fn leaf_value(&self, idx: &[usize]) -> Vec<f64> {
        match self.target {
            Target::Class(y) => {
                let llm = idx.iter().filter(|&&i| y[i] == Label::Llm).count() as f64;
                let n = idx.len() as f64;
                vec![(n - llm) / n, llm / n]
            }
            Target::Value(y) => vec![idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64],
        }
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        match self.target {
            Target::Class(y) => idx.iter().all(|&i| y[i] == y[idx[0]]),
            Target::Value(y) => idx.iter().all(|&i| y[i] == y[idx[0]]),
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x[0].len();
        let k = self.config.feature_subsample.size(d);
        match self.rng.as_mut() {
            Some(rng) if k < d => {
                let mut pool: Vec<usize> = (0..d).collect();
                for i in 0..k {
                    let j = i + rng.below(d - i);
                    pool.swap(i, j);
                }
                pool.truncate(k);
                pool.sort_unstable();
                pool
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<(usize, f64)> {
        let min_leaf = self.config.min_samples_leaf.max(1);
        let n = idx.len();
        if n < 2 * min_leaf {
            return None;
        }
        let features = self.candidate_features();
        let mut best: Option<(Score, usize, f64)> = None;
        let mut sorted = idx.to_vec();
        for f in features {
            let x = self.x;
            sorted.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
            // Prefix statistics over the sorted order.
            let (mut l_llm, mut l_sum) = (0u128, 0.0f64);
            let (t_llm, t_sum) = match self.target {
                Target::Class(y) => (sorted.iter().filter(|&&i| y[i] == Label::Llm).count() as u128, 0.0),
                Target::Value(y) => (0, sorted.iter().map(|&i| y[i]).sum()),
            };
            for pos in 1..n {
                let prev = sorted[pos - 1];
                match self.target {
                    Target::Class(y) => l_llm += u128::from(y[prev] == Label::Llm),
                    Target::Value(y) => l_sum += y[prev],
                }
                let (a, b) = (x[prev][f], x[sorted[pos]][f]);
                if pos < min_leaf || n - pos < min_leaf || a == b {
                    continue;
                }
                let (nl, nr) = (pos as u128, (n - pos) as u128);
                let score = match self.target {
                    Target::Class(_) => {
                        let l_h = nl - l_llm;
                        let (r_llm, r_h) = (t_llm - l_llm, nr - (t_llm - l_llm));
                        let sq_l = l_h * l_h + l_llm * l_llm;
                        let sq_r = r_h * r_h + r_llm * r_llm;
                        Score::Gini {
                            num: sq_l * nr + sq_r * nl,
                            den: nl * nr,
                        }
                    }
                    Target::Value(_) => {
                        let r_sum = t_sum - l_sum;
                        Score::Sse(l_sum * l_sum / nl as f64 + r_sum * r_sum / nr as f64)
                    }
                };
                let mut threshold = 0.5 * (a + b);
                if threshold >= b {
                    threshold = a;
                }
                let better = match &best {
                    None => true,
                    Some((s, _, _)) => score.beats(s),
                };
                if better {
                    best = Some((score, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let node = self.nodes.len();
        let at_limit = self.config.max_depth.is_some_and(|m| depth >= m);
        let split = if at_limit || self.is_pure(&idx) {
            None
        } else {
            self.best_split(&idx)
        };
        match split {
            None => {
                self.nodes.push(Node::Leaf {
                    value: self.leaf_value(&idx),
                });
                self.leaf_members.push((node, idx));
            }
            Some((feature, threshold)) => {
                self.nodes.push(Node::Leaf { value: Vec::new() });
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
                let left = self.build(l, depth + 1);
                let right = self.build(r, depth + 1);
                self.nodes[node] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
        }
        node
    }
}

fn check_matrix(x: &[Vec<f64>], n_targets: usize) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::Empty("feature matrix"));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::Invalid("feature vectors are empty".into()));
    }
    if let Some(row) = x.iter().find(|r| r.len() != d) {
        return Err(Error::Dimension {
            expected: d,
            got: row.len(),
        });
    }
    if n_targets != x.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: n_targets,
        });
    }
    Ok(d)
}

fn grow(
    x: &[Vec<f64>],
    target: Target<'_>,
    idx: Vec<usize>,
    config: &TreeConfig,
    rng: Option<SplitMix64>,
) -> (DecisionTree, Vec<(usize, Vec<usize>)>) {
    let mut b = Builder {
        x,
        target,
        config: *config,
        rng,
        nodes: Vec::new(),
        leaf_members: Vec::new(),
    };
    b.build(idx, 0);
    (
        DecisionTree {
            n_features: x[0].len(),
            nodes: b.nodes,
        },
        b.leaf_members,
    )
}

/// Gini classification tree over all rows.
pub fn fit_tree(x: &[Vec<f64>], y: &[Label], config: &TreeConfig) -> Result<DecisionTree> {
    check_matrix(x, y.len())?;
    Ok(grow(x, Target::Class(y), (0..x.len()).collect(), config, None).0)
}

/// Squared-error regression tree over all rows.
pub fn fit_regression_tree(x: &[Vec<f64>], y: &[f64], config: &TreeConfig) -> Result<DecisionTree> {
    check_matrix(x, y.len())?;
    Ok(grow(x, Target::Value(y), (0..x.len()).collect(), config, None).0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfConfig {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub feature_subsample: FeatureSubsample,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            max_depth: None,
            min_samples_leaf: 1,
            feature_subsample: FeatureSubsample::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub config: RfConfig,
    pub trees: Vec<DecisionTree>,
}

/// Bagged Gini trees. Tree `t` draws its bootstrap sample and per-node
/// feature subsets from `SplitMix64(derive_seed(seed, t))`.
pub fn rf_fit(x: &[Vec<f64>], y: &[Label], config: &RfConfig) -> Result<RandomForestModel> {
    check_matrix(x, y.len())?;
    if config.n_estimators == 0 {
        return Err(Error::Invalid("n_estimators must be at least 1".into()));
    }
    let tree_config = TreeConfig {
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf,
        feature_subsample: config.feature_subsample,
    };
    let n = x.len();
    let trees = (0..config.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = SplitMix64::new(derive_seed(config.seed, t as u64));
            let idx: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.below(n)).collect()
            } else {
                (0..n).collect()
            };
            grow(x, Target::Class(y), idx, &tree_config, Some(rng)).0
        })
        .collect();
    Ok(RandomForestModel {
        config: config.clone(),
        trees,
    })
}

/// Mean of the per-tree leaf distributions.
pub fn rf_predict_proba(model: &RandomForestModel, x: &[f64]) -> Result<ProbVector> {
    let (mut p_human, mut p_llm) = (0.0, 0.0);
    for tree in &model.trees {
        tree.check_dim(x)?;
        let leaf = tree.leaf_value(x);
        p_human += leaf[0];
        p_llm += leaf[1];
    }
    let t = model.trees.len() as f64;
    ProbVector::new(p_human / t, p_llm / t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub config: GbdtConfig,
    pub n_features: usize,
    /// Log-odds of the training base rate of the LLM class.
    pub init_score: f64,
    pub trees: Vec<DecisionTree>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Gradient boosting with logistic loss (LLM = 1).
///
/// Each round fits a squared-error regression tree to the residuals
/// `y - sigmoid(F)` and replaces every leaf value by one Newton step
/// `sum(r) / sum(p (1 - p))` over the samples in that leaf.
pub fn gbdt_fit(x: &[Vec<f64>], y: &[Label], config: &GbdtConfig) -> Result<GbdtModel> {
    let d = check_matrix(x, y.len())?;
    if !(config.learning_rate > 0.0) {
        return Err(Error::Invalid("learning_rate must be positive".into()));
    }
    let targets: Vec<f64> = y.iter().map(|l| l.index() as f64).collect();
    let rate = targets.iter().sum::<f64>() / targets.len() as f64;
    if rate == 0.0 || rate == 1.0 {
        return Err(Error::Invalid(
            "gradient boosting needs both classes in the training data".into(),
        ));
    }
    let init_score = (rate / (1.0 - rate)).ln();
    let tree_config = TreeConfig {
        max_depth: Some(config.max_depth),
        min_samples_leaf: config.min_samples_leaf,
        feature_subsample: FeatureSubsample::All,
    };

    let mut f = vec![init_score; x.len()];
    let mut trees = Vec::with_capacity(config.n_estimators);
    for _ in 0..config.n_estimators {
        let p: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
        let residuals: Vec<f64> = targets.iter().zip(&p).map(|(t, p)| t - p).collect();
        let (mut tree, leaves) = grow(
            x,
            Target::Value(&residuals),
            (0..x.len()).collect(),
            &tree_config,
            None,
        );
        for (node, members) in leaves {
            let num: f64 = members.iter().map(|&i| residuals[i]).sum();
            let den: f64 = members.iter().map(|&i| p[i] * (1.0 - p[i])).sum();
            let value = num / den.max(1e-12);
            for &i in &members {
                f[i] += config.learning_rate * value;
            }
            tree.nodes[node] = Node::Leaf { value: vec![value] };
        }
        trees.push(tree);
    }
    Ok(GbdtModel {
        config: config.clone(),
        n_features: d,
        init_score,
        trees,
    })
}

/// Raw additive score `init + lr * sum(tree(x))`.
pub fn gbdt_decision(model: &GbdtModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.n_features {
        return Err(Error::Dimension {
            expected: model.n_features,
            got: x.len(),
        });
    }
    let sum: f64 = model.trees.iter().map(|t| t.leaf_value(x)[0]).sum();
    Ok(model.init_score + model.config.learning_rate * sum)
}

pub fn gbdt_predict_proba(model: &GbdtModel, x: &[f64]) -> Result<ProbVector> {
    Ok(ProbVector::from_llm(sigmoid(gbdt_decision(model, x)?)))
}

/// Mean logistic loss of `p_llm` predictions.
pub fn log_loss(p_llm: &[f64], y: &[Label]) -> f64 {
    let eps = 1e-15;
    p_llm
        .iter()
        .zip(y)
        .map(|(&p, l)| {
            let p = p.clamp(eps, 1.0 - eps);
            match l {
                Label::Llm => -p.ln(),
                Label::Human => -(1.0 - p).ln(),
            }
        })
        .sum::<f64>()
        / y.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Human as H, Llm as L};

    fn col(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn single_split_fixture() {
        let t = fit_tree(&col(&[0.0, 1.0, 2.0, 3.0]), &[H, H, L, L], &TreeConfig::default()).unwrap();
        assert_eq!(t.root_split(), Some((0, 1.5)));
        assert_eq!(t.nodes.len(), 3);
        assert_eq!(t.leaf_value(&[0.0]), &[1.0, 0.0]);
        assert_eq!(t.leaf_value(&[3.0]), &[0.0, 1.0]);
    }

    #[test]
    fn pure_and_constant_inputs_make_one_leaf() {
        let t = fit_tree(&col(&[0.0, 1.0, 2.0]), &[L, L, L], &TreeConfig::default()).unwrap();
        assert_eq!(t.nodes, vec![Node::Leaf { value: vec![0.0, 1.0] }]);
        let t = fit_tree(&col(&[5.0; 4]), &[H, L, L, L], &TreeConfig::default()).unwrap();
        assert_eq!(t.nodes, vec![Node::Leaf { value: vec![0.25, 0.75] }]);
    }

    #[test]
    fn empty_and_ragged_input_rejected() {
        assert!(fit_tree(&[], &[], &TreeConfig::default()).is_err());
        assert!(fit_tree(&[vec![1.0], vec![1.0, 2.0]], &[H, L], &TreeConfig::default()).is_err());
        let t = fit_tree(&col(&[0.0, 1.0]), &[H, L], &TreeConfig::default()).unwrap();
        assert!(t.predict_proba(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn min_samples_leaf_respected() {
        let cfg = TreeConfig {
            min_samples_leaf: 2,
            ..TreeConfig::default()
        };
        let t = fit_tree(&col(&[0.0, 1.0, 2.0, 3.0, 4.0]), &[H, L, L, L, L], &cfg).unwrap();
        // The perfect split at 0.5 would leave a single sample on the left.
        assert_eq!(t.root_split(), Some((0, 1.5)));
    }

    #[test]
    fn forest_reduces_to_tree() {
        let x = vec![vec![0.1, 0.9], vec![0.4, 0.3], vec![0.8, 0.2], vec![0.5, 0.7], vec![0.9, 0.6]];
        let y = [H, L, L, H, L];
        let cfg = RfConfig {
            n_estimators: 1,
            bootstrap: false,
            feature_subsample: FeatureSubsample::All,
            ..RfConfig::default()
        };
        let forest = rf_fit(&x, &y, &cfg).unwrap();
        let tree = fit_tree(&x, &y, &TreeConfig::default()).unwrap();
        assert_eq!(forest.trees[0], tree);
        for probe in [[0.0, 0.0], [0.45, 0.5], [1.0, 1.0]] {
            assert_eq!(
                rf_predict_proba(&forest, &probe).unwrap(),
                tree.predict_proba(&probe).unwrap()
            );
        }
    }

    #[test]
    fn forest_defaults_and_determinism() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let y: Vec<Label> = (0..30).map(|i| if i % 3 == 0 { L } else { H }).collect();
        let a = rf_fit(&x, &y, &RfConfig::default()).unwrap();
        assert_eq!(a.trees.len(), 100);
        let b = rf_fit(&x, &y, &RfConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forest_averages_trees() {
        let leaf = |p: [f64; 2]| DecisionTree {
            n_features: 1,
            nodes: vec![Node::Leaf { value: p.to_vec() }],
        };
        let mut m = RandomForestModel {
            config: RfConfig::default(),
            trees: vec![leaf([1.0, 0.0]), leaf([0.0, 1.0])],
        };
        assert_eq!(rf_predict_proba(&m, &[0.0]).unwrap(), ProbVector::from_llm(0.5));
        m.trees = vec![leaf([0.0, 1.0]); 3];
        assert_eq!(rf_predict_proba(&m, &[0.0]).unwrap(), ProbVector::new(0.0, 1.0).unwrap());
    }

    #[test]
    fn gbdt_init_and_zero_rounds() {
        let x = col(&[0.0, 1.0, 2.0]);
        let y = [H, H, L];
        let cfg = GbdtConfig {
            n_estimators: 0,
            ..GbdtConfig::default()
        };
        let m = gbdt_fit(&x, &y, &cfg).unwrap();
        assert!((m.init_score - 0.5f64.ln()).abs() < 1e-15);
        for v in [-5.0, 1.0, 9.0] {
            let p = gbdt_predict_proba(&m, &[v]).unwrap();
            assert!((p.p_llm - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(gbdt_fit(&x, &[L, L, L], &GbdtConfig::default()).is_err());
    }

    #[test]
    fn gbdt_learns_separable_fixture() {
        let x = col(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let y = [H, H, H, H, L, L, L, L];
        let m = gbdt_fit(&x, &y, &GbdtConfig::default()).unwrap();
        assert_eq!(m.trees.len(), 100);
        let p: Vec<f64> = x.iter().map(|r| gbdt_predict_proba(&m, r).unwrap().p_llm).collect();
        assert!(p.iter().zip(&y).all(|(p, l)| (*p >= 0.5) == (*l == L)));
        assert!(log_loss(&p, &y) < log_loss(&[0.5; 8], &y));
    }

    #[test]
    fn sigmoid_is_monotone_and_bounded() {
        let mut prev = 0.0;
        for i in -30..=30 {
            let s = sigmoid(i as f64);
            assert!(s > prev && s < 1.0);
            prev = s;
        }
    }

    proptest! {
        #[test]
        fn unlimited_depth_fits_consistent_data(
            rows in prop::collection::vec((0u8..6, 0u8..6, any::<bool>()), 1..40)
        ) {
            let mut seen = std::collections::HashMap::new();
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (a, b, l) in rows {
                let label = *seen.entry((a, b)).or_insert(if l { L } else { H });
                x.push(vec![a as f64, b as f64]);
                y.push(label);
            }
            let t = fit_tree(&x, &y, &TreeConfig::default()).unwrap();
            for (r, l) in x.iter().zip(&y) {
                prop_assert_eq!(t.predict_proba(r).unwrap().argmax() == *l, true);
            }
        }

        #[test]
        fn forest_prediction_ignores_tree_order(seed: u64) {
            let x: Vec<Vec<f64>> = (0..25).map(|i| vec![(i * 7 % 11) as f64, (i % 5) as f64]).collect();
            let y: Vec<Label> = (0..25).map(|i| if (i * 3) % 4 == 0 { L } else { H }).collect();
            let cfg = RfConfig { n_estimators: 7, seed, ..RfConfig::default() };
            let m = rf_fit(&x, &y, &cfg).unwrap();
            let mut rev = m.clone();
            rev.trees.reverse();
            for r in &x {
                let a = rf_predict_proba(&m, r).unwrap().p_llm;
                let b = rf_predict_proba(&rev, r).unwrap().p_llm;
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
