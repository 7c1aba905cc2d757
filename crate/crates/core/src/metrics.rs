//! Per-class recall, precision and F1 plus accuracy, and comparison tables
//! across methods and datasets.
//!
//! Zero denominators yield 0 rather than NaN.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Binary confusion counts with LLM as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same counts with Human as the positive class.
    pub fn flipped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

pub fn confusion(preds: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
    if preds.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: preds.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in preds.iter().zip(truth) {
        match (p, t) {
            (Label::Llm, Label::Llm) => cm.tp += 1,
            (Label::Llm, Label::Human) => cm.fp += 1,
            (Label::Human, Label::Llm) => cm.fn_ += 1,
            (Label::Human, Label::Human) => cm.tn += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl ClassMetrics {
    fn positive(cm: &ConfusionMatrix) -> Self {
        let precision = ratio(cm.tp, cm.tp + cm.fp);
        let recall = ratio(cm.tp, cm.tp + cm.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            recall,
            precision,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub dataset: String,
    pub human: ClassMetrics,
    pub llm: ClassMetrics,
    pub accuracy: f64,
    pub n: u64,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn class(&self, label: Label) -> ClassMetrics {
        match label {
            Label::Human => self.human,
            Label::Llm => self.llm,
        }
    }
}

pub fn per_class_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    if cm.total() == 0 {
        return Err(Error::Empty("confusion matrix"));
    }
    Ok(MetricsReport {
        method: String::new(),
        dataset: String::new(),
        human: ClassMetrics::positive(&cm.flipped()),
        llm: ClassMetrics::positive(cm),
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        n: cm.total(),
        confusion: *cm,
    })
}

/// Confusion, metrics and names in one step.
pub fn evaluate(method: &str, dataset: &str, preds: &[Label], truth: &[Label]) -> Result<MetricsReport> {
    let mut r = per_class_metrics(&confusion(preds, truth)?)?;
    r.method = method.to_string();
    r.dataset = dataset.to_string();
    Ok(r)
}

/// Method grouping used for ordering and averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodGroup {
    Single,
    NonAdaptive,
    Adaptive,
}

impl MethodGroup {
    pub fn title(self) -> &'static str {
        match self {
            MethodGroup::Single => "Single Classifier",
            MethodGroup::NonAdaptive => "Non-adaptive Ensemble",
            MethodGroup::Adaptive => "Adaptive Ensemble",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub group: MethodGroup,
    /// Accuracy per dataset, in `ComparisonTable::datasets` order.
    pub accuracy: Vec<Option<f64>>,
    /// Per dataset: whether this row holds the best accuracy.
    pub best: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAverage {
    pub group: MethodGroup,
    pub accuracy: Vec<Option<f64>>,
}

/// Method × dataset accuracy table plus the full per-class reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub datasets: Vec<String>,
    pub rows: Vec<MethodRow>,
    pub averages: Vec<GroupAverage>,
    pub reports: Vec<MetricsReport>,
}

/// Build the comparison table. Methods and datasets keep first-seen order;
/// `groups` assigns each method to a group (missing → single classifier).
pub fn report_table(
    reports: &[MetricsReport],
    groups: &BTreeMap<String, MethodGroup>,
) -> ComparisonTable {
    let mut datasets: Vec<String> = Vec::new();
    let mut methods: Vec<String> = Vec::new();
    for r in reports {
        if !datasets.contains(&r.dataset) {
            datasets.push(r.dataset.clone());
        }
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }
    let acc = |m: &str, d: &str| {
        reports
            .iter()
            .find(|r| r.method == m && r.dataset == d)
            .map(|r| r.accuracy)
    };
    let best: Vec<Option<f64>> = datasets
        .iter()
        .map(|d| {
            methods
                .iter()
                .filter_map(|m| acc(m, d))
                .fold(None, |b: Option<f64>, a| Some(b.map_or(a, |b| b.max(a))))
        })
        .collect();
    let rows: Vec<MethodRow> = methods
        .iter()
        .map(|m| {
            let accuracy: Vec<Option<f64>> = datasets.iter().map(|d| acc(m, d)).collect();
            MethodRow {
                method: m.clone(),
                group: groups.get(m).copied().unwrap_or(MethodGroup::Single),
                best: accuracy.iter().zip(&best).map(|(a, b)| a.is_some() && a == b).collect(),
                accuracy,
            }
        })
        .collect();
    let mut averages = Vec::new();
    for group in [MethodGroup::Single, MethodGroup::NonAdaptive, MethodGroup::Adaptive] {
        let members: Vec<&MethodRow> = rows.iter().filter(|r| r.group == group).collect();
        if members.is_empty() {
            continue;
        }
        let accuracy = (0..datasets.len())
            .map(|j| {
                let vals: Vec<f64> = members.iter().filter_map(|r| r.accuracy[j]).collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect();
        averages.push(GroupAverage { group, accuracy });
    }
    ComparisonTable {
        datasets,
        rows,
        averages,
        reports: reports.to_vec(),
    }
}

fn fmt_acc(a: Option<f64>, best: bool) -> String {
    match a {
        None => "-".into(),
        Some(v) if best => format!("**{v:.3}**"),
        Some(v) => format!("{v:.3}"),
    }
}

impl ComparisonTable {
    /// Per-class detail table for one dataset (Human R/P/F1, LLM R/P/F1,
    /// accuracy).
    pub fn detail_markdown(&self, dataset: &str) -> String {
        let mut s = String::new();
        s.push_str("| Strategy | Method | Human Recall | Human Precision | Human F1 | LLM Recall | LLM Precision | LLM F1 | Accuracy |\n");
        s.push_str("|---|---|---|---|---|---|---|---|---|\n");
        for row in &self.rows {
            if let Some(r) = self
                .reports
                .iter()
                .find(|r| r.method == row.method && r.dataset == dataset)
            {
                let _ = writeln!(
                    s,
                    "| {} | {} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} |",
                    row.group.title(),
                    row.method,
                    r.human.recall,
                    r.human.precision,
                    r.human.f1,
                    r.llm.recall,
                    r.llm.precision,
                    r.llm.f1,
                    r.accuracy
                );
            }
        }
        s
    }

    /// Accuracy per method and dataset; best per column in bold.
    pub fn accuracy_markdown(&self) -> String {
        let mut s = String::from("| Strategy | Method |");
        for d in &self.datasets {
            let _ = write!(s, " {d} |");
        }
        s.push_str("\n|---|---|");
        s.push_str(&"---|".repeat(self.datasets.len()));
        s.push('\n');
        for row in &self.rows {
            let _ = write!(s, "| {} | {} |", row.group.title(), row.method);
            for (a, b) in row.accuracy.iter().zip(&row.best) {
                let _ = write!(s, " {} |", fmt_acc(*a, *b));
            }
            s.push('\n');
        }
        s
    }

    /// Mean accuracy per method group.
    pub fn average_markdown(&self) -> String {
        let mut s = String::from("| Group |");
        for d in &self.datasets {
            let _ = write!(s, " {d} |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---|".repeat(self.datasets.len()));
        s.push('\n');
        for avg in &self.averages {
            let _ = write!(s, "| {} |", avg.group.title());
            for a in &avg.accuracy {
                let _ = write!(s, " {} |", fmt_acc(*a, false));
            }
            s.push('\n');
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        for d in &self.datasets {
            let _ = writeln!(s, "## Detection performance: {d}\n");
            s.push_str(&self.detail_markdown(d));
            s.push('\n');
        }
        s.push_str("## Accuracy comparison\n\n");
        s.push_str(&self.accuracy_markdown());
        s.push_str("\n## Average accuracy by strategy\n\n");
        s.push_str(&self.average_markdown());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Human as H, Llm as L};

    #[test]
    fn counts() {
        let truth = [L, L, L, H, H, H, H, H, H, H];
        let preds = [L, L, H, L, H, H, H, H, H, H];
        let cm = confusion(&preds, &truth).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 2, fp: 1, fn_: 1, tn: 6 });
        let same = confusion(&truth, &truth).unwrap();
        assert_eq!((same.fp, same.fn_), (0, 0));
        let inverted: Vec<Label> = truth.iter().map(|l| if *l == L { H } else { L }).collect();
        let inv = confusion(&inverted, &truth).unwrap();
        assert_eq!((inv.tp, inv.tn), (0, 0));
        assert!(confusion(&[L], &[L, H]).is_err());
        assert!(confusion(&[], &[]).is_err());
    }

    #[test]
    fn hand_computed_metrics() {
        let r = per_class_metrics(&ConfusionMatrix { tp: 2, fp: 1, fn_: 1, tn: 6 }).unwrap();
        assert_eq!(r.llm.precision, 2.0 / 3.0);
        assert_eq!(r.llm.recall, 2.0 / 3.0);
        assert!((r.llm.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.accuracy, 0.8);
        assert_eq!(r.human.precision, 6.0 / 7.0);
        assert_eq!(r.human.recall, 6.0 / 7.0);

        let perfect = per_class_metrics(&ConfusionMatrix { tp: 3, fp: 0, fn_: 0, tn: 4 }).unwrap();
        for c in [perfect.human, perfect.llm] {
            assert_eq!((c.recall, c.precision, c.f1), (1.0, 1.0, 1.0));
        }
        let none = per_class_metrics(&ConfusionMatrix { tp: 0, fp: 0, fn_: 2, tn: 3 }).unwrap();
        assert_eq!((none.llm.precision, none.llm.f1), (0.0, 0.0));
        assert!(per_class_metrics(&ConfusionMatrix::default()).is_err());
    }

    fn report(method: &str, dataset: &str, acc: f64) -> MetricsReport {
        MetricsReport {
            method: method.into(),
            dataset: dataset.into(),
            human: ClassMetrics::default(),
            llm: ClassMetrics::default(),
            accuracy: acc,
            n: 10,
            confusion: ConfusionMatrix::default(),
        }
    }

    #[test]
    fn table_shape() {
        let methods = ["a", "b", "c", "d", "e", "Hard Voting", "Neural Network", "Random Forest", "GBDT"];
        let mut groups = BTreeMap::new();
        groups.insert("Hard Voting".to_string(), MethodGroup::NonAdaptive);
        for m in &methods[6..] {
            groups.insert(m.to_string(), MethodGroup::Adaptive);
        }
        let mut reports = Vec::new();
        for (i, m) in methods.iter().enumerate() {
            reports.push(report(m, "in", 0.8 + i as f64 * 0.01));
            reports.push(report(m, "ood", 0.6 + (i % 4) as f64 * 0.01));
        }
        let t = report_table(&reports, &groups);
        assert_eq!(t.rows.len(), 9);
        assert_eq!(t.datasets, vec!["in", "ood"]);
        assert!(t.rows[8].best[0]);
        assert_eq!(t.rows.iter().filter(|r| r.best[1]).count(), 2);
        assert_eq!(t.averages.len(), 3);
        let single = t.averages[0].accuracy[0].unwrap();
        assert!((single - 0.82).abs() < 1e-12);
        let md = t.to_markdown();
        assert!(md.contains("**0.880**"));
        assert_eq!(t.accuracy_markdown().lines().count(), 11);

        let one = report_table(&[report("x", "in", 0.5)], &BTreeMap::new());
        assert_eq!(one.rows.len(), 1);
    }

    proptest! {
        #[test]
        fn accuracy_decomposes_into_recalls(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500, tn in 0u64..500) {
            let cm = ConfusionMatrix { tp, fp, fn_, tn };
            prop_assume!(cm.total() > 0);
            let r = per_class_metrics(&cm).unwrap();
            let n_llm = (tp + fn_) as f64;
            let n_human = (tn + fp) as f64;
            let recomposed = (r.llm.recall * n_llm + r.human.recall * n_human) / cm.total() as f64;
            prop_assert!((recomposed - r.accuracy).abs() < 1e-12);
            for c in [r.human, r.llm] {
                for v in [c.recall, c.precision, c.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }

        #[test]
        fn metrics_ignore_pair_order(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60), seed: u64) {
            let to = |b: bool| if b { L } else { H };
            let preds: Vec<Label> = pairs.iter().map(|p| to(p.0)).collect();
            let truth: Vec<Label> = pairs.iter().map(|p| to(p.1)).collect();
            let mut shuffled = pairs.clone();
            crate::rng::SplitMix64::new(seed).shuffle(&mut shuffled);
            let sp: Vec<Label> = shuffled.iter().map(|p| to(p.0)).collect();
            let st: Vec<Label> = shuffled.iter().map(|p| to(p.1)).collect();
            prop_assert_eq!(confusion(&preds, &truth).unwrap(), confusion(&sp, &st).unwrap());
        }
    }
}
