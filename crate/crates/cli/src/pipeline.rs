//! Pipeline stages. Each stage reads the artifacts of earlier stages from
//! the output directory, writes its own subdirectory and a manifest, and
//! never touches another stage's files.
//!
//! ```text
//! out/
//!   analysis/  report.json report.md
//!   split/     train.jsonl test.jsonl
//!   base/      <classifier>.json
//!   scores/    train.json test.json ood-<name>.json
//!   ensemble/  <kind>.json
//!   eval/      metrics.json
//!   report/    report.md report.json
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use stackdetect_core::analysis::{analyze, AnalysisReport};
use stackdetect_core::base::{
    load_scores, score_matrix, train_head, BaseClassifier, Classifier, ScoreMatrix,
};
use stackdetect_core::corpus::{ingest_jsonl, stratified_split, Label, LabeledCorpus};
use stackdetect_core::ensemble::{predict_matrix, train_meta, EnsembleKind, EnsembleModel};
use stackdetect_core::metrics::{evaluate, report_table, MethodGroup, MetricsReport};
use stackdetect_core::synth::{synth_corpus, SynthProfile};

use crate::config::{BaseSpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Synth,
    Analyze,
    TrainBase,
    ImportScores,
    TrainEnsemble,
    Evaluate,
    Report,
}

impl Stage {
    pub const PIPELINE: [Stage; 7] = [
        Stage::Synth,
        Stage::Analyze,
        Stage::TrainBase,
        Stage::ImportScores,
        Stage::TrainEnsemble,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn command(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Analyze => "analyze",
            Stage::TrainBase => "train-base",
            Stage::ImportScores => "import-scores",
            Stage::TrainEnsemble => "train-ensemble",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }

    pub fn dir(self) -> &'static str {
        match self {
            Stage::Synth => "data",
            Stage::Analyze => "analysis",
            Stage::TrainBase => "base",
            Stage::ImportScores => "scores",
            Stage::TrainEnsemble => "ensemble",
            Stage::Evaluate => "eval",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.command())
    }
}

macro_rules! say {
    ($p:expr, $($arg:tt)*) => {
        if $p.verbose {
            println!($($arg)*);
        }
    };
}

pub const SPLIT_DIR: &str = "split";

/// File-system-safe form of a dataset name.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Write a labeled synthetic corpus as JSONL.
pub fn write_synth(path: &Path, size: usize, seed: u64, profile: SynthProfile) -> CliResult<LabeledCorpus> {
    let corpus = synth_corpus(size, seed, profile)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::invalid(format!("cannot create {}: {e}", parent.display())))?;
    }
    corpus
        .write_jsonl(path)
        .map_err(|e| CliError::invalid(format!("cannot write {}: {e}", path.display())))?;
    Ok(corpus)
}

pub struct Pipeline {
    pub config: RunConfig,
    /// Print one progress line per artifact.
    pub verbose: bool,
    out: PathBuf,
    hash: String,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> CliResult<Self> {
        let out = config.out_dir();
        let hash = config.hash();
        Ok(Self {
            config,
            verbose: true,
            out,
            hash,
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.out.join(stage.dir())
    }

    /// Create the stage directory, removing any earlier contents.
    fn fresh_dir(&self, name: &str) -> CliResult<PathBuf> {
        let dir = self.out.join(name);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    fn finish(&self, stage: &str, dir: &Path) -> CliResult<()> {
        Manifest::collect(stage, dir, &self.hash, self.config.seed)?.write(dir)?;
        say!(self, "{stage}: wrote {}", dir.display());
        Ok(())
    }

    fn require(&self, path: PathBuf, producer: Stage) -> CliResult<PathBuf> {
        if path.is_file() {
            Ok(path)
        } else {
            Err(CliError::Missing {
                stage: producer.command(),
                path,
            })
        }
    }

    fn read_json<T: DeserializeOwned>(&self, path: PathBuf, producer: Stage) -> CliResult<T> {
        let path = self.require(path, producer)?;
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Internal(format!("corrupt artifact {}: {e}", path.display())))
    }

    fn read_input(&self, path: &Path) -> CliResult<LabeledCorpus> {
        let p = self.config.resolve(path);
        if !p.is_file() {
            return Err(CliError::invalid(format!("input file {} does not exist", p.display())));
        }
        let corpus = ingest_jsonl(&p).map_err(|e| CliError::invalid(format!("{}: {e}", p.display())))?;
        corpus.ensure_labeled()?;
        Ok(corpus)
    }

    fn read_split(&self, which: &str) -> CliResult<LabeledCorpus> {
        let p = self.require(self.out.join(SPLIT_DIR).join(format!("{which}.jsonl")), Stage::TrainBase)?;
        Ok(ingest_jsonl(&p)?)
    }

    /// Labeled OOD test sets in config order.
    fn ood_corpora(&self) -> CliResult<Vec<(String, LabeledCorpus)>> {
        self.config
            .data
            .ood
            .iter()
            .map(|o| Ok((o.name.clone(), self.read_input(&o.path)?)))
            .collect()
    }

    /// `(dataset name, score file name)` for every evaluated test set.
    pub fn eval_datasets(&self) -> Vec<(String, String)> {
        let mut v = vec![(self.config.in_dist_name(), "test.json".to_string())];
        for o in &self.config.data.ood {
            v.push((o.name.clone(), format!("ood-{}.json", slug(&o.name))));
        }
        v
    }

    pub fn run_stage(&self, stage: Stage) -> CliResult<()> {
        match stage {
            Stage::Synth => self.synth(),
            Stage::Analyze => self.analyze(),
            Stage::TrainBase => self.train_base(),
            Stage::ImportScores => self.import_scores(),
            Stage::TrainEnsemble => self.train_ensemble(),
            Stage::Evaluate => self.evaluate(),
            Stage::Report => self.report(),
        }
    }

    /// All stages in order; synthesis only when the config asks for it.
    pub fn run_all(&self) -> CliResult<()> {
        for stage in Stage::PIPELINE {
            if stage == Stage::Synth && self.config.synth.is_none() {
                continue;
            }
            self.run_stage(stage)?;
        }
        Ok(())
    }

    fn synth(&self) -> CliResult<()> {
        let Some(s) = &self.config.synth else {
            return Err(CliError::invalid("config has no [synth] section"));
        };
        let (seed, ood_seed) = self.config.synth_seeds();
        let path = self.config.corpus_path();
        write_synth(&path, s.size, seed, SynthProfile::Default)?;
        say!(self, "synth: wrote {} ({} documents)", path.display(), s.size);
        if let Some(o) = self.config.data.ood.first() {
            let path = self.config.resolve(&o.path);
            write_synth(&path, s.ood_size, ood_seed, SynthProfile::Ood)?;
            say!(self, "synth: wrote {} ({} documents)", path.display(), s.ood_size);
        }
        Ok(())
    }

    fn analyze(&self) -> CliResult<()> {
        let corpus = self.read_input(&self.config.data.corpus)?;
        let oods = self.ood_corpora()?;
        let mut corpora = vec![&corpus];
        corpora.extend(oods.iter().map(|(_, c)| c));
        let report = analyze(&corpora, &self.config.topic_config())?;
        let dir = self.fresh_dir(Stage::Analyze.dir())?;
        write_json(&dir.join("report.json"), &report)?;
        fs::write(dir.join("report.md"), report.to_markdown())?;
        self.finish("analyze", &dir)
    }

    fn train_base(&self) -> CliResult<()> {
        let corpus = self.read_input(&self.config.data.corpus)?;
        let (train, test) = stratified_split(&corpus, &self.config.split_spec())?;
        let split_dir = self.fresh_dir(SPLIT_DIR)?;
        train.write_jsonl(&split_dir.join("train.jsonl"))?;
        test.write_jsonl(&split_dir.join("test.jsonl"))?;
        self.finish("split", &split_dir)?;

        let dir = self.fresh_dir(Stage::TrainBase.dir())?;
        for (i, spec) in self.config.base.iter().enumerate() {
            if let Some((features, head)) = self.config.head_settings(i) {
                let model = train_head(spec.name(), &train, &features, &head)?;
                write_json(&dir.join(format!("{}.json", spec.name())), &Classifier::Ngram(model))?;
                say!(self, "train-base: trained {}", spec.name());
            }
        }
        self.finish("train-base", &dir)
    }

    /// Base classifiers in config order: native heads from checkpoints,
    /// imported ones from their score files.
    pub fn load_classifiers(&self) -> CliResult<Vec<Classifier>> {
        let dir = self.stage_dir(Stage::TrainBase);
        self.config
            .base
            .iter()
            .map(|spec| match spec {
                BaseSpec::Ngram { name, .. } => {
                    self.read_json(dir.join(format!("{name}.json")), Stage::TrainBase)
                }
                BaseSpec::ScoreFile { name, path } => {
                    let p = self.config.resolve(path);
                    let mut c = load_scores(&p)
                        .map_err(|e| CliError::invalid(format!("{}: {e}", p.display())))?;
                    c.name = name.clone();
                    Ok(Classifier::ScoreFile(c))
                }
            })
            .collect()
    }

    fn import_scores(&self) -> CliResult<()> {
        let classifiers = self.load_classifiers()?;
        let refs: Vec<&dyn BaseClassifier> = classifiers.iter().map(|c| c as &dyn BaseClassifier).collect();
        let mut sets = vec![
            ("train.json".to_string(), self.read_split("train")?),
            ("test.json".to_string(), self.read_split("test")?),
        ];
        for ((_, file), (_, corpus)) in self.eval_datasets().into_iter().skip(1).zip(self.ood_corpora()?) {
            sets.push((file, corpus));
        }
        let dir = self.fresh_dir(Stage::ImportScores.dir())?;
        for (file, corpus) in &sets {
            let m = score_matrix(&refs, corpus)?;
            write_json(&dir.join(file), &m)?;
        }
        self.finish("import-scores", &dir)
    }

    fn train_ensemble(&self) -> CliResult<()> {
        let scores: ScoreMatrix =
            self.read_json(self.stage_dir(Stage::ImportScores).join("train.json"), Stage::ImportScores)?;
        let meta = self.config.meta_config();
        let dir = self.fresh_dir(Stage::TrainEnsemble.dir())?;
        for kind in self.config.ensemble_kinds() {
            let model = match kind {
                EnsembleKind::HardVoting => EnsembleModel::hard_voting(scores.classifier_names.clone())?,
                _ => train_meta(kind, &scores, &meta)?,
            };
            write_json(&dir.join(format!("{}.json", kind.slug())), &model)?;
            say!(self, "train-ensemble: trained {kind}");
        }
        self.finish("train-ensemble", &dir)
    }

    /// Method name to group, for every method the config evaluates.
    pub fn method_groups(&self) -> BTreeMap<String, MethodGroup> {
        let mut g: BTreeMap<String, MethodGroup> = self
            .config
            .base
            .iter()
            .map(|b| (b.name().to_string(), MethodGroup::Single))
            .collect();
        for kind in self.config.ensemble_kinds() {
            let group = if kind.is_adaptive() {
                MethodGroup::Adaptive
            } else {
                MethodGroup::NonAdaptive
            };
            g.insert(kind.to_string(), group);
        }
        g
    }

    fn evaluate(&self) -> CliResult<()> {
        let mut models = Vec::new();
        for kind in self.config.ensemble_kinds() {
            let path = self.stage_dir(Stage::TrainEnsemble).join(format!("{}.json", kind.slug()));
            let model: EnsembleModel = self.read_json(path, Stage::TrainEnsemble)?;
            model.validate()?;
            models.push(model);
        }
        let mut reports = Vec::new();
        for (dataset, file) in self.eval_datasets() {
            let scores: ScoreMatrix =
                self.read_json(self.stage_dir(Stage::ImportScores).join(&file), Stage::ImportScores)?;
            let truth = scores
                .labels
                .clone()
                .ok_or_else(|| CliError::invalid(format!("test set `{dataset}` is unlabeled")))?;
            for (j, name) in scores.classifier_names.iter().enumerate() {
                let preds: Vec<Label> = scores.column(j).iter().map(|p| p.argmax()).collect();
                reports.push(evaluate(name, &dataset, &preds, &truth)?);
            }
            for model in &models {
                let preds: Vec<Label> = predict_matrix(model, &scores)?.into_iter().map(|(l, _)| l).collect();
                reports.push(evaluate(&model.kind.to_string(), &dataset, &preds, &truth)?);
            }
        }
        for r in &reports {
            say!(self, "evaluate: {:<24} {:<24} accuracy {:.4}", r.dataset, r.method, r.accuracy);
        }
        let dir = self.fresh_dir(Stage::Evaluate.dir())?;
        write_json(&dir.join("metrics.json"), &reports)?;
        self.finish("evaluate", &dir)
    }

    pub fn read_metrics(&self) -> CliResult<Vec<MetricsReport>> {
        self.read_json(self.stage_dir(Stage::Evaluate).join("metrics.json"), Stage::Evaluate)
    }

    fn report(&self) -> CliResult<()> {
        let reports = self.read_metrics()?;
        let table = report_table(&reports, &self.method_groups());
        let analysis_path = self.stage_dir(Stage::Analyze).join("report.json");
        let analysis: Option<AnalysisReport> = if analysis_path.is_file() {
            Some(self.read_json(analysis_path, Stage::Analyze)?)
        } else {
            None
        };
        let mut md = String::from("# Detection report\n\n");
        md.push_str(&table.to_markdown());
        if let Some(a) = &analysis {
            md.push('\n');
            md.push_str(&a.to_markdown());
        }
        let dir = self.fresh_dir(Stage::Report.dir())?;
        fs::write(dir.join("report.md"), md)?;
        write_json(&dir.join("report.json"), &table)?;
        self.finish("report", &dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("Deep fake/v2"), "Deep_fake_v2");
        assert_eq!(slug("synth-ood"), "synth-ood");
    }

    #[test]
    fn stage_order() {
        assert_eq!(Stage::PIPELINE.first(), Some(&Stage::Synth));
        assert_eq!(Stage::PIPELINE.last(), Some(&Stage::Report));
        assert!(Stage::PIPELINE.windows(2).all(|w| w[0] < w[1]));
    }
}
