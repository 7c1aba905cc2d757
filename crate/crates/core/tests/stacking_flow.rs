use stackdetect_core::analysis::compare_corpora;
use stackdetect_core::analysis::lda::TopicModelConfig;
use stackdetect_core::base::{
    read_scores, score_matrix, train_head, BaseClassifier, FeatureSpec, HeadConfig, NgramRange,
};
use stackdetect_core::corpus::{stratified_split, Document, Label, LabeledCorpus, SplitSpec};
use stackdetect_core::ensemble::{predict_matrix, train_meta, EnsembleKind, MetaConfig};
use stackdetect_core::metrics::evaluate;
use stackdetect_core::synth::{synth_corpus, SynthProfile};

fn heads(train: &LabeledCorpus) -> Vec<Box<dyn BaseClassifier>> {
    let specs = [
        (Some(NgramRange::new(3, 4)), None, 2048),
        (None, Some(NgramRange::new(1, 2)), 1024),
        (Some(NgramRange::new(2, 3)), Some(NgramRange::new(1, 1)), 512),
    ];
    specs
        .into_iter()
        .enumerate()
        .map(|(i, (c, w, dim))| {
            let spec = FeatureSpec {
                hash_dim: dim,
                char_ngrams: c,
                word_ngrams: w,
                hash_seed: i as u64,
                max_tokens: 64,
            };
            let mut cfg = HeadConfig::default();
            cfg.train.seed = 100 + i as u64;
            cfg.train.learning_rate = 5e-3;
            cfg.train.batch_size = 16;
            cfg.train.epochs = 3;
            let head = train_head(&format!("h{i}"), train, &spec, &cfg).unwrap();
            Box::new(head) as Box<dyn BaseClassifier>
        })
        .collect()
}

#[test]
fn synth_to_metrics_end_to_end() {
    let corpus = synth_corpus(300, 3, SynthProfile::Default).unwrap();
    let split = SplitSpec { train_fraction: 0.8, seed: 1, stratified: true };
    let (train, test) = stratified_split(&corpus, &split).unwrap();
    assert_eq!(train.len() + test.len(), 300);

    let heads = heads(&train);
    let refs: Vec<&dyn BaseClassifier> = heads.iter().map(|h| h.as_ref()).collect();
    let train_scores = score_matrix(&refs, &train).unwrap();
    let test_scores = score_matrix(&refs, &test).unwrap();
    assert_eq!(test_scores.width(), 3);
    let truth = test_scores.labels.clone().unwrap();

    for kind in EnsembleKind::ALL {
        let model = if kind.is_adaptive() {
            train_meta(kind, &train_scores, &MetaConfig::default().seeded(9)).unwrap()
        } else {
            stackdetect_core::ensemble::EnsembleModel::hard_voting(test_scores.classifier_names.clone()).unwrap()
        };
        let preds: Vec<Label> = predict_matrix(&model, &test_scores)
            .unwrap()
            .into_iter()
            .map(|(l, _)| l)
            .collect();
        let report = evaluate(kind.slug(), "synth", &preds, &truth).unwrap();
        assert_eq!(report.n as usize, test.len());
        assert!(report.accuracy > 0.8, "{kind}: {}", report.accuracy);
    }
}

#[test]
fn exported_scores_reimport_to_the_same_matrix() {
    let corpus = synth_corpus(120, 8, SynthProfile::Default).unwrap();
    let split = SplitSpec { train_fraction: 0.75, seed: 2, stratified: true };
    let (train, test) = stratified_split(&corpus, &split).unwrap();
    let heads = heads(&train);
    let native = score_matrix(&[heads[0].as_ref()], &test).unwrap();

    let mut csv = String::from("doc_id,classifier,p_human,p_llm\n");
    for (id, row) in native.doc_ids.iter().zip(&native.values) {
        csv.push_str(&format!("{id},h0,{},{}\n", row[0].p_human, row[0].p_llm));
    }
    let imported = read_scores(csv.as_bytes()).unwrap();
    let reread = score_matrix(&[&imported], &test).unwrap();
    assert_eq!(reread.doc_ids, native.doc_ids);
    assert_eq!(reread.classifier_names, native.classifier_names);
    for (a, b) in reread.values.iter().zip(&native.values) {
        assert!((a[0].p_llm - b[0].p_llm).abs() < 1e-12);
    }

    // A document absent from the score file is reported, not defaulted.
    let extra = Document {
        id: "unseen".into(),
        text: "some text".into(),
        label: Some(Label::Human),
        source: None,
    };
    let other = LabeledCorpus::new("x", vec![extra]).unwrap();
    assert!(score_matrix(&[&imported], &other).is_err());
}

fn themed(prefix: &str, words: &[&str], label_llm: bool, n: usize) -> Vec<Document> {
    (0..n)
        .map(|i| {
            let text: Vec<&str> = (0..30).map(|j| words[(i * 7 + j * 3) % words.len()]).collect();
            Document {
                id: format!("{prefix}{i}"),
                text: text.join(" "),
                label: Some(if (i % 2 == 0) == label_llm { Label::Llm } else { Label::Human }),
                source: None,
            }
        })
        .collect()
}

#[test]
fn disjoint_topics_diverge() {
    let a_words = ["harbor", "vessel", "anchor", "tide", "sailor", "cargo", "wharf", "mast"];
    let b_words = ["violin", "melody", "concert", "chorus", "rhythm", "tempo", "sonata", "opera"];
    let a = LabeledCorpus::new("a", themed("a", &a_words, true, 40)).unwrap();
    let b = LabeledCorpus::new("b", themed("b", &b_words, false, 40)).unwrap();
    let mut cfg = TopicModelConfig::with_topics(2);
    cfg.alpha = 0.5;
    cfg.iterations = 200;
    cfg.vocab_min_doc_freq = 1;
    cfg.infer_sweeps = 30;
    let cmp = compare_corpora(&a, &b, &cfg).unwrap();
    assert!(cmp.topic_js >= 0.3, "{}", cmp.topic_js);

    let same = compare_corpora(&a, &a, &cfg).unwrap();
    assert!(same.topic_js < 1e-9);
    assert_eq!(same.length_delta, 0.0);
}
