//! Runs extraction, pretraining, classifier training and evaluation on a
//! generated corpus and prints the scores.

use std::time::Instant;

use relemb::classifier::{cross_validate, train_classifier, FoldSplit, SupervisedConfig};
use relemb::corpus::{build_vocabulary, extract_noun_pair_contexts, SemEvalInstance};
use relemb::embed_train::{train_embeddings, PretrainConfig};
use relemb::eval::{score_semeval, top_ngrams};
use relemb::synth::{generate, SynthConfig, PATTERNS};

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().collect();
    let arg = |i: usize, default: f64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let synth = SynthConfig {
        seed: arg(8, 7.0) as u64,
        train_instances: arg(1, 400.0) as usize,
        label_noise: arg(2, 0.2),
        max_pattern_noise: arg(3, 1.0) as usize,
        ..Default::default()
    };
    let data = generate(&synth);
    let vocab = build_vocabulary(data.corpus.iter(), 10_000, 10_000, false)?;
    let m_out = 3;
    let contexts: Vec<_> = data
        .corpus
        .iter()
        .flat_map(|s| extract_noun_pair_contexts(s, &vocab, m_out, 10))
        .collect();
    let pre = PretrainConfig {
        d: arg(4, 10.0) as usize,
        c: 2,
        k: 5,
        m_out,
        t: 1e-2,
        epochs: 3,
        report_every: 10_000,
        ..Default::default()
    };
    let start = Instant::now();
    let (params, report) = train_embeddings(&contexts, &vocab, &pre)?;
    println!(
        "pretrain: {} contexts, {} targets trained in {:.1?}, objective {:?}",
        contexts.len(),
        report.trained,
        start.elapsed(),
        report.early_late_objective(0.2)
    );
    let to_inst = |r: &relemb::corpus::SemEvalRecord| r.to_instance(&vocab, m_out);
    let train: Vec<SemEvalInstance> = data.train.iter().map(to_inst).collect();
    let test: Vec<SemEvalInstance> = data.test.iter().map(to_inst).collect();
    let config = SupervisedConfig {
        eta: arg(5, 0.02),
        lambda: arg(6, 1e-3),
        epochs: arg(7, 10.0) as usize,
        ..Default::default()
    };
    let mut tuned = params.clone();
    let (clf, _) = train_classifier(&train, &mut tuned, &config)?;
    let gold: Vec<_> = test.iter().map(|i| i.label).collect();
    let pred = clf.predict_all(test.iter().map(|i| &i.context), &tuned)?;
    let report = score_semeval(&gold, &pred)?;
    println!(
        "test macro-F1 {:.2} accuracy {:.2}",
        report.macro_f1, report.accuracy
    );
    for (label, words, _, _) in PATTERNS {
        let top = top_ngrams(&clf, &tuned, &vocab, &train, label, 3, 5)?;
        let names: Vec<_> = top
            .iter()
            .map(|t| format!("{} ({:.2})", t.ngram, t.score))
            .collect();
        println!("{label} [{}]: {}", words.join(" "), names.join(" | "));
    }
    let split = FoldSplit::new(train.len(), 10, 1)?;
    let settings = [
        config.clone(),
        SupervisedConfig {
            dropout: false,
            ..config.clone()
        },
    ];
    let start = Instant::now();
    let cv = cross_validate(&train, &params, &settings, &split, 8)?;
    println!(
        "cv dropout on {:.2} off {:.2} ({:.1?})",
        cv[0].mean_f1,
        cv[1].mean_f1,
        start.elapsed()
    );
    Ok(())
}
