use std::fmt::Write as _;

use crate::classifier::{cross_validate, CvResult, FoldSplit, Labeled, SupervisedConfig};
use crate::error::Result;
use crate::features::FeatureOptions;
use crate::params::EmbeddingParams;

/// The five feature combinations compared in the ablation table.
pub fn ablation_combinations() -> [(&'static str, FeatureOptions); 5] {
    [
        ("g_n", FeatureOptions::only_nouns()),
        ("g_in", FeatureOptions::only_between()),
        ("g_in'", FeatureOptions::only_simplified_between()),
        ("g_n+g_in", FeatureOptions::nouns_and_between()),
        ("g_n+g_in+g_out", FeatureOptions::default()),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub name: &'static str,
    pub result: CvResult,
}

/// Cross-validates each combination under one split, keeping every other
/// setting (including the `M_out` override) from `base`.
pub fn run_ablations<T: Labeled + Sync>(
    instances: &[T],
    params: &EmbeddingParams,
    base: &SupervisedConfig,
    split: &FoldSplit,
    threads: usize,
) -> Result<Vec<AblationRow>> {
    let combos = ablation_combinations();
    let settings: Vec<SupervisedConfig> = combos
        .iter()
        .map(|(_, opts)| SupervisedConfig {
            features: FeatureOptions {
                m_out: base.features.m_out,
                ..*opts
            },
            ..base.clone()
        })
        .collect();
    let results = cross_validate(instances, params, &settings, split, threads)?;
    Ok(combos
        .iter()
        .zip(results)
        .map(|((name, _), result)| AblationRow { name, result })
        .collect())
}

pub fn format_ablation_table(rows: &[AblationRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(out, "{:<16} {:>7.2}", r.name, r.result.mean_f1);
    }
    out
}

/// One line per setting with its hyperparameters and mean fold F1.
pub fn format_cv_table(results: &[CvResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>10} {:>10} {:>6} {:>7} {:>9} {:<22} {:>8}",
        "eta", "lambda", "epochs", "dropout", "finetune", "features", "F1"
    );
    for r in results {
        let c = &r.config;
        let _ = writeln!(
            out,
            "{:>10} {:>10} {:>6} {:>7} {:>9} {:<22} {:>8.2}",
            c.eta,
            c.lambda,
            c.epochs,
            c.dropout,
            c.fine_tune,
            c.features.to_string(),
            r.mean_f1
        );
    }
    out
}
