use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::train::{fit, Embeddings, FeatureCache};
use super::{Labeled, SupervisedConfig};
use crate::corpus::RelationLabel;
use crate::error::{Error, Result};
use crate::eval::macro_f1;
use crate::features::FeatureOptions;
use crate::params::EmbeddingParams;

/// A seeded partition of instance indices into validation folds. Fold `f`
/// takes a contiguous slice of one shuffled index order, so fold sizes
/// differ by at most one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldSplit {
    fold_of: Vec<usize>,
    folds: usize,
}

impl FoldSplit {
    pub fn new(n: usize, folds: usize, seed: u64) -> Result<Self> {
        if folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if n < folds {
            return Err(Error::Config(format!(
                "{n} instances cannot fill {folds} folds"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut fold_of = vec![0; n];
        for f in 0..folds {
            for &i in &order[f * n / folds..(f + 1) * n / folds] {
                fold_of[i] = f;
            }
        }
        Ok(FoldSplit { fold_of, folds })
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn len(&self) -> usize {
        self.fold_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fold_of.is_empty()
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.fold_of[i]
    }

    pub fn validation(&self, fold: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    pub fn training(&self, fold: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    pub config: SupervisedConfig,
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
}

/// Mean validation macro-F1 of each setting over the same folds. Folds and
/// settings train in parallel on up to `threads` workers; fine-tuning runs
/// each work on a private copy of `params`.
pub fn cross_validate<T: Labeled + Sync>(
    instances: &[T],
    params: &EmbeddingParams,
    settings: &[SupervisedConfig],
    split: &FoldSplit,
    threads: usize,
) -> Result<Vec<CvResult>> {
    if split.len() != instances.len() {
        return Err(Error::LengthMismatch {
            left: split.len(),
            right: instances.len(),
        });
    }
    for s in settings {
        s.validate()?;
    }
    // Frozen settings share one feature matrix per option set.
    let mut caches: HashMap<FeatureOptions, FeatureCache> = HashMap::new();
    for s in settings.iter().filter(|s| !s.fine_tune) {
        caches
            .entry(s.features)
            .or_insert_with(|| FeatureCache::build(instances, params, s));
    }
    let jobs: Vec<(usize, usize)> = (0..settings.len())
        .flat_map(|s| (0..split.folds()).map(move |f| (s, f)))
        .collect();
    let run = |&(s, f): &(usize, usize)| -> Result<f64> {
        let config = &settings[s];
        let train = split.training(f);
        let valid = split.validation(f);
        let gold: Vec<RelationLabel> = valid.iter().map(|&i| instances[i].label()).collect();
        let pred: Vec<RelationLabel> = if config.fine_tune {
            let mut tuned = params.clone();
            let (clf, _) = fit(
                instances,
                &train,
                Embeddings::Tuned(&mut tuned),
                None,
                config,
            )?;
            clf.predict_all(valid.iter().map(|&i| instances[i].context()), &tuned)?
        } else {
            let cache = &caches[&config.features];
            let (clf, _) = fit(
                instances,
                &train,
                Embeddings::Frozen(params),
                Some(cache),
                config,
            )?;
            valid
                .iter()
                .map(|&i| {
                    let k = clf.predict_features(cache.row(i));
                    RelationLabel::from_index(k)
                        .ok_or_else(|| Error::UnknownLabel(format!("class {k}")))
                })
                .collect::<Result<_>>()?
        };
        let f1 = macro_f1(&gold, &pred)?;
        log::info!("setting {s} fold {f}: macro-F1 {f1:.2}");
        Ok(f1)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let scores: Vec<f64> = pool.install(|| jobs.par_iter().map(run).collect::<Result<_>>())?;
    Ok(settings
        .iter()
        .zip(scores.chunks(split.folds()))
        .map(|(config, fold_f1)| CvResult {
            config: config.clone(),
            fold_f1: fold_f1.to_vec(),
            mean_f1: fold_f1.iter().sum::<f64>() / fold_f1.len() as f64,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_evenly() {
        let split = FoldSplit::new(8000, 10, 3).unwrap();
        let mut seen = vec![0; 8000];
        for f in 0..10 {
            let v = split.validation(f);
            assert_eq!(v.len(), 800);
            assert_eq!(split.training(f).len(), 7200);
            for i in v {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn uneven_sizes_differ_by_one() {
        let split = FoldSplit::new(23, 4, 0).unwrap();
        let sizes: Vec<usize> = (0..4).map(|f| split.validation(f).len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 23);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn split_is_seeded() {
        assert_eq!(
            FoldSplit::new(50, 5, 9).unwrap(),
            FoldSplit::new(50, 5, 9).unwrap()
        );
        assert_ne!(
            FoldSplit::new(50, 5, 9).unwrap(),
            FoldSplit::new(50, 5, 10).unwrap()
        );
        assert!(FoldSplit::new(50, 1, 9).is_err());
    }
}
