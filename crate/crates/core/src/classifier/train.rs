use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    argmax, fill_mask, softmax_in_place, AdaGradState, Classifier, Labeled, SoftmaxParams,
    SupervisedConfig, DROPOUT_KEEP,
};
use crate::corpus::NUM_LABELS;
use crate::error::{Error, Result};
use crate::features::{scatter_gradient, write_features, BlockMap};
use crate::params::{axpy, EmbeddingParams, SparseGradient};

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStat {
    pub epoch: usize,
    /// Mean `log p(l|e)` over the epoch's updates, with dropout applied.
    pub mean_log_likelihood: f64,
    /// Accuracy of the pre-update predictions during the epoch.
    pub train_accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochStat>,
}

pub(crate) enum Embeddings<'a> {
    Frozen(&'a EmbeddingParams),
    Tuned(&'a mut EmbeddingParams),
}

impl Embeddings<'_> {
    fn get(&self) -> &EmbeddingParams {
        match self {
            Embeddings::Frozen(p) => p,
            Embeddings::Tuned(p) => p,
        }
    }
}

/// Feature vectors of every instance under fixed parameters, row-major.
pub(crate) struct FeatureCache {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl FeatureCache {
    pub fn build<T: Labeled>(
        instances: &[T],
        params: &EmbeddingParams,
        config: &SupervisedConfig,
    ) -> Self {
        let blocks = BlockMap::for_params(&config.features, params);
        let dim = blocks.len;
        let mut values = vec![0.0; instances.len() * dim];
        for (inst, row) in instances.iter().zip(values.chunks_exact_mut(dim.max(1))) {
            write_features(inst.context(), params, &config.features, &blocks, row);
        }
        FeatureCache { dim, values }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

/// Trains a classifier from zero weights. With fine-tuning enabled the
/// embedding rows reached by each instance are updated in place; otherwise
/// `params` is left untouched.
pub fn train_classifier<T: Labeled>(
    instances: &[T],
    params: &mut EmbeddingParams,
    config: &SupervisedConfig,
) -> Result<(Classifier, TrainLog)> {
    let subset: Vec<usize> = (0..instances.len()).collect();
    if config.fine_tune {
        fit(instances, &subset, Embeddings::Tuned(params), None, config)
    } else {
        train_frozen(instances, params, config)
    }
}

/// Trains with fixed embeddings; rejects configurations that fine-tune.
pub fn train_frozen<T: Labeled>(
    instances: &[T],
    params: &EmbeddingParams,
    config: &SupervisedConfig,
) -> Result<(Classifier, TrainLog)> {
    if config.fine_tune {
        return Err(Error::Config(
            "fine-tuning needs mutable embedding parameters".into(),
        ));
    }
    config.validate()?;
    let cache = FeatureCache::build(instances, params, config);
    let subset: Vec<usize> = (0..instances.len()).collect();
    fit(
        instances,
        &subset,
        Embeddings::Frozen(params),
        Some(&cache),
        config,
    )
}

/// Shuffled single-instance AdaGrad epochs over `subset`. The seeded
/// generator drives both the shuffles and the dropout masks.
pub(crate) fn fit<T: Labeled>(
    instances: &[T],
    subset: &[usize],
    mut emb: Embeddings<'_>,
    cache: Option<&FeatureCache>,
    config: &SupervisedConfig,
) -> Result<(Classifier, TrainLog)> {
    config.validate()?;
    if subset.is_empty() {
        return Err(Error::Empty("training instances"));
    }
    let opts = config.features;
    let blocks = BlockMap::for_params(&opts, emb.get());
    let dim = blocks.len;
    let tune = matches!(emb, Embeddings::Tuned(_));
    let lambda = config.lambda;

    let mut softmax = SoftmaxParams::zeros(NUM_LABELS, dim);
    let mut ada = AdaGradState::new(&softmax, config.eta);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order = subset.to_vec();

    let mut e = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    let mut mask = Vec::with_capacity(dim);
    let mut p = vec![0.0; NUM_LABELS];
    let mut delta = [0.0; NUM_LABELS];
    let mut grad_row = vec![0.0; dim];
    let mut grad_e = vec![0.0; dim];
    let mut sparse = SparseGradient::default();
    let mut log = TrainLog::default();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut log_lik = 0.0;
        let mut correct = 0usize;
        for &i in &order {
            let inst = &instances[i];
            let label = inst.label().index();
            let ctx = inst.context();
            match cache {
                Some(c) => e.copy_from_slice(c.row(i)),
                None => write_features(ctx, emb.get(), &opts, &blocks, &mut e),
            }
            if config.dropout {
                fill_mask(&mut mask, dim, &mut rng);
                for ((xi, &ei), &keep) in x.iter_mut().zip(&e).zip(&mask) {
                    *xi = if keep { ei / DROPOUT_KEEP } else { 0.0 };
                }
            } else {
                x.copy_from_slice(&e);
            }

            softmax.scores_into(&x, &mut p);
            if argmax(&p) == label {
                correct += 1;
            }
            softmax_in_place(&mut p);
            log_lik += p[label].ln();
            for (j, dj) in delta.iter_mut().enumerate() {
                *dj = if j == label { 1.0 } else { 0.0 } - p[j];
            }

            if tune {
                grad_e.fill(0.0);
                for (j, &dj) in delta.iter().enumerate() {
                    axpy(dj, softmax.weights.row(j), &mut grad_e);
                }
                if config.dropout {
                    for (g, &keep) in grad_e.iter_mut().zip(&mask) {
                        *g = if keep { *g / DROPOUT_KEEP } else { 0.0 };
                    }
                }
            }

            for (j, &dj) in delta.iter().enumerate() {
                for ((g, &xi), &w) in grad_row.iter_mut().zip(&x).zip(softmax.weights.row(j)) {
                    *g = dj * xi - lambda * w;
                }
                ada.update_weight_row(&mut softmax, j, &grad_row);
            }
            let bias_grad: Vec<f64> = delta
                .iter()
                .zip(&softmax.bias)
                .map(|(d, b)| d - lambda * b)
                .collect();
            ada.update_bias(&mut softmax, &bias_grad);

            if let Embeddings::Tuned(params) = &mut emb {
                sparse.rows.clear();
                scatter_gradient(ctx, params, &opts, &blocks, &grad_e, &mut sparse);
                for (&(block, idx), g) in sparse.rows.iter_mut() {
                    axpy(-lambda, params.block(block).row(idx), g);
                    ada.update_embedding_row(params, block, idx, g);
                }
            }
        }
        let n = order.len() as f64;
        let stat = EpochStat {
            epoch: epoch + 1,
            mean_log_likelihood: log_lik / n,
            train_accuracy: 100.0 * correct as f64 / n,
        };
        log::info!(
            "epoch {}: mean log-likelihood {:.5}, train accuracy {:.2}%",
            stat.epoch,
            stat.mean_log_likelihood,
            stat.train_accuracy
        );
        log.epochs.push(stat);
    }
    if !softmax.is_finite() {
        return Err(Error::Domain("classifier weights diverged".into()));
    }
    Ok((Classifier::new(softmax, opts), log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Family, NounPairContext, RelationLabel};
    use crate::features::FeatureOptions;
    use rand::Rng;

    fn separable(n: usize) -> (EmbeddingParams, Vec<(NounPairContext, RelationLabel)>) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = EmbeddingParams::init(4, 1, 10, 6, &mut rng);
        let labels = [
            RelationLabel::Other,
            RelationLabel::Relation(Family::CauseEffect, crate::corpus::Direction::Forward),
            RelationLabel::Relation(Family::MessageTopic, crate::corpus::Direction::Backward),
        ];
        let data = (0..n)
            .map(|_| {
                let k = rng.random_range(0..3);
                let ctx = NounPairContext {
                    n1: 1 + k as u32,
                    n2: 4,
                    w_in: vec![2 + k as u32],
                    w_bef: vec![1],
                    w_aft: vec![1],
                    sentence_ref: None,
                };
                (ctx, labels[k])
            })
            .collect();
        (params, data)
    }

    #[test]
    fn separable_set_reaches_full_training_accuracy() {
        let (params, data) = separable(60);
        let config = SupervisedConfig {
            fine_tune: false,
            dropout: false,
            epochs: 50,
            eta: 0.1,
            features: FeatureOptions::only_nouns(),
            ..Default::default()
        };
        let (clf, log) = train_frozen(&data, &params, &config).unwrap();
        let acc = data
            .iter()
            .filter(|(c, l)| clf.predict(c, &params).unwrap() == *l)
            .count();
        assert_eq!(acc, data.len());
        assert_eq!(log.epochs.len(), 50);
    }

    #[test]
    fn frozen_training_leaves_embeddings_untouched() {
        let (mut params, data) = separable(20);
        let before = params.clone();
        let config = SupervisedConfig {
            fine_tune: false,
            epochs: 3,
            ..Default::default()
        };
        train_classifier(&data, &mut params, &config).unwrap();
        assert_eq!(params, before);
        let config = SupervisedConfig {
            epochs: 3,
            ..Default::default()
        };
        train_classifier(&data, &mut params, &config).unwrap();
        assert_ne!(params, before);
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let (params, data) = separable(30);
        let config = SupervisedConfig {
            epochs: 4,
            ..Default::default()
        };
        let mut p1 = params.clone();
        let mut p2 = params.clone();
        let (a, _) = train_classifier(&data, &mut p1, &config).unwrap();
        let (b, _) = train_classifier(&data, &mut p2, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(p1, p2);
    }

    #[test]
    fn empty_training_set_rejected() {
        let (mut params, _) = separable(1);
        let none: Vec<(NounPairContext, RelationLabel)> = Vec::new();
        assert!(train_classifier(&none, &mut params, &SupervisedConfig::default()).is_err());
    }
}
