//! Softmax relation classifier over embedding features, trained by AdaGrad
//! ascent on the L2-penalized log-likelihood with dropout on the input.

mod cv;
mod model;
mod train;

pub use cv::{cross_validate, CvResult, FoldSplit};
pub use model::Classifier;
pub use train::{train_classifier, train_frozen, EpochStat, TrainLog};

use std::collections::HashMap;

use rand::Rng;

use crate::corpus::{NounPairContext, RelationLabel, SemEvalInstance};
use crate::error::{Error, Result};
use crate::features::{scatter_gradient, write_features, BlockMap, FeatureOptions};
use crate::params::{dot, Block, EmbeddingParams, Matrix, SparseGradient};

/// Added to the accumulator root in AdaGrad steps.
pub const ADAGRAD_EPSILON: f64 = 1e-6;

/// Dropout keeps each input element with this probability.
pub const DROPOUT_KEEP: f64 = 0.5;

/// A labeled noun-pair context.
pub trait Labeled {
    fn context(&self) -> &NounPairContext;
    fn label(&self) -> RelationLabel;
}

impl Labeled for SemEvalInstance {
    fn context(&self) -> &NounPairContext {
        &self.context
    }

    fn label(&self) -> RelationLabel {
        self.label
    }
}

impl Labeled for (NounPairContext, RelationLabel) {
    fn context(&self) -> &NounPairContext {
        &self.0
    }

    fn label(&self) -> RelationLabel {
        self.1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupervisedConfig {
    /// AdaGrad base learning rate.
    pub eta: f64,
    /// L2 strength.
    pub lambda: f64,
    pub epochs: usize,
    pub dropout: bool,
    pub fine_tune: bool,
    /// Feature blocks and the `M_out` override.
    pub features: FeatureOptions,
    pub seed: u64,
    pub folds: usize,
}

impl Default for SupervisedConfig {
    fn default() -> Self {
        SupervisedConfig {
            eta: 0.05,
            lambda: 1e-5,
            epochs: 10,
            dropout: true,
            fine_tune: true,
            features: FeatureOptions::default(),
            seed: 1,
            folds: 10,
        }
    }
}

impl SupervisedConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config("eta must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("lambda must be non-negative".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        self.features.validate()
    }
}

/// Class weights `S` (one row per label) and biases `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxParams {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl SoftmaxParams {
    pub fn zeros(labels: usize, dim: usize) -> Self {
        SoftmaxParams {
            weights: Matrix::zeros(labels, dim),
            bias: vec![0.0; labels],
        }
    }

    pub fn labels(&self) -> usize {
        self.weights.rows()
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    /// `o = S e + s`
    pub fn scores_into(&self, e: &[f64], out: &mut [f64]) {
        assert_eq!(e.len(), self.dim(), "feature length");
        for (j, o) in out.iter_mut().enumerate() {
            *o = dot(self.weights.row(j), e) + self.bias[j];
        }
    }

    pub fn scores(&self, e: &[f64]) -> Vec<f64> {
        let mut o = vec![0.0; self.labels()];
        self.scores_into(e, &mut o);
        o
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.iter().all(|v| v.is_finite())
    }

    pub fn squared_norm(&self) -> f64 {
        self.weights.squared_norm() + self.bias.iter().map(|b| b * b).sum::<f64>()
    }
}

/// Normalizes scores into probabilities, subtracting the maximum first.
pub fn softmax_in_place(o: &mut [f64]) {
    let max = o.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in o.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in o.iter_mut() {
        *v /= sum;
    }
}

pub fn softmax_forward(e: &[f64], params: &SoftmaxParams) -> Vec<f64> {
    let mut o = params.scores(e);
    softmax_in_place(&mut o);
    o
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Draws a keep mask with [`DROPOUT_KEEP`] and returns the masked vector,
/// survivors scaled by `1 / DROPOUT_KEEP`.
pub fn apply_dropout<R: Rng + ?Sized>(e: &[f64], rng: &mut R) -> (Vec<f64>, Vec<bool>) {
    let mask = dropout_mask(e.len(), rng);
    (mask_vector(e, &mask), mask)
}

pub fn dropout_mask<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<bool> {
    let mut mask = Vec::with_capacity(len);
    fill_mask(&mut mask, len, rng);
    mask
}

fn fill_mask<R: Rng + ?Sized>(mask: &mut Vec<bool>, len: usize, rng: &mut R) {
    mask.clear();
    while mask.len() < len {
        let bits: u64 = rng.random();
        let take = (len - mask.len()).min(64);
        mask.extend((0..take).map(|b| bits >> b & 1 == 1));
    }
}

pub fn mask_vector(e: &[f64], mask: &[bool]) -> Vec<f64> {
    let scale = 1.0 / DROPOUT_KEEP;
    e.iter()
        .zip(mask)
        .map(|(&v, &keep)| if keep { v * scale } else { 0.0 })
        .collect()
}

/// One AdaGrad ascent step: `acc += g²`, `θ += η g / (sqrt(acc) + ε)`.
#[inline]
pub fn adagrad_update(param: &mut [f64], grad: &[f64], acc: &mut [f64], eta: f64) {
    debug_assert_eq!(param.len(), grad.len());
    debug_assert_eq!(param.len(), acc.len());
    for ((p, &g), a) in param.iter_mut().zip(grad).zip(acc.iter_mut()) {
        *a += g * g;
        *p += eta * g / (a.sqrt() + ADAGRAD_EPSILON);
    }
}

/// Squared-gradient accumulators: dense for the softmax parameters, per
/// touched row for the embeddings.
#[derive(Clone, Debug)]
pub struct AdaGradState {
    pub eta: f64,
    weights: Vec<f64>,
    bias: Vec<f64>,
    rows: HashMap<(Block, usize), Vec<f64>>,
}

impl AdaGradState {
    pub fn new(softmax: &SoftmaxParams, eta: f64) -> Self {
        AdaGradState {
            eta,
            weights: vec![0.0; softmax.weights.as_slice().len()],
            bias: vec![0.0; softmax.labels()],
            rows: HashMap::new(),
        }
    }

    /// Accumulator of an embedding row, if it has been updated.
    pub fn row_accumulator(&self, block: Block, idx: usize) -> Option<&[f64]> {
        self.rows.get(&(block, idx)).map(Vec::as_slice)
    }

    pub fn weight_accumulators(&self) -> &[f64] {
        &self.weights
    }

    fn update_weight_row(&mut self, softmax: &mut SoftmaxParams, j: usize, grad: &[f64]) {
        let dim = softmax.dim();
        adagrad_update(
            softmax.weights.row_mut(j),
            grad,
            &mut self.weights[j * dim..(j + 1) * dim],
            self.eta,
        );
    }

    fn update_bias(&mut self, softmax: &mut SoftmaxParams, grad: &[f64]) {
        adagrad_update(&mut softmax.bias, grad, &mut self.bias, self.eta);
    }

    fn update_embedding_row(
        &mut self,
        params: &mut EmbeddingParams,
        block: Block,
        idx: usize,
        grad: &[f64],
    ) {
        let acc = self
            .rows
            .entry((block, idx))
            .or_insert_with(|| vec![0.0; grad.len()]);
        adagrad_update(params.block_mut(block).row_mut(idx), grad, acc, self.eta);
    }
}

/// Gradients of the supervised objective.
#[derive(Clone, Debug, PartialEq)]
pub struct SupervisedGradient {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    /// Embedding rows reachable through `e`; empty without fine-tuning.
    pub embeddings: SparseGradient,
}

/// `log p(l|e) - (λ/2)‖θ‖²` summed over `batch`, and its gradient.
///
/// The penalty covers `S`, `s` and, when `fine_tune` is set, the embedding
/// rows that the batch reaches. `masks` holds one dropout keep mask per
/// instance.
#[allow(clippy::too_many_arguments)]
pub fn supervised_objective_and_grad(
    batch: &[(&NounPairContext, usize)],
    softmax: &SoftmaxParams,
    params: &EmbeddingParams,
    opts: &FeatureOptions,
    lambda: f64,
    masks: Option<&[Vec<bool>]>,
    fine_tune: bool,
) -> (f64, SupervisedGradient) {
    let blocks = BlockMap::for_params(opts, params);
    assert_eq!(
        blocks.len,
        softmax.dim(),
        "classifier and feature dimensions"
    );
    if let Some(m) = masks {
        assert_eq!(m.len(), batch.len(), "one dropout mask per instance");
    }
    let labels = softmax.labels();
    let mut grad = SupervisedGradient {
        weights: Matrix::zeros(labels, softmax.dim()),
        bias: vec![0.0; labels],
        embeddings: SparseGradient::default(),
    };
    let mut objective = 0.0;
    let mut e = vec![0.0; blocks.len];
    for (k, &(ctx, label)) in batch.iter().enumerate() {
        assert!(label < labels, "label {label} outside {labels} classes");
        write_features(ctx, params, opts, &blocks, &mut e);
        let x = match masks {
            Some(m) => mask_vector(&e, &m[k]),
            None => e.clone(),
        };
        let mut p = softmax.scores(&x);
        softmax_in_place(&mut p);
        objective += p[label].ln();
        for (j, pj) in p.iter().enumerate() {
            let delta = if j == label { 1.0 } else { 0.0 } - pj;
            crate::params::axpy(delta, &x, grad.weights.row_mut(j));
            grad.bias[j] += delta;
        }
        if fine_tune {
            let mut grad_e = vec![0.0; blocks.len];
            for (j, pj) in p.iter().enumerate() {
                let delta = if j == label { 1.0 } else { 0.0 } - pj;
                crate::params::axpy(delta, softmax.weights.row(j), &mut grad_e);
            }
            if let Some(m) = masks {
                for (g, &keep) in grad_e.iter_mut().zip(&m[k]) {
                    *g = if keep { *g / DROPOUT_KEEP } else { 0.0 };
                }
            }
            scatter_gradient(ctx, params, opts, &blocks, &grad_e, &mut grad.embeddings);
        }
    }
    let mut penalty = softmax.squared_norm();
    crate::params::axpy(
        -lambda,
        softmax.weights.as_slice(),
        grad.weights.as_mut_slice(),
    );
    for (g, b) in grad.bias.iter_mut().zip(&softmax.bias) {
        *g -= lambda * b;
    }
    for ((block, idx), g) in grad.embeddings.rows.iter_mut() {
        let row = params.block(*block).row(*idx);
        penalty += row.iter().map(|v| v * v).sum::<f64>();
        crate::params::axpy(-lambda, row, g);
    }
    (objective - 0.5 * lambda * penalty, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_model_is_uniform() {
        let sp = SoftmaxParams::zeros(19, 7);
        let p = softmax_forward(&[0.3; 7], &sp);
        assert!(p.iter().all(|&v| (v - 1.0 / 19.0).abs() < 1e-15));
        assert_eq!(argmax(&p), 0);
    }

    #[test]
    fn two_class_closed_form() {
        let mut o = vec![3f64.ln(), 0.0];
        softmax_in_place(&mut o);
        assert!((o[0] - 0.75).abs() < 1e-15 && (o[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn softmax_survives_large_scores() {
        let mut o = vec![1000.0, 999.0, -1000.0];
        softmax_in_place(&mut o);
        assert!(o.iter().all(|v| v.is_finite()));
        assert!((o.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
    }

    #[test]
    fn dropout_masks() {
        let e = [1.0, -2.0, 3.0];
        assert_eq!(mask_vector(&e, &[true; 3]), vec![2.0, -4.0, 6.0]);
        assert_eq!(mask_vector(&e, &[false; 3]), vec![0.0; 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mask = dropout_mask(100_000, &mut rng);
        let kept = mask.iter().filter(|&&k| k).count() as f64;
        assert!((kept / 1e5 - 0.5).abs() < 3.0 * (0.25f64 / 1e5).sqrt() * 2.0);
    }

    #[test]
    fn adagrad_steps() {
        let mut p = [0.0];
        let mut acc = [0.0];
        adagrad_update(&mut p, &[-4.0], &mut acc, 0.1);
        assert!((p[0] + 0.1).abs() < 1e-7);
        let mut last = f64::INFINITY;
        for _ in 0..5 {
            let before = p[0];
            adagrad_update(&mut p, &[2.0], &mut acc, 0.1);
            let step = p[0] - before;
            assert!(step > 0.0 && step < last);
            last = step;
        }
        let before = p[0];
        adagrad_update(&mut p, &[0.0], &mut acc, 0.1);
        assert_eq!(p[0], before);
    }

    #[test]
    fn objective_at_zero_is_minus_ln_l() {
        let params = EmbeddingParams::zeros(2, 1, 4, 3);
        let ctx = NounPairContext {
            n1: 1,
            n2: 2,
            w_in: vec![2, 3],
            w_bef: vec![1],
            w_aft: vec![1],
            sentence_ref: None,
        };
        let opts = FeatureOptions::default();
        let dim = BlockMap::for_params(&opts, &params).len;
        let sp = SoftmaxParams::zeros(19, dim);
        let (j, _) =
            supervised_objective_and_grad(&[(&ctx, 4)], &sp, &params, &opts, 0.0, None, true);
        assert!((j + 19f64.ln()).abs() < 1e-12);
    }
}
