#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, Normal};

use relemb::corpus::{NounPairContext, WORD_NULL};
use relemb::params::{feature_dim, Block, EmbeddingParams, Matrix, SparseGradient};

pub const N_WORDS: usize = 14;
pub const N_NOUNS: usize = 7;

pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, std: f64, rng: &mut R) -> Matrix {
    let normal = Normal::new(0.0, std).unwrap();
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| normal.sample(rng)).collect(),
    )
}

/// Parameters with every block random, prediction weights included.
pub fn random_params<R: Rng>(d: usize, c: usize, rng: &mut R) -> EmbeddingParams {
    let normal = Normal::new(0.0, 0.5).unwrap();
    EmbeddingParams {
        d,
        c,
        nouns: gaussian_matrix(N_NOUNS, d, 0.5, rng),
        words: gaussian_matrix(N_WORDS, d, 0.5, rng),
        out: gaussian_matrix(N_WORDS, feature_dim(d, c), 0.5, rng),
        bias: (0..N_WORDS).map(|_| normal.sample(rng)).collect(),
    }
}

/// A context with 1..=max_in between-words and `m_out` outside words on
/// each side, some of them NULL.
pub fn random_context<R: Rng>(rng: &mut R, max_in: usize, m_out: usize) -> NounPairContext {
    let word = |rng: &mut R| rng.random_range(2..N_WORDS as u32);
    let outside = |rng: &mut R| {
        if rng.random_bool(0.25) {
            WORD_NULL as u32
        } else {
            rng.random_range(0..N_WORDS as u32)
        }
    };
    let m_in = rng.random_range(1..=max_in);
    NounPairContext {
        n1: rng.random_range(0..N_NOUNS as u32),
        n2: rng.random_range(0..N_NOUNS as u32),
        w_in: (0..m_in).map(|_| word(rng)).collect(),
        w_bef: (0..m_out).map(|_| outside(rng)).collect(),
        w_aft: (0..m_out).map(|_| outside(rng)).collect(),
        sentence_ref: None,
    }
}

/// Number of scalar parameters: nouns, words, prediction weights, biases.
pub fn n_coords(p: &EmbeddingParams) -> usize {
    p.nouns.as_slice().len() + p.words.as_slice().len() + p.out.as_slice().len() + p.bias.len()
}

pub fn coord_mut(p: &mut EmbeddingParams, mut k: usize) -> &mut f64 {
    for m in [&mut p.nouns, &mut p.words, &mut p.out] {
        let n = m.as_slice().len();
        if k < n {
            return &mut m.as_mut_slice()[k];
        }
        k -= n;
    }
    &mut p.bias[k]
}

/// A sparse gradient laid out like [`coord_mut`].
pub fn densify(g: &SparseGradient, p: &EmbeddingParams) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_coords(p));
    for (block, m) in [
        (Block::Nouns, &p.nouns),
        (Block::Words, &p.words),
        (Block::Out, &p.out),
    ] {
        for r in 0..m.rows() {
            match g.row(block, r) {
                Some(row) => out.extend_from_slice(row),
                None => out.extend(std::iter::repeat_n(0.0, m.cols())),
            }
        }
    }
    out.extend((0..p.bias.len()).map(|w| g.bias.get(&w).copied().unwrap_or(0.0)));
    out
}

/// Central differences of `f` over every coordinate of `p`.
pub fn numeric_gradient(
    p: &EmbeddingParams,
    h: f64,
    f: impl Fn(&EmbeddingParams) -> f64,
) -> Vec<f64> {
    let mut q = p.clone();
    (0..n_coords(p))
        .map(|k| {
            let x = *coord_mut(&mut q, k);
            *coord_mut(&mut q, k) = x + h;
            let up = f(&q);
            *coord_mut(&mut q, k) = x - h;
            let down = f(&q);
            *coord_mut(&mut q, k) = x;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest coordinate-wise `|a - b| / max(|a|, |b|, floor)`.
pub fn max_rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub const H: f64 = 1e-5;
pub const FLOOR: f64 = 1e-4;

/// Worst relative error between the analytic pretraining gradient and
/// central differences over `n` random (context, target, noise) draws.
pub fn pretrain_gradient_error(d: usize, c: usize, k: usize, n: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    use relemb::embed_train::{pretrain_gradient, pretrain_objective};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let params = random_params(d, c, &mut rng);
        let ctx = random_context(&mut rng, 5, 2);
        let i = rng.random_range(0..ctx.m_in());
        let noise: Vec<usize> = (0..k).map(|_| rng.random_range(0..N_WORDS)).collect();
        let analytic = densify(&pretrain_gradient(&ctx, i, &params, &noise), &params);
        let numeric = numeric_gradient(&params, H, |p| pretrain_objective(&ctx, i, p, &noise));
        worst = worst.max(max_rel_err(&analytic, &numeric, FLOOR));
    }
    worst
}

/// Worst relative error of the supervised gradient (softmax weights,
/// biases and every embedding coordinate) over `n` random instances,
/// with L2, fine-tuning and random dropout masks.
pub fn supervised_gradient_error(d: usize, c: usize, labels: usize, n: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    use relemb::classifier::{dropout_mask, supervised_objective_and_grad, SoftmaxParams};
    use relemb::features::{BlockMap, FeatureOptions};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let opts = FeatureOptions::default();
    let lambda = 1e-2;
    let mut worst: f64 = 0.0;
    for t in 0..n {
        let params = random_params(d, c, &mut rng);
        let dim = BlockMap::for_params(&opts, &params).len;
        let softmax = SoftmaxParams {
            weights: gaussian_matrix(labels, dim, 0.3, &mut rng),
            bias: (0..labels).map(|_| rng.random_range(-0.5..0.5)).collect(),
        };
        let ctx = random_context(&mut rng, 5, 2);
        let label = rng.random_range(0..labels);
        let batch = [(&ctx, label)];
        let masks = (t % 2 == 1).then(|| vec![dropout_mask(dim, &mut rng)]);
        let masks = masks.as_deref();
        let objective = |s: &SoftmaxParams, p: &EmbeddingParams| {
            supervised_objective_and_grad(&batch, s, p, &opts, lambda, masks, true).0
        };
        let (_, grad) =
            supervised_objective_and_grad(&batch, &softmax, &params, &opts, lambda, masks, true);

        let mut s = softmax.clone();
        let mut numeric = Vec::new();
        for k in 0..s.weights.as_slice().len() {
            let x = s.weights.as_slice()[k];
            s.weights.as_mut_slice()[k] = x + H;
            let up = objective(&s, &params);
            s.weights.as_mut_slice()[k] = x - H;
            let down = objective(&s, &params);
            s.weights.as_mut_slice()[k] = x;
            numeric.push((up - down) / (2.0 * H));
        }
        for k in 0..s.bias.len() {
            let x = s.bias[k];
            s.bias[k] = x + H;
            let up = objective(&s, &params);
            s.bias[k] = x - H;
            let down = objective(&s, &params);
            s.bias[k] = x;
            numeric.push((up - down) / (2.0 * H));
        }
        let mut analytic = grad.weights.as_slice().to_vec();
        analytic.extend_from_slice(&grad.bias);
        worst = worst.max(max_rel_err(&analytic, &numeric, FLOOR));

        let analytic = densify(&grad.embeddings, &params);
        let numeric = numeric_gradient(&params, H, |p| objective(&softmax, p));
        worst = worst.max(max_rel_err(&analytic, &numeric, FLOOR));
    }
    worst
}
